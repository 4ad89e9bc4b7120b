#include "maxreg/regularity.hpp"

#include <cmath>
#include <limits>

#include "maxreg/errors.hpp"
#include "maxreg/semigroup.hpp"

namespace maxreg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Verdict {
    double value;
    bool finite;
};

/// ∫₀^τ C^q t^{e} dt for e = power; finite iff e > −1.
Verdict power_integral(double c, double q, double power, double horizon) {
    if (c == 0.0) return {0.0, true};
    const double e = power + 1.0;
    if (e <= 0.0) return {kInf, false};
    return {std::pow(c, q) * std::pow(horizon, e) / e, true};
}

Verdict graded(const std::function<double(double)>& g, double horizon) {
    const auto sums = graded_partial_sums(g, horizon);
    const double last = sums.back();
    const double earlier = sums[sums.size() - 11];
    if (last == 0.0) return {0.0, true};
    if (!std::isfinite(last) || last >= 1.05 * earlier) return {kInf, false};
    return {last, true};
}

}  // namespace

std::vector<double> graded_partial_sums(const std::function<double(double)>& g, double horizon, int levels,
                                        int order) {
    const auto& rule = linalg::gauss_legendre(order);
    std::vector<double> sums(levels);
    double total = 0.0;
    for (int l = 0; l < levels; ++l) {
        const double b = std::ldexp(horizon, -l);
        const double a = 0.5 * b;
        const double half = 0.5 * (b - a);
        const double mid = 0.5 * (a + b);
        double panel = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) panel += rule.weights[i] * g(mid + half * rule.nodes[i]);
        total += half * panel;
        sums[l] = total;
    }
    return sums;
}

DiniReport dini_report(const ModulusOfContinuity& omega, double horizon, double p) {
    if (!(p > 1.0) || !std::isfinite(p)) throw DomainError("Dini report needs p in (1, ∞)");
    if (!(horizon > 0.0)) throw DomainError("horizon must be positive");
    DiniReport r;
    r.horizon = horizon;
    r.p = p;

    Verdict v32, vp, v2;
    if (omega.kind() == ModulusOfContinuity::Kind::Holder) {
        r.closed_form = true;
        const auto [a, c] = omega.pieces().front();
        v32 = power_integral(c, 1.0, a - 1.5, horizon);
        vp = power_integral(c, p, (a - 1.0) * p, horizon);
        v2 = power_integral(c, 2.0, 2.0 * a - 1.0, horizon);
    } else {
        v32 = graded([&](double t) { return omega(t) / std::pow(t, 1.5); }, horizon);
        vp = graded([&](double t) { return std::pow(omega(t) / t, p); }, horizon);
        v2 = graded([&](double t) { return omega(t) * omega(t) / t; }, horizon);
        if (omega.kind() == ModulusOfContinuity::Kind::PiecewiseHolder) {
            double a = 1.0;
            bool any = false;
            for (const auto& piece : omega.pieces())
                if (piece.constant > 0.0) {
                    a = std::min(a, piece.exponent);
                    any = true;
                }
            if (any) {
                if (!(a > 0.5)) v32 = {kInf, false};
                if (!(a > 1.0 - 1.0 / p)) vp = {kInf, false};
            }
        }
    }
    r.integral_32 = v32.value;
    r.finite_32 = v32.finite;
    r.integral_p = vp.value;
    r.finite_p = vp.finite;
    r.integral_2log = v2.value;
    r.finite_2log = v2.finite;
    return r;
}

double lp_norm(const GridFunction& g, double p, const GalerkinSpace& space) {
    if (!(p >= 1.0)) throw DomainError("L_p norm needs p ≥ 1");
    const auto& grid = g.grid();
    if (std::isinf(p)) {
        double m = 0.0;
        for (int k = 0; k < grid.cells(); ++k) m = std::max(m, space.h_norm(g.at(k)));
        return m;
    }
    double s = 0.0;
    for (int k = 0; k < grid.cells(); ++k) s += grid.width(k) * std::pow(space.h_norm(g.at(k)), p);
    return std::pow(s, 1.0 / p);
}

InterpolationNorm interpolation_norm(const OperatorH& a0, const Vec& u0, double p, double horizon) {
    if (!(p >= 1.0)) throw DomainError("interpolation norm needs p ≥ 1");
    const auto& sp = *a0.space;
    const double base = std::pow(sp.h_norm(u0), p);
    if (u0.norm() == 0.0) return {0.0, true};
    const Calculus calc(a0);
    std::function<double(double)> integrand;
    if (calc.spectral()) {
        const Vec c = calc.inverse_eigenvectors() * u0;
        const Vec& lam = calc.eigenvalues();
        integrand = [&, c](double t) {
            const Vec w = (lam.array() * (-t * lam.array()).exp() * c.array()).matrix();
            return std::pow(sp.h_norm(calc.eigenvectors() * w), p);
        };
    } else {
        integrand = [&](double t) { return std::pow(sp.h_norm(calc.aexpm(t) * u0), p); };
    }
    const double i8 = graded_partial_sums(integrand, horizon, 60, 8).back();
    const double i16 = graded_partial_sums(integrand, horizon, 60, 16).back();
    InterpolationNorm out;
    out.value = std::pow(base + i16, 1.0 / p);
    out.converged = std::abs(i16 - i8) <= 1e-8 * std::max(i16 + base, 1e-300);
    return out;
}

AprioriRatio apriori_ratio(const GridFunction& u, const GridFunction& du, const GridFunction& au,
                           const GridFunction& f, const Vec& u0, const OperatorH& a0, double p) {
    const auto& sp = *a0.space;
    const int n = f.grid().size();
    if (u.grid().size() != n || du.grid().size() != n || au.grid().size() != n)
        throw ConfigurationError("apriori_ratio needs grid functions on one grid");
    AprioriRatio r;
    r.numerator = lp_norm(u, p, sp) + lp_norm(du, p, sp) + lp_norm(au, p, sp);
    r.denominator = lp_norm(f, p, sp) + interpolation_norm(a0, u0, p, f.grid().horizon()).value;
    if (r.denominator == 0.0) {
        if (r.numerator != 0.0) throw DegenerateDataError("zero data with a nonzero solution");
        r.degenerate = true;
        r.ratio = 0.0;
        return r;
    }
    r.ratio = r.numerator / r.denominator;
    return r;
}

MajorantBound scalar_majorant_norm(const ModulusOfContinuity& omega, double r, double p, double horizon) {
    if (!(r == 1.0 || r == 1.5)) throw DomainError("majorant exponent must be 1 or 3/2");
    if (!(p > 1.0)) throw DomainError("majorant bound needs p > 1");
    if (omega.kind() == ModulusOfContinuity::Kind::Holder) {
        const auto [a, c] = omega.pieces().front();
        const auto v = power_integral(c, 1.0, a - r, horizon);
        return {v.value, v.finite};
    }
    const auto v = graded([&](double t) { return omega(t) / std::pow(t, r); }, horizon);
    return {v.value, v.finite};
}

double v_norm_recovery_check(const GridFunction& u, const GridFunction& du, const GridFunction& f,
                             const FormFamily& family, double delta) {
    const auto& sp = family.space();
    double worst = 0.0;
    for (int k = 0; k < u.size(); ++k) {
        const double num = std::pow(sp.v_norm(u.at(k)), 2);
        const double den = std::pow(sp.v_dual_norm(du.at(k)), 2) + std::pow(sp.v_dual_norm(f.at(k)), 2) +
                           delta * delta * std::pow(sp.v_dual_norm(u.at(k)), 2);
        if (den == 0.0) {
            if (num == 0.0) continue;
            return kInf;
        }
        worst = std::max(worst, num / den);
    }
    return worst;
}

}  // namespace maxreg
