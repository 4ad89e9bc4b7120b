#include "maxreg/model_zoo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "maxreg/errors.hpp"

namespace maxreg {

// ---------------------------------------------------------------------------
// Counterexample

std::vector<double> van_der_corput(int count, int base) {
    std::vector<double> out;
    out.reserve(count);
    for (int i = 1; i <= count; ++i) {
        double x = 0.0;
        double scale = 1.0 / base;
        for (int k = i; k > 0; k /= base) {
            x += (k % base) * scale;
            scale /= base;
        }
        out.push_back(x);
    }
    return out;
}

namespace {

constexpr double kNodeCap = 1e-12;

double gauss8(const std::function<double(double)>& f, double a, double b) {
    const auto& rule = linalg::gauss_legendre(8);
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double s = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * f(mid + half * rule.nodes[i]);
    return half * s;
}

}  // namespace

Counterexample::Counterexample(CounterexampleSpec spec, int levels) : p_(spec.p) {
    if (!(spec.p > 1.0)) throw DomainError("counterexample needs p > 1");
    if (spec.terms < 0) throw DomainError("truncation K must be non-negative");
    nodes_ = spec.nodes.empty() ? van_der_corput(spec.terms, 3) : spec.nodes;
    if (spec.weights.empty()) {
        double c = spec.first_weight;
        for (std::size_t n = 0; n < nodes_.size(); ++n, c *= spec.weight_ratio) weights_.push_back(c);
    } else {
        weights_ = spec.weights;
    }
    if (weights_.size() != nodes_.size()) throw ConfigurationError("counterexample nodes and weights differ in length");
    for (std::size_t n = 0; n < nodes_.size(); ++n) {
        if (!(nodes_[n] > 0.0 && nodes_[n] < 1.0)) throw ConfigurationError("counterexample nodes must lie in (0, 1)");
        if (!(weights_[n] > 0.0)) throw ConfigurationError("counterexample weights must be positive");
    }
    table_ = build_panels(0.0, 1.0, levels, false);
    double acc = 0.0;
    for (auto& panel : table_) {
        panel.j_lo = acc;
        acc += gauss8([this](double s) { return std::exp(a_integral(s)); }, panel.lo, panel.hi);
    }
}

double Counterexample::a(double t) const {
    double s = 1.0;
    for (std::size_t n = 0; n < nodes_.size(); ++n)
        s += weights_[n] * std::pow(std::max(std::abs(t - nodes_[n]), kNodeCap), -1.0 / p_);
    return s;
}

double Counterexample::a_integral(double t) const {
    const double e = 1.0 - 1.0 / p_;
    double s = t;
    for (std::size_t n = 0; n < nodes_.size(); ++n) {
        const double tn = nodes_[n];
        const double g = t <= tn ? std::pow(tn, e) - std::pow(tn - t, e) : std::pow(tn, e) + std::pow(t - tn, e);
        s += weights_[n] * g / e;
    }
    return s;
}

std::vector<Counterexample::Panel> Counterexample::build_panels(double lo, double hi, int levels,
                                                                bool cutoff) const {
    std::vector<double> cuts{lo, hi};
    for (double t : nodes_)
        if (t > lo && t < hi) cuts.push_back(t);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    auto is_node = [this](double t) { return std::find(nodes_.begin(), nodes_.end(), t) != nodes_.end(); };

    std::vector<Panel> out;
    auto smooth_half = [&](double a, double b) {
        for (int i = 0; i < 4; ++i) out.push_back({a + (b - a) * i / 4.0, a + (b - a) * (i + 1) / 4.0, 0.0});
    };
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
        const double u = cuts[c];
        const double v = cuts[c + 1];
        const double m = 0.5 * (u + v);
        const double d = m - u;
        if (is_node(u)) {
            if (!cutoff) out.push_back({u, u + std::ldexp(d, -levels), 0.0});
            for (int l = levels - 1; l >= 0; --l) out.push_back({u + std::ldexp(d, -l - 1), u + std::ldexp(d, -l), 0.0});
        } else {
            smooth_half(u, m);
        }
        if (is_node(v)) {
            for (int l = 0; l < levels; ++l) out.push_back({v - std::ldexp(d, -l), v - std::ldexp(d, -l - 1), 0.0});
            if (!cutoff) out.push_back({v - std::ldexp(d, -levels), v, 0.0});
        } else {
            smooth_half(m, v);
        }
    }
    return out;
}

double Counterexample::j_integral(double t) const {
    if (t <= 0.0) return 0.0;
    auto it = std::upper_bound(table_.begin(), table_.end(), t,
                               [](double value, const Panel& p) { return value < p.lo; });
    const Panel& panel = *std::prev(it);
    if (t == panel.lo) return panel.j_lo;
    return panel.j_lo + gauss8([this](double s) { return std::exp(a_integral(s)); }, panel.lo, std::min(t, panel.hi));
}

double Counterexample::x(double t) const {
    if (t <= 0.0) return 0.0;
    return std::exp(-a_integral(t)) * j_integral(t);
}

double Counterexample::lower_constant() const { return std::exp(-a_integral(1.0)); }

double Counterexample::ax_norm(double q, double lo, double hi, int levels) const {
    if (!(q >= 1.0)) throw DomainError("norm exponent must be ≥ 1");
    if (!(lo >= 0.0 && hi <= 1.0 && lo < hi)) throw DomainError("norm interval must lie in [0, 1]");
    double s = 0.0;
    for (const auto& panel : build_panels(lo, hi, levels, true))
        s += gauss8([&](double t) { return std::pow(std::abs(a(t) * x(t)), q); }, panel.lo, panel.hi);
    return std::pow(s, 1.0 / q);
}

Counterexample build_counterexample(const CounterexampleSpec& spec) { return Counterexample(spec); }

// ---------------------------------------------------------------------------
// P1 elements on [0, 1]

namespace {

struct P1Space {
    Mat mass;
    Mat stiffness;
    GalerkinSpacePtr space;
    double h = 0.0;
    int elements = 0;
};

Mat p1_stiffness(int elements, double h, const std::function<cplx(int)>& coeff) {
    Mat s = Mat::Zero(elements + 1, elements + 1);
    for (int e = 0; e < elements; ++e) {
        const cplx c = coeff(e) / h;
        s(e, e) += c;
        s(e + 1, e + 1) += c;
        s(e, e + 1) -= c;
        s(e + 1, e) -= c;
    }
    return s;
}

P1Space p1_space(int m) {
    if (m < 1) throw ConfigurationError("mesh needs at least one interior node");
    P1Space out;
    out.elements = m + 1;
    out.h = 1.0 / out.elements;
    const int n = m + 2;
    out.mass = Mat::Zero(n, n);
    for (int e = 0; e < out.elements; ++e) {
        out.mass(e, e) += out.h / 3.0;
        out.mass(e + 1, e + 1) += out.h / 3.0;
        out.mass(e, e + 1) += out.h / 6.0;
        out.mass(e + 1, e) += out.h / 6.0;
    }
    out.stiffness = p1_stiffness(out.elements, out.h, [](int) { return cplx(1.0); });
    out.space = GalerkinSpace::create(out.mass, out.mass + out.stiffness);
    return out;
}

ModulusOfContinuity modulus_or_estimate(const std::optional<ModulusOfContinuity>& given, GalerkinSpacePtr space,
                                        double horizon, const FormFunction& form) {
    if (given) return *given;
    const FormFamily probe(space, horizon, form, {1.0, 1.0, 0.0}, ModulusOfContinuity::zero());
    return estimate_modulus(probe, default_modulus_pairs(horizon));
}

}  // namespace

FormFamily build_elliptic_1d(const Coefficient& a_coeff, int m, double nu, double horizon,
                             std::optional<ModulusOfContinuity> modulus) {
    if (!(nu > 0.0)) throw DomainError("ellipticity constant ν must be positive");
    const P1Space p1 = p1_space(m);
    const int elements = p1.elements;
    const double h = p1.h;
    FormFunction form = [a_coeff, elements, h](double t) {
        return p1_stiffness(elements, h, [&](int e) { return a_coeff(t, (e + 0.5) * h); });
    };
    for (double t : sample_times(horizon, 21))
        for (int e = 0; e < elements; ++e)
            if (a_coeff(t, (e + 0.5) * h).real() < nu * (1.0 - 1e-12))
                throw DomainError("coefficient violates Re a ≥ ν");
    auto constants = measure_constants(p1.space, horizon, form, nu);
    constants.coercivity_alpha = std::min(constants.coercivity_alpha, nu);
    constants.shift_delta = nu;
    return FormFamily(p1.space, horizon, form, constants, modulus_or_estimate(modulus, p1.space, horizon, form),
                      "elliptic1d");
}

double trace_constant(const GalerkinSpace& space, double epsilon) {
    const int n = space.dim();
    Mat b = Mat::Zero(n, n);
    b(0, 0) = 1.0;
    b(n - 1, n - 1) = 1.0;
    const Mat s = b - epsilon * space.gram_V();
    const double top = linalg::generalized_hermitian_eigenvalues(s, space.h_inv_sqrt()).maxCoeff();
    return std::max(top, 0.0);
}

FormFamily build_robin(const BoundaryCoefficient& beta, int m, double horizon,
                       std::optional<ModulusOfContinuity> modulus) {
    const P1Space p1 = p1_space(m);
    const Mat stiff = p1.stiffness;
    const int n = m + 2;
    FormFunction form = [beta, stiff, n](double t) {
        Mat f = stiff;
        f(0, 0) += beta(t, 0.0);
        f(n - 1, n - 1) += beta(t, 1.0);
        return f;
    };
    double alpha0 = std::numeric_limits<double>::infinity();
    double sup_beta = 0.0;
    for (double t : sample_times(horizon, 201)) {
        const Mat f = form(t);
        alpha0 = std::min(alpha0, linalg::generalized_hermitian_eigenvalues(f, p1.space->v_inv_sqrt())(0));
        sup_beta = std::max({sup_beta, std::abs(beta(t, 0.0)), std::abs(beta(t, 1.0))});
    }
    double delta = 0.0;
    if (!(alpha0 >= 1e-3)) {
        if (sup_beta == 0.0) {
            delta = 1.0;
        } else {
            const double eps = 1.0 / (2.0 * sup_beta);
            delta = 1.0 + sup_beta * trace_constant(*p1.space, eps);
        }
    }
    const auto constants = measure_constants(p1.space, horizon, form, delta);
    return FormFamily(p1.space, horizon, form, constants, modulus_or_estimate(modulus, p1.space, horizon, form),
                      "robin");
}

// ---------------------------------------------------------------------------
// Synthetic families

FormFamily build_rotating_family(int n, double holder_a, double amplitude, double horizon, double rate) {
    if (n < 2) throw DomainError("rotating family needs n ≥ 2");
    if (!(holder_a > 0.0 && holder_a <= 1.0)) throw DomainError("Hölder exponent must lie in (0, 1]");
    if (!(amplitude >= 0.0) || !(amplitude * std::pow(horizon, holder_a) < 1.0))
        throw DomainError("amplitude destroys coercivity: need amp τ^a < 1");
    Eigen::VectorXd gv(n);
    for (int k = 0; k < n; ++k) gv(k) = 1.0 + std::pow(k * std::numbers::pi, 2);
    const Mat gram_v = gv.cast<cplx>().asDiagonal();
    const auto space = GalerkinSpace::create(Mat::Identity(n, n), gram_v);

    Mat k = Mat::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) {
        k(i, i + 1) = 1.0;
        k(i + 1, i) = -1.0;
    }
    // K is skew, so iK is Hermitian: K = Q diag(iθ) Q*.
    Eigen::SelfAdjointEigenSolver<Mat> es(cplx(0.0, 1.0) * k);
    const Mat q = es.eigenvectors();
    const Eigen::VectorXd theta = -es.eigenvalues();
    const double k_norm = linalg::spectral_norm(k);
    Eigen::VectorXd w0(n);
    for (int i = 0; i < n; ++i) w0(i) = i % 2 == 0 ? 1.0 : -1.0;
    const Eigen::VectorXd d = gv.cwiseSqrt();

    FormFunction form = [=](double t) {
        const double x = std::pow(std::max(t, 0.0), holder_a);
        Vec phase(n);
        for (int i = 0; i < n; ++i) phase(i) = std::polar(1.0, rate * x * theta(i));
        const Mat u = q * phase.asDiagonal() * q.adjoint();
        const Mat w = u.adjoint() * w0.cast<cplx>().asDiagonal() * u;
        const Mat inner = Mat::Identity(n, n) + amplitude * x * w;
        return Mat(d.cast<cplx>().asDiagonal() * inner * d.cast<cplx>().asDiagonal());
    };
    const double top = amplitude * std::pow(horizon, holder_a);
    const FormFamily::Constants constants{1.0 + top, 1.0 - top, 0.0};
    const double c = amplitude * (1.0 + 2.0 * rate * k_norm * std::pow(horizon, holder_a));
    return FormFamily(space, horizon, form, constants, ModulusOfContinuity::holder(holder_a, c), "rotating");
}

FormFamily build_random_accretive(int n, std::uint64_t seed, double horizon, double shift) {
    if (n < 1) throw DomainError("dimension must be positive");
    if (!(shift > 0.0)) throw DomainError("random accretive family needs a positive shift");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0 / std::sqrt(2.0 * n));
    auto gaussian = [&] {
        Mat m(n, n);
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                const double re = g(rng);
                const double im = g(rng);
                m(i, j) = cplx(re, im);
            }
        return m;
    };
    const Mat x = gaussian();
    const Mat y = gaussian();
    const Mat f = x * x.adjoint() + shift * Mat::Identity(n, n) + 0.5 * (y - y.adjoint());
    const auto space = GalerkinSpace::create(Mat::Identity(n, n), Mat::Identity(n, n));
    const auto constants = measure_constants(space, horizon, [f](double) { return f; }, 0.0, 2);
    return constant_family(space, horizon, f, constants, "random-accretive");
}

FormFamily build_piecewise(const std::vector<FormFamily>& pieces, const std::vector<double>& breakpoints) {
    if (pieces.empty() || pieces.size() != breakpoints.size() + 1)
        throw ConfigurationError("piecewise family needs one piece per subinterval");
    const auto& first = pieces.front();
    const double horizon = first.horizon();
    FormFamily::Constants c{0.0, std::numeric_limits<double>::infinity(), 0.0};
    std::vector<HolderPiece> holder;
    for (const auto& p : pieces) {
        if (p.dim() != first.dim()) throw ConfigurationError("pieces must share one Galerkin space");
        if (p.space_ptr() != first.space_ptr() &&
            (p.space().gram_H() != first.space().gram_H() || p.space().gram_V() != first.space().gram_V()))
            throw ConfigurationError("pieces must share one Galerkin space");
        if (p.horizon() != horizon) throw ConfigurationError("pieces must share one horizon");
        if (p.modulus().kind() != ModulusOfContinuity::Kind::Holder)
            throw ConfigurationError("pieces must carry Hölder moduli");
        holder.push_back(p.modulus().pieces().front());
        c.bound_M = std::max(c.bound_M, p.bound_M());
        c.coercivity_alpha = std::min(c.coercivity_alpha, p.coercivity_alpha());
        c.shift_delta = std::max(c.shift_delta, p.shift_delta());
    }
    for (std::size_t k = 0; k < breakpoints.size(); ++k) {
        if (!(breakpoints[k] > 0.0 && breakpoints[k] < horizon))
            throw ConfigurationError("breakpoints must lie inside (0, τ)");
        if (k > 0 && !(breakpoints[k] > breakpoints[k - 1]))
            throw ConfigurationError("breakpoints must increase");
    }
    FormFunction form = [pieces, breakpoints](double t) {
        const auto j = std::upper_bound(breakpoints.begin(), breakpoints.end(), t) - breakpoints.begin();
        return pieces[j].form_at(t);
    };
    FormFunction left = [pieces, breakpoints](double t) {
        const auto j = std::lower_bound(breakpoints.begin(), breakpoints.end(), t) - breakpoints.begin();
        return pieces[j].form_at(t);
    };
    return FormFamily(first.space_ptr(), horizon, form, c, ModulusOfContinuity::piecewise_holder(breakpoints, holder),
                      "piecewise", left);
}

}  // namespace maxreg
