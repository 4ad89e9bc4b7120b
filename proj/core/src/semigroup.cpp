#include "maxreg/semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "maxreg/errors.hpp"

namespace maxreg {

namespace {

Mat to_orthonormal(const OperatorH& a) {
    const auto& sp = *a.space;
    return sp.h_sqrt() * a.matrix * sp.h_inv_sqrt();
}

Vec random_unit(std::mt19937_64& rng, Eigen::Index n) {
    std::normal_distribution<double> g(0.0, 1.0);
    Vec y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double re = g(rng);
        const double im = g(rng);
        y(i) = cplx(re, im);
    }
    return y / y.norm();
}

}  // namespace

Calculus::Calculus(const OperatorH& a, double max_condition) : a_(a.matrix) {
    const auto& sp = *a.space;
    const Mat b = to_orthonormal(a);
    const double scale = b.norm();
    if (linalg::relative_asymmetry(b) <= 1e-12) {
        Eigen::SelfAdjointEigenSolver<Mat> es(linalg::hermitian_part(b));
        if (es.info() != Eigen::Success) throw LinearAlgebraError("Hermitian eigensolve failed");
        mode_ = Mode::SelfAdjoint;
        lambda_ = es.eigenvalues().cast<cplx>();
        v_ = sp.h_inv_sqrt() * es.eigenvectors();
        vinv_ = es.eigenvectors().adjoint() * sp.h_sqrt();
        return;
    }
    const Mat comm = b.adjoint() * b - b * b.adjoint();
    if (comm.norm() <= 1e-12 * scale * scale) {
        Eigen::ComplexSchur<Mat> schur(b);
        if (schur.info() != Eigen::Success) throw LinearAlgebraError("complex Schur decomposition failed");
        mode_ = Mode::Normal;
        lambda_ = schur.matrixT().diagonal();
        v_ = sp.h_inv_sqrt() * schur.matrixU();
        vinv_ = schur.matrixU().adjoint() * sp.h_sqrt();
        return;
    }
    if (max_condition > 0.0) {
        Eigen::ComplexEigenSolver<Mat> es(a_);
        if (es.info() == Eigen::Success) {
            Eigen::JacobiSVD<Mat> svd(es.eigenvectors());
            const auto& sv = svd.singularValues();
            const double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1)
                                                         : std::numeric_limits<double>::infinity();
            if (cond <= max_condition) {
                mode_ = Mode::Diagonalizable;
                lambda_ = es.eigenvalues();
                v_ = es.eigenvectors();
                vinv_ = v_.partialPivLu().inverse();
                return;
            }
        }
    }
    mode_ = Mode::Pade;
}

Mat Calculus::expm(double s) const {
    if (!spectral()) return linalg::expm(-s * a_);
    const Vec d = (-s * lambda_.array()).exp().matrix();
    return v_ * d.asDiagonal() * vinv_;
}

Vec Calculus::expm_apply(double s, const Vec& x) const {
    if (!spectral()) return linalg::expm(-s * a_) * x;
    const Vec d = (-s * lambda_.array()).exp().matrix();
    return v_ * (d.asDiagonal() * (vinv_ * x));
}

Mat Calculus::aexpm(double s) const {
    if (!spectral()) return a_ * linalg::expm(-s * a_);
    const Vec d = (lambda_.array() * (-s * lambda_.array()).exp()).matrix();
    return v_ * d.asDiagonal() * vinv_;
}

Vec expm_action(const OperatorH& a, double s, const Vec& x) {
    if (!(s >= 0.0)) throw DomainError("semigroup time s must be non-negative");
    if (s == 0.0) return x;
    return Calculus(a).expm_apply(s, x);
}

OperatorH aexpm(const OperatorH& a, double s) {
    if (!(s > 0.0)) throw DomainError("A e^{-sA} needs s > 0");
    return OperatorH{Calculus(a).aexpm(s), a.space, a.accretivity_shift};
}

OperatorH resolvent(const OperatorH& a, cplx z) {
    const Eigen::Index n = a.matrix.rows();
    const Mat m = z * Mat::Identity(n, n) - a.matrix;
    Eigen::PartialPivLU<Mat> lu(m);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-15)) throw LinearAlgebraError("z - A is numerically singular");
    return OperatorH{lu.inverse(), a.space, a.accretivity_shift};
}

OperatorH sqrt_op(const OperatorH& a) {
    const auto& sp = *a.space;
    const Mat b = to_orthonormal(a);
    if (linalg::relative_asymmetry(b) <= 1e-12) {
        Eigen::SelfAdjointEigenSolver<Mat> es(linalg::hermitian_part(b));
        const Eigen::VectorXd& lam = es.eigenvalues();
        const double scale = std::max(lam.cwiseAbs().maxCoeff(), 1e-300);
        if (lam(0) <= 1e-14 * scale) throw DomainError("spectrum touches (-inf, 0]");
        const Mat u = es.eigenvectors();
        const Mat root = u * lam.cwiseSqrt().cast<cplx>().asDiagonal() * u.adjoint();
        return OperatorH{sp.h_inv_sqrt() * root * sp.h_sqrt(), a.space, a.accretivity_shift};
    }
    return OperatorH{linalg::sqrtm(a.matrix), a.space, a.accretivity_shift};
}

double numerical_range_angle(const OperatorH& a, int samples, std::uint64_t seed) {
    if (samples < 1) throw DomainError("numerical_range_angle needs at least one sample");
    const Mat b = to_orthonormal(a);
    const Eigen::Index n = b.rows();
    double best = 0.0;
    auto consider = [&](const Vec& y) {
        const cplx w = y.dot(b * y);  // y* B y
        if (std::abs(w) > 0.0) best = std::max(best, std::abs(std::arg(w)));
    };
    std::mt19937_64 rng(seed);
    for (int k = 0; k < samples; ++k) consider(random_unit(rng, n));

    Eigen::SelfAdjointEigenSolver<Mat> herm(linalg::hermitian_part(b));
    Eigen::SelfAdjointEigenSolver<Mat> skew(cplx(0.0, -1.0) * linalg::skew_part(b));
    for (Eigen::Index k = 0; k < n; ++k) {
        consider(herm.eigenvectors().col(k));
        consider(skew.eigenvectors().col(k));
    }
    constexpr int directions = 360;
    for (int k = 0; k < directions; ++k) {
        const double phi = 2.0 * std::numbers::pi * k / directions;
        const Mat rot = std::polar(1.0, -phi) * b;
        Eigen::SelfAdjointEigenSolver<Mat> es(linalg::hermitian_part(rot));
        consider(es.eigenvectors().col(n - 1));
    }
    return best;
}

double square_function_norm(const OperatorH& a, const Vec& x) {
    const auto& sp = *a.space;
    const Mat b = to_orthonormal(a);
    const Vec y = sp.h_sqrt() * x;
    if (y.norm() == 0.0) return 0.0;
    if (linalg::relative_asymmetry(b) <= 1e-12) {
        Eigen::SelfAdjointEigenSolver<Mat> es(linalg::hermitian_part(b), Eigen::EigenvaluesOnly);
        const auto& lam = es.eigenvalues();
        if (lam(0) <= 1e-14 * std::max(lam.cwiseAbs().maxCoeff(), 1e-300))
            throw DomainError("square function needs an invertible accretive operator");
        return 0.5 * y.squaredNorm();
    }
    Eigen::ComplexEigenSolver<Mat> es(b, false);
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
        if (es.eigenvalues()(k).real() <= 0.0)
            throw DomainError("square function needs spectrum in the open right half-plane");
    const Mat root = linalg::sqrtm(b);
    const Mat x_sol = linalg::solve_lyapunov(b, root.adjoint() * root);
    return y.dot(x_sol * y).real();
}

// ---------------------------------------------------------------------------

namespace {

std::vector<cplx> rays(double theta) {
    const double pi = std::numbers::pi;
    const double mid = 0.5 * (theta + pi);
    return {std::polar(1.0, theta), std::polar(1.0, -theta), std::polar(1.0, mid), std::polar(1.0, -mid),
            cplx(-1.0, 0.0)};
}

double resolvent_difference_norm(const OperatorH& as, const OperatorH& at, cplx z) {
    const Mat d = resolvent(at, z).matrix - resolvent(as, z).matrix;
    return at.space->h_op_norm(d);
}

}  // namespace

ResolventCalibration calibrate_resolvent_difference(const FormFamily& family, double theta, int random_pairs,
                                                    std::uint64_t seed, double safety) {
    const double tau = family.horizon();
    std::vector<std::pair<double, double>> pairs;
    for (double h : log_grid(1e-4 * tau, tau, 17)) pairs.emplace_back(0.0, h);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, tau);
    for (int k = 0; k < random_pairs; ++k) pairs.emplace_back(u(rng), u(rng));

    const auto radii = log_grid(1e-2, 1e4, 13);
    const auto dirs = rays(theta);
    double c = 0.0;
    for (const auto& [s, t] : pairs) {
        const double w = family.modulus()(std::abs(t - s));
        if (!(w > 0.0)) continue;
        const OperatorH as = assemble_operator(family, s);
        const OperatorH at = assemble_operator(family, t);
        for (double r : radii)
            for (cplx d : dirs) {
                const cplx z = r * d;
                c = std::max(c, resolvent_difference_norm(as, at, z) * std::abs(z) / w);
            }
    }
    return ResolventCalibration{theta, safety * c};
}

ResolventDifference resolvent_difference_bound(const FormFamily& family, double s, double t, cplx z,
                                               const ResolventCalibration& calibration) {
    ResolventDifference out;
    out.asserted = std::abs(std::arg(z)) >= calibration.theta;
    if (s == t) {
        out.measured = 0.0;
        out.bound = 0.0;
        return out;
    }
    const OperatorH as = assemble_operator(family, s);
    const OperatorH at = assemble_operator(family, t);
    out.measured = resolvent_difference_norm(as, at, z);
    out.bound = calibration.c_theta * family.modulus()(std::abs(t - s)) / std::abs(z);
    return out;
}

std::vector<double> log_grid(double lo, double hi, int count) {
    if (count < 2 || !(lo > 0.0) || !(hi > lo)) throw DomainError("invalid log grid");
    std::vector<double> g(count);
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (int k = 0; k < count; ++k) g[k] = std::exp(a + (b - a) * k / (count - 1));
    g.front() = lo;
    g.back() = hi;
    return g;
}

std::vector<double> log_midpoints(const std::vector<double>& grid) {
    std::vector<double> m;
    for (std::size_t k = 1; k < grid.size(); ++k) m.push_back(std::sqrt(grid[k - 1] * grid[k]));
    return m;
}

namespace {

void measure_on(const OperatorH& a, const Calculus& calc, const std::vector<double>& s_grid,
                const std::vector<double>& z_radii, double theta, std::map<std::string, double>& out) {
    const auto& sp = *a.space;
    double c_exp = 0.0, c_ase = 0.0, c_v = 0.0, c_vd = 0.0, c_res = 0.0;
    for (double s : s_grid) {
        const Mat e = calc.expm(s);
        c_exp = std::max(c_exp, sp.h_op_norm(e));
        c_ase = std::max(c_ase, s * sp.h_op_norm(a.matrix * e));
        c_v = std::max(c_v, std::sqrt(s) * sp.hv_op_norm(e));
        c_vd = std::max(c_vd, sp.vdual_op_norm(e));
    }
    for (double r : z_radii)
        for (cplx d : rays(theta)) {
            const cplx z = r * d;
            c_res = std::max(c_res, std::sqrt(r) * sp.hv_op_norm(resolvent(a, z).matrix));
        }
    out["C_exp"] = c_exp;
    out["C_AsE"] = c_ase;
    out["C_V_smooth"] = c_v;
    out["C_exp_Vdual"] = c_vd;
    out["C_resolvent"] = c_res;
}

}  // namespace

SectorConstants measure_sector_constants(const OperatorH& a, const SectorSweep& sweep) {
    SectorConstants out;
    out.omega0 = numerical_range_angle(a, sweep.angle_samples, sweep.seed);
    out.theta = sweep.theta > 0.0 ? sweep.theta : 0.5 * (out.omega0 + 0.5 * std::numbers::pi);
    const Calculus calc(a);
    const auto s_cal = log_grid(1e-4 * sweep.horizon, sweep.horizon, sweep.s_points);
    const auto z_cal = log_grid(1e-2, 1e4, sweep.z_points);
    measure_on(a, calc, s_cal, z_cal, out.theta, out.calibrated);
    measure_on(a, calc, log_midpoints(s_cal), log_midpoints(z_cal), out.theta, out.verified);
    return out;
}

SectorReport sector_report(const FormFamily& family, const std::vector<double>& times, SectorSweep sweep) {
    if (times.empty()) throw DomainError("sector_report needs sample times");
    SectorReport rep;
    rep.family_id = family.id();
    rep.sample_times = times;
    sweep.horizon = family.horizon();
    rep.angle_bound = std::atan(family.bound_M() / family.coercivity_alpha());

    std::vector<OperatorH> ops;
    for (double t : times) ops.push_back(assemble_operator(family, t));
    for (std::size_t k = 0; k < ops.size(); ++k)
        rep.omega0 = std::max(rep.omega0, numerical_range_angle(ops[k], sweep.angle_samples, sweep.seed + k));
    if (!(sweep.theta > 0.0)) sweep.theta = 0.5 * (rep.omega0 + 0.5 * std::numbers::pi);
    rep.theta = sweep.theta;
    rep.sweep = sweep;

    std::map<std::string, double> cal, ver;
    for (const auto& a : ops) {
        SectorSweep local = sweep;
        local.angle_samples = 1;
        const auto c = measure_sector_constants(a, local);
        for (const auto& [k, v] : c.calibrated) cal[k] = std::max(cal[k], v);
        for (const auto& [k, v] : c.verified) ver[k] = std::max(ver[k], v);
    }
    rep.constants = cal;
    for (const auto& [k, v] : cal) rep.verified[k] = ver[k] <= v * 1.02;
    return rep;
}

}  // namespace maxreg
