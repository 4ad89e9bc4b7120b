#pragma once

#include "maxreg/galerkin_forms.hpp"
#include "maxreg/time_grid.hpp"

namespace maxreg {

/// Values and finite/divergent verdicts of the three Dini-type integrals of ω on (0, τ).
struct DiniReport {
    double horizon = 1.0;
    double p = 2.0;
    double integral_32 = 0.0;    ///< ∫ ω(t)/t^{3/2} dt
    double integral_p = 0.0;     ///< ∫ (ω(t)/t)^p dt
    double integral_2log = 0.0;  ///< ∫ ω(t)²/t dt
    bool finite_32 = true;
    bool finite_p = true;
    bool finite_2log = true;
    bool closed_form = false;
};

/// Hölder moduli use closed forms; other kinds use a dyadic graded quadrature toward 0
/// (60 levels, Gauss–Legendre 8 per level) flagged divergent when the partial sum grows by
/// ≥ 5% over the last 10 levels. Piecewise Hölder verdicts follow the smallest exponent.
DiniReport dini_report(const ModulusOfContinuity& omega, double horizon, double p);

/// Partial sums S_1, …, S_levels of ∫ g over the dyadic panels [τ 2^{−ℓ−1}, τ 2^{−ℓ}].
std::vector<double> graded_partial_sums(const std::function<double(double)>& g, double horizon,
                                        int levels = 60, int order = 8);

/// (Σ_k (t_{k+1} − t_k) ∥g(t_k)∥_H^p)^{1/p}; p = ∞ gives the max over cells.
double lp_norm(const GridFunction& g, double p, const GalerkinSpace& space);

struct InterpolationNorm {
    double value = 0.0;
    bool converged = true;  ///< Gauss orders 8 and 16 agree to 1e-8 relative
};

/// (∥u0∥_H^p + ∫₀^τ ∥A0 e^{−tA0} u0∥_H^p dt)^{1/p} with dyadic grading toward t = 0.
InterpolationNorm interpolation_norm(const OperatorH& a0, const Vec& u0, double p, double horizon);

struct AprioriRatio {
    double ratio = 0.0;
    double numerator = 0.0;
    double denominator = 0.0;
    bool degenerate = false;
};

/// (∥u∥_p + ∥du∥_p + ∥Au∥_p) / (∥f∥_p + interpolation_norm(A0, u0, p, τ)).
/// 0/0 returns ratio 0 flagged degenerate; x/0 with x > 0 throws DegenerateDataError.
AprioriRatio apriori_ratio(const GridFunction& u, const GridFunction& du, const GridFunction& au,
                           const GridFunction& f, const Vec& u0, const OperatorH& a0, double p);

struct MajorantBound {
    double value = 0.0;
    bool finite = true;
};

/// Schur-test bound for h ↦ ∫₀^t ω(t−s)/(t−s)^r h(s) ds on L_p(0,τ), r ∈ {1, 3/2}.
/// Both Schur integrals equal ∫₀^τ ω(h) h^{−r} dh, so the bound does not depend on p.
MajorantBound scalar_majorant_norm(const ModulusOfContinuity& omega, double r, double p, double horizon);

/// max over nodes of ∥u∥_V² / (∥du∥_{V′}² + ∥f∥_{V′}² + δ²∥u∥_{V′}²); nodes with a zero
/// denominator and zero numerator are skipped, a zero denominator with nonzero numerator gives ∞.
double v_norm_recovery_check(const GridFunction& u, const GridFunction& du, const GridFunction& f,
                             const FormFamily& family, double delta);

}  // namespace maxreg
