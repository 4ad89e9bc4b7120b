#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "maxreg/galerkin_forms.hpp"

namespace maxreg {

/// Scalar problem x′ + a(t)x = 1, x(0) = 0 with a(t) = 1 + Σ_n c_n |t − t_n|^{−1/p}.
struct CounterexampleSpec {
    double p = 2.0;
    int terms = 200;            ///< truncation K
    double first_weight = 0.5;  ///< c_1
    double weight_ratio = 0.95; ///< c_{n+1}/c_n
    /// Explicit nodes/weights override the defaults (base-3 van der Corput nodes, geometric weights).
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Base-b van der Corput sequence, first `count` terms (starting at index 1).
std::vector<double> van_der_corput(int count, int base = 3);

class Counterexample {
public:
    /// `levels` sets the dyadic grading toward each node used for the running integral.
    explicit Counterexample(CounterexampleSpec spec, int levels = 40);

    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& weights() const { return weights_; }
    double p() const { return p_; }

    /// a(t); points within 1e-12 of a node are evaluated at distance 1e-12.
    double a(double t) const;
    /// ∫₀ᵗ a(r) dr in closed form.
    double a_integral(double t) const;
    /// x(t) = e^{−∫₀ᵗa} ∫₀ᵗ e^{∫₀ˢa} ds.
    double x(double t) const;
    /// exp(−∫₀¹ a), the constant in a(t)x(t) ≥ C t a(t).
    double lower_constant() const;

    /// (∫_lo^hi |a x|^q dt)^{1/q} on panels graded toward each node down to distance
    /// 2^{−levels} times the half-gap; the innermost piece is cut off.
    double ax_norm(double q, double lo, double hi, int levels) const;

private:
    struct Panel {
        double lo, hi;
        double j_lo;  ///< ∫₀^lo e^{A(s)} ds
    };
    std::vector<Panel> build_panels(double lo, double hi, int levels, bool cutoff) const;
    double j_integral(double t) const;

    double p_;
    std::vector<double> nodes_;
    std::vector<double> weights_;
    std::vector<Panel> table_;
};

Counterexample build_counterexample(const CounterexampleSpec& spec);

/// P1 finite elements on [0,1] with m interior nodes (m + 2 unknowns, natural boundary
/// conditions): gram_H = mass, gram_V = mass + stiffness, F(t) = stiffness weighted by
/// a(t, element midpoint). α = δ = ν; M is measured. Throws DomainError for ν ≤ 0.
using Coefficient = std::function<cplx(double t, double x)>;
FormFamily build_elliptic_1d(const Coefficient& a_coeff, int m, double nu, double horizon = 1.0,
                             std::optional<ModulusOfContinuity> modulus = std::nullopt);

/// Stiffness plus β(t,0) e₀e₀* + β(t,1) e₁e₁* on the same P1 space.
/// δ = 0 when the form is coercive on samples (λ_min ≥ 1e-3); otherwise the discrete trace
/// inequality with ε = 1/(2 sup|β|) gives α = 1/2, δ = 1 + sup|β| c_ε.
using BoundaryCoefficient = std::function<double(double t, double x)>;
FormFamily build_robin(const BoundaryCoefficient& beta, int m, double horizon = 1.0,
                       std::optional<ModulusOfContinuity> modulus = std::nullopt);

/// Discrete trace constant: smallest c with e₀e₀* + e₁e₁* ≤ ε G_V + c G_H.
double trace_constant(const GalerkinSpace& space, double epsilon);

/// G_H = I, G_V = diag(1 + (kπ)²), F(t) = G_V^{1/2}(I + amp t^a W(t^a))G_V^{1/2} with
/// W(x) = U(x)* diag((−1)^k) U(x), U(x) = exp(rate x K), K the tridiagonal skew matrix.
/// ω(h) = amp (1 + 2 rate ∥K∥ τ^a) h^a. Throws DomainError unless amp τ^a < 1 and a ∈ (0, 1].
FormFamily build_rotating_family(int n, double holder_a, double amplitude, double horizon = 1.0,
                                 double rate = 1.0);

/// Constant family G_H = G_V = I, F = XX* + shift I + (Y − Y*)/2 with Gaussian X, Y.
FormFamily build_random_accretive(int n, std::uint64_t seed, double horizon = 1.0, double shift = 0.5);

/// Family equal to pieces[j] on [t_j, t_{j+1}) (last piece closed), with left limits at the
/// breakpoints and a piecewise Hölder modulus. Pieces must share one space and carry Hölder moduli.
FormFamily build_piecewise(const std::vector<FormFamily>& pieces, const std::vector<double>& breakpoints);

}  // namespace maxreg
