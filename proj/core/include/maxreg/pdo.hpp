#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "maxreg/galerkin_forms.hpp"

namespace maxreg {

using Point = Eigen::VectorXd;

/// Matrix-valued symbol σ(x, ξ) on ℝⁿ × ℝⁿ, n ∈ {1, 2}.
///
/// Besides the pointwise value a symbol may carry a `key`: two points with equal keys have
/// identical σ(x, ·). apply_T groups grid points by key and runs one multiplier pass per group.
class Symbol {
public:
    using Value = std::function<Mat(const Point& x, const Point& xi)>;
    using Multiplier = std::function<Mat(const Point& xi)>;
    using Key = std::function<Point(const Point& x)>;
    /// Precomputes σ(x, ·) for one x.
    using Freeze = std::function<Multiplier(const Point& x)>;

    Symbol(int dim_x, int components, Value value);
    /// x-independent symbol m(ξ).
    static Symbol multiplier(int dim_x, int components, Multiplier m);
    static Symbol identity(int dim_x, int components);

    int dim_x() const { return dim_x_; }
    int components() const { return m_; }
    Mat value_at(const Point& x, const Point& xi) const { return value_(x, xi); }
    Mat value_at(double x, double xi) const;
    bool x_independent() const { return x_independent_; }
    Point key(const Point& x) const { return key_ ? key_(x) : x; }
    /// σ(x, ·), through the freeze hook when one is installed.
    Multiplier frozen(const Point& x) const;

    Symbol& with_key(Key key);
    Symbol& with_freeze(Freeze freeze);
    Symbol& with_modulus(ModulusOfContinuity modulus);
    Symbol& with_smoothing_delta(double delta);
    Symbol& with_deriv_bounds(std::vector<double> bounds);

    const ModulusOfContinuity& modulus() const { return modulus_; }
    double smoothing_delta() const { return smoothing_delta_; }
    const std::vector<double>& deriv_bounds() const { return deriv_bounds_; }

private:
    int dim_x_;
    int m_;
    Value value_;
    Key key_;
    Freeze freeze_;
    bool x_independent_ = false;
    ModulusOfContinuity modulus_ = ModulusOfContinuity::zero();
    double smoothing_delta_ = 0.5;
    std::vector<double> deriv_bounds_;
};

/// Uniform grid on [−X, X]ⁿ with 2^k points per axis, x_j = −X + jΔ, Δ = 2X/2^k.
struct FieldGrid {
    int dim_x = 1;
    double half_width = 1.0;
    int log2_points = 8;

    /// Throws ConfigurationError for n ∉ {1, 2}, X ≤ 0 or k outside [1, 20].
    void validate() const;
    int points_per_axis() const { return 1 << log2_points; }
    int total_points() const;
    double spacing() const { return 2.0 * half_width / points_per_axis(); }
    double coordinate(int j) const { return -half_width + j * spacing(); }
    /// Grid point with flat row-major index p.
    Point point(int p) const;
    /// Discrete frequency of flat index p: ξ = 2π k̃/(GΔ) per axis with signed k̃ ∈ [−G/2, G/2).
    Point frequency(int p) const;
    FieldGrid refined() const { return {dim_x, half_width, log2_points + 1}; }
};

/// m-vector per grid point; column p holds the value at point p.
struct SampledField {
    FieldGrid grid;
    Mat values;
    /// Set by apply_T when the input does not decay to 1e-8 of its max at the boundary.
    bool aliasing_warning = false;

    SampledField() = default;
    SampledField(FieldGrid g, int components);
    SampledField(FieldGrid g, Mat v);

    int components() const { return static_cast<int>(values.rows()); }
    /// (Δⁿ Σ_p ∥f_p∥²)^{1/2}.
    double l2_norm() const;
    /// True when boundary values are ≤ 1e-8 of the maximum.
    bool decays_at_boundary() const;

    template <class F>
    static SampledField sample(const FieldGrid& g, int components, F&& f) {
        SampledField out(g, components);
        for (int p = 0; p < g.total_points(); ++p) out.values.col(p) = f(g.point(p));
        return out;
    }
};

/// T_σ f(x_j) = G⁻ⁿ Σ_k σ(x_j, ξ_k) F_k e^{2πi j·k/G} with F the forward DFT of f.
SampledField apply_T(const Symbol& symbol, const SampledField& f);
/// Adjoint of apply_T for the pairing Δⁿ Σ_p g_p* f_p.
SampledField apply_T_adjoint(const Symbol& symbol, const SampledField& g);

/// Standard bump exp(−1/(1 − |y|²)) on the unit ball, unnormalized.
double bump(const Point& y);

struct SymbolSplit {
    Symbol smooth;     ///< σ₁
    Symbol remainder;  ///< σ₂ = σ − σ₁
};

/// σ₁(x, ξ) = ∫ φ(y) σ(x − y⟨ξ⟩^{−δ}, ξ) dy with φ the normalized bump, by a tensor
/// Gauss–Legendre rule of order 8 per axis on [−1, 1]ⁿ (weights normalized to sum 1).
/// x-independent symbols return σ₁ = σ and σ₂ = 0 exactly. Throws DomainError for δ ∉ (0, 1).
SymbolSplit split_symbol(const Symbol& symbol);

struct SplitCheck {
    double smooth_constant = 0.0;     ///< sup ∥∂_x^β ∂_ξ^α σ₁∥ ⟨ξ⟩^{|α| − δ|β|}, |β| ≤ 1
    double remainder_constant = 0.0;  ///< sup ∥∂_ξ^α σ₂∥ ⟨ξ⟩^{|α|} / ω(⟨ξ⟩^{−δ})
};

SplitCheck check_split(const Symbol& symbol, const SymbolSplit& split, const std::vector<Point>& x_grid,
                       const std::vector<Point>& xi_grid, int max_order);

struct ConditionEntry {
    std::vector<int> alpha;
    double c_alpha = 0.0;  ///< sup ∥∂_ξ^α σ(x, ξ)∥ ⟨ξ⟩^{|α|}
    double x_ratio = 0.0;  ///< sup ∥∂_ξ^α σ(x,ξ) − ∂_ξ^α σ(x′,ξ)∥ ⟨ξ⟩^{|α|} / ω(|x − x′|)
};

struct ConditionReport {
    int dim_x = 1;
    int max_order = 0;
    std::vector<ConditionEntry> entries;
    double integral_2log = 0.0;
    bool dini_2log_finite = true;
    /// Dini condition ∫₀¹ ω(t)²/t dt < ∞ together with finite C_α and x-ratios up to order [n/2]+1.
    bool hypotheses_met = true;
};

/// Central finite differences in ξ with step 1e-3⟨ξ⟩. Throws DomainError for max_order > [n/2]+2.
ConditionReport check_symbol_conditions(const Symbol& symbol, const std::vector<Point>& x_grid,
                                        const std::vector<Point>& xi_grid, int max_order);

/// ∂_ξ^α σ(x, ξ) by tensor central differences with step 1e-3⟨ξ⟩ (orders ≤ 3 per axis).
Mat xi_derivative(const Symbol& symbol, const Point& x, const Point& xi, const std::vector<int>& alpha);

/// σ(t, ξ) = B(clamp t)(iξ + B(clamp t))⁻¹ with B = G_H^{1/2} A G_H^{−1/2} (H-orthonormal coordinates).
Symbol mr_symbol(const FormFamily& family);

/// Power iteration on T*T from `probes` random fields (probe j seeded with seed + j).
double opnorm_estimate(const Symbol& symbol, const FieldGrid& grid, int probes, std::uint64_t seed = 0,
                       int max_iter = 200);

}  // namespace maxreg
