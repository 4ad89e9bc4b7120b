#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "maxreg/linalg.hpp"

namespace maxreg {

/// Finite-dimensional space carrying the H and V inner products on one coordinate set.
///
/// [u|v]_H = v* G_H u and [u|v]_V = v* G_V u. Immutable; share through GalerkinSpacePtr.
class GalerkinSpace {
public:
    /// Validates both Gram matrices and the embedding ∥u∥_H ≤ c_V ∥u∥_V.
    /// When `embed_const` is absent the sharp constant is used.
    static std::shared_ptr<const GalerkinSpace> create(const Mat& gram_h, const Mat& gram_v,
                                                       std::optional<double> embed_const = std::nullopt);

    int dim() const { return static_cast<int>(gram_h_.rows()); }
    const Mat& gram_H() const { return gram_h_; }
    const Mat& gram_V() const { return gram_v_; }
    double embed_const() const { return embed_const_; }

    const Mat& h_sqrt() const { return h_sqrt_; }
    const Mat& h_inv_sqrt() const { return h_inv_sqrt_; }
    const Mat& v_sqrt() const { return v_sqrt_; }
    const Mat& v_inv_sqrt() const { return v_inv_sqrt_; }

    /// G_H⁻¹ rhs.
    Mat h_solve(const Mat& rhs) const;

    double h_norm(const Vec& x) const;
    double v_norm(const Vec& x) const;
    /// sup_v |[x|v]_H| / ∥v∥_V = ∥G_V^{-1/2} G_H x∥₂.
    double v_dual_norm(const Vec& x) const;

    /// ∥A∥_{B(H)} for a matrix acting on H-coordinates.
    double h_op_norm(const Mat& a) const;
    /// ∥A∥_{B(H,V)}.
    double hv_op_norm(const Mat& a) const;
    /// ∥A∥_{B(V′)} where V′ vectors are read through the H pairing.
    double vdual_op_norm(const Mat& a) const;
    /// Norm of the form matrix F as a map V → V′: ∥G_V^{-1/2} F G_V^{-1/2}∥₂.
    double form_norm(const Mat& f) const;

private:
    GalerkinSpace() = default;

    Mat gram_h_, gram_v_;
    Mat h_sqrt_, h_inv_sqrt_, v_sqrt_, v_inv_sqrt_;
    Eigen::LLT<Mat> h_llt_;
    double embed_const_ = 1.0;
};

using GalerkinSpacePtr = std::shared_ptr<const GalerkinSpace>;

struct HolderPiece {
    double exponent = 1.0;
    double constant = 0.0;
};

/// Non-decreasing bound ω on the time increments of a form family.
class ModulusOfContinuity {
public:
    enum class Kind { Holder, PiecewiseHolder, Tabulated };

    static ModulusOfContinuity holder(double exponent, double constant);
    static ModulusOfContinuity zero() { return holder(1.0, 0.0); }
    /// `breakpoints` are the interior points t_1 < … < t_{k−1}; one piece per subinterval.
    static ModulusOfContinuity piecewise_holder(std::vector<double> breakpoints,
                                                std::vector<HolderPiece> pieces);
    /// Linear interpolation of a monotone table; constant beyond the last gap.
    static ModulusOfContinuity tabulated(std::vector<double> gaps, std::vector<double> values);

    Kind kind() const { return kind_; }
    double operator()(double h) const;

    /// False when a tabulated ω keeps a positive value as h → 0⁺.
    bool vanishes_at_zero() const;

    const std::vector<HolderPiece>& pieces() const { return pieces_; }
    const std::vector<double>& breakpoints() const { return breakpoints_; }
    const std::vector<double>& gaps() const { return gaps_; }
    const std::vector<double>& values() const { return values_; }

    /// Smallest Hölder exponent across pieces (Hölder kinds only).
    double min_exponent() const;

private:
    Kind kind_ = Kind::Holder;
    std::vector<HolderPiece> pieces_;
    std::vector<double> breakpoints_;
    std::vector<double> gaps_;
    std::vector<double> values_;
};

using FormFunction = std::function<Mat(double)>;

/// Operator on the discrete H space: matrix in H-coordinates plus its Gram context.
struct OperatorH {
    Mat matrix;
    GalerkinSpacePtr space;
    double accretivity_shift = 0.0;
};

/// Time-dependent form t ↦ F(t) on [0, τ] with hypothesis constants M, α, δ and modulus ω.
///
/// Evaluation outside [0, τ] is clamped. A μ-shift is stored as a separate scalar so that
/// repeated shifts compose exactly.
class FormFamily {
public:
    struct Constants {
        double bound_M = 1.0;
        double coercivity_alpha = 1.0;
        double shift_delta = 0.0;
    };

    /// @param left_limit t ↦ F(t⁻); defaults to `form` (continuous families)
    FormFamily(GalerkinSpacePtr space, double horizon, FormFunction form, Constants constants,
               ModulusOfContinuity modulus, std::string id = {}, FormFunction left_limit = {});

    const GalerkinSpace& space() const { return *space_; }
    const GalerkinSpacePtr& space_ptr() const { return space_; }
    int dim() const { return space_->dim(); }
    double horizon() const { return horizon_; }
    const std::string& id() const { return id_; }
    const ModulusOfContinuity& modulus() const { return modulus_; }

    /// F(clamp(t)) including the accumulated shift.
    Mat form_at(double t) const;
    /// F(t⁻) including the accumulated shift.
    Mat form_left(double t) const;

    double bound_M() const;
    double coercivity_alpha() const { return base_.coercivity_alpha; }
    double shift_delta() const;
    double shift_mu() const { return mu_; }
    const Constants& base_constants() const { return base_; }
    const FormFunction& base_form() const { return form_; }
    const FormFunction& base_left_form() const { return left_; }
    bool has_left_limit() const { return has_left_; }

    FormFamily with_id(std::string id) const;
    FormFamily with_modulus(ModulusOfContinuity modulus) const;

private:
    friend FormFamily shift_family(const FormFamily& family, double mu);

    GalerkinSpacePtr space_;
    double horizon_;
    FormFunction form_;
    FormFunction left_;
    bool has_left_ = false;
    Constants base_;
    ModulusOfContinuity modulus_;
    std::string id_;
    double mu_ = 0.0;
};

/// A(t) = G_H⁻¹ F(t), t clamped to [0, τ].
OperatorH assemble_operator(const FormFamily& family, double t);
/// A(t⁻).
OperatorH assemble_operator_left(const FormFamily& family, double t);

/// Uniform sample times t_0 = 0, …, t_{count−1} = τ.
std::vector<double> sample_times(double horizon, int count);

struct BoundCheck {
    double M_est = 0.0;
    bool violated = false;
};

struct CoercivityCheck {
    double alpha_est = 0.0;
    double delta_used = 0.0;
    bool violated = false;
};

/// [H2]: max over samples of ∥G_V^{-1/2} F(t) G_V^{-1/2}∥₂ against the declared M.
BoundCheck verify_bounded(const FormFamily& family, const std::vector<double>& sample_times);

/// [H3]: min over samples of λ_min(G_V^{-1/2}(Herm F(t) + δ G_H) G_V^{-1/2}) against the declared α.
CoercivityCheck verify_coercive(const FormFamily& family, const std::vector<double>& sample_times);

/// Default pair grid: `gaps` log-spaced gaps in [τ·1e-4, τ], `starts` left endpoints per gap.
std::vector<std::pair<double, double>> default_modulus_pairs(double horizon, int gaps = 40,
                                                             int starts = 16);

/// Tabulated ω from sampled pairs; gaps equal within 1e-9 relative are pooled,
/// and the table is monotonized by a running max and anchored at (0, 0).
ModulusOfContinuity estimate_modulus(const FormFamily& family,
                                     const std::vector<std::pair<double, double>>& pair_grid);

/// F + μ G_H with M ← M + μ c_V², δ ← max(0, δ − μ).
FormFamily shift_family(const FormFamily& family, double mu);

/// Family with F(t) ≡ F on [0, τ].
FormFamily constant_family(GalerkinSpacePtr space, double horizon, const Mat& form,
                           FormFamily::Constants constants, std::string id = "constant");

/// Constants measured by the verifiers over `samples` uniform times, with `slack` added to M
/// and removed from α (δ is taken as given).
FormFamily::Constants measure_constants(GalerkinSpacePtr space, double horizon,
                                        const FormFunction& form, double delta, int samples = 201,
                                        double slack = 1e-6);

}  // namespace maxreg
