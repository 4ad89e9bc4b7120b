#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "maxreg/galerkin_forms.hpp"

namespace maxreg {

/// Functional calculus for one operator A.
///
/// Works in H-orthonormal coordinates B = G_H^{1/2} A G_H^{-1/2}. Self-adjoint and normal
/// operators are diagonalized unitarily; a general operator is diagonalized only when
/// `max_condition` > 0 and its eigenvector matrix has condition number below it. Otherwise
/// exponentials fall back to Padé scaling and squaring.
class Calculus {
public:
    enum class Mode { SelfAdjoint, Normal, Diagonalizable, Pade };

    explicit Calculus(const OperatorH& a, double max_condition = 0.0);

    Mode mode() const { return mode_; }
    bool spectral() const { return mode_ != Mode::Pade; }
    const Mat& matrix() const { return a_; }
    /// A = V diag(λ) V⁻¹ (spectral modes only).
    const Mat& eigenvectors() const { return v_; }
    const Mat& inverse_eigenvectors() const { return vinv_; }
    const Vec& eigenvalues() const { return lambda_; }

    /// e^{−sA}.
    Mat expm(double s) const;
    /// e^{−sA} x.
    Vec expm_apply(double s, const Vec& x) const;
    /// A e^{−sA}.
    Mat aexpm(double s) const;

private:
    Mat a_;
    Mode mode_ = Mode::Pade;
    Mat v_, vinv_;
    Vec lambda_;
};

/// e^{−sA} x. Throws DomainError for s < 0.
Vec expm_action(const OperatorH& a, double s, const Vec& x);

/// A e^{−sA}. Throws DomainError for s ≤ 0.
OperatorH aexpm(const OperatorH& a, double s);

/// (z − A)⁻¹. Throws LinearAlgebraError when z − A is numerically singular.
OperatorH resolvent(const OperatorH& a, cplx z);

/// Principal square root. Throws DomainError when the spectrum touches (−∞, 0].
OperatorH sqrt_op(const OperatorH& a);

/// Max |arg [Au|u]_H| over `samples` random H-unit vectors, the eigenvectors of Herm(A) and
/// Skew(A), and support points of the numerical range in 360 directions.
double numerical_range_angle(const OperatorH& a, int samples, std::uint64_t seed = 0);

/// ∫₀^∞ ∥A^{1/2} e^{−rA} x∥_H² dr in closed form (Lyapunov equation).
/// Throws DomainError for non-invertible or non-accretive A.
double square_function_norm(const OperatorH& a, const Vec& x);

struct ResolventCalibration {
    double theta = 0.0;
    double c_theta = 0.0;
};

struct ResolventDifference {
    double measured = 0.0;
    double bound = 0.0;
    /// False when z lies inside the sector S_θ; the bound is then informational only.
    bool asserted = true;
};

/// c_θ = safety · max of ∥R(z,A(t)) − R(z,A(s))∥·|z|/ω(|t−s|) over a calibration sweep:
/// pairs (0, h) for log-spaced h plus `random_pairs` uniform pairs, z on the rays
/// arg z ∈ {±θ, ±(θ+π)/2, π} with |z| ∈ [1e-2, 1e4].
ResolventCalibration calibrate_resolvent_difference(const FormFamily& family, double theta,
                                                    int random_pairs = 200, std::uint64_t seed = 0,
                                                    double safety = 1.1);

/// measured = ∥R(z,A(t)) − R(z,A(s))∥_{B(H)}, bound = c_θ ω(|t−s|)/|z|.
ResolventDifference resolvent_difference_bound(const FormFamily& family, double s, double t, cplx z,
                                               const ResolventCalibration& calibration);

/// Sweep grids used to measure the semigroup and resolvent constants.
struct SectorSweep {
    double horizon = 1.0;
    int s_points = 41;          ///< log-spaced in [1e-4 τ, τ]
    int z_points = 31;          ///< log-spaced radii in [1e-2, 1e4]
    double theta = 0.0;         ///< resolvent sector angle; 0 selects (ω₀ + π/2)/2
    int angle_samples = 1000;   ///< random vectors for the numerical-range angle
    std::uint64_t seed = 0;
};

/// Constants measured on one operator.
struct SectorConstants {
    double omega0 = 0.0;
    double theta = 0.0;
    std::map<std::string, double> calibrated;  ///< sup over the calibration grid
    std::map<std::string, double> verified;    ///< sup over the disjoint verification grid
};

/// Measures C_exp, C_AsE, C_V_smooth, C_resolvent and the V′ exponential bound C_exp_Vdual.
SectorConstants measure_sector_constants(const OperatorH& a, const SectorSweep& sweep);

struct SectorReport {
    std::string family_id;
    double omega0 = 0.0;
    double theta = 0.0;
    double angle_bound = 0.0;  ///< arctan(M/α)
    std::map<std::string, double> constants;
    std::map<std::string, bool> verified;
    std::vector<double> sample_times;
    SectorSweep sweep;
};

/// Runs measure_sector_constants at each sample time and reduces by max.
/// A constant counts as verified when the verification sup stays within 2% of the calibrated sup.
SectorReport sector_report(const FormFamily& family, const std::vector<double>& sample_times,
                           SectorSweep sweep = {});

/// Log-spaced grid of `count` points in [lo, hi].
std::vector<double> log_grid(double lo, double hi, int count);

/// Geometric midpoints of consecutive points of a log grid.
std::vector<double> log_midpoints(const std::vector<double>& grid);

}  // namespace maxreg
