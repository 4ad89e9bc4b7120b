#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <vector>

#include "maxreg/galerkin_forms.hpp"
#include "maxreg/time_grid.hpp"

namespace maxreg {

/// Discretized operators L, Q, R of the representation A(·)u(·) = Q[A(·)u(·)] + Lf + Ru₀
/// for one family on one grid.
///
/// Every node operator A_k = A(t_k) is diagonalized once (A_k = V_k Λ_k V_k⁻¹). L is exact for
/// piecewise-constant f. Q uses product integration: the factor (A_k − A(s))A(s)⁻¹g(s) is
/// interpolated linearly between nodes and integrated exactly against A_k e^{−(t_k−s)A_k}.
/// Q is strictly block lower triangular; blocks between bitwise-equal node operators vanish.
class VolterraSystem {
public:
    /// Throws ShiftRequiredError when some A_k is not invertible and LinearAlgebraError when
    /// some A_k cannot be diagonalized (eigenvector condition above 1e12).
    VolterraSystem(const FormFamily& family, TimeGrid grid);

    const FormFamily& family() const { return family_; }
    const TimeGrid& grid() const { return grid_; }
    int dim() const { return family_.dim(); }
    /// True when all node operators are bitwise equal, so Q ≡ 0.
    bool autonomous() const { return classes_ == 1; }

    const Mat& node_operator(int k) const { return nodes_[k].a; }
    Vec operator_apply(int k, const Vec& x) const { return nodes_[k].a * x; }
    Vec operator_solve(int k, const Vec& x) const { return nodes_[k].lu.solve(x); }

    /// (Lf)(t_k) for piecewise-constant f. With `data_decay` = μ the data is read as
    /// e^{−μs} f(s); the exponential weight is integrated exactly as well.
    GridFunction apply_L(const GridFunction& f, double data_decay = 0.0) const;
    GridFunction apply_Q(const GridFunction& g) const;
    /// Adjoint of Q for the pairing Σ_{k<N} (t_{k+1}−t_k) [g_k|h_k]_H.
    GridFunction apply_Q_adjoint(const GridFunction& h) const;
    /// (Ru₀)(t_k) = A_k e^{−t_k A_k} u₀, with A_0 u₀ at t_0 = 0.
    GridFunction apply_R(const Vec& u0) const;

    /// Solves (I − Q)v = b exactly by forward substitution.
    GridFunction direct_solve(const GridFunction& b) const;

    /// Σ_{k<N} (t_{k+1}−t_k)∥g_k∥_H^p, raised to 1/p.
    double lp_norm(const GridFunction& g, double p) const;

private:
    struct Node {
        Mat a;
        Mat v, vinv;
        Vec lambda;
        Eigen::PartialPivLU<Mat> lu;
        int cls = 0;
    };

    const std::vector<Vec>& q_weights() const;
    /// Row k of Q applied to g, using only g_0, …, g_{k−1}.
    Vec q_row(int k, const Mat& gvals, const Mat& solved) const;

    FormFamily family_;
    TimeGrid grid_;
    std::vector<Node> nodes_;
    int classes_ = 1;

    mutable std::once_flag weights_once_;
    mutable std::vector<Vec> weights_;  ///< D_{k,i} stored at k(k−1)/2 + i
};

/// One-shot wrappers building a VolterraSystem on the grid of the argument.
GridFunction apply_L(const FormFamily& family, const GridFunction& f);
GridFunction apply_Q(const FormFamily& family, const GridFunction& g);
/// A(t) e^{−tA(t)} u₀. Throws DomainError for t ≤ 0.
Vec apply_R(const FormFamily& family, const Vec& u0, double t);

/// Lower estimate of ∥Q∥ on L_p(0,τ;H). p = 2 runs power iteration on Q*Q from each probe;
/// other p run Boyd's nonlinear power iteration. Probe j is seeded with seed + j, so the
/// estimate never decreases when probes are added.
double estimate_Q_norm(const VolterraSystem& system, double p, int probes, std::uint64_t seed = 0);
double estimate_Q_norm(const FormFamily& family, const TimeGrid& grid, double p, int probes,
                       std::uint64_t seed = 0);

struct ShiftChoice {
    double mu = 1.0;
    double q_norm = 0.0;
    std::vector<std::pair<double, double>> measured;  ///< (μ, estimate) for every tested μ
};

/// Smallest μ ∈ {1, 2, 4, …, 2³⁰} (μ ≥ δ) with estimate_Q_norm(shift_family(family, μ)) ≤ target.
/// Throws NoContractionError when the sweep is exhausted.
ShiftChoice choose_shift(const FormFamily& family, const TimeGrid& grid, double p, double target = 0.5,
                         int probes = 4, std::uint64_t seed = 0);

struct NeumannResult {
    GridFunction v;
    int iterations = 0;
    std::vector<double> residual_history;  ///< ∥v_{k+1} − v_k∥_p / ∥b∥_p
    double b_norm = 0.0;
};

/// v_{k+1} = Qv_k + b from v_0 = b until ∥v_{k+1} − v_k∥_p ≤ tol ∥b∥_p.
/// Throws NonConvergenceError after max_iter iterations.
NeumannResult neumann_iterate(const VolterraSystem& system, const GridFunction& b, double p, double tol,
                              int max_iter);
/// b = Lf + Ru₀ on the family's own grid, then neumann_iterate.
NeumannResult neumann_solve(const VolterraSystem& system, const GridFunction& f, const Vec& u0, double p,
                            double tol, int max_iter);

struct Reconstruction {
    GridFunction u;
    GridFunction du;
    /// ∥u(t_0) − u₀∥_H; reported, not asserted (A(t)⁻¹v(t) degenerates at t = 0 for rough u₀).
    double initial_mismatch = 0.0;
};

/// u(t_k) = A_k⁻¹ v_k and u′(t_k) = f_k − v_k.
Reconstruction reconstruct_u(const VolterraSystem& system, const GridFunction& v, const GridFunction& f,
                             const Vec& u0);

/// Implicit midpoint stepping of u′ = f − A(t)u on `fine_grid`, with f read piecewise constant.
GridFunction reference_solve(const FormFamily& family, const GridFunction& f, const Vec& u0,
                             const TimeGrid& fine_grid);

struct SolveOptions {
    double p = 2.0;
    double tol = 1e-10;
    int max_iter = 500;
    bool auto_shift = true;
    double target = 0.5;
    double mu = 0.0;  ///< used when auto_shift is false
    int probes = 4;
    std::uint64_t seed = 0;
};

struct SolveResult {
    double mu = 0.0;
    double q_norm = 0.0;
    std::vector<std::pair<double, double>> shift_sweep;
    NeumannResult neumann;
    GridFunction u;
    GridFunction du;
    GridFunction au;
    /// ∥v − (Qv + b)∥_p / ∥b∥_p after convergence.
    double fixed_point_residual = 0.0;
    double initial_mismatch = 0.0;
};

/// Solves u′ + A(t)u = f, u(0) = u₀ on `f.grid()`: picks μ, solves the shifted problem for
/// w = e^{−μt}u with data e^{−μt}f, and maps back. Throws DomainError when μτ > 600.
SolveResult solve_problem(const FormFamily& family, const GridFunction& f, const Vec& u0,
                          const SolveOptions& options = {});

struct HormanderDefect {
    double i1 = 0.0;
    double i2 = 0.0;
};

/// I1 = ∫_{|t−s|≥2|s′−s|} ∥K(t,s) − K(t,s′)∥ dt and I2 the same with K transposed, for the kernel
/// K(t,s) = 1_{0≤s≤t≤τ} A(t) e^{−(t−s)A(t)}. Adaptive Gauss–Kronrod in t.
HormanderDefect hormander_defect(const FormFamily& family, double s, double s_prime, double tol = 1e-8);

/// sup over sample times and r of r² ∥A(t)² e^{−rA(t)}∥_{B(H)}; bounds I1 by C log 2.
double calibrate_kernel_constant(const FormFamily& family, int time_samples = 9, int r_points = 200);

struct GlueOptions {
    SolveOptions solve;
    double kappa_max = 100.0;
    /// Shift inside the square roots; negative selects the family's δ.
    double root_shift = -1.0;
};

struct GlueResult {
    GridFunction u;
    GridFunction du;
    GridFunction au;
    std::vector<double> breakpoints;
    std::vector<double> kappas;  ///< compatibility constant per breakpoint
    std::vector<double> mus;     ///< shift per piece
    std::vector<int> iterations;
};

/// max(∥X Y⁻¹∥, ∥Y X⁻¹∥) with X = (δ + A(t⁻))^{1/2}, Y = (δ + A(t⁺))^{1/2}.
double domain_compatibility(const FormFamily& family, double t, double root_shift);

/// Solves piece by piece across the breakpoints of a piecewise Hölder modulus, passing the end
/// value of each piece on as the next initial value. Breakpoints must be grid nodes.
GlueResult glue_solve(const FormFamily& family, const GridFunction& f, const Vec& u0,
                      const GlueOptions& options = {});

}  // namespace maxreg
