#include "maxreg/volterra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

#include "maxreg/errors.hpp"
#include "maxreg/regularity.hpp"
#include "maxreg/semigroup.hpp"

namespace maxreg {

namespace {

constexpr int kMaxClassReps = 64;
constexpr double kMaxCondition = 1e12;
// Beyond this many cached weight entries Q weights are recomputed per row.
constexpr std::size_t kMaxCachedWeights = 40'000'000;

GridFunction random_grid_function(const TimeGrid& grid, int dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    GridFunction out(grid, dim);
    for (int k = 0; k < grid.cells(); ++k)
        for (int i = 0; i < dim; ++i) {
            const double re = g(rng);
            const double im = g(rng);
            out.values()(i, k) = cplx(re, im);
        }
    return out;
}

/// Pointwise duality map g_k ↦ ∥g_k∥_H^{q−2} g_k.
GridFunction duality_map(const GridFunction& g, double q, const GalerkinSpace& sp) {
    GridFunction out(g.grid(), g.dim());
    for (int k = 0; k < g.grid().cells(); ++k) {
        const double nk = sp.h_norm(g.at(k));
        if (nk > 0.0) out.set(k, std::pow(nk, q - 2.0) * g.at(k));
    }
    return out;
}

}  // namespace

VolterraSystem::VolterraSystem(const FormFamily& family, TimeGrid grid)
    : family_(family), grid_(std::move(grid)) {
    const int count = grid_.size();
    nodes_.resize(count);
    std::vector<int> reps;
    classes_ = 0;
    for (int k = 0; k < count; ++k) {
        const Mat a = assemble_operator(family_, grid_.node(k)).matrix;
        int match = -1;
        if (k > 0 && a == nodes_[k - 1].a) match = k - 1;
        for (std::size_t r = 0; match < 0 && r < reps.size(); ++r)
            if (a == nodes_[reps[r]].a) match = reps[r];
        if (match >= 0) {
            nodes_[k] = nodes_[match];
            continue;
        }
        Node& node = nodes_[k];
        node.a = a;
        node.cls = classes_++;
        if (static_cast<int>(reps.size()) < kMaxClassReps) reps.push_back(k);
        node.lu.compute(a);
        if (!(node.lu.rcond() > 1e-14))
            throw ShiftRequiredError("A(t) is not invertible at t = " + std::to_string(grid_.node(k)));
        const Calculus calc(OperatorH{a, family_.space_ptr(), family_.shift_delta()}, kMaxCondition);
        if (!calc.spectral())
            throw LinearAlgebraError("A(t) is not diagonalizable at t = " + std::to_string(grid_.node(k)));
        node.v = calc.eigenvectors();
        node.vinv = calc.inverse_eigenvectors();
        node.lambda = calc.eigenvalues();
    }
}

double VolterraSystem::lp_norm(const GridFunction& g, double p) const {
    return maxreg::lp_norm(g, p, family_.space());
}

GridFunction VolterraSystem::apply_L(const GridFunction& f, double data_decay) const {
    if (f.grid().size() != grid_.size() || f.dim() != dim())
        throw ConfigurationError("apply_L: data does not match the system grid");
    GridFunction out(grid_, dim());
    const Mat& fv = f.values();
    for (int k = 1; k < grid_.size(); ++k) {
        const Node& nd = nodes_[k];
        const Mat c = nd.vinv * fv.leftCols(k);
        const double tk = grid_.node(k);
        Vec acc = Vec::Zero(dim());
        for (int i = 0; i < dim(); ++i) {
            const cplx lt = nd.lambda(i);
            const cplx l = lt - data_decay;
            cplx s = 0.0;
            for (int j = 0; j < k; ++j) {
                const double h = grid_.width(j);
                s += lt * h * std::exp(-l * (tk - grid_.node(j + 1))) * linalg::phi1(l * h) * c(i, j);
            }
            acc(i) = s * std::exp(-data_decay * tk);
        }
        out.set(k, nd.v * acc);
    }
    return out;
}

GridFunction VolterraSystem::apply_R(const Vec& u0) const {
    GridFunction out(grid_, dim());
    out.set(0, nodes_[0].a * u0);
    for (int k = 1; k < grid_.size(); ++k) {
        const Node& nd = nodes_[k];
        const double t = grid_.node(k);
        const Vec c = nd.vinv * u0;
        const Vec w = (nd.lambda.array() * (-t * nd.lambda.array()).exp() * c.array()).matrix();
        out.set(k, nd.v * w);
    }
    return out;
}

namespace {

/// D_{k,i} for i < k: product-integration weights of node i against λ e^{−λ(t_k − s)}.
Vec row_weight(const TimeGrid& grid, const Vec& lambda, int k, int i) {
    const double tk = grid.node(k);
    Vec d = Vec::Zero(lambda.size());
    for (Eigen::Index m = 0; m < lambda.size(); ++m) {
        const cplx l = lambda(m);
        cplx w = 0.0;
        {  // cell i, node i is its left end
            const double h = grid.width(i);
            const cplx x = l * h;
            w += std::exp(-l * (tk - grid.node(i + 1))) * (linalg::phi1(x) - std::exp(-x));
        }
        if (i > 0) {  // cell i − 1, node i is its right end
            const double h = grid.width(i - 1);
            const cplx x = l * h;
            w += std::exp(-l * (tk - grid.node(i))) * (1.0 - linalg::phi1(x));
        }
        d(m) = w;
    }
    return d;
}

std::size_t tri_index(int k, int i) { return static_cast<std::size_t>(k) * (k - 1) / 2 + i; }

}  // namespace

const std::vector<Vec>& VolterraSystem::q_weights() const {
    std::call_once(weights_once_, [this] {
        const int count = grid_.size();
        const std::size_t entries = tri_index(count, 0);
        if (entries * static_cast<std::size_t>(dim()) > kMaxCachedWeights) return;
        weights_.resize(entries);
        for (int k = 1; k < count; ++k)
            for (int i = 0; i < k; ++i) weights_[tri_index(k, i)] = row_weight(grid_, nodes_[k].lambda, k, i);
    });
    return weights_;
}

Vec VolterraSystem::q_row(int k, const Mat& gvals, const Mat& solved) const {
    const Node& nd = nodes_[k];
    bool any = false;
    for (int i = 0; i < k && !any; ++i) any = nodes_[i].cls != nd.cls;
    if (!any) return Vec::Zero(dim());
    const auto& cache = q_weights();
    const Mat cs = nd.vinv * solved.leftCols(k);
    const Mat cg = nd.vinv * gvals.leftCols(k);
    Vec acc = Vec::Zero(dim());
    for (int i = 0; i < k; ++i) {
        if (nodes_[i].cls == nd.cls) continue;
        const Vec phi = (nd.lambda.array() * cs.col(i).array() - cg.col(i).array()).matrix();
        if (!cache.empty())
            acc.array() += cache[tri_index(k, i)].array() * phi.array();
        else
            acc.array() += row_weight(grid_, nd.lambda, k, i).array() * phi.array();
    }
    return nd.v * acc;
}

GridFunction VolterraSystem::apply_Q(const GridFunction& g) const {
    if (g.grid().size() != grid_.size() || g.dim() != dim())
        throw ConfigurationError("apply_Q: argument does not match the system grid");
    GridFunction out(grid_, dim());
    if (autonomous()) return out;
    Mat solved(dim(), grid_.size());
    for (int i = 0; i < grid_.size(); ++i) solved.col(i) = nodes_[i].lu.solve(g.at(i));
    for (int k = 1; k < grid_.size(); ++k) out.set(k, q_row(k, g.values(), solved));
    return out;
}

GridFunction VolterraSystem::direct_solve(const GridFunction& b) const {
    GridFunction v = b;
    if (autonomous()) return v;
    Mat solved = Mat::Zero(dim(), grid_.size());
    for (int k = 1; k < grid_.size(); ++k) {
        solved.col(k - 1) = nodes_[k - 1].lu.solve(v.at(k - 1));
        v.set(k, b.at(k) + q_row(k, v.values(), solved));
    }
    return v;
}

GridFunction VolterraSystem::apply_Q_adjoint(const GridFunction& h) const {
    const int cells = grid_.cells();
    const auto& sp = family_.space();
    GridFunction out(grid_, dim());
    if (autonomous()) return out;
    const auto& cache = q_weights();
    Mat p_acc = Mat::Zero(dim(), cells);
    Mat s_acc = Mat::Zero(dim(), cells);
    for (int k = 1; k < cells; ++k) {
        const Node& nd = nodes_[k];
        const Vec z = grid_.width(k) * (nd.v.adjoint() * (sp.gram_H() * h.at(k)));
        Mat c = Mat::Zero(dim(), k);
        bool any = false;
        for (int i = 0; i < k; ++i) {
            if (nodes_[i].cls == nd.cls) continue;
            any = true;
            const Vec d = cache.empty() ? row_weight(grid_, nd.lambda, k, i) : cache[tri_index(k, i)];
            c.col(i) = (d.conjugate().array() * z.array()).matrix();
        }
        if (!any) continue;
        const Mat vinv_adj = nd.vinv.adjoint();
        s_acc.leftCols(k) += vinv_adj * c;
        p_acc.leftCols(k) += vinv_adj * (nd.lambda.conjugate().asDiagonal() * c);
    }
    for (int i = 0; i < cells; ++i) {
        // A⁻* p = conj(A⁻ᵀ conj(p))
        const Vec y = Vec(nodes_[i].lu.transpose().solve(Vec(p_acc.col(i).conjugate()))).conjugate() - s_acc.col(i);
        out.set(i, sp.h_solve(y) / grid_.width(i));
    }
    return out;
}

GridFunction apply_L(const FormFamily& family, const GridFunction& f) {
    return VolterraSystem(family, f.grid()).apply_L(f);
}

GridFunction apply_Q(const FormFamily& family, const GridFunction& g) {
    return VolterraSystem(family, g.grid()).apply_Q(g);
}

Vec apply_R(const FormFamily& family, const Vec& u0, double t) {
    if (!(t > 0.0)) throw DomainError("(Ru0)(t) needs t > 0");
    return aexpm(assemble_operator(family, t), t).matrix * u0;
}

double estimate_Q_norm(const VolterraSystem& system, double p, int probes, std::uint64_t seed) {
    if (probes < 1) throw DomainError("estimate_Q_norm needs at least one probe");
    if (!(p > 1.0) || !std::isfinite(p)) throw DomainError("estimate_Q_norm needs p in (1, ∞)");
    if (system.autonomous()) return 0.0;
    const auto& grid = system.grid();
    const auto& sp = system.family().space();
    const int n = system.dim();
    const double q = p / (p - 1.0);
    double best = 0.0;
    for (int j = 0; j < probes; ++j) {
        GridFunction x = random_grid_function(grid, n, seed + static_cast<std::uint64_t>(j));
        double prev = 0.0;
        for (int it = 0; it < 200; ++it) {
            const double nx = system.lp_norm(x, p);
            if (nx == 0.0) break;
            x = x * cplx(1.0 / nx);
            const GridFunction y = system.apply_Q(x);
            const double r = system.lp_norm(y, p);
            best = std::max(best, r);
            if (r == 0.0 || (it > 0 && std::abs(r - prev) <= 1e-9 * r)) break;
            prev = r;
            if (p == 2.0) {
                x = system.apply_Q_adjoint(y);
            } else {
                const GridFunction z = system.apply_Q_adjoint(duality_map(y, p, sp));
                x = duality_map(z, q, sp);
            }
        }
    }
    return best;
}

double estimate_Q_norm(const FormFamily& family, const TimeGrid& grid, double p, int probes,
                       std::uint64_t seed) {
    return estimate_Q_norm(VolterraSystem(family, grid), p, probes, seed);
}

ShiftChoice choose_shift(const FormFamily& family, const TimeGrid& grid, double p, double target, int probes,
                         std::uint64_t seed) {
    if (!(target > 0.0 && target < 1.0)) throw DomainError("contraction target must lie in (0, 1)");
    ShiftChoice out;
    for (int j = 0; j <= 30; ++j) {
        const double mu = std::ldexp(1.0, j);
        if (mu < family.shift_delta()) continue;
        double est = std::numeric_limits<double>::infinity();
        try {
            est = estimate_Q_norm(VolterraSystem(shift_family(family, mu), grid), p, probes, seed);
        } catch (const ShiftRequiredError&) {
        }
        out.measured.emplace_back(mu, est);
        if (est <= target) {
            out.mu = mu;
            out.q_norm = est;
            return out;
        }
    }
    throw NoContractionError("no shift up to 2^30 makes Q contractive", out.measured);
}

NeumannResult neumann_iterate(const VolterraSystem& system, const GridFunction& b, double p, double tol,
                              int max_iter) {
    if (!(tol > 0.0)) throw DomainError("Neumann tolerance must be positive");
    NeumannResult out;
    out.b_norm = system.lp_norm(b, p);
    GridFunction v = b;
    for (int it = 1; it <= max_iter; ++it) {
        GridFunction next = system.apply_Q(v) + b;
        const double diff = system.lp_norm(next - v, p);
        v = std::move(next);
        out.residual_history.push_back(out.b_norm > 0.0 ? diff / out.b_norm : diff);
        if (diff <= tol * out.b_norm) {
            out.v = std::move(v);
            out.iterations = it;
            return out;
        }
    }
    throw NonConvergenceError("Neumann iteration reached max_iter", out.residual_history);
}

NeumannResult neumann_solve(const VolterraSystem& system, const GridFunction& f, const Vec& u0, double p,
                            double tol, int max_iter) {
    return neumann_iterate(system, system.apply_L(f) + system.apply_R(u0), p, tol, max_iter);
}

Reconstruction reconstruct_u(const VolterraSystem& system, const GridFunction& v, const GridFunction& f,
                             const Vec& u0) {
    Reconstruction out{GridFunction(system.grid(), system.dim()), f - v, 0.0};
    for (int k = 0; k < system.grid().size(); ++k) out.u.set(k, system.operator_solve(k, v.at(k)));
    out.initial_mismatch = system.family().space().h_norm(out.u.at(0) - u0);
    return out;
}

GridFunction reference_solve(const FormFamily& family, const GridFunction& f, const Vec& u0,
                             const TimeGrid& fine_grid) {
    const int n = family.dim();
    GridFunction out(fine_grid, n);
    out.set(0, u0);
    const Mat eye = Mat::Identity(n, n);
    Mat last_a;
    double last_h = -1.0;
    Eigen::PartialPivLU<Mat> lu;
    Mat explicit_part;
    for (int k = 0; k < fine_grid.cells(); ++k) {
        const double h = fine_grid.width(k);
        const double mid = fine_grid.node(k) + 0.5 * h;
        const Mat a = assemble_operator(family, mid).matrix;
        if (h != last_h || a.rows() != last_a.rows() || a != last_a) {
            lu.compute(eye + 0.5 * h * a);
            explicit_part = eye - 0.5 * h * a;
            last_a = a;
            last_h = h;
        }
        out.set(k + 1, lu.solve(explicit_part * out.at(k) + h * f.evaluate(mid)));
    }
    return out;
}

SolveResult solve_problem(const FormFamily& family, const GridFunction& f, const Vec& u0,
                          const SolveOptions& options) {
    const TimeGrid& grid = f.grid();
    SolveResult out;
    if (options.auto_shift) {
        const auto choice = choose_shift(family, grid, options.p, options.target, options.probes, options.seed);
        out.mu = choice.mu;
        out.q_norm = choice.q_norm;
        out.shift_sweep = choice.measured;
    } else {
        if (!(options.mu >= 0.0)) throw DomainError("shift μ must be non-negative");
        out.mu = options.mu;
        out.q_norm = std::numeric_limits<double>::quiet_NaN();
    }
    const double mu = out.mu;
    if (mu * grid.horizon() > 600.0) throw DomainError("μτ > 600: the rescaling e^{μt} would overflow");

    const FormFamily shifted = mu > 0.0 ? shift_family(family, mu) : family;
    const VolterraSystem system(shifted, grid);
    const GridFunction b = system.apply_L(f, mu) + system.apply_R(u0);
    out.neumann = neumann_iterate(system, b, options.p, options.tol, options.max_iter);
    const GridFunction& v = out.neumann.v;
    const double bn = out.neumann.b_norm;
    const double res = system.lp_norm(v - (system.apply_Q(v) + b), options.p);
    out.fixed_point_residual = bn > 0.0 ? res / bn : res;

    const int n = family.dim();
    out.u = GridFunction(grid, n);
    out.au = GridFunction(grid, n);
    for (int k = 0; k < grid.size(); ++k) {
        const double scale = std::exp(mu * grid.node(k));
        const Vec u = scale * system.operator_solve(k, v.at(k));
        out.u.set(k, u);
        out.au.set(k, scale * v.at(k) - mu * u);
    }
    out.du = f - out.au;
    out.initial_mismatch = family.space().h_norm(out.u.at(0) - u0);
    return out;
}

HormanderDefect hormander_defect(const FormFamily& family, double s, double s_prime, double tol) {
    const double tau = family.horizon();
    if (!(s > 0.0 && s < tau && s_prime > 0.0 && s_prime < tau))
        throw DomainError("Hörmander points must lie in (0, τ)");
    if (s == s_prime) throw DomainError("Hörmander points must differ");
    const auto& sp = family.space();
    const double d = std::abs(s_prime - s);
    using Quad = boost::math::quadrature::gauss_kronrod<double, 15>;
    constexpr unsigned kDepth = 12;
    HormanderDefect out;

    if (s + 2.0 * d < tau) {
        auto k1 = [&](double t) {
            const Calculus calc(assemble_operator(family, t), 1e8);
            return sp.h_op_norm(calc.aexpm(t - s) - calc.aexpm(t - s_prime));
        };
        out.i1 = Quad::integrate(k1, s + 2.0 * d, tau, kDepth, tol);
    }
    if (s - 2.0 * d > 0.0) {
        const Calculus cs(assemble_operator(family, s), 1e8);
        const Calculus cp(assemble_operator(family, s_prime), 1e8);
        auto k2 = [&](double t) { return sp.h_op_norm(cs.aexpm(s - t) - cp.aexpm(s_prime - t)); };
        out.i2 = Quad::integrate(k2, 0.0, s - 2.0 * d, kDepth, tol);
    }
    return out;
}

double calibrate_kernel_constant(const FormFamily& family, int time_samples, int r_points) {
    const auto& sp = family.space();
    double best = 0.0;
    for (double t : sample_times(family.horizon(), time_samples)) {
        const OperatorH a = assemble_operator(family, t);
        const Calculus calc(a, 1e8);
        const double top = linalg::spectral_norm(a.matrix);
        double bottom = top;
        if (calc.spectral()) bottom = calc.eigenvalues().cwiseAbs().minCoeff();
        if (!(bottom > 0.0)) throw ShiftRequiredError("kernel constant needs invertible A(t)");
        auto value = [&](double log_r) {
            const double r = std::exp(log_r);
            return r * r * sp.h_op_norm(a.matrix * calc.aexpm(r));
        };
        const double lo = std::log(1e-2 / top);
        const double hi = std::log(1e2 / bottom);
        int arg = 0;
        double vmax = -1.0;
        for (int i = 0; i < r_points; ++i) {
            const double x = lo + (hi - lo) * i / (r_points - 1);
            const double v = value(x);
            if (v > vmax) {
                vmax = v;
                arg = i;
            }
        }
        const double step = (hi - lo) / (r_points - 1);
        const auto refined = boost::math::tools::brent_find_minima(
            [&](double x) { return -value(x); }, lo + step * std::max(arg - 1, 0),
            lo + step * std::min(arg + 1, r_points - 1), 52);
        best = std::max({best, vmax, -refined.second});
    }
    return best;
}

double domain_compatibility(const FormFamily& family, double t, double root_shift) {
    const double delta = root_shift < 0.0 ? family.shift_delta() : root_shift;
    const auto& sp = family.space();
    const int n = family.dim();
    const Mat id = Mat::Identity(n, n);
    OperatorH left = assemble_operator_left(family, t);
    OperatorH right = assemble_operator(family, t);
    left.matrix += delta * id;
    right.matrix += delta * id;
    const Mat x = sqrt_op(left).matrix;
    const Mat y = sqrt_op(right).matrix;
    const double a = sp.h_op_norm(x * y.partialPivLu().inverse());
    const double b = sp.h_op_norm(y * x.partialPivLu().inverse());
    return std::max(a, b);
}

GlueResult glue_solve(const FormFamily& family, const GridFunction& f, const Vec& u0,
                      const GlueOptions& options) {
    const auto& mod = family.modulus();
    const TimeGrid& grid = f.grid();
    GlueResult out;
    if (mod.kind() != ModulusOfContinuity::Kind::PiecewiseHolder || mod.breakpoints().empty()) {
        SolveResult r = solve_problem(family, f, u0, options.solve);
        out.u = std::move(r.u);
        out.du = std::move(r.du);
        out.au = std::move(r.au);
        out.mus.push_back(r.mu);
        out.iterations.push_back(r.neumann.iterations);
        return out;
    }
    for (const auto& piece : mod.pieces())
        if (piece.constant > 0.0 && !(piece.exponent > 0.5))
            throw ConfigurationError("gluing needs Hölder exponents above 1/2 on every piece");

    std::vector<int> cuts{0};
    for (double bp : mod.breakpoints()) {
        const int k = grid.find_node(bp);
        if (k <= 0 || k >= grid.cells()) throw ConfigurationError("breakpoints must be interior grid nodes");
        const double kappa = domain_compatibility(family, bp, options.root_shift);
        out.breakpoints.push_back(bp);
        out.kappas.push_back(kappa);
        if (!(kappa <= options.kappa_max))
            throw IncompatibleDomainsError("square-root domains incompatible at t = " + std::to_string(bp), bp);
        cuts.push_back(k);
    }
    cuts.push_back(grid.cells());

    const int n = family.dim();
    out.u = GridFunction(grid, n);
    out.du = GridFunction(grid, n);
    out.au = GridFunction(grid, n);
    const FormFamily::Constants constants{family.bound_M(), family.coercivity_alpha(), family.shift_delta()};
    Vec start = u0;
    for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
        const int k0 = cuts[j];
        const int k1 = cuts[j + 1];
        const double a = grid.node(k0);
        const double b = grid.node(k1);
        const double len = b - a;
        std::vector<double> local;
        for (int k = k0; k <= k1; ++k) local.push_back(k == k0 ? 0.0 : grid.node(k) - a);
        local.back() = len;
        const TimeGrid sub = TimeGrid::from_nodes(std::move(local));

        FormFunction form = [family, a, b, len](double t) {
            return t >= len ? family.form_left(b) : family.form_at(a + t);
        };
        FormFunction left = [family, a](double t) { return t > 0.0 ? family.form_left(a + t) : family.form_at(a); };
        const auto& piece = mod.pieces()[j];
        // Piece families already carry the parent's shift inside their forms.
        const FormFamily piece_family(family.space_ptr(), len, form, constants,
                                      ModulusOfContinuity::holder(piece.exponent, piece.constant),
                                      family.id() + "#" + std::to_string(j), left);
        Mat fv = f.values().middleCols(k0, k1 - k0 + 1);
        fv.col(k1 - k0) = fv.col(k1 - k0 - 1);
        const SolveResult r = solve_problem(piece_family, GridFunction(sub, fv), start, options.solve);
        for (int k = k0; k <= k1; ++k) {
            out.u.set(k, r.u.at(k - k0));
            out.du.set(k, r.du.at(k - k0));
            out.au.set(k, r.au.at(k - k0));
        }
        out.mus.push_back(r.mu);
        out.iterations.push_back(r.neumann.iterations);
        start = r.u.at(k1 - k0);
    }
    // Right-continuous convention at breakpoints for du and Au; u is continuous there.
    return out;
}

}  // namespace maxreg
