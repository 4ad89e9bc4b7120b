#include "maxreg/pdo.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <random>

#include <fftw3.h>

#include "maxreg/errors.hpp"
#include "maxreg/regularity.hpp"

namespace maxreg {

namespace {

double japanese(const Point& xi) { return std::sqrt(1.0 + xi.squaredNorm()); }

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

/// In-place DFT of every row of `data` (m × P); sign is FFTW_FORWARD or FFTW_BACKWARD.
void transform_rows(const FieldGrid& grid, Mat& data, int sign) {
    const int total = grid.total_points();
    auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * total));
    if (buf == nullptr) throw LinearAlgebraError("FFT buffer allocation failed");
    std::vector<int> dims(grid.dim_x, grid.points_per_axis());
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        plan = fftw_plan_dft(grid.dim_x, dims.data(), buf, buf, sign, FFTW_ESTIMATE);
    }
    auto* c = reinterpret_cast<cplx*>(buf);
    for (Eigen::Index r = 0; r < data.rows(); ++r) {
        for (int p = 0; p < total; ++p) c[p] = data(r, p);
        fftw_execute_dft(plan, buf, buf);
        for (int p = 0; p < total; ++p) data(r, p) = c[p];
    }
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(buf);
}

/// Flat index → per-axis indices (row-major).
std::vector<int> axis_indices(const FieldGrid& grid, int p) {
    std::vector<int> idx(grid.dim_x);
    const int g = grid.points_per_axis();
    for (int a = grid.dim_x - 1; a >= 0; --a) {
        idx[a] = p % g;
        p /= g;
    }
    return idx;
}

/// e^{2πi r/G} for r = 0, …, G−1.
std::vector<cplx> twiddles(int g) {
    std::vector<cplx> w(g);
    for (int r = 0; r < g; ++r) w[r] = std::polar(1.0, 2.0 * std::numbers::pi * r / g);
    return w;
}

/// Phase index (j·k mod G) of the kernel e^{2πi j·k/G}.
int phase_index(const std::vector<int>& j, const std::vector<int>& k, int g) {
    long long s = 0;
    for (std::size_t a = 0; a < j.size(); ++a) s += static_cast<long long>(j[a]) * k[a];
    return static_cast<int>(s % g);
}

/// Grid points grouped by symbol key; each group is (representative point, member indices).
std::vector<std::pair<int, std::vector<int>>> key_groups(const Symbol& symbol, const FieldGrid& grid) {
    const int total = grid.total_points();
    std::vector<std::pair<int, std::vector<int>>> groups;
    if (symbol.x_independent()) {
        std::vector<int> all(total);
        for (int p = 0; p < total; ++p) all[p] = p;
        groups.emplace_back(0, std::move(all));
        return groups;
    }
    std::map<std::vector<double>, std::size_t> index;
    for (int p = 0; p < total; ++p) {
        const Point k = symbol.key(grid.point(p));
        std::vector<double> key(k.data(), k.data() + k.size());
        auto it = index.find(key);
        if (it == index.end()) {
            index.emplace(std::move(key), groups.size());
            groups.emplace_back(p, std::vector<int>{p});
        } else {
            groups[it->second].second.push_back(p);
        }
    }
    return groups;
}

void check_field(const Symbol& symbol, const SampledField& f) {
    f.grid.validate();
    if (symbol.dim_x() != f.grid.dim_x) throw ConfigurationError("symbol and field dimensions differ");
    if (symbol.components() != f.components()) throw ConfigurationError("symbol and field components differ");
}

}  // namespace

Symbol::Symbol(int dim_x, int components, Value value) : dim_x_(dim_x), m_(components), value_(std::move(value)) {
    if (dim_x < 1 || dim_x > 2) throw ConfigurationError("symbols support n = 1 or n = 2");
    if (components < 1) throw ConfigurationError("symbol needs at least one component");
}

Symbol Symbol::multiplier(int dim_x, int components, Multiplier m) {
    Symbol s(dim_x, components, [m](const Point&, const Point& xi) { return m(xi); });
    s.x_independent_ = true;
    s.freeze_ = [m](const Point&) { return m; };
    return s;
}

Symbol Symbol::identity(int dim_x, int components) {
    return multiplier(dim_x, components, [components](const Point&) { return Mat::Identity(components, components); });
}

Mat Symbol::value_at(double x, double xi) const {
    return value_(Point::Constant(1, x), Point::Constant(1, xi));
}

Symbol::Multiplier Symbol::frozen(const Point& x) const {
    if (freeze_) return freeze_(x);
    return [v = value_, x](const Point& xi) { return v(x, xi); };
}

Symbol& Symbol::with_key(Key key) {
    key_ = std::move(key);
    return *this;
}

Symbol& Symbol::with_freeze(Freeze freeze) {
    freeze_ = std::move(freeze);
    return *this;
}

Symbol& Symbol::with_modulus(ModulusOfContinuity modulus) {
    modulus_ = std::move(modulus);
    return *this;
}

Symbol& Symbol::with_smoothing_delta(double delta) {
    smoothing_delta_ = delta;
    return *this;
}

Symbol& Symbol::with_deriv_bounds(std::vector<double> bounds) {
    deriv_bounds_ = std::move(bounds);
    return *this;
}

void FieldGrid::validate() const {
    if (dim_x < 1 || dim_x > 2) throw ConfigurationError("field grids support n = 1 or n = 2");
    if (!(half_width > 0.0)) throw ConfigurationError("box half-width must be positive");
    if (log2_points < 1 || log2_points > 20) throw ConfigurationError("points per axis must be 2^k, 1 ≤ k ≤ 20");
}

int FieldGrid::total_points() const {
    int t = 1;
    for (int a = 0; a < dim_x; ++a) t *= points_per_axis();
    return t;
}

Point FieldGrid::point(int p) const {
    const auto idx = axis_indices(*this, p);
    Point x(dim_x);
    for (int a = 0; a < dim_x; ++a) x(a) = coordinate(idx[a]);
    return x;
}

Point FieldGrid::frequency(int p) const {
    const auto idx = axis_indices(*this, p);
    const int g = points_per_axis();
    Point xi(dim_x);
    for (int a = 0; a < dim_x; ++a) {
        const int k = idx[a] < g / 2 ? idx[a] : idx[a] - g;
        xi(a) = 2.0 * std::numbers::pi * k / (g * spacing());
    }
    return xi;
}

SampledField::SampledField(FieldGrid g, int components) : grid(g), values(Mat::Zero(components, g.total_points())) {
    grid.validate();
}

SampledField::SampledField(FieldGrid g, Mat v) : grid(g), values(std::move(v)) {
    grid.validate();
    if (values.cols() != grid.total_points()) throw ConfigurationError("field needs one value per grid point");
}

double SampledField::l2_norm() const {
    return std::sqrt(std::pow(grid.spacing(), grid.dim_x) * values.squaredNorm());
}

bool SampledField::decays_at_boundary() const {
    const double top = values.colwise().norm().maxCoeff();
    if (top == 0.0) return true;
    const int g = grid.points_per_axis();
    double edge = 0.0;
    for (int p = 0; p < grid.total_points(); ++p) {
        const auto idx = axis_indices(grid, p);
        if (std::any_of(idx.begin(), idx.end(), [g](int i) { return i == 0 || i == g - 1; }))
            edge = std::max(edge, values.col(p).norm());
    }
    return edge <= 1e-8 * top;
}

SampledField apply_T(const Symbol& symbol, const SampledField& f) {
    check_field(symbol, f);
    const FieldGrid& grid = f.grid;
    const int total = grid.total_points();
    const int g = grid.points_per_axis();
    Mat spec = f.values;
    transform_rows(grid, spec, FFTW_FORWARD);

    std::vector<Point> xi(total);
    for (int p = 0; p < total; ++p) xi[p] = grid.frequency(p);
    const auto w = twiddles(g);
    std::vector<std::vector<int>> idx(total);
    for (int p = 0; p < total; ++p) idx[p] = axis_indices(grid, p);

    SampledField out(grid, f.components());
    out.aliasing_warning = !f.decays_at_boundary();
    for (const auto& [rep, members] : key_groups(symbol, grid)) {
        const auto sigma = symbol.frozen(grid.point(rep));
        if (members.size() == 1) {
            const auto& j = idx[members.front()];
            Vec acc = Vec::Zero(f.components());
            for (int p = 0; p < total; ++p) acc += w[phase_index(j, idx[p], g)] * (sigma(xi[p]) * spec.col(p));
            out.values.col(members.front()) = acc / static_cast<double>(total);
            continue;
        }
        Mat y(f.components(), total);
        for (int p = 0; p < total; ++p) y.col(p) = sigma(xi[p]) * spec.col(p);
        transform_rows(grid, y, FFTW_BACKWARD);
        for (int p : members) out.values.col(p) = y.col(p) / static_cast<double>(total);
    }
    return out;
}

SampledField apply_T_adjoint(const Symbol& symbol, const SampledField& gfield) {
    check_field(symbol, gfield);
    const FieldGrid& grid = gfield.grid;
    const int total = grid.total_points();
    const int g = grid.points_per_axis();
    std::vector<Point> xi(total);
    for (int p = 0; p < total; ++p) xi[p] = grid.frequency(p);
    const auto w = twiddles(g);
    std::vector<std::vector<int>> idx(total);
    for (int p = 0; p < total; ++p) idx[p] = axis_indices(grid, p);

    Mat acc = Mat::Zero(gfield.components(), total);
    for (const auto& [rep, members] : key_groups(symbol, grid)) {
        const auto sigma = symbol.frozen(grid.point(rep));
        if (members.size() == 1) {
            const int j = members.front();
            const auto& jj = idx[j];
            for (int p = 0; p < total; ++p) {
                const cplx phase = std::conj(w[phase_index(jj, idx[p], g)]);
                acc.col(p) += phase * (sigma(xi[p]).adjoint() * gfield.values.col(j));
            }
            continue;
        }
        Mat masked = Mat::Zero(gfield.components(), total);
        for (int p : members) masked.col(p) = gfield.values.col(p);
        transform_rows(grid, masked, FFTW_FORWARD);
        for (int p = 0; p < total; ++p) acc.col(p) += sigma(xi[p]).adjoint() * masked.col(p);
    }
    transform_rows(grid, acc, FFTW_BACKWARD);
    return SampledField(grid, Mat(acc / static_cast<double>(total)));
}

double bump(const Point& y) {
    const double r2 = y.squaredNorm();
    return r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0;
}

namespace {

struct WeightedPoint {
    Point y;
    double w;
};

std::vector<WeightedPoint> mollifier_rule(int dim_x) {
    const auto& gl = linalg::gauss_legendre(8);
    std::vector<WeightedPoint> rule;
    const int q = static_cast<int>(gl.nodes.size());
    int count = 1;
    for (int a = 0; a < dim_x; ++a) count *= q;
    double total = 0.0;
    for (int c = 0; c < count; ++c) {
        Point y(dim_x);
        double w = 1.0;
        int r = c;
        for (int a = 0; a < dim_x; ++a) {
            y(a) = gl.nodes[r % q];
            w *= gl.weights[r % q];
            r /= q;
        }
        w *= bump(y);
        if (w > 0.0) {
            rule.push_back({y, w});
            total += w;
        }
    }
    for (auto& p : rule) p.w /= total;
    return rule;
}

/// Central-difference stencil (offsets, coefficients) for a derivative of the given order.
std::vector<std::pair<int, double>> stencil(int order) {
    switch (order) {
        case 0: return {{0, 1.0}};
        case 1: return {{-1, -0.5}, {1, 0.5}};
        case 2: return {{-1, 1.0}, {0, -2.0}, {1, 1.0}};
        case 3: return {{-2, -0.5}, {-1, 1.0}, {1, -1.0}, {2, 0.5}};
        default: throw DomainError("finite differences support orders up to 3 per axis");
    }
}

/// Tensor central difference of `f` at `at` with step h per axis.
Mat tensor_difference(const std::function<Mat(const Point&)>& f, const Point& at, const std::vector<int>& alpha,
                      double h) {
    const int n = static_cast<int>(alpha.size());
    std::vector<std::vector<std::pair<int, double>>> st(n);
    int count = 1;
    int order = 0;
    for (int a = 0; a < n; ++a) {
        st[a] = stencil(alpha[a]);
        count *= static_cast<int>(st[a].size());
        order += alpha[a];
    }
    Mat acc;
    for (int c = 0; c < count; ++c) {
        Point x = at;
        double coef = 1.0;
        int r = c;
        for (int a = 0; a < n; ++a) {
            const auto& [off, w] = st[a][r % st[a].size()];
            r /= static_cast<int>(st[a].size());
            x(a) += off * h;
            coef *= w;
        }
        const Mat v = coef * f(x);
        if (acc.size() == 0)
            acc = v;
        else
            acc += v;
    }
    return acc / std::pow(h, order);
}

std::vector<std::vector<int>> multi_indices(int n, int max_order) {
    std::vector<std::vector<int>> out;
    if (n == 1) {
        for (int a = 0; a <= max_order; ++a) out.push_back({a});
        return out;
    }
    for (int total = 0; total <= max_order; ++total)
        for (int a = 0; a <= total; ++a)
            if (a <= 3 && total - a <= 3) out.push_back({a, total - a});
    return out;
}

int order_of(const std::vector<int>& alpha) {
    int s = 0;
    for (int a : alpha) s += a;
    return s;
}

double op_norm(const Mat& m) { return linalg::spectral_norm(m); }

}  // namespace

Mat xi_derivative(const Symbol& symbol, const Point& x, const Point& xi, const std::vector<int>& alpha) {
    if (static_cast<int>(alpha.size()) != symbol.dim_x()) throw DomainError("multi-index length must equal n");
    if (order_of(alpha) == 0) return symbol.value_at(x, xi);
    return tensor_difference([&](const Point& z) { return symbol.value_at(x, z); }, xi, alpha, 1e-3 * japanese(xi));
}

SymbolSplit split_symbol(const Symbol& symbol) {
    const double delta = symbol.smoothing_delta();
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("smoothing δ must lie in (0, 1)");
    const int n = symbol.dim_x();
    const int m = symbol.components();
    if (symbol.x_independent()) {
        Symbol zero = Symbol::multiplier(n, m, [m](const Point&) { return Mat::Zero(m, m); });
        zero.with_modulus(symbol.modulus()).with_smoothing_delta(delta);
        return {symbol, zero};
    }
    const auto rule = mollifier_rule(n);
    Symbol smooth(n, m, [symbol, rule, delta](const Point& x, const Point& xi) {
        const double scale = std::pow(japanese(xi), -delta);
        Mat acc = Mat::Zero(symbol.components(), symbol.components());
        for (const auto& q : rule) acc += q.w * symbol.value_at(x - scale * q.y, xi);
        return acc;
    });
    smooth.with_modulus(symbol.modulus()).with_smoothing_delta(delta);
    Symbol remainder(n, m, [symbol, smooth](const Point& x, const Point& xi) {
        return Mat(symbol.value_at(x, xi) - smooth.value_at(x, xi));
    });
    remainder.with_modulus(symbol.modulus()).with_smoothing_delta(delta);
    return {smooth, remainder};
}

SplitCheck check_split(const Symbol& symbol, const SymbolSplit& split, const std::vector<Point>& x_grid,
                       const std::vector<Point>& xi_grid, int max_order) {
    const int n = symbol.dim_x();
    const double delta = symbol.smoothing_delta();
    SplitCheck out;
    for (const auto& alpha : multi_indices(n, max_order)) {
        const int a = order_of(alpha);
        for (const auto& xi : xi_grid) {
            const double jx = japanese(xi);
            const double om = symbol.modulus()(std::pow(jx, -delta));
            for (const auto& x : x_grid) {
                const Mat d0 = xi_derivative(split.smooth, x, xi, alpha);
                out.smooth_constant = std::max(out.smooth_constant, op_norm(d0) * std::pow(jx, a));
                const double hx = 1e-3 * std::pow(jx, -delta);
                for (int axis = 0; axis < n; ++axis) {
                    std::vector<int> beta(n, 0);
                    beta[axis] = 1;
                    const Mat d1 = tensor_difference(
                        [&](const Point& z) { return xi_derivative(split.smooth, z, xi, alpha); }, x, beta, hx);
                    out.smooth_constant = std::max(out.smooth_constant, op_norm(d1) * std::pow(jx, a - delta));
                }
                const double r = op_norm(xi_derivative(split.remainder, x, xi, alpha)) * std::pow(jx, a);
                if (om > 0.0)
                    out.remainder_constant = std::max(out.remainder_constant, r / om);
                else if (r > 1e-12)
                    out.remainder_constant = std::numeric_limits<double>::infinity();
            }
        }
    }
    return out;
}

ConditionReport check_symbol_conditions(const Symbol& symbol, const std::vector<Point>& x_grid,
                                        const std::vector<Point>& xi_grid, int max_order) {
    const int n = symbol.dim_x();
    if (max_order < 0 || max_order > n / 2 + 2) throw DomainError("max_order must lie in [0, [n/2] + 2]");
    ConditionReport rep;
    rep.dim_x = n;
    rep.max_order = max_order;
    const auto& omega = symbol.modulus();
    const auto dini = dini_report(omega, 1.0, 2.0);
    rep.integral_2log = dini.integral_2log;
    rep.dini_2log_finite = dini.finite_2log;

    const std::size_t nx = x_grid.size();
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = i + 1; j < nx; ++j)
            if (nx <= 40 || j == i + 1) pairs.emplace_back(i, j);

    bool bounded = true;
    for (const auto& alpha : multi_indices(n, max_order)) {
        ConditionEntry e;
        e.alpha = alpha;
        const int a = order_of(alpha);
        for (const auto& xi : xi_grid) {
            const double weight = std::pow(japanese(xi), a);
            std::vector<Mat> d(nx);
            for (std::size_t i = 0; i < nx; ++i) {
                d[i] = xi_derivative(symbol, x_grid[i], xi, alpha);
                e.c_alpha = std::max(e.c_alpha, op_norm(d[i]) * weight);
            }
            for (const auto& [i, j] : pairs) {
                const double num = op_norm(d[i] - d[j]) * weight;
                const double om = omega((x_grid[i] - x_grid[j]).norm());
                if (om > 0.0)
                    e.x_ratio = std::max(e.x_ratio, num / om);
                else if (num > 1e-12 * std::max(1.0, e.c_alpha))
                    e.x_ratio = std::numeric_limits<double>::infinity();
            }
        }
        if (a <= n / 2 + 1 && !(std::isfinite(e.c_alpha) && std::isfinite(e.x_ratio))) bounded = false;
        rep.entries.push_back(std::move(e));
    }
    rep.hypotheses_met = bounded && rep.dini_2log_finite;
    return rep;
}

Symbol mr_symbol(const FormFamily& family) {
    const double tau = family.horizon();
    const int m = family.dim();
    auto orthonormal = [family](double t) {
        const auto& sp = family.space();
        return Mat(sp.h_sqrt() * assemble_operator(family, t).matrix * sp.h_inv_sqrt());
    };
    auto clamp = [tau](double t) { return std::clamp(t, 0.0, tau); };
    auto direct = [m](const Mat& b, double xi) {
        Eigen::PartialPivLU<Mat> lu(cplx(0.0, xi) * Mat::Identity(m, m) + b);
        if (!(lu.rcond() > 1e-15)) throw LinearAlgebraError("iξ + A(t) is singular; shift the family first");
        return Mat(b * lu.inverse());
    };
    Symbol s(1, m, [orthonormal, clamp, direct](const Point& x, const Point& xi) {
        return direct(orthonormal(clamp(x(0))), xi(0));
    });
    s.with_key([clamp](const Point& x) { return Point::Constant(1, clamp(x(0))); });
    s.with_freeze([orthonormal, clamp, direct, m](const Point& x) -> Symbol::Multiplier {
        const Mat b = orthonormal(clamp(x(0)));
        Eigen::ComplexEigenSolver<Mat> es(b);
        if (es.info() == Eigen::Success) {
            const Mat v = es.eigenvectors();
            Eigen::JacobiSVD<Mat> svd(v);
            const auto& sv = svd.singularValues();
            if (sv(m - 1) > 1e-8 * sv(0)) {
                const Mat vinv = v.partialPivLu().inverse();
                const Vec lam = es.eigenvalues();
                if (lam.cwiseAbs().minCoeff() > 0.0)
                    return [v, vinv, lam](const Point& xi) {
                        const Vec d = (lam.array() / (cplx(0.0, xi(0)) + lam.array())).matrix();
                        return Mat(v * d.asDiagonal() * vinv);
                    };
            }
        }
        return [b, direct](const Point& xi) { return direct(b, xi(0)); };
    });
    s.with_modulus(family.modulus());
    return s;
}

double opnorm_estimate(const Symbol& symbol, const FieldGrid& grid, int probes, std::uint64_t seed, int max_iter) {
    if (probes < 1) throw DomainError("opnorm_estimate needs at least one probe");
    grid.validate();
    const int m = symbol.components();
    double best = 0.0;
    for (int j = 0; j < probes; ++j) {
        std::mt19937_64 rng(seed + static_cast<std::uint64_t>(j));
        std::normal_distribution<double> gauss(0.0, 1.0);
        SampledField x(grid, m);
        for (int p = 0; p < grid.total_points(); ++p)
            for (int i = 0; i < m; ++i) {
                const double re = gauss(rng);
                const double im = gauss(rng);
                x.values(i, p) = cplx(re, im);
            }
        double prev = 0.0;
        for (int it = 0; it < max_iter; ++it) {
            const double nx = x.l2_norm();
            if (nx == 0.0) break;
            x.values /= nx;
            const SampledField y = apply_T(symbol, x);
            const double r = y.l2_norm();
            best = std::max(best, r);
            if (r == 0.0 || (it > 0 && std::abs(r - prev) <= 1e-12 * r)) break;
            prev = r;
            x = apply_T_adjoint(symbol, y);
        }
    }
    return best;
}

}  // namespace maxreg
