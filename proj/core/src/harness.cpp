#include "maxreg/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <map>
#include <numbers>
#include <random>
#include <set>

#include "maxreg/errors.hpp"

namespace maxreg {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Run records

json RunRecord::to_json() const {
    return {{"run_id", run_id},   {"command", command},     {"config", config},
            {"seed", seed},       {"reports", reports},     {"artifacts", artifacts},
            {"timestamp", timestamp}, {"exit_code", exit_code}, {"violations", violations}};
}

RunRecord RunRecord::from_json(const json& j) {
    RunRecord r;
    try {
        r.run_id = j.at("run_id").get<std::string>();
        r.command = j.at("command").get<std::string>();
        r.config = j.at("config");
        r.seed = j.at("seed").get<std::uint64_t>();
        r.reports = j.at("reports");
        r.artifacts = j.at("artifacts").get<std::vector<std::string>>();
        r.timestamp = j.value("timestamp", "");
        r.exit_code = j.at("exit_code").get<int>();
        r.violations = j.at("violations").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw ConfigurationError(std::string("malformed run record: ") + e.what());
    }
    return r;
}

std::string compute_run_id(const std::string& command, const json& config, std::uint64_t seed) {
    // nlohmann objects are key-sorted, so dump() is canonical.
    const std::string text = config.dump() + '\n' + command + '\n' + std::to_string(seed);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RunRecord load_run(const fs::path& out_dir, const std::string& run_id) {
    const fs::path p = out_dir / "runs" / run_id / "record.json";
    if (!fs::exists(p)) throw ConfigurationError("unknown run id " + run_id);
    return RunRecord::from_json(read_json_file(p));
}

namespace {

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Run directory plus the record under construction.
struct Run {
    RunRecord record;
    fs::path dir;
    bool persist;

    Run(const std::string& command, const CommandContext& ctx) : persist(ctx.persist) {
        record.command = command;
        record.config = ctx.config;
        record.seed = ctx.seed;
        record.run_id = compute_run_id(command, ctx.config, ctx.seed);
        record.timestamp = utc_now();
        dir = ctx.out_dir / "runs" / record.run_id;
        if (persist) fs::create_directories(dir);
    }

    void csv(const std::string& name, const std::vector<std::string>& header,
             const std::vector<std::vector<double>>& rows) {
        if (persist) write_csv(dir / name, header, rows);
        record.artifacts.push_back(name);
    }
    void grid_csv(const std::string& name, const GridFunction& g) {
        if (persist) write_grid_function_csv(dir / name, g);
        record.artifacts.push_back(name);
    }
    void field_csv(const std::string& name, const SampledField& f) {
        if (persist) write_field_csv(dir / name, f);
        record.artifacts.push_back(name);
    }
    void violation(std::string v) { record.violations.push_back(std::move(v)); }

    RunRecord finish() {
        if (record.exit_code == 0 && !record.violations.empty()) record.exit_code = 1;
        if (persist) write_json_file(dir / "record.json", record.to_json());
        return record;
    }
};

const json& block(const json& config, const char* key) {
    static const json empty = json::object();
    if (!config.is_object() || !config.contains(key)) return empty;
    const json& b = config.at(key);
    if (!b.is_object()) throw ConfigurationError(std::string("\"") + key + "\" must be an object");
    return b;
}

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

Vec random_vector(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> g;
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = cplx(g(rng), g(rng));
    return v;
}

bool is_counterexample(const json& config) {
    return config.is_object() && config.contains("family") && config.at("family").is_object() &&
           config.at("family").value("kind", "") == "counterexample";
}

/// True when F(t) is the same matrix at every sample time.
bool constant_in_time(const FormFamily& family, int samples = 17) {
    const Mat f0 = family.form_at(0.0);
    for (double t : sample_times(family.horizon(), samples))
        if ((family.form_at(t) - f0).norm() > 1e-14 * std::max(1.0, f0.norm())) return false;
    return true;
}

OperatorH shifted_initial_operator(const FormFamily& family) {
    OperatorH a0 = assemble_operator(family, 0.0);
    a0.matrix += family.shift_delta() * Mat::Identity(family.dim(), family.dim());
    return a0;
}

struct DivergenceRow {
    int level;
    double l15;
    double l2;
};

json counterexample_diagnostic(const json& spec_block, Run& run) {
    const CounterexampleSpec spec = counterexample_from_json(spec_block);
    std::vector<int> levels{10, 12, 14, 16};
    if (spec_block.is_object() && spec_block.contains("levels")) {
        levels = spec_block.at("levels").get<std::vector<int>>();
        if (levels.size() < 2) throw ConfigurationError("counterexample needs at least two refinement levels");
    }
    const Counterexample ce(spec);
    std::vector<DivergenceRow> rows;
    for (int level : levels)
        rows.push_back({level, ce.ax_norm(1.5, 0.0, 1.0, level), ce.ax_norm(2.0, 0.25, 0.75, level)});

    double max_change = 0.0, min_growth = std::numeric_limits<double>::infinity();
    json table = json::array();
    std::vector<std::vector<double>> csv_rows;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        double change = 0.0, growth = 0.0;
        if (i > 0) {
            change = std::abs(rows[i].l15 - rows[i - 1].l15) / rows[i - 1].l15;
            growth = rows[i].l2 / rows[i - 1].l2;
            max_change = std::max(max_change, change);
            min_growth = std::min(min_growth, growth);
        }
        table.push_back({{"level", rows[i].level}, {"l15_norm", rows[i].l15}, {"l2_norm", rows[i].l2},
                         {"l15_change", change}, {"l2_growth", growth}});
        csv_rows.push_back({double(rows[i].level), rows[i].l15, rows[i].l2, change, growth});
    }
    run.csv("refinement.csv", {"level", "l15_norm_0_1", "l2_norm_025_075", "l15_rel_change", "l2_growth"}, csv_rows);
    return {{"p", ce.p()},
            {"terms", static_cast<int>(ce.nodes().size())},
            {"lower_constant", ce.lower_constant()},
            {"levels", table},
            {"l15_max_change", max_change},
            {"l2_min_growth", min_growth},
            {"l15_stable", max_change <= 0.05},
            {"l2_growing", min_growth >= 1.5}};
}

}  // namespace

// ---------------------------------------------------------------------------
// Data

GridFunction make_forcing(const json& spec, const TimeGrid& grid, int dim, std::uint64_t seed) {
    const std::string kind = spec.is_object() ? spec.value("kind", "zero") : "zero";
    const double amp = spec.is_object() ? spec.value("amplitude", 1.0) : 1.0;
    if (kind == "zero") return GridFunction(grid, dim);
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    if (kind == "constant") {
        Vec c = random_vector(rng, dim);
        c *= amp / c.norm();
        return GridFunction::sample_midpoints(grid, dim, [&](double) { return c; });
    }
    if (kind == "random-smooth") {
        const int modes = spec.value("modes", 4);
        if (modes < 1) throw ConfigurationError("forcing needs at least one mode");
        std::vector<Vec> coeff;
        std::vector<double> phase;
        std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
        for (int j = 1; j <= modes; ++j) {
            Vec c = random_vector(rng, dim);
            coeff.push_back(c * (amp / (c.norm() * j * j)));
            phase.push_back(u(rng));
        }
        const double tau = grid.horizon();
        return GridFunction::sample_midpoints(grid, dim, [&](double t) {
            Vec v = Vec::Zero(dim);
            for (int j = 0; j < modes; ++j) v += coeff[j] * std::sin((j + 1) * std::numbers::pi * t / tau + phase[j]);
            return v;
        });
    }
    throw ConfigurationError("unknown forcing kind \"" + kind + "\"");
}

Vec make_initial(const json& spec, const FormFamily& family, std::uint64_t seed) {
    const std::string kind = spec.is_object() ? spec.value("kind", "zero") : "zero";
    const double scale = spec.is_object() ? spec.value("scale", 1.0) : 1.0;
    const int n = family.dim();
    if (kind == "zero") return Vec::Zero(n);
    std::mt19937_64 rng(seed ^ 0xd1b54a32d192ed03ULL);
    Vec y = random_vector(rng, n);
    y *= scale / family.space().h_norm(y);
    if (kind == "random") return y;
    if (kind == "sqrt-domain") {
        const OperatorH root = sqrt_op(shifted_initial_operator(family));
        return root.matrix.partialPivLu().solve(y);
    }
    throw ConfigurationError("unknown initial kind \"" + kind + "\"");
}

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i)
        if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(x[i]) && std::isfinite(y[i]))
            pts.emplace_back(std::log(x[i]), std::log(y[i]));
    if (pts.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    double mx = 0.0, my = 0.0;
    for (auto [a, b] : pts) {
        mx += a;
        my += b;
    }
    mx /= pts.size();
    my /= pts.size();
    double sxy = 0.0, sxx = 0.0;
    for (auto [a, b] : pts) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    return sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
}

// ---------------------------------------------------------------------------
// check

RunRecord cmd_check(const CommandContext& ctx) {
    if (is_counterexample(ctx.config))
        throw ConfigurationError("check needs a form family; use the counterexample command for the scalar example");
    const FormFamily family = family_from_json(ctx.config);
    const json& opts = block(ctx.config, "check");
    const int samples = opts.value("samples", 41);
    const int angle_samples = opts.value("angle_samples", 1000);
    const int pairs = opts.value("resolvent_pairs", 200);
    const double p = block(ctx.config, "solver").value("p", 2.0);
    const double tau = family.horizon();

    Run run("check", ctx);
    json& rep = run.record.reports;
    rep["family_id"] = family.id();
    const auto times = sample_times(tau, samples);

    const auto bc = verify_bounded(family, times);
    const auto cc = verify_coercive(family, times);
    rep["bounded"] = {{"declared_M", family.bound_M()}, {"measured_M", bc.M_est}, {"violated", bc.violated}};
    rep["coercive"] = {{"declared_alpha", family.coercivity_alpha()}, {"measured_alpha", cc.alpha_est},
                       {"delta", cc.delta_used}, {"violated", cc.violated}};
    if (bc.violated) run.violation("bounded: measured M " + format_double(bc.M_est) + " exceeds declared " + format_double(family.bound_M()));
    if (cc.violated) run.violation("coercive: measured alpha " + format_double(cc.alpha_est) + " below declared " + format_double(family.coercivity_alpha()));

    // Declared modulus against sampled increments; pairs across a jump are skipped.
    {
        const auto& omega = family.modulus();
        const auto& bps = omega.breakpoints();
        auto piece = [&](double t) { return std::upper_bound(bps.begin(), bps.end(), t) - bps.begin(); };
        double worst = 0.0;
        int tested = 0;
        for (auto [s, t] : default_modulus_pairs(tau)) {
            if (omega.kind() == ModulusOfContinuity::Kind::PiecewiseHolder && piece(s) != piece(t)) continue;
            const double d = family.space().form_norm(family.form_at(t) - family.form_at(s));
            const double w = omega(std::abs(t - s));
            ++tested;
            if (d <= 1e-12) continue;
            worst = std::max(worst, w > 0.0 ? d / w : std::numeric_limits<double>::infinity());
        }
        rep["modulus"] = {{"declared", modulus_to_json(omega)}, {"pairs", tested}, {"max_ratio", finite_or_null(worst)}};
        if (worst > 1.0 + 1e-9) run.violation("modulus: form increments exceed the declared modulus by factor " + format_double(worst));
    }

    // Sector angle of the δ-shifted operators against arctan(M/α).
    const FormFamily shifted = family.shift_delta() > 0.0 ? shift_family(family, family.shift_delta()) : family;
    const double angle_bound = std::atan(family.bound_M() / family.coercivity_alpha());
    double omega0 = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k)
        omega0 = std::max(omega0, numerical_range_angle(assemble_operator(shifted, times[k]), angle_samples, ctx.seed + k));
    rep["sector_angle"] = {{"omega0", omega0}, {"bound", angle_bound}};
    if (omega0 > angle_bound + 1e-6)
        run.violation("sector: numerical range angle " + format_double(omega0) + " exceeds arctan(M/alpha) " + format_double(angle_bound));

    // Resolvent differences: calibrate, then verify on disjoint random pairs and midpoint radii.
    {
        const double theta = 0.5 * (std::min(omega0, angle_bound) + 0.5 * std::numbers::pi);
        const auto cal = calibrate_resolvent_difference(shifted, theta, pairs, ctx.seed);
        std::mt19937_64 rng(ctx.seed + 7919);
        std::uniform_real_distribution<double> u(0.0, tau);
        const auto radii = log_midpoints(log_grid(1e-2, 1e4, 13));
        const std::vector<double> rays{theta, -theta, 0.5 * (theta + std::numbers::pi), -0.5 * (theta + std::numbers::pi),
                                       std::numbers::pi};
        double worst = 0.0;
        int asserted = 0;
        for (int i = 0; i < pairs / 4 + 1; ++i) {
            const double s = u(rng), t = u(rng);
            if (std::abs(s - t) < 1e-12) continue;
            for (double arg : rays)
                for (double r : radii) {
                    const auto d = resolvent_difference_bound(shifted, s, t, std::polar(r, arg), cal);
                    if (!d.asserted || d.bound <= 0.0) continue;
                    ++asserted;
                    worst = std::max(worst, d.measured / d.bound);
                }
        }
        rep["resolvent_difference"] = {{"theta", cal.theta}, {"c_theta", finite_or_null(cal.c_theta)},
                                       {"verified_points", asserted}, {"max_ratio_to_bound", worst}};
        if (!std::isfinite(cal.c_theta)) run.violation("resolvent difference: calibration constant is not finite");
        else if (worst > 1.0) run.violation("resolvent difference: verification exceeds the calibrated bound by factor " + format_double(worst));
    }

    // Semigroup and resolvent constants (informational).
    {
        SectorSweep sweep;
        sweep.horizon = tau;
        sweep.seed = ctx.seed;
        sweep.angle_samples = std::min(angle_samples, 200);
        const int sector_samples = opts.value("sector_samples", 5);
        const auto report = sector_report(shifted, sample_times(tau, sector_samples), sweep);
        rep["sector"] = to_json(report);
    }

    const auto dini = dini_report(family.modulus(), tau, p);
    rep["dini"] = to_json(dini);
    if (!dini.finite_32) run.violation("dini: integral of omega(t)/t^{3/2} diverges");

    std::vector<std::vector<double>> rows;
    for (double t : times) {
        const Mat f = family.form_at(t);
        rows.push_back({t, family.space().form_norm(f)});
    }
    run.csv("form_norms.csv", {"t", "form_norm"}, rows);
    return run.finish();
}

// ---------------------------------------------------------------------------
// solve

RunRecord cmd_solve(const CommandContext& ctx) {
    if (is_counterexample(ctx.config)) {
        Run run("solve", ctx);
        run.record.reports["family_id"] = "counterexample";
        run.record.reports["divergence_diagnostic"] = counterexample_diagnostic(ctx.config.at("family"), run);
        return run.finish();
    }
    const FormFamily family = family_from_json(ctx.config);
    const TimeGrid grid = grid_from_json(block(ctx.config, "grid"), family.horizon());
    const SolveOptions options = solve_options_from_json(block(ctx.config, "solver"), ctx.seed);
    const json& data = block(ctx.config, "data");
    const int n = family.dim();
    const GridFunction f = make_forcing(data.value("forcing", json::object()), grid, n, ctx.seed);
    const Vec u0 = make_initial(data.value("initial", json::object()), family, ctx.seed);

    Run run("solve", ctx);
    json& rep = run.record.reports;
    rep["family_id"] = family.id();
    rep["N"] = grid.cells();
    rep["p"] = options.p;

    GridFunction u, du, au;
    const bool piecewise = family.modulus().kind() == ModulusOfContinuity::Kind::PiecewiseHolder &&
                           !family.modulus().breakpoints().empty();
    try {
        if (piecewise) {
            GlueOptions go;
            go.solve = options;
            go.kappa_max = block(ctx.config, "solver").value("kappa_max", go.kappa_max);
            const auto g = glue_solve(family, f, u0, go);
            u = g.u;
            du = g.du;
            au = g.au;
            rep["glue"] = {{"breakpoints", g.breakpoints}, {"kappas", g.kappas}, {"mus", g.mus}, {"iterations", g.iterations}};
            rep["mu"] = g.mus.empty() ? 0.0 : g.mus.front();
        } else {
            const auto r = solve_problem(family, f, u0, options);
            u = r.u;
            du = r.du;
            au = r.au;
            double q = r.q_norm;
            if (!std::isfinite(q))
                q = estimate_Q_norm(r.mu > 0.0 ? shift_family(family, r.mu) : family, grid, options.p, options.probes, options.seed);
            json sweep = json::array();
            for (auto [m, qq] : r.shift_sweep) sweep.push_back({m, qq});
            rep["mu"] = r.mu;
            rep["q_norm"] = q;
            rep["shift_sweep"] = sweep;
            rep["neumann"] = to_json(r.neumann);
            rep["fixed_point_residual"] = r.fixed_point_residual;
            rep["initial_mismatch"] = r.initial_mismatch;
            run.csv("neumann_history.csv", {"iteration", "relative_increment"}, [&] {
                std::vector<std::vector<double>> rows;
                for (std::size_t i = 0; i < r.neumann.residual_history.size(); ++i)
                    rows.push_back({double(i + 1), r.neumann.residual_history[i]});
                return rows;
            }());
        }
    } catch (const NoContractionError& e) {
        json m = json::array();
        for (auto [mu, q] : e.measured()) m.push_back({mu, q});
        rep["no_contraction"] = {{"message", e.what()}, {"measured", m}};
        run.violation(std::string("no contraction: ") + e.what());
        return run.finish();
    } catch (const NonConvergenceError& e) {
        rep["non_convergence"] = {{"message", e.what()}, {"history", e.history()}};
        run.violation(std::string("non-convergence: ") + e.what());
        return run.finish();
    } catch (const IncompatibleDomainsError& e) {
        rep["incompatible_domains"] = {{"message", e.what()}, {"breakpoint", e.breakpoint()}};
        run.violation(std::string("incompatible domains: ") + e.what());
        return run.finish();
    }

    const auto& sp = family.space();
    rep["norms"] = {{"u", lp_norm(u, options.p, sp)}, {"du", lp_norm(du, options.p, sp)},
                    {"au", lp_norm(au, options.p, sp)}, {"f", lp_norm(f, options.p, sp)}, {"u0", sp.h_norm(u0)}};
    const OperatorH a0 = shifted_initial_operator(family);
    try {
        const auto ar = apriori_ratio(u, du, au, f, u0, a0, options.p);
        const auto in = interpolation_norm(a0, u0, options.p, family.horizon());
        rep["apriori"] = {{"ratio", ar.ratio}, {"numerator", ar.numerator}, {"denominator", ar.denominator},
                          {"degenerate", ar.degenerate}, {"interpolation_converged", in.converged}};
    } catch (const DegenerateDataError& e) {
        rep["apriori"] = {{"error", e.what()}};
        run.violation(std::string("apriori ratio: ") + e.what());
    }
    rep["v_norm_recovery"] = finite_or_null(v_norm_recovery_check(u, du, f, family, family.shift_delta()));

    run.grid_csv("u.csv", u);
    run.grid_csv("du.csv", du);
    run.grid_csv("au.csv", au);
    return run.finish();
}

// ---------------------------------------------------------------------------
// hormander

RunRecord cmd_hormander(const CommandContext& ctx) {
    const FormFamily family = family_from_json(ctx.config);
    const json& opts = block(ctx.config, "hormander");
    const int pairs = opts.value("pairs", 100);
    const double tol = opts.value("tol", 1e-8);
    const double ratio_max = opts.value("max_median_ratio", 10.0);
    const double tau = family.horizon();
    if (pairs < 1) throw ConfigurationError("hormander needs at least one pair");

    Run run("hormander", ctx);
    json& rep = run.record.reports;
    rep["family_id"] = family.id();

    std::mt19937_64 rng(ctx.seed);
    std::uniform_real_distribution<double> us(0.25 * tau, 0.75 * tau), ud(0.005 * tau, 0.1 * tau);
    std::vector<double> i1, i2;
    std::vector<std::vector<double>> rows;
    bool finite = true;
    for (int k = 0; k < pairs; ++k) {
        const double s = us(rng);
        const double sp = s + ud(rng);
        const auto d = hormander_defect(family, s, sp, tol);
        finite = finite && std::isfinite(d.i1) && std::isfinite(d.i2);
        i1.push_back(d.i1);
        i2.push_back(d.i2);
        rows.push_back({s, sp, d.i1, d.i2});
    }
    run.csv("pairs.csv", {"s", "s_prime", "i1", "i2"}, rows);

    auto stats = [&](const std::vector<double>& v, const char* name) {
        const double mx = *std::max_element(v.begin(), v.end());
        const double md = median(v);
        const double ratio = md > 0.0 ? mx / md : (mx > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
        if (ratio > ratio_max)
            run.violation(std::string("hormander: ") + name + " max/median " + format_double(ratio) + " exceeds " + format_double(ratio_max));
        return json{{"max", finite_or_null(mx)}, {"median", finite_or_null(md)}, {"max_over_median", finite_or_null(ratio)}};
    };
    rep["i1"] = stats(i1, "I1");
    rep["i2"] = stats(i2, "I2");
    rep["finite"] = finite;
    if (!finite) run.violation("hormander: non-finite defect integral");

    const bool autonomous = constant_in_time(family);
    rep["autonomous"] = autonomous;
    if (autonomous) {
        const double c = calibrate_kernel_constant(family);
        const double bound = c * std::log(2.0);
        const double mx = *std::max_element(i1.begin(), i1.end());
        rep["kernel_constant"] = c;
        rep["i1_bound"] = bound;
        if (mx > bound * (1.0 + 1e-6)) run.violation("hormander: I1 " + format_double(mx) + " exceeds C log 2 = " + format_double(bound));
    }
    return run.finish();
}

// ---------------------------------------------------------------------------
// counterexample

RunRecord cmd_counterexample(const CommandContext& ctx) {
    json spec = block(ctx.config, "counterexample");
    if (spec.empty() && is_counterexample(ctx.config)) spec = ctx.config.at("family");
    Run run("counterexample", ctx);
    run.record.reports["family_id"] = "counterexample";
    run.record.reports["divergence_diagnostic"] = counterexample_diagnostic(spec, run);
    return run.finish();
}

// ---------------------------------------------------------------------------
// pdo-bench

namespace {

Symbol symbol_from_spec(const std::string& spec, int dim_x, const json& config) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (;;) {
        const auto c = spec.find(':', start);
        parts.push_back(spec.substr(start, c - start));
        if (c == std::string::npos) break;
        start = c + 1;
    }
    auto param = [&](std::size_t i, double fallback) {
        if (parts.size() <= i) return fallback;
        try {
            return std::stod(parts[i]);
        } catch (const std::exception&) {
            throw ConfigurationError("bad symbol parameter \"" + parts[i] + "\"");
        }
    };
    if (parts[0] == "identity") return Symbol::identity(dim_x, 1);
    if (parts[0] == "multiplier" && parts.size() >= 2) {
        const double lam = param(2, 1.0);
        if (!(lam > 0.0)) throw ConfigurationError("multiplier parameter must be positive");
        if (parts[1] == "bessel")
            return Symbol::multiplier(dim_x, 1, [lam](const Point& xi) {
                return Mat::Constant(1, 1, lam * lam / (lam * lam + xi.squaredNorm()));
            });
        if (parts[1] == "resolvent") {
            if (dim_x != 1) throw ConfigurationError("the resolvent multiplier is one-dimensional");
            return Symbol::multiplier(1, 1, [lam](const Point& xi) {
                return Mat::Constant(1, 1, lam / cplx(lam, xi(0)));
            });
        }
    }
    if (parts[0] == "variable") {
        const double a = param(1, 0.75);
        if (!(a > 0.0 && a <= 1.0)) throw ConfigurationError("variable symbol exponent must lie in (0, 1]");
        Symbol s(dim_x, 1, [a](const Point& x, const Point& xi) {
            const double h = 1.0 + 0.5 * std::pow(std::min(x.norm(), 1.0), a);
            return Mat::Constant(1, 1, h / (1.0 + xi.squaredNorm()));
        });
        s.with_modulus(ModulusOfContinuity::holder(a, 0.5));
        return s;
    }
    if (parts[0] == "mr") {
        if (dim_x != 1) throw ConfigurationError("the maximal-regularity symbol is one-dimensional");
        const FormFamily family = family_from_json(config);
        const double mu = param(1, family.shift_delta());
        const FormFamily shifted = mu > 0.0 ? shift_family(family, mu) : family;
        Symbol s = mr_symbol(shifted);
        s.with_modulus(family.modulus());
        return s;
    }
    throw ConfigurationError("unknown symbol \"" + spec + "\"");
}

}  // namespace

RunRecord cmd_pdo_bench(const CommandContext& ctx, const PdoBenchOptions& options) {
    const json& opts = block(ctx.config, "pdo");
    FieldGrid grid{opts.value("dim_x", 1), opts.value("half_width", 8.0), options.log2_points};
    grid.validate();
    if (options.probes < 1) throw ConfigurationError("probes must be positive");
    const Symbol symbol = symbol_from_spec(options.symbol, grid.dim_x, ctx.config);
    const int m = symbol.components();

    // CLI options take part in the run id.
    CommandContext bctx = ctx;
    bctx.config["pdo_bench"] = {{"symbol", options.symbol}, {"log2_points", options.log2_points}, {"probes", options.probes}};
    Run run("pdo-bench", bctx);
    json& rep = run.record.reports;
    rep["family_id"] = "pdo:" + options.symbol;
    rep["symbol"] = options.symbol;
    rep["grid"] = {{"dim_x", grid.dim_x}, {"half_width", grid.half_width}, {"log2_points", grid.log2_points}};

    // Gaussian probe field.
    const double width = grid.half_width / 8.0;
    const SampledField f = SampledField::sample(grid, m, [&](const Point& x) {
        return Vec(Vec::Constant(m, std::exp(-x.squaredNorm() / (width * width))));
    });
    const SampledField tf = apply_T(symbol, f);
    rep["probe"] = {{"input_l2", f.l2_norm()}, {"output_l2", tf.l2_norm()}, {"aliasing_warning", tf.aliasing_warning}};
    if (options.symbol == "identity") rep["probe"]["identity_error"] = (tf.values - f.values).cwiseAbs().maxCoeff();
    run.field_csv("probe_output.csv", tf);

    const double n0 = opnorm_estimate(symbol, grid, options.probes, ctx.seed);
    const double n1 = opnorm_estimate(symbol, grid.refined(), options.probes, ctx.seed);
    rep["opnorm"] = {{"coarse", n0}, {"fine", n1}, {"relative_change", std::abs(n1 - n0) / n0}};

    if (symbol.x_independent()) {
        double sup = 0.0;
        for (int p = 0; p < grid.total_points(); ++p)
            sup = std::max(sup, linalg::spectral_norm(symbol.value_at(Point::Zero(grid.dim_x), grid.frequency(p))));
        rep["sup_symbol"] = sup;
    }

    // Hypotheses on a modest (x, ξ) sample.
    std::vector<Point> xs, xis;
    const double lo = options.symbol.rfind("mr", 0) == 0 ? 0.0 : -1.0;
    for (int i = 0; i < 9; ++i) {
        Point x = Point::Constant(grid.dim_x, lo + (1.0 - lo) * i / 8.0);
        if (grid.dim_x == 2) x(1) = 0.5 * x(0);
        xs.push_back(x);
    }
    for (double r : log_grid(1e-2, 1e3, 16))
        for (double sgn : {-1.0, 1.0}) {
            Point xi = Point::Constant(grid.dim_x, sgn * r);
            if (grid.dim_x == 2) xi(1) = 0.3 * r;
            xis.push_back(xi);
        }
    const int max_order = grid.dim_x / 2 + 1;
    const auto cond = check_symbol_conditions(symbol, xs, xis, max_order);
    rep["conditions"] = to_json(cond);
    if (!cond.hypotheses_met) run.violation("pdo: symbol hypotheses not met");

    const auto split = split_symbol(symbol);
    double recon = 0.0;
    for (const auto& x : xs)
        for (const auto& xi : xis)
            recon = std::max(recon, (split.smooth.value_at(x, xi) + split.remainder.value_at(x, xi) - symbol.value_at(x, xi))
                                        .cwiseAbs()
                                        .maxCoeff());
    rep["split_reconstruction_error"] = recon;
    return run.finish();
}

// ---------------------------------------------------------------------------
// report

RunRecord cmd_report(const CommandContext& ctx, const std::vector<std::string>& run_ids) {
    std::vector<std::string> ids = run_ids;
    if (ctx.config.is_object() && ctx.config.contains("runs")) {
        if (!ctx.config.at("runs").is_array()) throw ConfigurationError("\"runs\" must be a list of run ids");
        for (const auto& r : ctx.config.at("runs")) ids.push_back(r.get<std::string>());
    }
    CommandContext rctx = ctx;
    rctx.config = {{"runs", ids}};
    Run run("report", rctx);

    std::vector<RunRecord> records;
    for (const auto& id : ids) {
        try {
            records.push_back(load_run(ctx.out_dir, id));
        } catch (const ConfigurationError& e) {
            run.violation(e.what());
        }
    }
    if (!run.record.violations.empty()) return run.finish();

    std::map<std::string, std::vector<const RunRecord*>> groups;
    for (const auto& r : records) groups[r.reports.value("family_id", std::string("unknown"))].push_back(&r);

    auto num = [](const json& j, const char* key) {
        return j.contains(key) && j.at(key).is_number() ? j.at(key).get<double>() : std::numeric_limits<double>::quiet_NaN();
    };
    std::vector<std::vector<double>> rows;
    json table = json::array();
    std::vector<std::string> labels;
    int group_index = 0;
    for (const auto& [family_id, members] : groups) {
        std::vector<double> mus, qs;
        for (const auto* r : members) {
            mus.push_back(num(r->reports, "mu"));
            qs.push_back(num(r->reports, "q_norm"));
        }
        const double slope = fit_loglog_slope(mus, qs);
        for (std::size_t i = 0; i < members.size(); ++i) {
            const auto& rr = members[i]->reports;
            const double ratio = rr.contains("apriori") ? num(rr.at("apriori"), "ratio") : std::numeric_limits<double>::quiet_NaN();
            const double unorm = rr.contains("norms") ? num(rr.at("norms"), "u") : std::numeric_limits<double>::quiet_NaN();
            rows.push_back({double(group_index), num(rr, "N"), num(rr, "p"), mus[i], qs[i], ratio, unorm, slope});
            table.push_back({{"family_id", family_id}, {"run_id", members[i]->run_id}, {"command", members[i]->command},
                             {"N", finite_or_null(num(rr, "N"))}, {"p", finite_or_null(num(rr, "p"))},
                             {"mu", finite_or_null(mus[i])}, {"q_norm", finite_or_null(qs[i])},
                             {"apriori_ratio", finite_or_null(ratio)}, {"u_norm", finite_or_null(unorm)},
                             {"fitted_slope", finite_or_null(slope)}});
        }
        labels.push_back(family_id);
        ++group_index;
    }
    run.record.reports["groups"] = labels;
    run.record.reports["table"] = table;
    run.csv("summary.csv", {"group", "N", "p", "mu", "q_norm", "apriori_ratio", "u_norm", "fitted_slope"}, rows);
    return run.finish();
}

}  // namespace maxreg
