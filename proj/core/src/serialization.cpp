#include "maxreg/serialization.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "maxreg/errors.hpp"

namespace maxreg {

namespace {

const json& require(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw ConfigurationError(std::string("missing field \"") + key + "\"");
    return j.at(key);
}

double number(const json& j, const char* key) {
    const json& v = require(j, key);
    if (!v.is_number()) throw ConfigurationError(std::string("field \"") + key + "\" must be a number");
    return v.get<double>();
}

double number_or(const json& j, const char* key, double fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw ConfigurationError(std::string("field \"") + key + "\" must be a number");
    return j.at(key).get<double>();
}

int int_or(const json& j, const char* key, int fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    if (!j.at(key).is_number_integer()) throw ConfigurationError(std::string("field \"") + key + "\" must be an integer");
    return j.at(key).get<int>();
}

std::string string_or(const json& j, const char* key, const std::string& fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    if (!j.at(key).is_string()) throw ConfigurationError(std::string("field \"") + key + "\" must be a string");
    return j.at(key).get<std::string>();
}

std::vector<double> numbers(const json& j) {
    if (!j.is_array()) throw ConfigurationError("expected an array of numbers");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) throw ConfigurationError("expected an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

cplx entry(const json& e) {
    if (e.is_number()) return e.get<double>();
    if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number())
        return {e[0].get<double>(), e[1].get<double>()};
    throw ConfigurationError("matrix entries must be numbers or [re, im] pairs");
}

/// Hölder-in-time sine coefficient 1 + amp sin(2πx) t^exp (or a constant when amp = 0).
Coefficient coefficient_from_json(const json& j) {
    const double base = number_or(j, "base", 1.0);
    const double amp = number_or(j, "amplitude", 0.0);
    const double ex = number_or(j, "exponent", 1.0);
    return [base, amp, ex](double t, double x) {
        return cplx(base + amp * std::sin(2.0 * std::numbers::pi * x) * std::pow(std::max(t, 0.0), ex));
    };
}

}  // namespace

json matrix_to_json(const Mat& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) {
            const cplx v = m(i, k);
            if (v.imag() == 0.0)
                row.push_back(v.real());
            else
                row.push_back(json::array({v.real(), v.imag()}));
        }
        rows.push_back(row);
    }
    return rows;
}

Mat matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty() || !j[0].is_array()) throw ConfigurationError("matrix must be a list of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (!j[i].is_array() || static_cast<Eigen::Index>(j[i].size()) != cols)
            throw ConfigurationError("matrix rows must have equal length");
        for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = entry(j[i][k]);
    }
    return m;
}

json modulus_to_json(const ModulusOfContinuity& m) {
    switch (m.kind()) {
        case ModulusOfContinuity::Kind::Holder:
            return {{"kind", "holder"}, {"exponent", m.pieces()[0].exponent}, {"constant", m.pieces()[0].constant}};
        case ModulusOfContinuity::Kind::PiecewiseHolder: {
            json pieces = json::array();
            for (const auto& p : m.pieces()) pieces.push_back({{"exponent", p.exponent}, {"constant", p.constant}});
            return {{"kind", "piecewise_holder"}, {"breakpoints", m.breakpoints()}, {"pieces", pieces}};
        }
        case ModulusOfContinuity::Kind::Tabulated:
            return {{"kind", "tabulated"}, {"gaps", m.gaps()}, {"values", m.values()}};
    }
    return {};
}

ModulusOfContinuity modulus_from_json(const json& j) {
    const std::string kind = string_or(j, "kind", "");
    if (kind == "holder") return ModulusOfContinuity::holder(number(j, "exponent"), number(j, "constant"));
    if (kind == "zero") return ModulusOfContinuity::zero();
    if (kind == "piecewise_holder") {
        std::vector<HolderPiece> pieces;
        const json& pj = require(j, "pieces");
        if (!pj.is_array()) throw ConfigurationError("pieces must be an array");
        for (const auto& p : pj) pieces.push_back({number(p, "exponent"), number(p, "constant")});
        return ModulusOfContinuity::piecewise_holder(numbers(require(j, "breakpoints")), pieces);
    }
    if (kind == "tabulated")
        return ModulusOfContinuity::tabulated(numbers(require(j, "gaps")), numbers(require(j, "values")));
    throw ConfigurationError("unknown modulus kind \"" + kind + "\"");
}

FormFamily family_from_json(const json& doc) {
    const double tau = number(doc, "tau");
    if (!(tau > 0.0)) throw ConfigurationError("tau must be positive");
    const auto seed = static_cast<std::uint64_t>(int_or(doc, "seed", 0));
    return family_node_from_json(require(doc, "family"), tau, seed);
}

FormFamily family_node_from_json(const json& node, double tau, std::uint64_t seed) {
    const std::string kind = string_or(node, "kind", "");
    std::optional<ModulusOfContinuity> modulus;
    if (node.contains("modulus")) modulus = modulus_from_json(node.at("modulus"));
    auto named = [&](FormFamily f) {
        f = f.with_id(string_or(node, "id", f.id()));
        return modulus ? f.with_modulus(*modulus) : f;
    };

    if (kind == "rotating")
        return named(build_rotating_family(int_or(node, "n", 4), number_or(node, "holder_a", 0.75),
                                           number_or(node, "amplitude", 0.5), tau, number_or(node, "rate", 1.0)));
    if (kind == "elliptic1d") {
        const json coeff = node.contains("coefficient") ? node.at("coefficient") : json::object();
        return named(build_elliptic_1d(coefficient_from_json(coeff), int_or(node, "m", 31), number_or(node, "nu", 0.5),
                                       tau, modulus));
    }
    if (kind == "robin") {
        const json bj = node.contains("beta") ? node.at("beta") : json::object();
        const double base = number_or(bj, "base", 1.0);
        const double amp = number_or(bj, "amplitude", 0.0);
        const double ex = number_or(bj, "exponent", 1.0);
        const double right = number_or(bj, "right_factor", 1.0);
        BoundaryCoefficient beta = [base, amp, ex, right](double t, double x) {
            const double v = base + amp * std::pow(std::max(t, 0.0), ex);
            return x > 0.5 ? right * v : v;
        };
        if (!modulus && amp != 0.0) {
            // Each end moves by at most amp·h^ex, and |u(x)|² ≤ 2∥u∥_V² on the unit interval.
            const double c = 2.0 * std::abs(amp) * (1.0 + std::abs(right));
            modulus = ex <= 1.0 ? ModulusOfContinuity::holder(ex, c)
                                : ModulusOfContinuity::holder(1.0, c * ex * std::pow(tau, ex - 1.0));
        }
        return named(build_robin(beta, int_or(node, "m", 31), tau, modulus));
    }
    if (kind == "random-accretive")
        return named(build_random_accretive(int_or(node, "n", 8), seed + static_cast<std::uint64_t>(int_or(node, "seed", 0)),
                                            tau, number_or(node, "shift", 0.5)));
    if (kind == "constant" || kind == "sampled") {
        const Mat gh = matrix_from_json(require(node, "gram_H"));
        const Mat gv = matrix_from_json(require(node, "gram_V"));
        const auto space = GalerkinSpace::create(gh, gv);
        std::vector<double> times;
        std::vector<Mat> forms;
        if (kind == "constant") {
            times = {0.0};
            forms = {matrix_from_json(require(node, "form"))};
        } else {
            times = numbers(require(node, "times"));
            const json& fj = require(node, "forms");
            if (!fj.is_array() || fj.size() != times.size())
                throw ConfigurationError("sampled family needs one form per time");
            for (const auto& f : fj) forms.push_back(matrix_from_json(f));
            for (std::size_t k = 1; k < times.size(); ++k)
                if (!(times[k] > times[k - 1])) throw ConfigurationError("sampled times must increase");
        }
        for (const auto& f : forms)
            if (f.rows() != gh.rows() || f.cols() != gh.cols()) throw ConfigurationError("form size differs from the space");
        // Linear interpolation between samples, constant outside.
        FormFunction form = [times, forms](double t) {
            if (t <= times.front()) return forms.front();
            if (t >= times.back()) return forms.back();
            const auto k = static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), t) - times.begin());
            const double w = (t - times[k - 1]) / (times[k] - times[k - 1]);
            return Mat((1.0 - w) * forms[k - 1] + w * forms[k]);
        };
        FormFamily::Constants c;
        const double delta = number_or(node, "delta", 0.0);
        const auto measured = measure_constants(space, tau, form, delta);
        c.bound_M = number_or(node, "M", measured.bound_M);
        c.coercivity_alpha = number_or(node, "alpha", measured.coercivity_alpha);
        c.shift_delta = delta;
        ModulusOfContinuity mod = ModulusOfContinuity::zero();
        if (modulus)
            mod = *modulus;
        else if (kind == "sampled")
            mod = estimate_modulus(FormFamily(space, tau, form, c, mod), default_modulus_pairs(tau));
        return FormFamily(space, tau, form, c, mod, string_or(node, "id", kind));
    }
    if (kind == "piecewise") {
        const json& pj = require(node, "pieces");
        if (!pj.is_array() || pj.empty()) throw ConfigurationError("piecewise family needs pieces");
        std::vector<FormFamily> pieces;
        for (const auto& p : pj) pieces.push_back(family_node_from_json(p, tau, seed));
        auto f = build_piecewise(pieces, numbers(require(node, "breakpoints")));
        return f.with_id(string_or(node, "id", "piecewise"));
    }
    throw ConfigurationError("unknown family kind \"" + kind + "\"");
}

TimeGrid grid_from_json(const json& j, double horizon) {
    const int n = int_or(j, "N", 128);
    const std::string grading = string_or(j, "grading", "uniform");
    if (grading == "uniform") return TimeGrid::uniform(horizon, n);
    if (grading == "graded") return TimeGrid::graded(horizon, n, number_or(j, "gamma", 2.0));
    throw ConfigurationError("unknown grading \"" + grading + "\"");
}

SolveOptions solve_options_from_json(const json& j, std::uint64_t seed) {
    SolveOptions o;
    o.seed = seed;
    if (j.is_null()) return o;
    o.p = number_or(j, "p", o.p);
    if (!(o.p > 1.0) || !std::isfinite(o.p)) throw ConfigurationError("p must lie in (1, ∞)");
    o.tol = number_or(j, "tol", o.tol);
    o.max_iter = int_or(j, "max_iter", o.max_iter);
    if (j.contains("shift")) {
        const json& s = j.at("shift");
        if (s.contains("auto")) {
            if (!s.at("auto").is_boolean()) throw ConfigurationError("shift.auto must be a boolean");
            o.auto_shift = s.at("auto").get<bool>();
        }
        o.target = number_or(s, "target", o.target);
        o.mu = number_or(s, "mu", o.mu);
        o.probes = int_or(s, "probes", o.probes);
    }
    return o;
}

CounterexampleSpec counterexample_from_json(const json& j) {
    CounterexampleSpec s;
    if (j.is_null()) return s;
    s.p = number_or(j, "p", s.p);
    s.terms = int_or(j, "terms", s.terms);
    s.first_weight = number_or(j, "first_weight", s.first_weight);
    s.weight_ratio = number_or(j, "weight_ratio", s.weight_ratio);
    if (j.contains("nodes")) s.nodes = numbers(j.at("nodes"));
    if (j.contains("weights")) s.weights = numbers(j.at("weights"));
    return s;
}

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json to_json(const DiniReport& r) {
    return {{"horizon", r.horizon},
            {"p", r.p},
            {"integral_32", finite_or_null(r.integral_32)},
            {"integral_p", finite_or_null(r.integral_p)},
            {"integral_2log", finite_or_null(r.integral_2log)},
            {"finite_32", r.finite_32},
            {"finite_p", r.finite_p},
            {"finite_2log", r.finite_2log},
            {"closed_form", r.closed_form}};
}

json to_json(const SectorReport& r) {
    json constants = json::object();
    for (const auto& [k, v] : r.constants) constants[k] = finite_or_null(v);
    json verified = json::object();
    for (const auto& [k, v] : r.verified) verified[k] = v;
    return {{"family_id", r.family_id},
            {"omega0", r.omega0},
            {"theta", r.theta},
            {"angle_bound", r.angle_bound},
            {"constants", constants},
            {"verified", verified},
            {"sweep",
             {{"sample_times", r.sample_times},
              {"horizon", r.sweep.horizon},
              {"s_points", r.sweep.s_points},
              {"z_points", r.sweep.z_points},
              {"angle_samples", r.sweep.angle_samples},
              {"seed", r.sweep.seed}}}};
}

json to_json(const ConditionReport& r) {
    json entries = json::array();
    for (const auto& e : r.entries)
        entries.push_back({{"alpha", e.alpha}, {"c_alpha", finite_or_null(e.c_alpha)}, {"x_ratio", finite_or_null(e.x_ratio)}});
    return {{"dim_x", r.dim_x},
            {"max_order", r.max_order},
            {"entries", entries},
            {"integral_2log", finite_or_null(r.integral_2log)},
            {"dini_2log_finite", r.dini_2log_finite},
            {"hypotheses_met", r.hypotheses_met}};
}

json to_json(const NeumannResult& r) {
    return {{"iterations", r.iterations}, {"residual_history", r.residual_history}, {"b_norm", r.b_norm}};
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigurationError("cannot read " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigurationError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
        out << '\n';
    }
}

void write_grid_function_csv(const std::filesystem::path& path, const GridFunction& g) {
    std::vector<std::string> header{"t"};
    for (int i = 0; i < g.dim(); ++i) {
        header.push_back("re_" + std::to_string(i));
        header.push_back("im_" + std::to_string(i));
    }
    std::vector<std::vector<double>> rows;
    for (int k = 0; k < g.size(); ++k) {
        std::vector<double> row{g.grid().node(k)};
        for (int i = 0; i < g.dim(); ++i) {
            row.push_back(g.values()(i, k).real());
            row.push_back(g.values()(i, k).imag());
        }
        rows.push_back(std::move(row));
    }
    write_csv(path, header, rows);
}

void write_field_csv(const std::filesystem::path& path, const SampledField& f) {
    std::vector<std::string> header;
    for (int a = 0; a < f.grid.dim_x; ++a) header.push_back("x_" + std::to_string(a));
    for (int i = 0; i < f.components(); ++i) {
        header.push_back("re_" + std::to_string(i));
        header.push_back("im_" + std::to_string(i));
    }
    std::vector<std::vector<double>> rows;
    for (int p = 0; p < f.grid.total_points(); ++p) {
        const Point x = f.grid.point(p);
        std::vector<double> row(x.data(), x.data() + x.size());
        for (int i = 0; i < f.components(); ++i) {
            row.push_back(f.values(i, p).real());
            row.push_back(f.values(i, p).imag());
        }
        rows.push_back(std::move(row));
    }
    write_csv(path, header, rows);
}

}  // namespace maxreg
