// maxreg command-line front end.
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "maxreg/errors.hpp"
#include "maxreg/harness.hpp"

namespace {

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = "out";
};

void add_common(CLI::App* sub, CommonOptions& o) {
    sub->add_option("--config", o.config, "JSON configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "seed (overrides the config's \"seed\")");
    sub->add_option("--out", o.out, "output directory for the run store")->capture_default_str();
}

maxreg::CommandContext make_context(const CommonOptions& o) {
    maxreg::CommandContext ctx;
    if (!o.config.empty()) ctx.config = maxreg::read_json_file(o.config);
    if (!ctx.config.is_object()) throw maxreg::ConfigurationError("configuration must be a JSON object");
    if (o.seed)
        ctx.seed = *o.seed;
    else if (ctx.config.contains("seed")) {
        if (!ctx.config.at("seed").is_number_unsigned()) throw maxreg::ConfigurationError("seed must be a non-negative integer");
        ctx.seed = ctx.config.at("seed").get<std::uint64_t>();
    }
    ctx.out_dir = o.out;
    return ctx;
}

/// Accepts "2^k" or a power of two; returns k.
int parse_grid(const std::string& s) {
    try {
        if (s.rfind("2^", 0) == 0) return std::stoi(s.substr(2));
        const long v = std::stol(s);
        int k = 0;
        while ((1L << k) < v) ++k;
        if ((1L << k) != v) throw maxreg::ConfigurationError("grid size must be a power of two");
        return k;
    } catch (const std::logic_error&) {
        throw maxreg::ConfigurationError("cannot parse grid size \"" + s + "\"");
    }
}

int report(const maxreg::RunRecord& r, const maxreg::CommandContext& ctx) {
    std::cout << "run_id " << r.run_id << '\n'
              << "command " << r.command << '\n'
              << "record " << (ctx.out_dir / "runs" / r.run_id / "record.json").string() << '\n';
    for (const auto& a : r.artifacts) std::cout << "artifact " << a << '\n';
    if (r.command == "report" && r.reports.contains("table"))
        for (const auto& row : r.reports.at("table")) std::cout << "row " << row.dump() << '\n';
    for (const auto& v : r.violations) std::cerr << "violation: " << v << '\n';
    std::cout << "exit " << r.exit_code << '\n';
    return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Maximal-regularity experiments for non-autonomous evolution equations"};
    app.require_subcommand(1);

    CommonOptions common;
    auto* check = app.add_subcommand("check", "verify the hypotheses of a form family");
    auto* solve = app.add_subcommand("solve", "solve u' + A(t)u = f, u(0) = u0");
    auto* pdo = app.add_subcommand("pdo-bench", "pseudo-differential operator benchmark");
    auto* horm = app.add_subcommand("hormander", "kernel regularity integrals");
    auto* counter = app.add_subcommand("counterexample", "scalar counterexample refinement sweep");
    auto* rep = app.add_subcommand("report", "cross-run summary tables");
    for (auto* s : {check, solve, pdo, horm, counter, rep}) add_common(s, common);

    maxreg::PdoBenchOptions pdo_opts;
    std::string grid = "2^8";
    pdo->add_option("--symbol", pdo_opts.symbol,
                    "identity | multiplier:bessel[:l] | multiplier:resolvent[:l] | variable[:a] | mr[:mu]")
        ->capture_default_str();
    pdo->add_option("--grid", grid, "points per axis, 2^k")->capture_default_str();
    pdo->add_option("--probes", pdo_opts.probes, "random probes for the norm estimate")->capture_default_str();

    std::vector<std::string> run_ids;
    rep->add_option("run_ids", run_ids, "run ids to summarize");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const auto ctx = make_context(common);
        if (check->parsed()) return report(maxreg::cmd_check(ctx), ctx);
        if (solve->parsed()) return report(maxreg::cmd_solve(ctx), ctx);
        if (horm->parsed()) return report(maxreg::cmd_hormander(ctx), ctx);
        if (counter->parsed()) return report(maxreg::cmd_counterexample(ctx), ctx);
        if (rep->parsed()) return report(maxreg::cmd_report(ctx, run_ids), ctx);
        if (pdo->parsed()) {
            pdo_opts.log2_points = parse_grid(grid);
            return report(maxreg::cmd_pdo_bench(ctx, pdo_opts), ctx);
        }
    } catch (const maxreg::ConfigurationError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
