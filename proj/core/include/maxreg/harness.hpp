#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "maxreg/serialization.hpp"

namespace maxreg {

/// One command invocation as persisted under <out>/runs/<run_id>/.
struct RunRecord {
    std::string run_id;
    std::string command;
    json config;
    std::uint64_t seed = 0;
    json reports = json::object();
    std::vector<std::string> artifacts;  ///< paths relative to the run directory
    std::string timestamp;               ///< UTC, ISO 8601
    int exit_code = 0;
    std::vector<std::string> violations;

    json to_json() const;
    static RunRecord from_json(const json& j);
};

/// FNV-1a 64 over the canonical config dump, the command name and the seed, as 16 hex digits.
std::string compute_run_id(const std::string& command, const json& config, std::uint64_t seed);

/// Options shared by all commands. `config` is the parsed document (empty object when absent).
struct CommandContext {
    json config = json::object();
    std::uint64_t seed = 0;
    std::filesystem::path out_dir = "out";
    bool persist = true;  ///< write record.json and artifacts
};

/// Exit-code contract: 0 success, 1 named violation (or hypothesis failure), 2 usage/config error.
RunRecord cmd_check(const CommandContext& ctx);
RunRecord cmd_solve(const CommandContext& ctx);
RunRecord cmd_hormander(const CommandContext& ctx);
RunRecord cmd_counterexample(const CommandContext& ctx);

struct PdoBenchOptions {
    std::string symbol = "identity";
    int log2_points = 8;
    int probes = 4;
};
RunRecord cmd_pdo_bench(const CommandContext& ctx, const PdoBenchOptions& options);

/// Cross-run summary of `run_ids` (plus any ids listed under config "runs"), grouped by family_id.
/// Unknown ids give exit code 1; an empty list gives an empty table and exit code 0.
RunRecord cmd_report(const CommandContext& ctx, const std::vector<std::string>& run_ids);

/// Forcing block {"kind": "zero" | "constant" | "random-smooth", "amplitude", "modes"}.
GridFunction make_forcing(const json& spec, const TimeGrid& grid, int dim, std::uint64_t seed);
/// Initial block {"kind": "zero" | "random" | "sqrt-domain", "scale"}; "sqrt-domain" returns
/// (δ + A(0))^{−1/2} y for a random y.
Vec make_initial(const json& spec, const FormFamily& family, std::uint64_t seed);

/// Least-squares slope of log y against log x over positive pairs; NaN with fewer than 2 points.
double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Reads a run record from <out>/runs/<id>/record.json; throws ConfigurationError when absent.
RunRecord load_run(const std::filesystem::path& out_dir, const std::string& run_id);

}  // namespace maxreg
