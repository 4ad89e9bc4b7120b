#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "maxreg/galerkin_forms.hpp"
#include "maxreg/model_zoo.hpp"
#include "maxreg/pdo.hpp"
#include "maxreg/regularity.hpp"
#include "maxreg/semigroup.hpp"
#include "maxreg/time_grid.hpp"
#include "maxreg/volterra.hpp"

namespace maxreg {

using json = nlohmann::json;

/// Complex matrix as nested rows; entries are numbers or [re, im] pairs.
json matrix_to_json(const Mat& m);
Mat matrix_from_json(const json& j);

json modulus_to_json(const ModulusOfContinuity& m);
ModulusOfContinuity modulus_from_json(const json& j);

/// Builds the family described by `doc["family"]` with horizon `doc["tau"]`.
/// Builtin kinds: rotating, elliptic1d, robin, random-accretive, constant, sampled, piecewise.
/// Throws ConfigurationError for missing or malformed fields.
FormFamily family_from_json(const json& doc);
/// Same, for a family node and an explicit horizon.
FormFamily family_node_from_json(const json& node, double horizon, std::uint64_t seed);

/// {"N": …, "grading": "uniform" | "graded", "gamma": …}.
TimeGrid grid_from_json(const json& j, double horizon);
/// Solver block {"p", "tol", "max_iter", "shift": {"auto", "target", "mu", "probes"}}.
SolveOptions solve_options_from_json(const json& j, std::uint64_t seed);
CounterexampleSpec counterexample_from_json(const json& j);

json to_json(const DiniReport& r);
json to_json(const SectorReport& r);
json to_json(const ConditionReport& r);
json to_json(const NeumannResult& r);

/// Reads a JSON document; throws ConfigurationError on I/O or parse failure.
json read_json_file(const std::filesystem::path& path);
/// Writes `doc` with two-space indentation and a trailing newline.
void write_json_file(const std::filesystem::path& path, const json& doc);

/// CSV with a header row and %.17g numbers.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);
/// Columns t, re_0, im_0, re_1, im_1, …
void write_grid_function_csv(const std::filesystem::path& path, const GridFunction& g);
/// Columns x_0[, x_1], re_0, im_0, …
void write_field_csv(const std::filesystem::path& path, const SampledField& f);

std::string format_double(double v);

}  // namespace maxreg
