#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wavelab/stationary_profiles.hpp"
#include "wavelab/wave_evolution.hpp"

namespace wavelab {

using json = nlohmann::json;

/// Bumped whenever the record layout changes; readers refuse other versions.
inline constexpr int kFormatVersion = 1;

/// Shared singular profile for m = 3 with enough zeros for k <= 5 (computed once, immutable).
std::shared_ptr<const SingularProfile> default_profile();

struct Table {
    std::string name;                      ///< file stem
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

struct Plot {
    std::string name;      ///< script stem
    std::string table;     ///< table stem plotted
    std::string xlabel, ylabel;
    std::vector<int> columns;  ///< 1-based y columns against column 1
    bool log_y = false;
};

struct ScenarioResult {
    json outcome;          ///< headline values compared against expectations
    json diagnostics;
    bool matched = true;   ///< outcome agrees with the expected one
    std::string expected;  ///< human-readable expectation
    std::vector<Table> tables;
    std::vector<Plot> plots;
};

struct Scenario {
    std::string name;
    std::string summary;
    json defaults;         ///< parameter schema: keys and value types
    std::function<ScenarioResult(const json& params)> run;
};

const std::vector<Scenario>& scenarios();
const Scenario& find_scenario(const std::string& name);

/// defaults updated with overrides; unknown keys and type mismatches raise InvalidArgument.
json merge_params(const Scenario& s, const json& overrides);
/// Parses "key=value" (numbers, booleans, comma lists, strings) into a json object.
json parse_overrides(const std::vector<std::string>& assignments);

struct RunRecord {
    int format_version = kFormatVersion;
    std::string scenario;
    json params;
    json outcome;
    json diagnostics;
    std::string expected;
    bool matched = false;
    bool failed = false;
    std::string error;
    double wall_seconds = 0.0;
    std::vector<std::string> artifacts;
};

json to_json(const RunRecord& r);
/// Throws VersionMismatch when format_version differs.
RunRecord record_from_json(const json& j);
RunRecord load_record(const std::filesystem::path& p);

struct RunOptions {
    std::filesystem::path out_root;   ///< empty: no files written
};

/// Output root from WAVELAB_OUT, falling back to ./wavelab_out.
std::filesystem::path default_out_root();

/// Writes text to path via a temporary file and rename.
void write_atomic(const std::filesystem::path& path, const std::string& text);
std::string to_csv(const Table& t);
std::string to_gnuplot(const Plot& p);

RunRecord run_scenario(const std::string& name, const json& overrides, const RunOptions& opt = {});
/// Re-runs a stored record with its recorded parameters.
RunRecord replay(const RunRecord& record, const RunOptions& opt = {});
/// One record per override set, in input order; failures are captured per point.
std::vector<RunRecord> sweep(const std::string& name, const std::vector<json>& points, unsigned parallelism,
                             const RunOptions& opt = {});

/// Exit status: 0 matched, 2 mismatch, 1 execution error.
int exit_code(const RunRecord& r);
int exit_code(const std::vector<RunRecord>& rs);

// --- evolve runs from TOML ---------------------------------------------------------------------

struct EvolveRun {
    int m = 3;
    int k = 0;
    double r_max = 80.0;
    std::size_t n = 16385;
    double dt_factor = 1.0;
    double t_end = 60.0;
    double threshold = 1e3;
    OuterBoundary boundary = OuterBoundary::Causal;
    double alpha = 0.0;          ///< coefficient along (Y_0, e_0 Y_0)
    double r_loc = 10.0;
    bool reverse_time = false;
    int record_every = 32;
    std::string expected;        ///< optional expected outcome label
};

EvolveRun parse_evolve_config(const std::string& toml_text);
EvolveRun load_evolve_config(const std::filesystem::path& p);

struct EvolveReport {
    RunOutcome outcome;
    Table series;                ///< t, sup_u, min_u, energy, local energies, alpha_plus/minus
    json summary;
};

EvolveReport run_evolve(const EvolveRun& cfg);

// --- acceptance ---------------------------------------------------------------------------------

struct CriterionResult {
    int id = 0;
    std::string title;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

/// The thirteen acceptance checks; quick mode trims the most expensive sweeps.
std::vector<CriterionResult> run_acceptance(bool quick = false,
                                            const std::function<void(const CriterionResult&)>& on_result = {});
/// Single acceptance check by 1-based id.
CriterionResult run_criterion(int id, bool quick = false);

}  // namespace wavelab
