#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "sparsedae/algfinder.hpp"
#include "sparsedae/benchgen.hpp"
#include "sparsedae/dynfinder.hpp"
#include "sparsedae/errors.hpp"

namespace sparsedae {

struct GeneratorConfig {
    std::string kind;  // crn1 | crn2 | grid | pendulum_single | pendulum_double
    CrnSpec crn;
    GridSpec grid;
    PendulumSpec pendulum;
    double horizon = 10.0;
    int samples = 400;
    double noise_pct = 0.0;
    std::optional<double> snr_db;
    std::uint64_t seed = 0;
};

struct LibraryConfig {
    std::string kind = "polynomial";  // polynomial | grid | grid_per_node
    int degree = 2;
    bool include_constant = true;
    int grid_nodes = 0;                  // 0: infer from the state names
    std::optional<int> restrict_to_node; // single-node grid library
};

struct SmoothingConfig {
    int window = 21;
    int polyorder = 3;
    bool smooth_states = false;
    int derivative_window = 0;  // 0: same as window
};

struct PipelineConfig {
    std::optional<std::string> input_csv;
    std::optional<GeneratorConfig> generator;
    LibraryConfig library;
    SmoothingConfig smoothing;
    AlgebraicFinderConfig algebraic;
    SparseFitConfig dynamic_solver;
    std::map<std::string, int> derivative_orders;
    bool exclude_measured_derivative = false;  // drop phidot_i from phi_i's own regressors
    std::vector<std::string> prefer_differential;
    std::optional<std::vector<std::string>> dynamic_states;  // restrict equation targets
    double metrics_span_tol = 1e-3;
    std::string output_dir = ".";
};

PipelineConfig parse_config(const nlohmann::ordered_json& doc);
nlohmann::ordered_json config_schema();

struct PipelineOutcome {
    TimeSeriesTable data;
    DiscoveredModel model;
    std::vector<AlgebraicResult> algebraic_runs;  // one, or one per grid node
    std::optional<RecoveryMetrics> metrics;
};

/// Run the full discovery pipeline in memory.
PipelineOutcome run_pipeline(const PipelineConfig& cfg);

/// Run and write model.json, trace.json, equations.txt (and metrics.json
/// when the generator supplies a truth model) to out_dir. Returns the
/// process exit code: 0 ok, 2 config error, 3 data error, 4 numerical
/// failure, 5 no relation found while K was demanded.
int run_pipeline_to_dir(const nlohmann::ordered_json& config_doc, const std::string& out_dir,
                        std::ostream& log);

/// Fan out runs over the sweep grid in the config ("sweep": {"alpha": [..],
/// "threshold": [..]}) and write a summary table.
int run_sweep(const nlohmann::ordered_json& config_doc, const std::string& out_dir,
              std::ostream& log);

int exit_code_for(const Error& error);

}  // namespace sparsedae
