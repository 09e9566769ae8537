#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

#include "sparsedae/benchgen.hpp"
#include "sparsedae/pipeline.hpp"
#include "sparsedae/report.hpp"
#include "sparsedae/timeseries.hpp"

namespace {

nlohmann::ordered_json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw sparsedae::Error("cli", "load_json", "ConfigError", "cannot open '" + path + "'");
    return nlohmann::ordered_json::parse(in);
}

int cmd_discover(const std::string& config_path, const std::string& out_override,
                 std::optional<std::uint64_t> seed_override, bool sweep) {
    nlohmann::ordered_json doc;
    try {
        doc = load_json(config_path);
    } catch (const sparsedae::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: [cli.discover] ConfigError: " << e.what() << "\n";
        return 2;
    }
    if (seed_override) {
        if (doc.contains("input") && doc["input"].contains("generator"))
            doc["input"]["generator"]["seed"] = *seed_override;
        if (doc.contains("algebraic") && doc["algebraic"].contains("tiebreak"))
            doc["algebraic"]["tiebreak"]["seed"] = *seed_override;
    }
    std::string out_dir = out_override;
    if (out_dir.empty()) out_dir = doc.value("output", ".");
    return sweep ? sparsedae::run_sweep(doc, out_dir, std::cout)
                 : sparsedae::run_pipeline_to_dir(doc, out_dir, std::cout);
}

int cmd_simulate(const std::string& spec_path, const std::string& out_csv) {
    try {
        const nlohmann::ordered_json doc = load_json(spec_path);
        nlohmann::ordered_json wrapper;
        wrapper["input"]["generator"] = doc;
        const sparsedae::PipelineConfig cfg = sparsedae::parse_config(wrapper);
        sparsedae::TimeSeriesTable table;
        const auto& gen = *cfg.generator;
        if (gen.kind == "crn1" || gen.kind == "crn2") {
            table = sparsedae::simulate_crn(gen.crn,
                                            gen.kind == "crn1" ? sparsedae::CrnNetwork::Crn1
                                                               : sparsedae::CrnNetwork::Crn2,
                                            gen.horizon, gen.samples);
            if (gen.noise_pct > 0.0) table = sparsedae::inject_noise(table, gen.noise_pct, gen.seed);
        } else if (gen.kind == "grid") {
            table = sparsedae::simulate_grid(gen.grid, gen.horizon, gen.samples, gen.snr_db, gen.seed);
        } else {
            table = sparsedae::simulate_pendulum(gen.pendulum,
                                                 gen.kind == "pendulum_single"
                                                     ? sparsedae::PendulumVariant::Single
                                                     : sparsedae::PendulumVariant::Double,
                                                 gen.horizon, gen.samples, gen.noise_pct, gen.seed);
        }
        sparsedae::write_table_file(table, out_csv);
        std::cout << "wrote " << out_csv << " (" << table.rows() << " rows, " << table.cols()
                  << " states)\n";
        return 0;
    } catch (const sparsedae::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return sparsedae::exit_code_for(e);
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: [cli.simulate] ConfigError: " << e.what() << "\n";
        return 2;
    }
}

int cmd_score(const std::string& model_path, const std::string& truth_path, double tol) {
    try {
        const sparsedae::DiscoveredModel model = sparsedae::model_from_json(load_json(model_path));
        const sparsedae::DiscoveredModel truth_model = sparsedae::model_from_json(load_json(truth_path));
        sparsedae::ReferenceModel truth;
        truth.relations = truth_model.algebraic;
        truth.odes = truth_model.odes;
        const sparsedae::RecoveryMetrics metrics = sparsedae::recovery_metrics(model, truth, tol);

        nlohmann::ordered_json doc;
        doc["algebraic_recovery_pct"] = sparsedae::round_for_report(metrics.algebraic_recovery_pct);
        nlohmann::ordered_json supports;
        for (const auto& [state, exact] : metrics.ode_support_exact) supports[state] = exact;
        doc["ode_support_exact"] = std::move(supports);
        doc["coefficient_max_rel_err"] = sparsedae::round_for_report(metrics.coefficient_max_rel_err);
        std::cout << sparsedae::dump_json(doc);
        return 0;
    } catch (const sparsedae::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return sparsedae::exit_code_for(e);
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: [cli.score] ConfigError: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Discovery of differential-algebraic systems from time-series data"};
    app.require_subcommand(0, 1);

    bool print_schema = false;
    app.add_flag("--print-schema", print_schema, "print the config schema and exit");

    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false, sweep = false;
    CLI::App* discover = app.add_subcommand("discover", "run the discovery pipeline");
    discover->add_option("--config", config_path, "pipeline config JSON")->required();
    discover->add_option("--out", out_dir, "output directory (overrides config)");
    discover->add_option("--seed", seed, "override generator/tiebreak seed")
        ->each([&](const std::string&) { seed_set = true; });
    discover->add_flag("--sweep", sweep, "fan out over the config's sweep grid");

    std::string spec_path, out_csv;
    CLI::App* simulate = app.add_subcommand("simulate", "generate a benchmark table");
    simulate->add_option("--spec", spec_path, "generator spec JSON")->required();
    simulate->add_option("--out", out_csv, "output CSV path")->required();

    std::string model_path, truth_path;
    double tol = 1e-3;
    CLI::App* score = app.add_subcommand("score", "compare a model against a truth model");
    score->add_option("--model", model_path, "discovered model.json")->required();
    score->add_option("--truth", truth_path, "reference model.json")->required();
    score->add_option("--tol", tol, "span-match tolerance");

    CLI11_PARSE(app, argc, argv);

    if (print_schema) {
        std::cout << sparsedae::dump_json(sparsedae::config_schema());
        return 0;
    }
    if (discover->parsed())
        return cmd_discover(config_path, out_dir,
                            seed_set ? std::optional<std::uint64_t>(seed) : std::nullopt, sweep);
    if (simulate->parsed()) return cmd_simulate(spec_path, out_csv);
    if (score->parsed()) return cmd_score(model_path, truth_path, tol);
    std::cout << app.help();
    return 0;
}
