#include "sparsedae/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>

#include "sparsedae/report.hpp"

namespace sparsedae {

namespace {

Error config_error(const std::string& msg) { return Error("cli", "parse_config", "ConfigError", msg); }

template <typename T>
T get_or(const nlohmann::ordered_json& doc, const std::string& key, T fallback) {
    if (!doc.contains(key)) return fallback;
    return doc.at(key).get<T>();
}

SparseFitConfig parse_solver(const nlohmann::ordered_json& doc) {
    SparseFitConfig cfg;
    const std::string name = get_or<std::string>(doc, "solver", "lasso_stlsq");
    if (name == "lasso_stlsq") cfg.solver = Solver::LassoStlsq;
    else if (name == "stlsq") cfg.solver = Solver::Stlsq;
    else if (name == "stols") cfg.solver = Solver::Stols;
    else throw config_error("unknown solver '" + name + "'");
    cfg.alpha = get_or<double>(doc, "alpha", cfg.alpha);
    cfg.threshold = get_or<double>(doc, "threshold", cfg.threshold);
    cfg.max_iter = get_or<int>(doc, "max_iter", cfg.max_iter);
    cfg.tol = get_or<double>(doc, "tol", cfg.tol);
    if (cfg.alpha < 0.0 || cfg.threshold < 0.0 || cfg.max_iter < 1 || !(cfg.tol > 0.0))
        throw config_error("invalid solver hyperparameters");
    return cfg;
}

GridSpec parse_grid_spec(const nlohmann::ordered_json& doc) {
    GridSpec spec;
    spec.n_nodes = doc.at("n_nodes").get<int>();
    spec.generators = get_or<std::vector<int>>(doc, "generators", {});
    spec.inertia = get_or<std::vector<double>>(doc, "inertia", std::vector<double>(spec.n_nodes, 0.0));
    spec.damping = doc.at("damping").get<std::vector<double>>();
    spec.power = doc.at("power").get<std::vector<double>>();
    spec.admittance = doc.at("admittance").get<std::vector<std::vector<double>>>();
    spec.omega_ref = get_or<double>(doc, "omega_ref", spec.omega_ref);
    if (doc.contains("kicks"))
        for (const auto& k : doc.at("kicks"))
            spec.kicks.push_back({k.at("time").get<double>(), k.at("node").get<int>(),
                                  k.at("dphi").get<double>()});
    return spec;
}

GeneratorConfig parse_generator(const nlohmann::ordered_json& doc) {
    GeneratorConfig gen;
    gen.kind = doc.at("kind").get<std::string>();
    gen.horizon = get_or<double>(doc, "horizon", gen.horizon);
    gen.samples = get_or<int>(doc, "samples", gen.samples);
    gen.noise_pct = get_or<double>(doc, "noise_pct", 0.0);
    if (doc.contains("snr_db")) gen.snr_db = doc.at("snr_db").get<double>();
    gen.seed = get_or<std::uint64_t>(doc, "seed", 0);

    if (gen.kind == "crn1" || gen.kind == "crn2") {
        if (doc.contains("crn")) {
            const auto& c = doc.at("crn");
            gen.crn.k1 = get_or<double>(c, "k1", gen.crn.k1);
            gen.crn.k2 = get_or<double>(c, "k2", gen.crn.k2);
            gen.crn.k3 = get_or<double>(c, "k3", gen.crn.k3);
            gen.crn.k4 = get_or<double>(c, "k4", gen.crn.k4);
            gen.crn.k5 = get_or<double>(c, "k5", gen.crn.k5);
            gen.crn.k6 = get_or<double>(c, "k6", gen.crn.k6);
            gen.crn.e1_tot = get_or<double>(c, "e1_tot", gen.crn.e1_tot);
            gen.crn.e2_tot = get_or<double>(c, "e2_tot", gen.crn.e2_tot);
            gen.crn.initial_substrate =
                get_or<std::vector<double>>(c, "initial_substrate", gen.crn.initial_substrate);
        }
    } else if (gen.kind == "grid") {
        gen.grid = parse_grid_spec(doc.at("grid"));
    } else if (gen.kind == "pendulum_single" || gen.kind == "pendulum_double") {
        if (doc.contains("pendulum")) {
            const auto& p = doc.at("pendulum");
            gen.pendulum.length1 = get_or<double>(p, "length1", gen.pendulum.length1);
            gen.pendulum.length2 = get_or<double>(p, "length2", gen.pendulum.length2);
            gen.pendulum.mass1 = get_or<double>(p, "mass1", gen.pendulum.mass1);
            gen.pendulum.mass2 = get_or<double>(p, "mass2", gen.pendulum.mass2);
            gen.pendulum.damping = get_or<double>(p, "damping", gen.pendulum.damping);
            gen.pendulum.gravity = get_or<double>(p, "gravity", gen.pendulum.gravity);
            gen.pendulum.initial_angle1 =
                get_or<std::vector<double>>(p, "initial_angle1", gen.pendulum.initial_angle1);
            gen.pendulum.initial_angle2 =
                get_or<std::vector<double>>(p, "initial_angle2", gen.pendulum.initial_angle2);
            gen.pendulum.initial_velocity1 =
                get_or<double>(p, "initial_velocity1", gen.pendulum.initial_velocity1);
            gen.pendulum.initial_velocity2 =
                get_or<double>(p, "initial_velocity2", gen.pendulum.initial_velocity2);
        }
    } else {
        throw config_error("unknown generator kind '" + gen.kind + "'");
    }
    return gen;
}

}  // namespace

PipelineConfig parse_config(const nlohmann::ordered_json& doc) {
    PipelineConfig cfg;
    if (!doc.contains("input")) throw config_error("missing 'input'");
    const auto& input = doc.at("input");
    if (input.contains("csv") == input.contains("generator"))
        throw config_error("input must have exactly one of 'csv' or 'generator'");
    if (input.contains("csv")) cfg.input_csv = input.at("csv").get<std::string>();
    else cfg.generator = parse_generator(input.at("generator"));

    if (doc.contains("library")) {
        const auto& lib = doc.at("library");
        cfg.library.kind = get_or<std::string>(lib, "kind", "polynomial");
        cfg.library.degree = get_or<int>(lib, "degree", 2);
        cfg.library.include_constant = get_or<bool>(lib, "constant", true);
        cfg.library.grid_nodes = get_or<int>(lib, "nodes", 0);
        if (lib.contains("restrict_to_node"))
            cfg.library.restrict_to_node = lib.at("restrict_to_node").get<int>();
        if (cfg.library.kind != "polynomial" && cfg.library.kind != "grid" &&
            cfg.library.kind != "grid_per_node")
            throw config_error("unknown library kind '" + cfg.library.kind + "'");
    }

    if (doc.contains("smoothing")) {
        const auto& s = doc.at("smoothing");
        cfg.smoothing.window = get_or<int>(s, "window", cfg.smoothing.window);
        cfg.smoothing.polyorder = get_or<int>(s, "polyorder", cfg.smoothing.polyorder);
        cfg.smoothing.smooth_states = get_or<bool>(s, "smooth_states", false);
        cfg.smoothing.derivative_window = get_or<int>(s, "derivative_window", 0);
    }

    if (doc.contains("algebraic")) {
        const auto& a = doc.at("algebraic");
        if (a.contains("K") && !a.at("K").is_null()) cfg.algebraic.k_known = a.at("K").get<int>();
        if (a.contains("eps")) {
            cfg.algebraic.eps.clear();
            auto parse_eps = [](const nlohmann::ordered_json& e) {
                return e.is_string() ? std::numeric_limits<double>::infinity() : e.get<double>();
            };
            if (a.at("eps").is_array()) {
                for (const auto& e : a.at("eps")) cfg.algebraic.eps.push_back(parse_eps(e));
            } else {
                cfg.algebraic.eps.push_back(parse_eps(a.at("eps")));
            }
        }
        cfg.algebraic.score_floor = get_or<double>(a, "score_floor", cfg.algebraic.score_floor);
        const std::string score = get_or<std::string>(a, "score", "r2");
        if (score == "r2") cfg.algebraic.score_fn = ScoreFunction::R2;
        else if (score == "aic") cfg.algebraic.score_fn = ScoreFunction::NegAic;
        else if (score == "bic") cfg.algebraic.score_fn = ScoreFunction::NegBic;
        else throw config_error("unknown score function '" + score + "'");
        if (a.contains("solver")) cfg.algebraic.sparse = parse_solver(a.at("solver"));
        cfg.algebraic.rank_tol = get_or<double>(a, "rank_tol", cfg.algebraic.rank_tol);
        if (a.contains("targets")) {
            std::vector<Term> targets;
            for (const auto& t : a.at("targets"))
                targets.push_back(term_from_encoding(t.get<std::string>()));
            cfg.algebraic.candidates = std::move(targets);
        }
        if (a.contains("tiebreak")) {
            const auto& t = a.at("tiebreak");
            const std::string policy = get_or<std::string>(t, "policy", "lex_largest");
            if (policy == "lex_largest") cfg.algebraic.tiebreak.kind = TiebreakPolicy::Kind::LexLargest;
            else if (policy == "seeded_random") cfg.algebraic.tiebreak.kind = TiebreakPolicy::Kind::SeededRandom;
            else if (policy == "preference") cfg.algebraic.tiebreak.kind = TiebreakPolicy::Kind::Preference;
            else throw config_error("unknown tiebreak policy '" + policy + "'");
            cfg.algebraic.tiebreak.seed = get_or<std::uint64_t>(t, "seed", 0);
            cfg.algebraic.tiebreak.prefer_eliminating =
                get_or<std::vector<std::string>>(t, "prefer_eliminating", {});
        }
    }

    if (doc.contains("dynamic")) {
        const auto& d = doc.at("dynamic");
        if (d.contains("solver")) cfg.dynamic_solver = parse_solver(d.at("solver"));
        if (d.contains("orders"))
            for (const auto& [state, order] : d.at("orders").items())
                cfg.derivative_orders[state] = order.get<int>();
        cfg.exclude_measured_derivative = get_or<bool>(d, "exclude_measured_derivative", false);
        cfg.prefer_differential = get_or<std::vector<std::string>>(d, "prefer_differential", {});
        if (d.contains("states"))
            cfg.dynamic_states = d.at("states").get<std::vector<std::string>>();
        cfg.metrics_span_tol = get_or<double>(d, "metrics_span_tol", cfg.metrics_span_tol);
    }
    cfg.output_dir = get_or<std::string>(doc, "output", ".");
    return cfg;
}

nlohmann::ordered_json config_schema() {
    nlohmann::ordered_json schema;
    schema["input"] = {{"csv", "path to a CSV table (exclusive with generator)"},
                       {"generator",
                        {{"kind", "crn1|crn2|grid|pendulum_single|pendulum_double"},
                         {"horizon", "simulation horizon (s)"},
                         {"samples", "samples per segment"},
                         {"noise_pct", "relative Gaussian noise (crn/pendulum)"},
                         {"snr_db", "measurement SNR in dB (grid)"},
                         {"seed", "noise seed"},
                         {"crn", "rate constants k1..k6, e1_tot, e2_tot, initial_substrate[]"},
                         {"grid", "n_nodes, generators[], inertia[], damping[], power[], admittance[][], kicks[]"},
                         {"pendulum", "length1/2, mass1/2, damping, gravity, initial_angle1[]/2[]"}}}};
    schema["library"] = {{"kind", "polynomial|grid|grid_per_node"},
                         {"degree", "max monomial degree (polynomial)"},
                         {"constant", "include the constant term"},
                         {"nodes", "node count (grid kinds; 0 = infer)"},
                         {"restrict_to_node", "single-node grid library"}};
    schema["smoothing"] = {{"window", "odd Savitzky-Golay window"},
                           {"polyorder", "polynomial order"},
                           {"smooth_states", "smooth states before library evaluation"}};
    schema["algebraic"] = {{"K", "known number of relations (optional)"},
                           {"eps", "per-iteration ln-condition improvement tolerance(s); \"inf\" allowed"},
                           {"score_floor", "reject iterations whose best score is below this"},
                           {"score", "r2|aic|bic"},
                           {"solver", {{"solver", "lasso_stlsq|stlsq|stols"},
                                       {"alpha", "l1 weight"},
                                       {"threshold", "coefficient cutoff (normalized units)"},
                                       {"max_iter", "outer iterations"},
                                       {"tol", "convergence tolerance"}}},
                           {"tiebreak", {{"policy", "lex_largest|seeded_random|preference"},
                                         {"seed", "rng seed"},
                                         {"prefer_eliminating", "state names, most preferred first"}}},
                           {"rank_tol", "relative singular-value cutoff for the rank estimate"},
                           {"targets", "restrict candidate fits to these terms"}};
    schema["dynamic"] = {{"solver", "as algebraic.solver"},
                         {"orders", "per-state derivative order (default 1)"},
                         {"exclude_measured_derivative", "drop phidot_i from phi_i's regressors"},
                         {"prefer_differential", "states preferred as differential variables"}};
    schema["output"] = "artifact directory";
    schema["sweep"] = {{"alpha", "grid of l1 weights"}, {"threshold", "grid of cutoffs"}};
    return schema;
}

namespace {

TimeSeriesTable generate_table(const GeneratorConfig& gen) {
    if (gen.kind == "crn1" || gen.kind == "crn2") {
        TimeSeriesTable table = simulate_crn(
            gen.crn, gen.kind == "crn1" ? CrnNetwork::Crn1 : CrnNetwork::Crn2, gen.horizon,
            gen.samples);
        if (gen.noise_pct > 0.0) table = inject_noise(table, gen.noise_pct, gen.seed);
        return table;
    }
    if (gen.kind == "grid") return simulate_grid(gen.grid, gen.horizon, gen.samples, gen.snr_db, gen.seed);
    if (gen.kind == "pendulum_single")
        return simulate_pendulum(gen.pendulum, PendulumVariant::Single, gen.horizon, gen.samples,
                                 gen.noise_pct, gen.seed);
    return simulate_pendulum(gen.pendulum, PendulumVariant::Double, gen.horizon, gen.samples,
                             gen.noise_pct, gen.seed);
}

int infer_grid_nodes(const TimeSeriesTable& table) {
    int n = 0;
    for (const auto& name : table.names)
        if (name.rfind("phi_", 0) == 0) ++n;
    if (n < 2) throw config_error("cannot infer grid node count from state names");
    return n;
}

std::vector<Term> eliminated_pivots_of(const std::vector<AlgebraicResult>& runs) {
    std::vector<Term> pivots;
    for (const auto& run : runs)
        for (const auto& step : run.trace) pivots.push_back(step.removed_pivot);
    return pivots;
}

}  // namespace

PipelineOutcome run_pipeline(const PipelineConfig& cfg) {
    PipelineOutcome outcome;
    outcome.data = cfg.generator ? generate_table(*cfg.generator) : load_table_file(*cfg.input_csv);
    const TimeSeriesTable& raw = outcome.data;

    const TimeSeriesTable table =
        cfg.smoothing.smooth_states ? smooth_table(raw, cfg.smoothing.window, cfg.smoothing.polyorder)
                                    : raw;

    // Algebraic step.
    std::vector<AlgebraicRelation> relations;
    CandidateLibrary refined;
    if (cfg.library.kind == "grid_per_node") {
        const int n = cfg.library.grid_nodes > 0 ? cfg.library.grid_nodes : infer_grid_nodes(table);
        for (int node = 1; node <= n; ++node) {
            AlgebraicFinderConfig per_node = cfg.algebraic;
            per_node.k_known = 1;  // one power-balance relation per node
            per_node.candidates = std::vector<Term>{Term::state("Pe_" + std::to_string(node))};
            const CandidateLibrary lib = build_grid_library(n, node);
            // Power balance at a node couples only through the sine terms.
            std::vector<Term> couplings;
            for (const Term& t : lib.terms)
                if (t.atom_count() > 0) couplings.push_back(t);
            per_node.regressors = std::move(couplings);
            AlgebraicResult result = run_algebraic_finder(lib, table, per_node);
            for (const auto& rel : result.relations) relations.push_back(rel);
            outcome.algebraic_runs.push_back(std::move(result));
        }
        // The dynamic step uses powers and frequencies instead of couplings.
        refined = build_polynomial_library(table.names, 1, true);
    } else {
        CandidateLibrary lib0;
        if (cfg.library.kind == "polynomial") {
            lib0 = build_polynomial_library(table.names, cfg.library.degree,
                                            cfg.library.include_constant);
        } else {
            const int n = cfg.library.grid_nodes > 0 ? cfg.library.grid_nodes : infer_grid_nodes(table);
            lib0 = build_grid_library(n, cfg.library.restrict_to_node);
        }
        AlgebraicResult result = run_algebraic_finder(lib0, table, cfg.algebraic);
        relations = result.relations;
        refined = result.refined_library;
        outcome.algebraic_runs.push_back(std::move(result));
    }

    // Roles.
    const VariableRoles roles =
        assign_variable_roles(table.names, relations, eliminated_pivots_of(outcome.algebraic_runs),
                              &table, cfg.prefer_differential);

    // Derivatives.
    const int dwindow =
        cfg.smoothing.derivative_window > 0 ? cfg.smoothing.derivative_window : cfg.smoothing.window;
    DerivativeSet derivatives{derivative_table(table, 1, dwindow, cfg.smoothing.polyorder), {}};
    const bool needs_second = std::any_of(cfg.derivative_orders.begin(), cfg.derivative_orders.end(),
                                          [](const auto& kv) { return kv.second == 2; });
    if (needs_second)
        derivatives.second = derivative_table(table, 2, dwindow, cfg.smoothing.polyorder);

    // Dynamics.
    DynamicsConfig dyn;
    dyn.sparse = cfg.dynamic_solver;
    dyn.derivative_order = cfg.derivative_orders;
    dyn.states = cfg.dynamic_states;
    if (cfg.exclude_measured_derivative) {
        for (const std::string& state : roles.differential) {
            if (state.rfind("phi_", 0) != 0) continue;
            int order = 1;
            if (const auto it = cfg.derivative_orders.find(state); it != cfg.derivative_orders.end())
                order = it->second;
            if (order == 1)
                dyn.exclude[state].push_back(Term::state("phidot_" + state.substr(4)));
        }
    }
    if (cfg.library.kind == "grid_per_node") {
        // The swing/load balance at a node involves only that node's power,
        // phase, and frequency once the couplings are folded into Pe_i.
        for (const std::string& state : roles.differential) {
            if (state.rfind("phi_", 0) != 0) continue;
            const std::string suffix = state.substr(4);
            dyn.restrict_to[state] = {Term::constant(), Term::state("Pe_" + suffix),
                                      Term::state("phi_" + suffix),
                                      Term::state("phidot_" + suffix)};
        }
    }
    const LibraryMatrix refined_mat = evaluate_library(refined, table, true);
    const std::map<std::string, OdeEquation> odes =
        discover_dynamics(refined_mat, derivatives, roles, dyn);

    // Assemble, then refit every coefficient on the fixed supports.
    DiscoveredModel model = assemble_dae(relations, odes, roles, table);
    model = refit_coefficients(model, table, derivatives);
    model = assemble_dae(model.algebraic, model.odes, model.roles, table);
    outcome.model = std::move(model);

    // Recovery metrics when the generator knows the truth.
    if (cfg.generator) {
        if (cfg.generator->kind == "crn1" || cfg.generator->kind == "crn2") {
            outcome.metrics = recovery_metrics(
                outcome.model,
                crn_reference_model(cfg.generator->crn, cfg.generator->kind == "crn1"
                                                            ? CrnNetwork::Crn1
                                                            : CrnNetwork::Crn2),
                cfg.metrics_span_tol);
        } else if (cfg.generator->kind == "grid") {
            outcome.metrics = recovery_metrics(outcome.model, grid_reference_model(cfg.generator->grid),
                                               cfg.metrics_span_tol);
        }
    }
    return outcome;
}

int exit_code_for(const Error& error) {
    if (error.code() == "ConfigError") return 2;
    if (error.module_name() == "timeseries" || error.code() == "FileNotFound" ||
        error.code() == "MissingState")
        return 3;
    return 4;
}

namespace {

nlohmann::ordered_json metrics_to_json(const RecoveryMetrics& metrics) {
    nlohmann::ordered_json doc;
    doc["algebraic_recovery_pct"] = round_for_report(metrics.algebraic_recovery_pct);
    nlohmann::ordered_json supports;
    for (const auto& [state, exact] : metrics.ode_support_exact) supports[state] = exact;
    doc["ode_support_exact"] = std::move(supports);
    doc["coefficient_max_rel_err"] = round_for_report(metrics.coefficient_max_rel_err);
    return doc;
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path);
    if (!out) throw Error("cli", "run_pipeline", "OutputError", "cannot write " + path.string());
    out << contents;
}

}  // namespace

int run_pipeline_to_dir(const nlohmann::ordered_json& config_doc, const std::string& out_dir,
                        std::ostream& log) {
    PipelineConfig cfg;
    try {
        cfg = parse_config(config_doc);
    } catch (const Error& e) {
        log << "error: " << e.what() << "\n";
        return 2;
    } catch (const nlohmann::json::exception& e) {
        log << "error: [cli.parse_config] ConfigError: " << e.what() << "\n";
        return 2;
    }

    try {
        const PipelineOutcome outcome = run_pipeline(cfg);
        std::filesystem::create_directories(out_dir);
        const std::filesystem::path dir(out_dir);

        write_text_file(dir / "model.json", dump_json(model_to_json(outcome.model)));

        nlohmann::ordered_json trace;
        if (outcome.algebraic_runs.size() == 1) {
            trace = trace_to_json(outcome.algebraic_runs.front());
        } else {
            nlohmann::ordered_json runs = nlohmann::ordered_json::array();
            for (const auto& run : outcome.algebraic_runs) runs.push_back(trace_to_json(run));
            trace["runs"] = std::move(runs);
        }
        write_text_file(dir / "trace.json", dump_json(trace));
        write_text_file(dir / "equations.txt", text_report(outcome.model));
        if (outcome.metrics)
            write_text_file(dir / "metrics.json", dump_json(metrics_to_json(*outcome.metrics)));

        log << "wrote " << (dir / "model.json").string() << "\n";
        for (const auto& run : outcome.algebraic_runs) {
            if (!run.warning.empty()) {
                log << "warning: " << run.warning << "\n";
                if (cfg.algebraic.k_known || cfg.library.kind == "grid_per_node") return 5;
            }
        }
        return 0;
    } catch (const Error& e) {
        log << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

int run_sweep(const nlohmann::ordered_json& config_doc, const std::string& out_dir,
              std::ostream& log) {
    if (!config_doc.contains("sweep")) {
        log << "error: [cli.run_sweep] ConfigError: config has no 'sweep' block\n";
        return 2;
    }
    const auto& sweep = config_doc.at("sweep");
    const std::vector<double> alphas = sweep.contains("alpha")
                                           ? sweep.at("alpha").get<std::vector<double>>()
                                           : std::vector<double>{-1.0};
    const std::vector<double> thresholds = sweep.contains("threshold")
                                               ? sweep.at("threshold").get<std::vector<double>>()
                                               : std::vector<double>{-1.0};

    nlohmann::ordered_json summary = nlohmann::ordered_json::array();
    int worst = 0;
    int run_id = 0;
    for (double alpha : alphas) {
        for (double threshold : thresholds) {
            nlohmann::ordered_json doc = config_doc;
            doc.erase("sweep");
            if (!doc.contains("algebraic")) doc["algebraic"] = nlohmann::ordered_json::object();
            if (!doc["algebraic"].contains("solver"))
                doc["algebraic"]["solver"] = nlohmann::ordered_json::object();
            if (alpha >= 0.0) doc["algebraic"]["solver"]["alpha"] = alpha;
            if (threshold >= 0.0) doc["algebraic"]["solver"]["threshold"] = threshold;

            const std::string run_dir = out_dir + "/sweep_" + std::to_string(run_id);
            const int code = run_pipeline_to_dir(doc, run_dir, log);
            worst = std::max(worst, code);

            nlohmann::ordered_json row;
            row["run"] = run_id;
            if (alpha >= 0.0) row["alpha"] = alpha;
            if (threshold >= 0.0) row["threshold"] = threshold;
            row["exit_code"] = code;
            if (code == 0 || code == 5) {
                std::ifstream in(run_dir + "/trace.json");
                if (in) {
                    const auto trace = nlohmann::ordered_json::parse(in);
                    if (trace.contains("steps")) {
                        row["relations"] = trace.at("steps").size();
                        row["stop_reason"] = trace.at("stop_reason");
                        if (!trace.at("steps").empty()) {
                            row["final_log_condition"] =
                                trace.at("steps").back().at("svd_after").at("log_condition");
                        }
                    }
                }
            }
            summary.push_back(std::move(row));
            ++run_id;
        }
    }
    std::filesystem::create_directories(out_dir);
    write_text_file(std::filesystem::path(out_dir) / "sweep_summary.json", dump_json(summary));
    log << "wrote " << out_dir << "/sweep_summary.json\n";
    return worst;
}

}  // namespace sparsedae
