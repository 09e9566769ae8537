#include "sparsedae/benchgen.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>

#include "sparsedae/errors.hpp"
#include "sparsedae/integrate.hpp"

namespace sparsedae {

namespace {

const char* kModule = "benchgen";

Error err(const std::string& op, const std::string& code, const std::string& msg) {
    return Error(kModule, op, code, msg);
}

std::vector<double> sample_times(double horizon, int samples) {
    std::vector<double> times(samples);
    for (int i = 0; i < samples; ++i)
        times[i] = horizon * static_cast<double>(i) / static_cast<double>(samples - 1);
    return times;
}

}  // namespace

void CrnSpec::validate() const {
    const std::string op = "simulate_crn";
    for (double k : {k1, k2, k3, k4, k5, k6})
        if (!(k > 0.0)) throw err(op, "BadRate", "rate constants must be positive");
    if (!(e1_tot > 0.0) || !(e2_tot > 0.0))
        throw err(op, "BadTotal", "enzyme totals must be positive");
    if (initial_substrate.empty())
        throw err(op, "BadInitialCondition", "need at least one initial substrate concentration");
    for (double a0 : initial_substrate)
        if (a0 < 0.0) throw err(op, "BadInitialCondition", "initial concentrations must be >= 0");
}

TimeSeriesTable simulate_crn(const CrnSpec& spec, CrnNetwork network, double horizon,
                             int samples) {
    const std::string op = "simulate_crn";
    spec.validate();
    if (samples < 10) throw err(op, "TooFewSamples", "need at least 10 samples");
    if (!(horizon > 0.0)) throw err(op, "BadHorizon", "horizon must be positive");

    // Quasi-steady-state complex concentration for an irreversible
    // enzyme-mediated step with substrate s.
    const auto complex1 = [&](double s) { return spec.k1 * spec.e1_tot * s / (spec.k2 + spec.k3 + spec.k1 * s); };
    const auto complex2 = [&](double s) { return spec.k4 * spec.e2_tot * s / (spec.k5 + spec.k6 + spec.k4 * s); };

    TimeSeriesTable table;
    table.names = network == CrnNetwork::Crn1
                      ? std::vector<std::string>{"[A]", "[B]", "[E1]", "[AE1]"}
                      : std::vector<std::string>{"[A]", "[B]", "[C]", "[E1]", "[AE1]", "[E2]", "[BE2]"};

    const std::vector<double> times = sample_times(horizon, samples);
    const int n_segments = static_cast<int>(spec.initial_substrate.size());
    table.values.resize(static_cast<Eigen::Index>(samples) * n_segments,
                        static_cast<Eigen::Index>(table.names.size()));
    table.times.reserve(table.values.rows());
    table.segment_ids.reserve(table.values.rows());

    Eigen::Index row = 0;
    for (int seg = 0; seg < n_segments; ++seg) {
        const double a0 = spec.initial_substrate[seg];
        if (network == CrnNetwork::Crn1) {
            AdaptiveRk45 rk(
                [&](double, const Eigen::VectorXd& y) {
                    Eigen::VectorXd d(1);
                    d(0) = -spec.k3 * complex1(y(0));
                    return d;
                },
                1e-9);
            Eigen::VectorXd y(1);
            y(0) = a0;
            double t = 0.0;
            for (int i = 0; i < samples; ++i) {
                rk.integrate_to(y, t, times[i]);
                t = times[i];
                const double a = y(0);
                const double ae1 = complex1(a);
                table.values(row, 0) = a;
                table.values(row, 1) = a0 - a;             // product, B(0) = 0
                table.values(row, 2) = spec.e1_tot - ae1;  // free enzyme
                table.values(row, 3) = ae1;
                table.times.push_back(times[i]);
                table.segment_ids.push_back(seg);
                ++row;
            }
        } else {
            AdaptiveRk45 rk(
                [&](double, const Eigen::VectorXd& y) {
                    Eigen::VectorXd d(2);
                    d(0) = -spec.k3 * complex1(y(0));
                    d(1) = spec.k3 * complex1(y(0)) - spec.k6 * complex2(y(1));
                    return d;
                },
                1e-9);
            Eigen::VectorXd y(2);
            y << a0, 0.0;
            double t = 0.0;
            for (int i = 0; i < samples; ++i) {
                rk.integrate_to(y, t, times[i]);
                t = times[i];
                const double a = y(0), b = y(1);
                const double ae1 = complex1(a);
                const double be2 = complex2(b);
                table.values(row, 0) = a;
                table.values(row, 1) = b;
                table.values(row, 2) = a0 - a - b;  // final product, C(0) = 0
                table.values(row, 3) = spec.e1_tot - ae1;
                table.values(row, 4) = ae1;
                table.values(row, 5) = spec.e2_tot - be2;
                table.values(row, 6) = be2;
                table.times.push_back(times[i]);
                table.segment_ids.push_back(seg);
                ++row;
            }
        }
    }
    table.validate(op);
    return table;
}

void GridSpec::validate() const {
    const std::string op = "simulate_grid";
    if (n_nodes < 2) throw err(op, "BadNodeCount", "need at least 2 nodes");
    const auto n = static_cast<std::size_t>(n_nodes);
    if (damping.size() != n || power.size() != n || inertia.size() != n ||
        admittance.size() != n)
        throw err(op, "ShapeMismatch", "per-node parameter lengths must equal n_nodes");
    for (const auto& row : admittance)
        if (row.size() != n) throw err(op, "ShapeMismatch", "admittance must be n x n");
    for (int i = 0; i < n_nodes; ++i) {
        if (std::abs(admittance[i][i]) > 0.0)
            throw err(op, "BadAdmittance", "admittance diagonal must be zero");
        for (int j = 0; j < n_nodes; ++j)
            if (std::abs(admittance[i][j] - admittance[j][i]) > 1e-12)
                throw err(op, "BadAdmittance", "admittance must be symmetric");
        if (!(damping[i] > 0.0)) throw err(op, "BadDamping", "damping must be positive");
    }
    for (int g : generators) {
        if (g < 0 || g >= n_nodes) throw err(op, "BadNodeIndex", "generator index out of range");
        if (!(inertia[g] > 0.0)) throw err(op, "BadInertia", "generator inertia must be positive");
    }
    double balance = 0.0;
    for (double p : power) balance += p;
    if (std::abs(balance) > 1e-9)
        throw err(op, "UnbalancedPower", "injected powers must sum to zero at steady state");
    for (const Kick& kick : kicks)
        if (kick.node < 0 || kick.node >= n_nodes)
            throw err(op, "BadNodeIndex", "kick node out of range");
}

namespace {

Eigen::VectorXd electrical_power(const GridSpec& spec, const Eigen::VectorXd& phi) {
    const int n = spec.n_nodes;
    Eigen::VectorXd pe = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (j != i) pe(i) += spec.admittance[i][j] * std::sin(phi(i) - phi(j));
    return pe;
}

}  // namespace

std::vector<double> grid_steady_state(const GridSpec& spec) {
    const std::string op = "grid_steady_state";
    const int n = spec.n_nodes;
    Eigen::VectorXd phi = Eigen::VectorXd::Zero(n);  // node 0 is the reference

    for (int iter = 0; iter < 100; ++iter) {
        const Eigen::VectorXd pe = electrical_power(spec, phi);
        Eigen::VectorXd f(n - 1);
        for (int i = 1; i < n; ++i) f(i - 1) = spec.power[i] - pe(i);
        if (f.cwiseAbs().maxCoeff() < 1e-12) {
            std::vector<double> out(phi.data(), phi.data() + n);
            return out;
        }
        Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n - 1, n - 1);
        for (int i = 1; i < n; ++i) {
            double diag = 0.0;
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                const double c = spec.admittance[i][j] * std::cos(phi(i) - phi(j));
                diag += c;
                if (j >= 1) jac(i - 1, j - 1) += c;  // d(-Pe_i)/dphi_j = +K cos
            }
            jac(i - 1, i - 1) -= diag;  // d(-Pe_i)/dphi_i
        }
        const Eigen::VectorXd delta = jac.fullPivLu().solve(-f);
        for (int i = 1; i < n; ++i) phi(i) += delta(i - 1);
        if (!phi.allFinite()) break;
    }
    throw err(op, "NoSteadyState", "power-flow Newton iteration did not converge");
}

TimeSeriesTable simulate_grid(const GridSpec& spec, double horizon, int samples,
                              std::optional<double> snr_db, std::uint64_t seed) {
    const std::string op = "simulate_grid";
    spec.validate();
    if (samples < 10) throw err(op, "TooFewSamples", "need at least 10 samples");
    if (!(horizon > 0.0)) throw err(op, "BadHorizon", "horizon must be positive");

    const int n = spec.n_nodes;
    std::vector<bool> is_gen(n, false);
    for (int g : spec.generators) is_gen[g] = true;
    std::vector<int> gen_slot(n, -1);
    int n_gen = 0;
    for (int i = 0; i < n; ++i)
        if (is_gen[i]) gen_slot[i] = n_gen++;

    // State: phases for all nodes, then frequencies for generator nodes.
    const auto rhs = [&](double, const Eigen::VectorXd& y) {
        Eigen::VectorXd phi = y.head(n);
        Eigen::VectorXd d(y.size());
        const Eigen::VectorXd pe = electrical_power(spec, phi);
        for (int i = 0; i < n; ++i) {
            if (is_gen[i]) {
                const double omega = y(n + gen_slot[i]);
                d(i) = omega;
                d(n + gen_slot[i]) = spec.omega_ref / (2.0 * spec.inertia[i]) *
                                         (spec.power[i] - pe(i)) -
                                     spec.damping[i] / (2.0 * spec.inertia[i]) * omega;
            } else {
                d(i) = spec.omega_ref / spec.damping[i] * (spec.power[i] - pe(i));
            }
        }
        return d;
    };

    const std::vector<double> steady = grid_steady_state(spec);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n + n_gen);
    for (int i = 0; i < n; ++i) y(i) = steady[i];

    std::vector<GridSpec::Kick> kicks = spec.kicks;
    std::sort(kicks.begin(), kicks.end(),
              [](const GridSpec::Kick& a, const GridSpec::Kick& b) { return a.time < b.time; });
    std::size_t next_kick = 0;

    TimeSeriesTable table;
    for (int i = 1; i <= n; ++i) table.names.push_back("phi_" + std::to_string(i));
    for (int i = 1; i <= n; ++i) table.names.push_back("phidot_" + std::to_string(i));
    for (int i = 1; i <= n; ++i) table.names.push_back("Pe_" + std::to_string(i));
    table.values.resize(samples, 3 * n);
    table.times = sample_times(horizon, samples);
    table.segment_ids.assign(samples, 0);

    AdaptiveRk45 rk(rhs, 1e-9);
    double t = 0.0;
    constexpr double kSyncLimit = 1e4;
    Eigen::Index emitted = 0;
    std::int64_t segment = 0;
    for (int s = 0; s < samples; ++s) {
        const double target = table.times[s];
        while (next_kick < kicks.size() && kicks[next_kick].time <= target) {
            rk.integrate_to(y, t, kicks[next_kick].time);
            t = kicks[next_kick].time;
            y(kicks[next_kick].node) += kicks[next_kick].dphi;
            ++next_kick;
            ++segment;  // a kick is a discontinuity: start a new segment
        }
        rk.integrate_to(y, t, target);
        t = target;
        table.segment_ids[s] = segment;

        const Eigen::VectorXd phi = y.head(n);
        const Eigen::VectorXd pe = electrical_power(spec, phi);
        const Eigen::VectorXd rates = rhs(t, y);
        if (rates.head(n).cwiseAbs().maxCoeff() > kSyncLimit) break;  // loss of synchrony

        for (int i = 0; i < n; ++i) {
            table.values(emitted, i) = phi(i);
            table.values(emitted, n + i) = rates(i);
            table.values(emitted, 2 * n + i) = pe(i);
        }
        ++emitted;
    }
    if (emitted < 10)
        throw err(op, "LossOfSynchrony", "trajectory diverged before 10 samples");
    if (emitted < samples) {
        table.values.conservativeResize(emitted, Eigen::NoChange);
        table.times.resize(emitted);
        table.segment_ids.resize(emitted);
    }
    table.validate(op);

    if (snr_db) {
        const double pct = std::pow(10.0, -*snr_db / 20.0);
        table = inject_noise(table, pct, seed);
    }
    return table;
}

void PendulumSpec::validate() const {
    const std::string op = "simulate_pendulum";
    if (!(length1 > 0.0) || !(length2 > 0.0)) throw err(op, "BadLength", "lengths must be positive");
    if (!(mass1 > 0.0) || !(mass2 > 0.0)) throw err(op, "BadMass", "masses must be positive");
    if (!(gravity > 0.0)) throw err(op, "BadGravity", "gravity must be positive");
    if (damping < 0.0) throw err(op, "BadDamping", "damping must be >= 0");
    if (initial_angle1.empty()) throw err(op, "BadInitialCondition", "need at least one initial angle");
}

TimeSeriesTable simulate_pendulum(const PendulumSpec& spec, PendulumVariant variant,
                                  double horizon, int samples, double noise_pct,
                                  std::uint64_t seed) {
    const std::string op = "simulate_pendulum";
    spec.validate();
    if (samples < 10) throw err(op, "TooFewSamples", "need at least 10 samples");
    if (!(horizon > 0.0)) throw err(op, "BadHorizon", "horizon must be positive");

    const std::vector<double> times = sample_times(horizon, samples);
    TimeSeriesTable table;

    if (variant == PendulumVariant::Single) {
        table.names = {"x", "y"};
        const int n_segments = static_cast<int>(spec.initial_angle1.size());
        table.values.resize(static_cast<Eigen::Index>(samples) * n_segments, 2);
        Eigen::Index row = 0;
        for (int seg = 0; seg < n_segments; ++seg) {
            AdaptiveRk45 rk(
                [&](double, const Eigen::VectorXd& y) {
                    Eigen::VectorXd d(2);
                    d(0) = y(1);
                    d(1) = -spec.damping / spec.mass1 * y(1) -
                           spec.gravity / spec.length1 * std::sin(y(0));
                    return d;
                },
                1e-9);
            Eigen::VectorXd y(2);
            y << spec.initial_angle1[seg], spec.initial_velocity1;
            double t = 0.0;
            for (int i = 0; i < samples; ++i) {
                rk.integrate_to(y, t, times[i]);
                t = times[i];
                table.values(row, 0) = spec.length1 * std::sin(y(0));
                table.values(row, 1) = -spec.length1 * std::cos(y(0));
                table.times.push_back(times[i]);
                table.segment_ids.push_back(seg);
                ++row;
            }
        }
    } else {
        if (spec.initial_angle2.size() != spec.initial_angle1.size())
            throw err(op, "BadInitialCondition", "need matching initial angles for both arms");
        table.names = {"x1", "y1", "x2", "y2"};
        const int n_segments = static_cast<int>(spec.initial_angle1.size());
        table.values.resize(static_cast<Eigen::Index>(samples) * n_segments, 4);
        const double mu = 1.0 + spec.mass1 / spec.mass2;
        const double g = spec.gravity, l1 = spec.length1, l2 = spec.length2;
        Eigen::Index row = 0;
        for (int seg = 0; seg < n_segments; ++seg) {
            AdaptiveRk45 rk(
                [&](double, const Eigen::VectorXd& y) {
                    const double w1 = y(0), w2 = y(1), v1 = y(2), v2 = y(3);
                    const double delta = w1 - w2;
                    const double cd = std::cos(delta), sd = std::sin(delta);
                    const double denom = mu - cd * cd;
                    Eigen::VectorXd d(4);
                    d(0) = v1;
                    d(1) = v2;
                    d(2) = (g * (std::sin(w2) * cd - mu * std::sin(w1)) -
                            (l2 * v2 * v2 + l1 * v1 * v1 * cd) * sd) /
                           (l1 * denom);
                    d(3) = (g * mu * (std::sin(w1) * cd - std::sin(w2)) +
                            (mu * l1 * v1 * v1 + l2 * v2 * v2 * cd) * sd) /
                           (l2 * denom);
                    return d;
                },
                1e-9);
            Eigen::VectorXd y(4);
            y << spec.initial_angle1[seg], spec.initial_angle2[seg], spec.initial_velocity1,
                spec.initial_velocity2;
            double t = 0.0;
            for (int i = 0; i < samples; ++i) {
                rk.integrate_to(y, t, times[i]);
                t = times[i];
                const double x1 = l1 * std::sin(y(0));
                const double y1 = -l1 * std::cos(y(0));
                table.values(row, 0) = x1;
                table.values(row, 1) = y1;
                table.values(row, 2) = x1 + l2 * std::sin(y(1));
                table.values(row, 3) = y1 - l2 * std::cos(y(1));
                table.times.push_back(times[i]);
                table.segment_ids.push_back(seg);
                ++row;
            }
        }
    }
    table.validate(op);
    if (noise_pct > 0.0) table = inject_noise(table, noise_pct, seed);
    return table;
}

ReferenceModel crn_reference_model(const CrnSpec& spec, CrnNetwork network) {
    ReferenceModel truth;

    auto conservation = [](const std::string& enzyme, const std::string& complex, double total) {
        AlgebraicRelation rel;
        rel.coefficients[Term::state(enzyme)] = 1.0;
        rel.coefficients[Term::state(complex)] = 1.0;
        rel.coefficients[Term::constant()] = -total;
        rel.pivot = Term::state(enzyme);
        return rel;
    };
    auto quasi_steady = [](const std::string& substrate, const std::string& enzyme,
                           const std::string& complex, double k_on, double k_off_sum) {
        AlgebraicRelation rel;
        rel.coefficients[Term::state(substrate) * Term::state(enzyme)] = k_on;
        rel.coefficients[Term::state(complex)] = -k_off_sum;
        rel.pivot = Term::state(substrate) * Term::state(enzyme);
        return rel;
    };

    truth.relations.push_back(conservation("[E1]", "[AE1]", spec.e1_tot));
    truth.relations.push_back(quasi_steady("[A]", "[E1]", "[AE1]", spec.k1, spec.k2 + spec.k3));

    OdeEquation da;
    da.coefficients[Term::state("[A]") * Term::state("[E1]")] = -spec.k1;
    da.coefficients[Term::state("[AE1]")] = spec.k2;
    truth.odes["[A]"] = da;
    OdeEquation db;
    db.coefficients[Term::state("[AE1]")] = spec.k3;
    truth.odes["[B]"] = db;

    if (network == CrnNetwork::Crn2) {
        truth.relations.push_back(conservation("[E2]", "[BE2]", spec.e2_tot));
        truth.relations.push_back(
            quasi_steady("[B]", "[E2]", "[BE2]", spec.k4, spec.k5 + spec.k6));
        OdeEquation db2;
        db2.coefficients[Term::state("[AE1]")] = spec.k3;
        db2.coefficients[Term::state("[B]") * Term::state("[E2]")] = -spec.k4;
        db2.coefficients[Term::state("[BE2]")] = spec.k5;
        truth.odes["[B]"] = db2;
        OdeEquation dc;
        dc.coefficients[Term::state("[BE2]")] = spec.k6;
        truth.odes["[C]"] = dc;
    }
    return truth;
}

ReferenceModel grid_reference_model(const GridSpec& spec) {
    ReferenceModel truth;
    const int n = spec.n_nodes;
    auto phi = [](int i) { return "phi_" + std::to_string(i + 1); };

    for (int i = 0; i < n; ++i) {
        AlgebraicRelation rel;
        rel.pivot = Term::state("Pe_" + std::to_string(i + 1));
        rel.coefficients[rel.pivot] = -1.0;
        for (int j = 0; j < n; ++j)
            if (j != i && spec.admittance[i][j] != 0.0)
                rel.coefficients[Term::sin_diff(phi(i), phi(j))] = spec.admittance[i][j];
        truth.relations.push_back(rel);
    }

    std::vector<bool> is_gen(n, false);
    for (int g : spec.generators) is_gen[g] = true;
    for (int i = 0; i < n; ++i) {
        OdeEquation eq;
        const std::string pe = "Pe_" + std::to_string(i + 1);
        if (is_gen[i]) {
            eq.order = 2;
            eq.coefficients[Term::constant()] =
                spec.omega_ref * spec.power[i] / (2.0 * spec.inertia[i]);
            eq.coefficients[Term::state(pe)] = -spec.omega_ref / (2.0 * spec.inertia[i]);
            eq.coefficients[Term::state("phidot_" + std::to_string(i + 1))] =
                -spec.damping[i] / (2.0 * spec.inertia[i]);
        } else {
            eq.order = 1;
            eq.coefficients[Term::constant()] = spec.omega_ref * spec.power[i] / spec.damping[i];
            eq.coefficients[Term::state(pe)] = -spec.omega_ref / spec.damping[i];
        }
        truth.odes[phi(i)] = eq;
    }
    return truth;
}

RecoveryMetrics recovery_metrics(const DiscoveredModel& model, const ReferenceModel& truth,
                                 double span_tol) {
    const std::string op = "recovery_metrics";

    // Shared term universe for the relation vectors.
    CandidateLibrary universe;
    auto add_terms = [&](const AlgebraicRelation& rel) {
        for (const Term& t : rel.support())
            if (!universe.contains(t)) universe.terms.push_back(t);
    };
    for (const auto& rel : truth.relations) add_terms(rel);
    for (const auto& rel : model.algebraic) add_terms(rel);

    for (const auto& [state, eq] : truth.odes)
        if (std::find(model.states.begin(), model.states.end(), state) == model.states.end())
            throw err(op, "IncomparableStates", "truth state '" + state + "' unknown to model");

    RecoveryMetrics metrics;
    const auto dim = static_cast<Eigen::Index>(universe.size());

    auto as_vector = [&](const AlgebraicRelation& rel) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
        for (const auto& [term, coeff] : rel.coefficients)
            if (coeff != 0.0) v(universe.index_of(term)) = coeff;
        return v;
    };

    int matched = 0;
    if (!truth.relations.empty()) {
        if (!model.algebraic.empty()) {
            Eigen::MatrixXd discovered(dim, static_cast<Eigen::Index>(model.algebraic.size()));
            for (std::size_t i = 0; i < model.algebraic.size(); ++i) {
                Eigen::VectorXd v = as_vector(model.algebraic[i]);
                discovered.col(static_cast<Eigen::Index>(i)) = v.normalized();
            }
            for (const auto& rel : truth.relations) {
                const Eigen::VectorXd v = as_vector(rel).normalized();
                const Eigen::VectorXd beta =
                    discovered.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(v);
                if ((v - discovered * beta).norm() <= span_tol) ++matched;
            }
        }
        metrics.algebraic_recovery_pct =
            100.0 * static_cast<double>(matched) / static_cast<double>(truth.relations.size());
    } else {
        metrics.algebraic_recovery_pct = 100.0;
    }

    double max_rel_err = 0.0;
    for (const auto& [state, true_eq] : truth.odes) {
        const auto it = model.odes.find(state);
        if (it == model.odes.end()) {
            metrics.ode_support_exact[state] = false;
            continue;
        }
        std::set<std::string> true_support, got_support;
        for (const auto& [t, c] : true_eq.coefficients)
            if (c != 0.0) true_support.insert(t.encoding());
        for (const auto& [t, c] : it->second.coefficients)
            if (c != 0.0) got_support.insert(t.encoding());
        const bool exact = true_support == got_support && it->second.order == true_eq.order;
        metrics.ode_support_exact[state] = exact;
        if (exact) {
            for (const auto& [t, c] : true_eq.coefficients) {
                const double got = it->second.coefficients.at(t);
                max_rel_err = std::max(max_rel_err,
                                       std::abs(got - c) / std::max(std::abs(c), 1e-12));
            }
        }
    }
    metrics.coefficient_max_rel_err = max_rel_err;
    return metrics;
}

std::optional<std::map<Term, double>> reduce_modulo_relations(
    const std::map<Term, double>& coefficients, const std::vector<AlgebraicRelation>& relations,
    const CandidateLibrary& full_library, const CandidateLibrary& available) {
    // Coordinates live in the full library; collect the rows that must be
    // eliminated (terms no longer available).
    std::vector<int> removed_rows;
    for (std::size_t j = 0; j < full_library.size(); ++j)
        if (!available.contains(full_library.terms[j])) removed_rows.push_back(static_cast<int>(j));

    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(full_library.size()));
    for (const auto& [term, coeff] : coefficients) {
        const int idx = full_library.index_of(term);
        if (idx < 0) return std::nullopt;
        v(idx) = coeff;
    }

    // Columns: every multiple m * g of a relation g whose support stays
    // inside the full library.
    std::vector<Eigen::VectorXd> columns;
    for (const auto& rel : relations) {
        for (const Term& multiplier : full_library.terms) {
            Eigen::VectorXd col = Eigen::VectorXd::Zero(v.size());
            bool valid = true;
            for (const auto& [term, coeff] : rel.coefficients) {
                if (coeff == 0.0) continue;
                const int idx = full_library.index_of(multiplier * term);
                if (idx < 0) {
                    valid = false;
                    break;
                }
                col(idx) += coeff;
            }
            if (valid && col.squaredNorm() > 0.0) columns.push_back(col);
        }
    }
    if (removed_rows.empty()) {
        std::map<Term, double> out;
        for (Eigen::Index j = 0; j < v.size(); ++j)
            if (v(j) != 0.0) out[full_library.terms[j]] = v(j);
        return out;
    }
    if (columns.empty()) return std::nullopt;

    Eigen::MatrixXd m_removed(static_cast<Eigen::Index>(removed_rows.size()),
                              static_cast<Eigen::Index>(columns.size()));
    Eigen::VectorXd v_removed(static_cast<Eigen::Index>(removed_rows.size()));
    for (std::size_t r = 0; r < removed_rows.size(); ++r) {
        v_removed(static_cast<Eigen::Index>(r)) = v(removed_rows[r]);
        for (std::size_t c = 0; c < columns.size(); ++c)
            m_removed(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                columns[c](removed_rows[r]);
    }
    const Eigen::VectorXd beta =
        m_removed.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(v_removed);
    if ((m_removed * beta - v_removed).cwiseAbs().maxCoeff() >
        1e-9 * std::max(1.0, v.cwiseAbs().maxCoeff()))
        return std::nullopt;  // not reducible onto the available terms

    Eigen::VectorXd reduced = v;
    for (std::size_t c = 0; c < columns.size(); ++c) reduced -= beta(static_cast<Eigen::Index>(c)) * columns[c];

    const double scale = std::max(1.0, reduced.cwiseAbs().maxCoeff());
    std::map<Term, double> out;
    for (Eigen::Index j = 0; j < reduced.size(); ++j) {
        if (std::abs(reduced(j)) <= 1e-9 * scale) continue;
        if (!available.contains(full_library.terms[j])) return std::nullopt;
        out[full_library.terms[j]] = reduced(j);
    }
    return out;
}

}  // namespace sparsedae
