#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sparsedae/dynfinder.hpp"
#include "sparsedae/termlib.hpp"
#include "sparsedae/timeseries.hpp"

namespace sparsedae {

enum class CrnNetwork { Crn1, Crn2 };

/// Enzyme-mediated reaction chain parameters. The single reaction uses
/// k1..k3 and enzyme total e1_tot; the two-enzyme chain adds k4..k6 and
/// e2_tot. Each entry of initial_substrate starts one trajectory segment.
struct CrnSpec {
    double k1 = 1.2, k2 = 0.6, k3 = 0.35;
    double e1_tot = 1.0;
    double k4 = 0.9, k5 = 0.4, k6 = 0.5;
    double e2_tot = 0.8;
    std::vector<double> initial_substrate = {2.0, 4.0, 6.0, 8.0, 10.0};

    void validate() const;
};

/// Integrate the reduced (quasi-steady-state) kinetics and back-substitute
/// the enzyme and complex concentrations, so the conservation and
/// quasi-steady-state relations hold to rounding on every sample.
/// Columns: crn1 -> [A],[B],[E1],[AE1]; crn2 adds [C],[E2],[BE2].
TimeSeriesTable simulate_crn(const CrnSpec& spec, CrnNetwork network, double horizon, int samples);

/// Swing-equation network specification. Nodes are 1-based in column names;
/// `generators` lists the swing (second-order) nodes, the rest follow the
/// first-order load model. `admittance` holds the coupling magnitudes
/// |V_i V_j Y_ij| (symmetric, zero diagonal).
struct GridSpec {
    int n_nodes = 0;
    std::vector<int> generators;          // 0-based node indices
    std::vector<double> inertia;          // H_i, per generator node (0 elsewhere)
    std::vector<double> damping;          // D_i, all nodes
    double omega_ref = 2.0 * 3.14159265358979323846 * 60.0;
    std::vector<double> power;            // P_m,i (>0 generators) / P_l,i (<0 loads)
    std::vector<std::vector<double>> admittance;
    struct Kick {
        double time;
        int node;      // 0-based
        double dphi;
    };
    std::vector<Kick> kicks;

    void validate() const;
};

/// Integrate the swing/load dynamics from the synchronized steady state,
/// applying scheduled phase kicks. Emits phi_i, phidot_i and Pe_i columns;
/// optional additive Gaussian measurement noise at the given SNR.
TimeSeriesTable simulate_grid(const GridSpec& spec, double horizon, int samples,
                              std::optional<double> snr_db = {}, std::uint64_t seed = 0);

/// The synchronized steady-state phases (reference node pinned at zero).
std::vector<double> grid_steady_state(const GridSpec& spec);

enum class PendulumVariant { Single, Double };

struct PendulumSpec {
    double length1 = 1.0;
    double length2 = 1.0;
    double mass1 = 1.0;
    double mass2 = 1.0;
    double damping = 0.0;
    double gravity = 9.81;
    std::vector<double> initial_angle1 = {2.2};
    std::vector<double> initial_angle2 = {-1.1};  // double pendulum only
    double initial_velocity1 = 0.0;
    double initial_velocity2 = 0.0;

    void validate() const;
};

/// Integrate the angular dynamics and emit Cartesian coordinates:
/// single -> x,y; double -> x1,y1,x2,y2. One segment per initial angle.
TimeSeriesTable simulate_pendulum(const PendulumSpec& spec, PendulumVariant variant,
                                  double horizon, int samples, double noise_pct = 0.0,
                                  std::uint64_t seed = 0);

/// Reference model (true algebraic relations + ODE coefficient maps) for a
/// generated benchmark, used as the recovery oracle.
struct ReferenceModel {
    std::vector<AlgebraicRelation> relations;
    std::map<std::string, OdeEquation> odes;
};

ReferenceModel crn_reference_model(const CrnSpec& spec, CrnNetwork network);
ReferenceModel grid_reference_model(const GridSpec& spec);

struct RecoveryMetrics {
    double algebraic_recovery_pct = 0.0;       // fraction of true relations span-matched
    std::map<std::string, bool> ode_support_exact;
    double coefficient_max_rel_err = 0.0;      // over ODEs with exact support
};

/// Span-match each true relation against the discovered set (coefficient
/// vectors over the union term universe, tolerance on the normalized
/// projection residual); compare ODE supports exactly.
RecoveryMetrics recovery_metrics(const DiscoveredModel& model, const ReferenceModel& truth,
                                 double span_tol = 1e-6);

/// Rewrite a coefficient vector modulo the true relations so that its
/// support lies inside `available` (the refined library). Multiplier terms
/// are drawn from the full library the relations were discovered in. Returns
/// nothing when the target is not reducible onto the available terms.
std::optional<std::map<Term, double>> reduce_modulo_relations(
    const std::map<Term, double>& coefficients, const std::vector<AlgebraicRelation>& relations,
    const CandidateLibrary& full_library, const CandidateLibrary& available);

}  // namespace sparsedae
