#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sparsedae/algfinder.hpp"
#include "sparsedae/sparsereg.hpp"
#include "sparsedae/termlib.hpp"
#include "sparsedae/timeseries.hpp"

namespace sparsedae {

enum class RoleRationale { NoRelationMembership, UserPreference, PivotElimination, DynamicRange };

/// Partition of the states into differential (governed by an ODE) and
/// algebraic (determined by the discovered relations) variables.
struct VariableRoles {
    std::vector<std::string> differential;
    std::vector<std::string> algebraic;
    std::map<std::string, RoleRationale> rationale;

    bool is_algebraic(const std::string& name) const;
};

/// One discovered differential equation: d^order(state)/dt^order as a sparse
/// combination of library terms. `discovered` is false when the sparse fit
/// found no usable support (reported, not fatal).
struct OdeEquation {
    int order = 1;
    std::map<Term, double> coefficients;  // unnormalized units
    double score = 0.0;
    bool discovered = true;
    bool rank_deficient_refit = false;
};

struct DiscoveredModel {
    std::vector<std::string> states;
    VariableRoles roles;
    std::vector<AlgebraicRelation> algebraic;
    std::map<std::string, OdeEquation> odes;          // one per differential state
    std::map<int, double> relation_residual_rms;      // diagnostics per relation index
};

/// Decide which states carry dynamics. States absent from every relation
/// support are differential. Each relation claims one not-yet-claimed
/// support state as algebraic: the eliminated pivot's base state when that
/// pivot is a pure state power; otherwise the support state least preferred
/// by `prefer_differential`; otherwise the state with the smallest dynamic
/// range (max - min)/std.
VariableRoles assign_variable_roles(const std::vector<std::string>& states,
                                    const std::vector<AlgebraicRelation>& relations,
                                    const std::vector<Term>& eliminated_pivots,
                                    const TimeSeriesTable* table,
                                    const std::vector<std::string>& prefer_differential = {});

struct DynamicsConfig {
    SparseFitConfig sparse;
    std::map<std::string, int> derivative_order;          // default 1
    std::map<std::string, std::vector<Term>> exclude;     // per-state regressor exclusions
    std::map<std::string, std::vector<Term>> restrict_to; // per-state allowed regressors
    std::optional<std::vector<std::string>> states;       // restrict which states get equations
};

/// Per-state derivative targets for the dynamic fits.
struct DerivativeSet {
    DerivativeTable first;
    std::optional<DerivativeTable> second;
};

/// Sparse-fit each differential state's derivative against the refined
/// library. Targets are scaled to unit RMS for thresholding and the reported
/// coefficients are un-normalized after the final OLS refit.
std::map<std::string, OdeEquation> discover_dynamics(const LibraryMatrix& refined,
                                                     const DerivativeSet& derivatives,
                                                     const VariableRoles& roles,
                                                     const DynamicsConfig& cfg);

/// Re-estimate every coefficient (algebraic and ODE) by OLS on the fixed
/// supports over raw (unnormalized) term columns; scores are updated.
DiscoveredModel refit_coefficients(const DiscoveredModel& model, const TimeSeriesTable& table,
                                   const DerivativeSet& derivatives);

/// Validate role/equation consistency and compute per-relation residual
/// diagnostics on the data.
DiscoveredModel assemble_dae(const std::vector<AlgebraicRelation>& relations,
                             const std::map<std::string, OdeEquation>& odes,
                             const VariableRoles& roles, const TimeSeriesTable& table);

}  // namespace sparsedae
