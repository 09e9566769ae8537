#include "sparsedae/dynfinder.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "sparsedae/errors.hpp"

namespace sparsedae {

namespace {

const char* kModule = "dynfinder";

Error err(const std::string& op, const std::string& code, const std::string& msg) {
    return Error(kModule, op, code, msg);
}

double dynamic_range_ratio(const TimeSeriesTable& table, const std::string& name) {
    const int c = table.column_index(name);
    if (c < 0) return std::numeric_limits<double>::infinity();
    const Eigen::VectorXd col = table.values.col(c);
    const double span = col.maxCoeff() - col.minCoeff();
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().sum() /
                                std::max<double>(1.0, static_cast<double>(col.size() - 1)));
    return sd > 0.0 ? span / sd : std::numeric_limits<double>::infinity();
}

std::set<std::string> relation_states(const AlgebraicRelation& relation) {
    std::set<std::string> states;
    for (const Term& t : relation.support())
        for (const std::string& s : t.state_names()) states.insert(s);
    return states;
}

/// Raw (unnormalized) column for a term: normalized column times its scale.
Eigen::VectorXd raw_column(const LibraryMatrix& libmat, int index) {
    return libmat.values.col(index) * libmat.column_scales(index);
}

Eigen::MatrixXd raw_columns_for(const LibraryMatrix& libmat, const std::vector<Term>& terms,
                                const std::string& op) {
    Eigen::MatrixXd m(libmat.values.rows(), static_cast<Eigen::Index>(terms.size()));
    for (std::size_t k = 0; k < terms.size(); ++k) {
        const int idx = libmat.library.index_of(terms[k]);
        if (idx < 0)
            throw err(op, "TermNotInLibrary", terms[k].encoding() + " not in library");
        m.col(static_cast<Eigen::Index>(k)) = raw_column(libmat, idx);
    }
    return m;
}

}  // namespace

bool VariableRoles::is_algebraic(const std::string& name) const {
    return std::find(algebraic.begin(), algebraic.end(), name) != algebraic.end();
}

VariableRoles assign_variable_roles(const std::vector<std::string>& states,
                                    const std::vector<AlgebraicRelation>& relations,
                                    const std::vector<Term>& eliminated_pivots,
                                    const TimeSeriesTable* table,
                                    const std::vector<std::string>& prefer_differential) {
    const std::string op = "assign_variable_roles";
    for (const std::string& p : prefer_differential)
        if (std::find(states.begin(), states.end(), p) == states.end())
            throw err(op, "UnknownState", "preference names unknown state '" + p + "'");

    auto pref_rank = [&](const std::string& name) {
        const auto it = std::find(prefer_differential.begin(), prefer_differential.end(), name);
        return static_cast<std::size_t>(it - prefer_differential.begin());
    };

    std::set<std::string> claimed;
    std::map<std::string, RoleRationale> rationale;
    std::set<std::string> in_any_support;

    for (std::size_t i = 0; i < relations.size(); ++i) {
        const std::set<std::string> members = relation_states(relations[i]);
        in_any_support.insert(members.begin(), members.end());

        std::vector<std::string> candidates;
        for (const std::string& s : members)
            if (!claimed.count(s)) candidates.push_back(s);
        if (candidates.empty()) continue;  // relation already satisfied by an earlier claim

        // Rule 1: the eliminated pivot's base state, when it is a pure power.
        if (i < eliminated_pivots.size() && eliminated_pivots[i].is_pure_state_power()) {
            const std::string base = eliminated_pivots[i].monomial().begin()->first;
            if (!claimed.count(base)) {
                claimed.insert(base);
                rationale[base] = RoleRationale::PivotElimination;
                continue;
            }
        }

        // Rule 2: respect the user's differential preference - claim the
        // least-preferred candidate; when every remaining candidate is
        // preference-listed and the relation already touches a claimed
        // state, leave the preferred states differential.
        if (!prefer_differential.empty()) {
            std::vector<std::string> unlisted;
            for (const std::string& s : candidates)
                if (pref_rank(s) == prefer_differential.size()) unlisted.push_back(s);
            if (unlisted.empty()) {
                const bool satisfied = std::any_of(members.begin(), members.end(),
                                                   [&](const std::string& s) { return claimed.count(s) > 0; });
                if (satisfied) continue;
                // Forced: claim the least preferred.
                std::string pick = candidates.front();
                for (const std::string& s : candidates)
                    if (pref_rank(s) > pref_rank(pick)) pick = s;
                claimed.insert(pick);
                rationale[pick] = RoleRationale::UserPreference;
                continue;
            }
            candidates = std::move(unlisted);
            if (candidates.size() == 1) {
                claimed.insert(candidates.front());
                rationale[candidates.front()] = RoleRationale::UserPreference;
                continue;
            }
        }

        // Rule 3: smallest dynamic range (max - min)/std; names break ties.
        std::string pick = candidates.front();
        double pick_range = table ? dynamic_range_ratio(*table, pick)
                                  : std::numeric_limits<double>::infinity();
        for (const std::string& s : candidates) {
            const double r =
                table ? dynamic_range_ratio(*table, s) : std::numeric_limits<double>::infinity();
            if (r < pick_range || (r == pick_range && s < pick)) {
                pick = s;
                pick_range = r;
            }
        }
        claimed.insert(pick);
        rationale[pick] = RoleRationale::DynamicRange;
    }

    VariableRoles roles;
    for (const std::string& s : states) {
        if (claimed.count(s)) {
            roles.algebraic.push_back(s);
        } else {
            roles.differential.push_back(s);
            if (!rationale.count(s))
                rationale[s] = in_any_support.count(s) ? RoleRationale::UserPreference
                                                       : RoleRationale::NoRelationMembership;
        }
    }
    roles.rationale = std::move(rationale);
    return roles;
}

std::map<std::string, OdeEquation> discover_dynamics(const LibraryMatrix& refined,
                                                     const DerivativeSet& derivatives,
                                                     const VariableRoles& roles,
                                                     const DynamicsConfig& cfg) {
    const std::string op = "discover_dynamics";
    const Eigen::Index n = refined.values.rows();

    std::map<std::string, OdeEquation> odes;
    for (const std::string& state : roles.differential) {
        if (cfg.states && std::find(cfg.states->begin(), cfg.states->end(), state) ==
                              cfg.states->end()) {
            // Not modeled (e.g. a measured-derivative channel); keep an
            // explicit undiscovered entry so the model stays complete.
            OdeEquation eq;
            eq.discovered = false;
            eq.score = 0.0;
            odes[state] = eq;
            continue;
        }
        int order = 1;
        if (const auto it = cfg.derivative_order.find(state); it != cfg.derivative_order.end())
            order = it->second;
        const DerivativeTable* deriv = nullptr;
        if (order == 1) {
            deriv = &derivatives.first;
        } else if (order == 2) {
            if (!derivatives.second)
                throw err(op, "MissingDerivative", "no second-order derivatives supplied");
            deriv = &*derivatives.second;
        } else {
            throw err(op, "BadOrder", "derivative order must be 1 or 2");
        }
        const int dcol = deriv->table.column_index(state);
        if (dcol < 0)
            throw err(op, "MissingDerivative", "no derivative column for state '" + state + "'");
        if (deriv->table.rows() != n)
            throw err(op, "ShapeMismatch", "derivative rows do not match library rows");

        std::vector<int> regressors;
        const std::vector<Term>* excluded = nullptr;
        if (const auto it = cfg.exclude.find(state); it != cfg.exclude.end()) excluded = &it->second;
        const std::vector<Term>* allowed = nullptr;
        if (const auto it = cfg.restrict_to.find(state); it != cfg.restrict_to.end())
            allowed = &it->second;
        for (std::size_t j = 0; j < refined.library.size(); ++j) {
            if (refined.degenerate[j]) continue;
            if (excluded && std::any_of(excluded->begin(), excluded->end(),
                                        [&](const Term& t) { return t == refined.library.terms[j]; }))
                continue;
            if (allowed && std::none_of(allowed->begin(), allowed->end(),
                                        [&](const Term& t) { return t == refined.library.terms[j]; }))
                continue;
            regressors.push_back(static_cast<int>(j));
        }

        OdeEquation eq;
        eq.order = order;
        const Eigen::VectorXd target = deriv->table.values.col(dcol);
        const double target_rms =
            std::sqrt(target.squaredNorm() / static_cast<double>(n));
        // Derivatives at rounding level relative to the feature scales are a
        // zero equation, not a fit target.
        const double zero_floor =
            1e-12 * std::max(1.0, refined.column_scales.maxCoeff());

        if (regressors.empty() || target_rms <= zero_floor) {
            eq.discovered = target_rms <= zero_floor;
            eq.score = eq.discovered ? 1.0 : 0.0;
            odes[state] = eq;
            continue;
        }

        Eigen::MatrixXd X(n, static_cast<Eigen::Index>(regressors.size()));
        for (std::size_t k = 0; k < regressors.size(); ++k)
            X.col(static_cast<Eigen::Index>(k)) = refined.values.col(regressors[k]);

        try {
            const FitResult fit = sparse_fit(X, target / target_rms, cfg.sparse);
            for (int k : fit.support) {
                const int j = regressors[k];
                eq.coefficients[refined.library.terms[j]] =
                    fit.coefficients(k) * target_rms / refined.column_scales(j);
            }
            eq.score = fit.r2;
        } catch (const NoRelationError&) {
            eq.discovered = false;
        } catch (const DegenerateTargetError&) {
            eq.discovered = false;
        }
        odes[state] = eq;
    }
    return odes;
}

DiscoveredModel refit_coefficients(const DiscoveredModel& model, const TimeSeriesTable& table,
                                   const DerivativeSet& derivatives) {
    const std::string op = "refit_coefficients";
    DiscoveredModel out = model;

    // Library of every term appearing anywhere in the model, evaluated raw.
    CandidateLibrary universe;
    auto add_term = [&](const Term& t) {
        if (!universe.contains(t)) universe.terms.push_back(t);
    };
    for (const auto& rel : model.algebraic)
        for (const Term& t : rel.support()) add_term(t);
    for (const auto& [state, eq] : model.odes)
        for (const auto& [t, c] : eq.coefficients) add_term(t);
    if (universe.terms.empty()) return out;

    const LibraryMatrix libmat = evaluate_library(universe, table, false);

    for (std::size_t i = 0; i < out.algebraic.size(); ++i) {
        AlgebraicRelation& rel = out.algebraic[i];
        // Regress one support term on the rest. The stored pivot may have
        // reduced to the constant term, which has no variance; fall back to
        // the first non-constant support term in that case.
        Term target = rel.pivot;
        if (target.is_constant() || rel.coefficients.find(target) == rel.coefficients.end()) {
            for (const Term& t : rel.support())
                if (!t.is_constant()) {
                    target = t;
                    break;
                }
        }
        std::vector<Term> regressors;
        for (const Term& t : rel.support())
            if (!(t == target)) regressors.push_back(t);
        if (regressors.empty() || target.is_constant()) continue;
        const Eigen::MatrixXd X = raw_columns_for(libmat, regressors, op);
        const int target_idx = libmat.library.index_of(target);
        if (target_idx < 0) throw err(op, "TermNotInLibrary", "refit target not evaluable");
        const Eigen::VectorXd y = raw_column(libmat, target_idx);
        const FitResult fit = fit_ols(X, y);
        for (std::size_t k = 0; k < regressors.size(); ++k)
            rel.coefficients[regressors[k]] = fit.coefficients(static_cast<Eigen::Index>(k));
        rel.coefficients[target] = -1.0;
        rel.score = fit.r2;
    }

    for (auto& [state, eq] : out.odes) {
        if (eq.coefficients.empty()) continue;
        std::vector<Term> support;
        for (const auto& [t, c] : eq.coefficients) support.push_back(t);
        const Eigen::MatrixXd X = raw_columns_for(libmat, support, op);

        const DerivativeTable* deriv =
            eq.order == 2 ? (derivatives.second ? &*derivatives.second : nullptr)
                          : &derivatives.first;
        if (!deriv)
            throw err(op, "MissingDerivative", "no derivative table of order " + std::to_string(eq.order));
        const int dcol = deriv->table.column_index(state);
        if (dcol < 0) throw err(op, "MissingDerivative", "no derivative for '" + state + "'");
        const Eigen::VectorXd y = deriv->table.values.col(dcol);

        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(X);
        eq.rank_deficient_refit = cod.rank() < X.cols();
        const FitResult fit = fit_ols(X, y);
        for (std::size_t k = 0; k < support.size(); ++k)
            eq.coefficients[support[k]] = fit.coefficients(static_cast<Eigen::Index>(k));
        eq.score = fit.r2;
    }
    return out;
}

DiscoveredModel assemble_dae(const std::vector<AlgebraicRelation>& relations,
                             const std::map<std::string, OdeEquation>& odes,
                             const VariableRoles& roles, const TimeSeriesTable& table) {
    const std::string op = "assemble_dae";

    // Roles invariants.
    for (const std::string& s : roles.differential)
        if (roles.is_algebraic(s))
            throw err(op, "RoleConflict", "state '" + s + "' is both differential and algebraic");
    for (const std::string& s : roles.differential)
        if (!odes.count(s))
            throw err(op, "MissingOde", "differential state '" + s + "' has no ODE entry");
    for (const auto& [state, eq] : odes)
        if (std::find(roles.differential.begin(), roles.differential.end(), state) ==
            roles.differential.end())
            throw err(op, "RoleConflict", "ODE present for non-differential state '" + state + "'");
    for (const AlgebraicRelation& rel : relations) {
        const std::set<std::string> members = relation_states(rel);
        const bool claims = std::any_of(members.begin(), members.end(),
                                        [&](const std::string& s) { return roles.is_algebraic(s); });
        if (!claims)
            throw err(op, "RoleConflict",
                      "relation with pivot " + rel.pivot.encoding() +
                          " claims no algebraic variable");
    }

    DiscoveredModel model;
    model.states = table.names;
    model.roles = roles;
    model.algebraic = relations;
    model.odes = odes;

    // Residual diagnostics: RMS of sum c_j theta_j over the data, relative
    // to the RMS of the largest contributing term.
    if (!relations.empty()) {
        CandidateLibrary universe;
        for (const auto& rel : relations)
            for (const Term& t : rel.support())
                if (!universe.contains(t)) universe.terms.push_back(t);
        const LibraryMatrix libmat = evaluate_library(universe, table, false);
        for (std::size_t i = 0; i < relations.size(); ++i) {
            Eigen::VectorXd residual = Eigen::VectorXd::Zero(table.rows());
            double max_term_rms = 0.0;
            for (const auto& [term, coeff] : relations[i].coefficients) {
                if (coeff == 0.0) continue;
                const int idx = universe.index_of(term);
                const Eigen::VectorXd col = libmat.values.col(idx) * coeff;
                residual += col;
                max_term_rms = std::max(
                    max_term_rms,
                    std::sqrt(col.squaredNorm() / static_cast<double>(table.rows())));
            }
            const double rms = std::sqrt(residual.squaredNorm() / static_cast<double>(table.rows()));
            model.relation_residual_rms[static_cast<int>(i)] =
                max_term_rms > 0.0 ? rms / max_term_rms : rms;
        }
    }
    return model;
}

}  // namespace sparsedae
