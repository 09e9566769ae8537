#include "sparsedae/algfinder.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <future>
#include <random>
#include <thread>

#include "sparsedae/errors.hpp"

namespace sparsedae {

namespace {

const char* kModule = "algfinder";

Error err(const std::string& op, const std::string& code, const std::string& msg) {
    return Error(kModule, op, code, msg);
}

constexpr double kConditionFloor = 1e-14;  // relative to s1, keeps ln-condition finite

double candidate_score(const FitResult& fit, Eigen::Index n, ScoreFunction fn) {
    switch (fn) {
        case ScoreFunction::R2:
            return fit.r2;
        case ScoreFunction::NegAic:
            return -score_aic(n, fit.residual_norm * fit.residual_norm,
                              static_cast<int>(fit.support.size()));
        case ScoreFunction::NegBic:
            return -score_bic(n, fit.residual_norm * fit.residual_norm,
                              static_cast<int>(fit.support.size()));
    }
    return fit.r2;
}

CandidateFit fit_one_candidate(const LibraryMatrix& libmat, const SparseFitConfig& cfg,
                               ScoreFunction score_fn, int target,
                               const std::vector<int>& regressors) {
    CandidateFit out;
    out.term_index = target;
    const Eigen::Index n = libmat.values.rows();

    Eigen::MatrixXd X(n, static_cast<Eigen::Index>(regressors.size()));
    for (std::size_t k = 0; k < regressors.size(); ++k)
        X.col(static_cast<Eigen::Index>(k)) = libmat.values.col(regressors[k]);
    const Eigen::VectorXd y = libmat.values.col(target);

    try {
        const FitResult local = sparse_fit(X, y, cfg);
        out.fit = local;
        out.fit.coefficients = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(libmat.library.size()));
        out.fit.support.clear();
        for (int k : local.support) {
            out.fit.coefficients(regressors[k]) = local.coefficients(k);
            out.fit.support.push_back(regressors[k]);
        }
        std::sort(out.fit.support.begin(), out.fit.support.end());
        out.usable = !out.fit.support.empty();
        out.score = out.usable ? candidate_score(local, n, score_fn)
                               : -std::numeric_limits<double>::infinity();
        if (!out.usable) out.note = "no_relation";
    } catch (const NoRelationError&) {
        out.note = "no_relation";
    } catch (const DegenerateTargetError&) {
        out.note = "degenerate_target";
    }
    return out;
}

}  // namespace

SvdDiagnostics svd_diagnostics(const LibraryMatrix& libmat, double rank_tol) {
    const std::string op = "svd_diagnostics";
    if (libmat.library.size() == 0) throw err(op, "EmptyLibrary", "library has no terms");

    std::vector<int> usable;
    for (std::size_t j = 0; j < libmat.library.size(); ++j)
        if (!libmat.degenerate[j]) usable.push_back(static_cast<int>(j));
    if (usable.empty()) throw err(op, "EmptyLibrary", "all columns degenerate");

    Eigen::MatrixXd m(libmat.values.rows(), static_cast<Eigen::Index>(usable.size()));
    for (std::size_t k = 0; k < usable.size(); ++k)
        m.col(static_cast<Eigen::Index>(k)) = libmat.values.col(usable[k]);

    Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
    const Eigen::VectorXd sigma = svd.singularValues();

    SvdDiagnostics diag;
    diag.singular_values.assign(sigma.data(), sigma.data() + sigma.size());
    const double total = sigma.squaredNorm();
    diag.variance_ratios.resize(diag.singular_values.size());
    for (std::size_t i = 0; i < diag.variance_ratios.size(); ++i)
        diag.variance_ratios[i] = total > 0.0 ? sigma(static_cast<Eigen::Index>(i)) * sigma(static_cast<Eigen::Index>(i)) / total : 0.0;

    const double s1 = sigma.size() > 0 ? sigma(0) : 0.0;
    if (s1 <= 0.0) throw err(op, "ZeroMatrix", "library matrix is identically zero");

    for (double s : diag.singular_values)
        if (s > rank_tol * s1) ++diag.numeric_rank;
    diag.nullity_estimate = static_cast<int>(usable.size()) - diag.numeric_rank;

    const double floor = kConditionFloor * s1;
    int floored = 0;
    for (double s : diag.singular_values)
        if (s < floor) ++floored;
    if (floored > 0) {
        diag.log_condition = floored * std::log(s1 / floor);
    } else {
        const double s_min = diag.singular_values.back();
        diag.log_condition = std::log(s1 / std::max(s_min, floor));
    }
    return diag;
}

std::vector<CandidateFit> fit_all_candidates(const LibraryMatrix& libmat,
                                             const SparseFitConfig& cfg, ScoreFunction score_fn,
                                             const std::vector<Term>* candidates,
                                             const std::vector<Term>* regressors) {
    const std::string op = "fit_all_candidates";
    if (libmat.usable_columns() < 2)
        throw err(op, "TooFewColumns", "need at least 2 non-degenerate columns");

    auto resolve = [&](const std::vector<Term>& terms) {
        std::vector<int> indices;
        for (const Term& t : terms) {
            const int idx = libmat.library.index_of(t);
            if (idx < 0) throw err(op, "TermNotInLibrary", t.encoding() + " not in library");
            if (!libmat.degenerate[idx]) indices.push_back(idx);
        }
        std::sort(indices.begin(), indices.end());
        return indices;
    };

    std::vector<int> targets;
    if (candidates) {
        targets = resolve(*candidates);
    } else {
        for (std::size_t j = 0; j < libmat.library.size(); ++j)
            if (!libmat.degenerate[j]) targets.push_back(static_cast<int>(j));
    }
    std::vector<int> regressor_pool;
    if (regressors) {
        regressor_pool = resolve(*regressors);
    } else {
        for (std::size_t j = 0; j < libmat.library.size(); ++j)
            if (!libmat.degenerate[j]) regressor_pool.push_back(static_cast<int>(j));
    }

    std::vector<CandidateFit> fits(targets.size());
    auto run_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            std::vector<int> cols;
            for (int j : regressor_pool)
                if (j != targets[i]) cols.push_back(j);
            fits[i] = fit_one_candidate(libmat, cfg, score_fn, targets[i], cols);
        }
    };

    const std::size_t workers =
        std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), targets.size());
    if (workers <= 1 || targets.size() < 4) {
        run_range(0, targets.size());
    } else {
        std::vector<std::future<void>> jobs;
        const std::size_t chunk = (targets.size() + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(targets.size(), begin + chunk);
            if (begin >= end) break;
            jobs.push_back(std::async(std::launch::async, run_range, begin, end));
        }
        for (auto& job : jobs) job.get();
    }
    return fits;
}

std::pair<int, AlgebraicRelation> select_best_relation(const std::vector<CandidateFit>& fits,
                                                       const LibraryMatrix& libmat) {
    const std::string op = "select_best_relation";
    const CandidateFit* best = nullptr;
    for (const CandidateFit& fit : fits) {
        if (!fit.usable || !std::isfinite(fit.score)) continue;
        if (!best) {
            best = &fit;
            continue;
        }
        if (fit.score > best->score) {
            best = &fit;
        } else if (fit.score == best->score) {
            if (fit.fit.support.size() < best->fit.support.size()) {
                best = &fit;
            } else if (fit.fit.support.size() == best->fit.support.size() &&
                       libmat.library.terms[fit.term_index].encoding() <
                           libmat.library.terms[best->term_index].encoding()) {
                best = &fit;
            }
        }
    }
    if (!best) throw NoRelationFoundError(op, "no candidate produced a usable fit");

    // Un-normalize: the fit solved theta_l/s_l = sum p_j theta_j/s_j, so the
    // relation sum_j (p_j s_l / s_j) theta_j - theta_l = 0 has the pivot's
    // coefficient folded in as -1.
    AlgebraicRelation relation;
    relation.pivot = libmat.library.terms[best->term_index];
    relation.score = best->score;
    const double s_pivot = libmat.column_scales(best->term_index);
    for (int j : best->fit.support)
        relation.coefficients[libmat.library.terms[j]] =
            best->fit.coefficients(j) * s_pivot / libmat.column_scales(j);
    relation.coefficients[relation.pivot] = -1.0;
    return {best->term_index, relation};
}

RefinementStep refine_library(const CandidateLibrary& lib, const AlgebraicRelation& relation,
                              const TiebreakPolicy& tiebreak) {
    const std::string op = "refine_library";
    AlgebraicRelation reduced = reduce_relation(relation);

    std::vector<Term> support;
    for (const Term& t : reduced.support())
        if (!t.is_constant()) support.push_back(t);
    if (support.empty()) throw err(op, "EmptySupport", "support empty after reduction");
    for (const Term& t : support)
        if (!lib.contains(t))
            throw err(op, "TermNotInLibrary",
                      "reduced support term " + t.encoding() + " not in library");

    int max_complexity = 0;
    for (const Term& t : support) max_complexity = std::max(max_complexity, complexity_score(t));
    std::vector<Term> tied;
    for (const Term& t : support)
        if (complexity_score(t) == max_complexity) tied.push_back(t);

    Term pivot;
    if (tied.size() == 1) {
        pivot = tied.front();
    } else {
        switch (tiebreak.kind) {
            case TiebreakPolicy::Kind::LexLargest:
                pivot = *std::max_element(tied.begin(), tied.end());
                break;
            case TiebreakPolicy::Kind::SeededRandom: {
                std::mt19937_64 rng(tiebreak.seed + static_cast<std::uint64_t>(relation.iteration));
                std::sort(tied.begin(), tied.end());
                pivot = tied[rng() % tied.size()];
                break;
            }
            case TiebreakPolicy::Kind::Preference: {
                // Rank each tied term by the earliest preferred state it
                // contains; unranked terms fall back to lex-largest.
                auto rank = [&](const Term& t) {
                    std::size_t best = tiebreak.prefer_eliminating.size();
                    for (const std::string& name : t.state_names()) {
                        const auto it = std::find(tiebreak.prefer_eliminating.begin(),
                                                  tiebreak.prefer_eliminating.end(), name);
                        best = std::min(best, static_cast<std::size_t>(
                                                  it - tiebreak.prefer_eliminating.begin()));
                    }
                    return best;
                };
                std::sort(tied.begin(), tied.end());
                pivot = tied.back();
                std::size_t best_rank = rank(pivot);
                for (const Term& t : tied) {
                    const std::size_t r = rank(t);
                    if (r < best_rank) {
                        pivot = t;
                        best_rank = r;
                    }
                }
                break;
            }
        }
    }

    RefinementStep step;
    step.iteration = reduced.iteration;
    step.relation = std::move(reduced);
    step.removed_pivot = pivot;
    step.removed_set = multiples_of(pivot, lib);
    step.score = step.relation.score;
    return step;
}

AlgebraicResult run_algebraic_finder(const CandidateLibrary& lib0, const TimeSeriesTable& table,
                                     const AlgebraicFinderConfig& cfg) {
    const std::string op = "run_algebraic_finder";
    AlgebraicResult result;
    result.refined_library = lib0;

    auto eps_at = [&](int k) {
        if (cfg.eps.empty()) return 5.0;
        const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(k - 1), cfg.eps.size() - 1);
        return cfg.eps[i];
    };

    LibraryMatrix libmat = evaluate_library(result.refined_library, table, true);
    SvdDiagnostics diag = svd_diagnostics(libmat, cfg.rank_tol);

    while (true) {
        const int k = static_cast<int>(result.trace.size()) + 1;
        const bool mandated = cfg.k_known && k <= *cfg.k_known;
        const double eps = eps_at(k);
        if (!mandated && std::isinf(eps)) {
            result.stop_reason = cfg.k_known ? StopReason::ReachedK : StopReason::ConditionStagnation;
            break;
        }
        if (libmat.usable_columns() < 2) {
            result.stop_reason = StopReason::NoFitAboveScoreFloor;
            if (mandated) result.warning = "library exhausted before K refinements";
            break;
        }

        // Restriction lists may reference terms removed by earlier steps.
        auto surviving = [&](const std::optional<std::vector<Term>>& terms)
            -> std::optional<std::vector<Term>> {
            if (!terms) return std::nullopt;
            std::vector<Term> kept;
            for (const Term& t : *terms)
                if (result.refined_library.contains(t)) kept.push_back(t);
            return kept;
        };
        const std::optional<std::vector<Term>> candidates = surviving(cfg.candidates);
        const std::optional<std::vector<Term>> regressors = surviving(cfg.regressors);
        if ((candidates && candidates->empty()) || (regressors && regressors->empty())) {
            result.stop_reason = StopReason::NoFitAboveScoreFloor;
            if (mandated) result.warning = "candidate or regressor pool exhausted";
            break;
        }

        std::pair<int, AlgebraicRelation> best;
        try {
            const std::vector<CandidateFit> fits =
                fit_all_candidates(libmat, cfg.sparse, cfg.score_fn,
                                   candidates ? &*candidates : nullptr,
                                   regressors ? &*regressors : nullptr);
            best = select_best_relation(fits, libmat);
        } catch (const NoRelationFoundError& e) {
            result.stop_reason = StopReason::NoFitAboveScoreFloor;
            if (mandated) result.warning = e.what();
            break;
        }
        if (cfg.score_fn == ScoreFunction::R2 && best.second.score < cfg.score_floor) {
            result.stop_reason = StopReason::NoFitAboveScoreFloor;
            if (mandated)
                result.warning = "best score " + std::to_string(best.second.score) +
                                 " below floor before K refinements";
            break;
        }

        best.second.iteration = k;
        RefinementStep step = refine_library(result.refined_library, best.second, cfg.tiebreak);
        const CandidateLibrary refined = remove_terms(result.refined_library, step.removed_set);
        if (refined.terms.empty()) {
            result.stop_reason = StopReason::NoFitAboveScoreFloor;
            break;
        }

        const LibraryMatrix next_mat = evaluate_library(refined, table, true);
        const SvdDiagnostics next_diag = svd_diagnostics(next_mat, cfg.rank_tol);
        const double improvement = diag.log_condition - next_diag.log_condition;

        if (!mandated && improvement <= eps) {
            // Stagnation: roll the refinement back and stop.
            result.stop_reason = StopReason::ConditionStagnation;
            break;
        }

        step.diagnostics_before = diag;
        step.diagnostics_after = next_diag;
        result.relations.push_back(step.relation);
        result.trace.push_back(std::move(step));
        result.refined_library = refined;
        libmat = next_mat;
        diag = next_diag;
    }
    return result;
}

}  // namespace sparsedae
