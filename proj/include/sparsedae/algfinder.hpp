#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sparsedae/sparsereg.hpp"
#include "sparsedae/termlib.hpp"
#include "sparsedae/timeseries.hpp"

namespace sparsedae {

/// Spectrum summary of a library matrix (normalized, degenerate columns
/// excluded). `numeric_rank` counts singular values above rank_tol * s1 and
/// `nullity_estimate` is the usable column count minus that rank.
///
/// `log_condition` is multiplicity-aware: every singular value below the
/// floor (1e-14 * s1) contributes one full ln(s1/floor) spread, so removing
/// one of several exact dependencies still registers as an improvement. For
/// numerically full-rank matrices it reduces to ln(s1/s_min).
struct SvdDiagnostics {
    std::vector<double> singular_values;   // descending
    std::vector<double> variance_ratios;   // s_i^2 / sum s_j^2
    int numeric_rank = 0;
    int nullity_estimate = 0;
    double log_condition = 0.0;
};

SvdDiagnostics svd_diagnostics(const LibraryMatrix& libmat, double rank_tol = 1e-10);

/// One sparse fit of a candidate column against the rest of the library.
/// Coefficients are indexed over the FULL library (pivot entry is zero).
struct CandidateFit {
    int term_index = -1;
    bool usable = false;
    FitResult fit;
    double score = -std::numeric_limits<double>::infinity();
    std::string note;  // "degenerate_target" | "no_relation" | ""
};

enum class ScoreFunction { R2, NegAic, NegBic };

/// Fit every non-degenerate candidate theta_l against the other columns
/// (the candidate is structurally excluded from its own regressors).
/// `candidates`, when given, restricts which terms are used as targets;
/// `regressors` restricts the explanatory columns (prior knowledge, e.g.
/// coupling-only relations in grid discovery).
std::vector<CandidateFit> fit_all_candidates(const LibraryMatrix& libmat,
                                             const SparseFitConfig& cfg,
                                             ScoreFunction score_fn = ScoreFunction::R2,
                                             const std::vector<Term>* candidates = nullptr,
                                             const std::vector<Term>* regressors = nullptr);

/// Argmax of the score; ties broken by smaller support then lexicographically
/// smallest pivot encoding. Builds the relation with unnormalized
/// coefficients and the pivot's coefficient folded in as -1.
std::pair<int, AlgebraicRelation> select_best_relation(const std::vector<CandidateFit>& fits,
                                                       const LibraryMatrix& libmat);

/// Pivot tie-break policy when several support terms share the maximal
/// complexity score.
struct TiebreakPolicy {
    enum class Kind { LexLargest, SeededRandom, Preference };
    Kind kind = Kind::LexLargest;
    std::uint64_t seed = 0;
    std::vector<std::string> prefer_eliminating;  // state names, most preferred first
};

struct RefinementStep {
    int iteration = 0;
    AlgebraicRelation relation;    // reduced
    Term removed_pivot;            // highest-complexity support term
    std::vector<Term> removed_set; // multiples of the pivot in the library
    SvdDiagnostics diagnostics_before;
    SvdDiagnostics diagnostics_after;
    double score = 0.0;
};

/// Reduce the relation, select the highest-complexity pivot (constant never
/// selectable), and collect its multiples. Diagnostics are filled by the
/// finder loop.
RefinementStep refine_library(const CandidateLibrary& lib, const AlgebraicRelation& relation,
                              const TiebreakPolicy& tiebreak);

enum class StopReason { ReachedK, ConditionStagnation, NoFitAboveScoreFloor };

struct AlgebraicFinderConfig {
    std::optional<int> k_known;        // mandated number of refinements, when known
    std::vector<double> eps = {5.0};   // per-iteration ln-condition improvement tolerance
    double score_floor = 0.5;
    SparseFitConfig sparse;
    ScoreFunction score_fn = ScoreFunction::R2;
    TiebreakPolicy tiebreak;
    double rank_tol = 1e-10;
    std::optional<std::vector<Term>> candidates;  // restrict fit targets
    std::optional<std::vector<Term>> regressors;  // restrict explanatory terms
};

struct AlgebraicResult {
    std::vector<AlgebraicRelation> relations;  // reduced, in acceptance order
    CandidateLibrary refined_library;
    std::vector<RefinementStep> trace;
    StopReason stop_reason = StopReason::ConditionStagnation;
    std::string warning;  // set when K was demanded but could not be met
};

/// The iterative algebraic finder: fit all candidates, accept the best
/// relation, remove the pivot's multiples, and repeat while either mandated
/// (k <= K) or the ln-condition improvement exceeds eps[k]. A refinement
/// beyond K whose improvement is within tolerance is rolled back.
AlgebraicResult run_algebraic_finder(const CandidateLibrary& lib0, const TimeSeriesTable& table,
                                     const AlgebraicFinderConfig& cfg);

}  // namespace sparsedae
