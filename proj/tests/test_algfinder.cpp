#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "sparsedae/algfinder.hpp"
#include "sparsedae/benchgen.hpp"
#include "sparsedae/errors.hpp"

using namespace sparsedae;

namespace {

TimeSeriesTable random_states(const std::vector<std::string>& names, int n, std::uint64_t seed) {
    TimeSeriesTable t;
    t.names = names;
    t.values.resize(n, static_cast<Eigen::Index>(names.size()));
    t.times.resize(n);
    t.segment_ids.assign(n, 0);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(0.5, 2.0);
    for (int r = 0; r < n; ++r) {
        t.times[r] = r;
        for (Eigen::Index c = 0; c < t.cols(); ++c) t.values(r, c) = uniform(rng);
    }
    return t;
}

/// Degree-1 library over base states a, b, c plus planted dependent states
/// d1 = a + 2b, d2 = b - 3c, d3 = a - c. Each plant adds exactly one exact
/// linear dependency to the library.
TimeSeriesTable planted_table(int plants, int n, std::uint64_t seed) {
    TimeSeriesTable t = random_states({"a", "b", "c"}, n, seed);
    auto add_column = [&](const std::string& name, const Eigen::VectorXd& col) {
        t.names.push_back(name);
        t.values.conservativeResize(Eigen::NoChange, t.cols() + 1);
        t.values.col(t.cols() - 1) = col;
    };
    if (plants >= 1) add_column("d1", t.values.col(0) + 2.0 * t.values.col(1));
    if (plants >= 2) add_column("d2", t.values.col(1) - 3.0 * t.values.col(2));
    if (plants >= 3) add_column("d3", t.values.col(0) - t.values.col(2));
    return t;
}

}  // namespace

TEST_CASE("svd diagnostics of orthonormal columns") {
    const int n = 64;
    Eigen::MatrixXd q = Eigen::MatrixXd::Identity(n, 4);
    LibraryMatrix libmat;
    libmat.library.terms = {Term::state("a"), Term::state("b"), Term::state("c"), Term::state("d")};
    libmat.values = q * std::sqrt(static_cast<double>(n));
    libmat.column_scales = Eigen::VectorXd::Ones(4);
    libmat.degenerate.assign(4, false);

    const SvdDiagnostics diag = svd_diagnostics(libmat);
    CHECK(diag.numeric_rank == 4);
    CHECK(diag.nullity_estimate == 0);
    CHECK(diag.log_condition == doctest::Approx(0.0).epsilon(1e-10));
    for (double eta : diag.variance_ratios) CHECK(eta == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("svd diagnostics finds a planted dependency") {
    TimeSeriesTable t = planted_table(1, 500, 7);
    const CandidateLibrary lib = build_polynomial_library(t.names, 1, true);
    const LibraryMatrix m = evaluate_library(lib, t, true);
    const SvdDiagnostics diag = svd_diagnostics(m, 1e-10);
    CHECK(diag.nullity_estimate == 1);
    CHECK(diag.numeric_rank == static_cast<int>(lib.size()) - 1);
}

TEST_CASE("variance ratios sum to one") {
    TimeSeriesTable t = random_states({"x", "y", "z"}, 200, 9);
    const LibraryMatrix m = evaluate_library(build_polynomial_library(t.names, 2, true), t, true);
    const SvdDiagnostics diag = svd_diagnostics(m);
    double sum = 0.0;
    for (double eta : diag.variance_ratios) sum += eta;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fit_all finds the exact proportionality in both directions") {
    TimeSeriesTable t = random_states({"u"}, 300, 13);
    t.names.push_back("v");
    t.values.conservativeResize(Eigen::NoChange, 2);
    t.values.col(1) = 3.0 * t.values.col(0);

    CandidateLibrary lib;
    lib.terms = {Term::state("u"), Term::state("v")};
    const LibraryMatrix m = evaluate_library(lib, t, true);
    const std::vector<CandidateFit> fits = fit_all_candidates(m, SparseFitConfig{});
    REQUIRE(fits.size() == 2);
    for (const CandidateFit& fit : fits) {
        CHECK(fit.usable);
        CHECK(fit.score == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("fit_all returns no relation for orthogonal random columns") {
    const int n = 400;
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, 4);
    std::mt19937_64 rng(15);
    std::normal_distribution<double> gauss;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < 4; ++c) q(r, c) = gauss(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(q);
    q = qr.householderQ() * Eigen::MatrixXd::Identity(n, 4) * std::sqrt(static_cast<double>(n));

    LibraryMatrix libmat;
    libmat.library.terms = {Term::state("a"), Term::state("b"), Term::state("c"), Term::state("d")};
    libmat.values = q;
    libmat.column_scales = Eigen::VectorXd::Ones(4);
    libmat.degenerate.assign(4, false);

    SparseFitConfig cfg;
    cfg.threshold = 0.2;
    const std::vector<CandidateFit> fits = fit_all_candidates(libmat, cfg);
    for (const CandidateFit& fit : fits) {
        CHECK_FALSE(fit.usable);
        CHECK(fit.score == -std::numeric_limits<double>::infinity());
        CHECK(fit.note == "no_relation");
    }
    CHECK_THROWS_AS(select_best_relation(fits, libmat), NoRelationFoundError);
}

TEST_CASE("degenerate targets are excluded from selection but recorded") {
    TimeSeriesTable t = planted_table(1, 200, 17);
    const CandidateLibrary lib = build_polynomial_library(t.names, 1, true);
    const LibraryMatrix m = evaluate_library(lib, t, true);
    const std::vector<CandidateFit> fits = fit_all_candidates(m, SparseFitConfig{});
    bool saw_constant = false;
    for (const CandidateFit& fit : fits) {
        if (!m.library.terms[fit.term_index].is_constant()) continue;
        saw_constant = true;
        // The zero-variance target cannot win the selection.
        CHECK_FALSE(fit.usable);
        CHECK(fit.note == "degenerate_target");
    }
    CHECK(saw_constant);
}

TEST_CASE("select_best prefers the higher score, then the smaller support") {
    LibraryMatrix libmat;
    libmat.library.terms = {Term::state("a"), Term::state("b"), Term::state("c")};
    libmat.column_scales = Eigen::VectorXd::Ones(3);
    libmat.degenerate.assign(3, false);

    auto make_fit = [&](int index, double score, std::vector<int> support) {
        CandidateFit fit;
        fit.term_index = index;
        fit.usable = true;
        fit.score = score;
        fit.fit.support = support;
        fit.fit.coefficients = Eigen::VectorXd::Zero(3);
        for (int j : support) fit.fit.coefficients(j) = 1.0;
        return fit;
    };

    SUBCASE("argmax wins") {
        const auto fits = std::vector<CandidateFit>{make_fit(0, 0.99, {1}), make_fit(1, 0.97, {0})};
        CHECK(select_best_relation(fits, libmat).first == 0);
    }
    SUBCASE("tie broken by smaller support") {
        const auto fits =
            std::vector<CandidateFit>{make_fit(0, 1.0, {1, 2}), make_fit(1, 1.0, {2})};
        CHECK(select_best_relation(fits, libmat).first == 1);
    }
    SUBCASE("full tie broken by pivot encoding") {
        const auto fits = std::vector<CandidateFit>{make_fit(2, 1.0, {0}), make_fit(1, 1.0, {0})};
        CHECK(select_best_relation(fits, libmat).first == 1);  // "b" < "c"
    }
}

TEST_CASE("select_best folds the pivot in with coefficient -1 in raw units") {
    LibraryMatrix libmat;
    libmat.library.terms = {Term::state("a"), Term::state("b")};
    libmat.column_scales = Eigen::VectorXd::Ones(2);
    libmat.column_scales << 2.0, 4.0;
    libmat.degenerate.assign(2, false);

    CandidateFit fit;
    fit.term_index = 0;
    fit.usable = true;
    fit.score = 1.0;
    fit.fit.support = {1};
    fit.fit.coefficients = Eigen::VectorXd::Zero(2);
    fit.fit.coefficients(1) = 3.0;  // a/2 = 3 * b/4  =>  a = 1.5 b

    const auto [index, relation] = select_best_relation({fit}, libmat);
    CHECK(index == 0);
    CHECK(relation.pivot == Term::state("a"));
    CHECK(relation.coefficients.at(Term::state("a")) == -1.0);
    CHECK(relation.coefficients.at(Term::state("b")) == doctest::Approx(1.5));
}

TEST_CASE("refine_library picks the highest-complexity pivot") {
    const CandidateLibrary lib = build_polynomial_library({"x", "y"}, 2, true);
    AlgebraicRelation rel;
    rel.coefficients[Term::state("x", 2)] = 1.0;
    rel.coefficients[Term::state("y")] = 1.0;
    rel.pivot = Term::state("x", 2);
    const RefinementStep step = refine_library(lib, rel, TiebreakPolicy{});
    CHECK(step.removed_pivot == Term::state("x", 2));
    std::vector<std::string> removed;
    for (const Term& t : step.removed_set) removed.push_back(t.encoding());
    CHECK(removed == std::vector<std::string>{"x^2"});
}

TEST_CASE("refine_library reduces first and never picks the constant") {
    const CandidateLibrary lib = build_polynomial_library({"A", "B", "E1", "AE1"}, 2, true);
    // B * (E1 + AE1 - Etot) = 0: reduces to the conservation relation.
    AlgebraicRelation rel;
    rel.coefficients[Term::state("B") * Term::state("E1")] = 1.0;
    rel.coefficients[Term::state("B") * Term::state("AE1")] = 1.0;
    rel.coefficients[Term::state("B")] = -1.0;
    rel.pivot = Term::state("B") * Term::state("E1");

    const RefinementStep step = refine_library(lib, rel, TiebreakPolicy{});
    // Tie between E1 and AE1 at complexity 1; lex-largest picks E1, whose
    // multiples are the five terms of the worked example.
    CHECK(step.removed_pivot == Term::state("E1"));
    CHECK(step.removed_set.size() == 5);
    const CandidateLibrary refined = remove_terms(lib, step.removed_set);
    CHECK(refined.size() == 10);
}

TEST_CASE("refine_library preference tiebreak") {
    const CandidateLibrary lib = build_polynomial_library({"A", "B", "E1", "AE1"}, 2, true);
    AlgebraicRelation rel;
    rel.coefficients[Term::state("E1")] = 1.0;
    rel.coefficients[Term::state("AE1")] = 1.0;
    rel.coefficients[Term::constant()] = -1.0;
    rel.pivot = Term::state("E1");

    TiebreakPolicy policy;
    policy.kind = TiebreakPolicy::Kind::Preference;
    policy.prefer_eliminating = {"AE1"};
    const RefinementStep step = refine_library(lib, rel, policy);
    CHECK(step.removed_pivot == Term::state("AE1"));
}

TEST_CASE("refine_library seeded-random tiebreak is deterministic") {
    const CandidateLibrary lib = build_polynomial_library({"x", "y"}, 1, true);
    AlgebraicRelation rel;
    rel.coefficients[Term::state("x")] = 1.0;
    rel.coefficients[Term::state("y")] = -1.0;
    rel.pivot = Term::state("x");
    TiebreakPolicy policy;
    policy.kind = TiebreakPolicy::Kind::SeededRandom;
    policy.seed = 123;
    const Term first = refine_library(lib, rel, policy).removed_pivot;
    const Term second = refine_library(lib, rel, policy).removed_pivot;
    CHECK(first == second);
}

TEST_CASE("run_algebraic_finder with K=0 and infinite eps does nothing") {
    TimeSeriesTable t = planted_table(2, 300, 19);
    const CandidateLibrary lib = build_polynomial_library(t.names, 1, true);
    AlgebraicFinderConfig cfg;
    cfg.k_known = 0;
    cfg.eps = {std::numeric_limits<double>::infinity()};
    const AlgebraicResult result = run_algebraic_finder(lib, t, cfg);
    CHECK(result.relations.empty());
    CHECK(result.refined_library.terms == lib.terms);
    CHECK(result.stop_reason == StopReason::ReachedK);
}

TEST_CASE("planted dependencies are removed one per accepted refinement") {
    for (int plants : {1, 2, 3}) {
        TimeSeriesTable t = planted_table(plants, 500, 100 + plants);
        const CandidateLibrary lib = build_polynomial_library(t.names, 1, true);
        const LibraryMatrix m0 = evaluate_library(lib, t, true);
        CHECK(svd_diagnostics(m0, 1e-10).nullity_estimate == plants);

        AlgebraicFinderConfig cfg;
        const AlgebraicResult result = run_algebraic_finder(lib, t, cfg);
        CHECK(static_cast<int>(result.relations.size()) == plants);
        // Once the plants are gone only noise fits remain; the loop stops
        // either on stagnation or because nothing clears the score floor.
        CHECK(result.stop_reason != StopReason::ReachedK);
        for (const RefinementStep& step : result.trace) {
            CHECK(step.diagnostics_after.nullity_estimate <
                  step.diagnostics_before.nullity_estimate);
            CHECK(step.diagnostics_after.numeric_rank == step.diagnostics_before.numeric_rank);
            CHECK(step.diagnostics_after.log_condition < step.diagnostics_before.log_condition);
        }
        CHECK(svd_diagnostics(evaluate_library(result.refined_library, t, true), 1e-10)
                  .nullity_estimate == 0);
    }
}

TEST_CASE("clean enzyme kinetics data yields a spanning relation set") {
    const CrnSpec spec;
    const TimeSeriesTable t = simulate_crn(spec, CrnNetwork::Crn1, 40.0, 400);
    const CandidateLibrary lib = build_polynomial_library(t.names, 2, true);
    AlgebraicFinderConfig cfg;
    const AlgebraicResult result = run_algebraic_finder(lib, t, cfg);

    CHECK(result.stop_reason == StopReason::ConditionStagnation);
    CHECK(result.relations.size() >= 2);

    // Every accepted relation holds on the generating trajectory.
    const LibraryMatrix raw = evaluate_library(lib, t, false);
    for (const AlgebraicRelation& rel : result.relations) {
        Eigen::VectorXd residual = Eigen::VectorXd::Zero(t.rows());
        double max_rms = 0.0;
        for (const auto& [term, coeff] : rel.coefficients) {
            if (coeff == 0.0) continue;
            const Eigen::VectorXd col = raw.values.col(lib.index_of(term)) * coeff;
            residual += col;
            max_rms = std::max(max_rms, std::sqrt(col.squaredNorm() / t.rows()));
        }
        CHECK(std::sqrt(residual.squaredNorm() / t.rows()) <= 1e-6 * max_rms);
    }

    // The true relations lie in the span of the discovered set.
    DiscoveredModel model;
    model.states = t.names;
    model.algebraic = result.relations;
    const RecoveryMetrics metrics =
        recovery_metrics(model, crn_reference_model(spec, CrnNetwork::Crn1), 1e-6);
    CHECK(metrics.algebraic_recovery_pct == 100.0);

    // No perfectly correlated column pair survives in the refined library.
    const LibraryMatrix refined = evaluate_library(result.refined_library, t, true);
    for (std::size_t i = 0; i < refined.library.size(); ++i) {
        if (refined.degenerate[i]) continue;
        for (std::size_t j = i + 1; j < refined.library.size(); ++j) {
            if (refined.degenerate[j]) continue;
            const double corr =
                std::abs(refined.values.col(i).dot(refined.values.col(j))) / t.rows();
            CHECK(corr < 1.0 - 1e-9);
        }
    }
}

TEST_CASE("finder results are identical across runs") {
    TimeSeriesTable t = planted_table(2, 400, 23);
    const CandidateLibrary lib = build_polynomial_library(t.names, 1, true);
    AlgebraicFinderConfig cfg;
    const AlgebraicResult a = run_algebraic_finder(lib, t, cfg);
    const AlgebraicResult b = run_algebraic_finder(lib, t, cfg);
    REQUIRE(a.relations.size() == b.relations.size());
    for (std::size_t i = 0; i < a.relations.size(); ++i) {
        CHECK(a.relations[i].coefficients == b.relations[i].coefficients);
        CHECK(a.relations[i].score == b.relations[i].score);
    }
}

TEST_CASE("score floor stops refinement on pure noise") {
    TimeSeriesTable t = random_states({"p", "q", "r", "s"}, 300, 29);
    const CandidateLibrary lib = build_polynomial_library(t.names, 1, true);
    AlgebraicFinderConfig cfg;
    cfg.sparse.threshold = 0.0;  // even dense fits must fail the score floor
    const AlgebraicResult result = run_algebraic_finder(lib, t, cfg);
    CHECK(result.relations.empty());
    CHECK(result.stop_reason == StopReason::NoFitAboveScoreFloor);
}

TEST_CASE("mandated K beyond the data reports a warning with partial results") {
    TimeSeriesTable t = planted_table(1, 300, 31);
    const CandidateLibrary lib = build_polynomial_library(t.names, 1, true);
    AlgebraicFinderConfig cfg;
    cfg.k_known = 3;
    const AlgebraicResult result = run_algebraic_finder(lib, t, cfg);
    CHECK(result.relations.size() == 1);
    CHECK_FALSE(result.warning.empty());
    CHECK(result.stop_reason == StopReason::NoFitAboveScoreFloor);
}
