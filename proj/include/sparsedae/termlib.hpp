#pragma once

#include <Eigen/Core>
#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sparsedae/timeseries.hpp"

namespace sparsedae {

/// A trigonometric factor: sin/cos of a single state or of a difference of
/// two states (phase-difference couplings). Atoms with swapped operands are
/// distinct terms; libraries generate each pair once in a fixed order.
struct TrigAtom {
    enum class Kind { Sin, Cos };
    Kind kind = Kind::Sin;
    std::string lhs;
    std::string rhs;  // empty for single-operand atoms

    auto operator<=>(const TrigAtom&) const = default;
};

/// A candidate function: a product of state powers and trig atoms. The empty
/// product is the constant term. Terms are canonical - states are kept sorted
/// by name, atoms by (kind, operands) - so two terms are equal exactly when
/// their encodings are byte-equal.
class Term {
  public:
    Term() = default;

    static Term constant();
    static Term state(const std::string& name, int exponent = 1);
    static Term sin_diff(const std::string& a, const std::string& b);
    static Term sin_of(const std::string& name);
    static Term cos_of(const std::string& name);

    Term operator*(const Term& other) const;

    bool is_constant() const { return monomial_.empty() && atoms_.empty(); }
    /// True when the term is name^k for a single state and has no atoms.
    bool is_pure_state_power() const { return atoms_.empty() && monomial_.size() == 1; }

    int degree() const;
    int atom_count() const { return static_cast<int>(atoms_.size()); }

    bool divides(const Term& other) const;
    std::optional<Term> divided_by(const Term& divisor) const;

    /// All state names the term depends on, including atom operands.
    std::set<std::string> state_names() const;

    /// Report grammar: `name^e` factors joined by `*`, then atoms as
    /// `sin(a-b)` / `cos(a)`; the constant term prints as `1`.
    std::string encoding() const;

    double evaluate(const TimeSeriesTable& table, Eigen::Index row,
                    const std::vector<int>& column_of_state) const;

    const std::map<std::string, int>& monomial() const { return monomial_; }
    const std::vector<TrigAtom>& atoms() const { return atoms_; }

    bool operator==(const Term& other) const {
        return monomial_ == other.monomial_ && atoms_ == other.atoms_;
    }
    bool operator<(const Term& other) const { return encoding() < other.encoding(); }

  private:
    std::map<std::string, int> monomial_;  // state -> exponent >= 1
    std::vector<TrigAtom> atoms_;          // sorted
};

/// Complexity rank used to pick refinement pivots: total monomial degree
/// plus one per trig atom; the constant term scores 0.
int complexity_score(const Term& term);

/// Ordered set of distinct candidate terms. `generation` counts refinement
/// steps; surviving terms keep their relative order across refinements.
struct CandidateLibrary {
    std::vector<Term> terms;
    int generation = 0;

    std::size_t size() const { return terms.size(); }
    int index_of(const Term& term) const;  // -1 when absent
    bool contains(const Term& term) const { return index_of(term) >= 0; }
};

/// Numeric evaluation of a library on a table. When normalized, each column
/// is divided by its root-mean-square (stored in column_scales); zero-RMS
/// columns keep scale 1 and are flagged degenerate.
struct LibraryMatrix {
    CandidateLibrary library;
    Eigen::MatrixXd values;             // N x J (normalized when requested)
    Eigen::VectorXd column_scales;      // J
    std::vector<bool> degenerate;       // J

    std::size_t usable_columns() const;
};

/// A sparse linear relation sum_j c_j theta_j(x) = 0 over library terms.
/// `pivot` is the term that was regressed on; its coefficient is folded in
/// as -1 (in unnormalized units). Coefficients of the regressors are stored
/// unnormalized as well.
struct AlgebraicRelation {
    std::map<Term, double> coefficients;
    Term pivot;
    double score = 0.0;
    int iteration = 0;

    std::vector<Term> support() const;
};

/// All monomials of total degree 1..max_degree over the given states, plus
/// the constant term when requested. Order: constant, then degree ascending,
/// ties in lexicographic factor order.
CandidateLibrary build_polynomial_library(const std::vector<std::string>& states, int max_degree,
                                          bool include_constant);

/// Power-grid library over nodes 1..n: electrical powers Pe_i, phases phi_i,
/// frequencies phidot_i, and sine couplings sin(phi_i - phi_j).
/// Unrestricted: couplings for all i <= j (3n + n(n+1)/2 terms, the i == j
/// entries evaluate to zero and are flagged degenerate). Restricted to node
/// i: couplings sin(phi_i - phi_j) for j != i only (4n - 1 terms).
CandidateLibrary build_grid_library(int n_nodes, std::optional<int> restrict_to_node = {});

/// Evaluate each term on every row of the table.
LibraryMatrix evaluate_library(const CandidateLibrary& lib, const TimeSeriesTable& table,
                               bool normalize);

/// All u in lib such that term divides u (includes term itself).
std::vector<Term> multiples_of(const Term& term, const CandidateLibrary& lib);

/// Divide out the greatest common monomial/atom factor of the support.
/// Coefficients are unchanged; the identity when the GCD is the constant.
AlgebraicRelation reduce_relation(const AlgebraicRelation& relation);

/// Remove a subset of terms; survivors keep their order, generation + 1.
CandidateLibrary remove_terms(const CandidateLibrary& lib, const std::vector<Term>& removal);

}  // namespace sparsedae
