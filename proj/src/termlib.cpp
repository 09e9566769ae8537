#include "sparsedae/termlib.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>

#include "sparsedae/errors.hpp"

namespace sparsedae {

namespace {

const char* kModule = "termlib";

Error err(const std::string& op, const std::string& code, const std::string& msg) {
    return Error(kModule, op, code, msg);
}

}  // namespace

Term Term::constant() { return Term(); }

Term Term::state(const std::string& name, int exponent) {
    Term t;
    if (exponent < 0) throw err("state", "BadExponent", "exponent must be >= 0");
    if (exponent > 0) t.monomial_[name] = exponent;
    return t;
}

Term Term::sin_diff(const std::string& a, const std::string& b) {
    Term t;
    t.atoms_.push_back(TrigAtom{TrigAtom::Kind::Sin, a, b});
    return t;
}

Term Term::sin_of(const std::string& name) {
    Term t;
    t.atoms_.push_back(TrigAtom{TrigAtom::Kind::Sin, name, ""});
    return t;
}

Term Term::cos_of(const std::string& name) {
    Term t;
    t.atoms_.push_back(TrigAtom{TrigAtom::Kind::Cos, name, ""});
    return t;
}

Term Term::operator*(const Term& other) const {
    Term out = *this;
    for (const auto& [name, exp] : other.monomial_) out.monomial_[name] += exp;
    out.atoms_.insert(out.atoms_.end(), other.atoms_.begin(), other.atoms_.end());
    std::sort(out.atoms_.begin(), out.atoms_.end());
    return out;
}

int Term::degree() const {
    int d = 0;
    for (const auto& [name, exp] : monomial_) d += exp;
    return d;
}

bool Term::divides(const Term& other) const {
    for (const auto& [name, exp] : monomial_) {
        auto it = other.monomial_.find(name);
        if (it == other.monomial_.end() || it->second < exp) return false;
    }
    // Atom multiset inclusion: atoms_ is sorted, so count occurrences.
    std::size_t i = 0, j = 0;
    while (i < atoms_.size()) {
        while (j < other.atoms_.size() && other.atoms_[j] < atoms_[i]) ++j;
        if (j >= other.atoms_.size() || !(other.atoms_[j] == atoms_[i])) return false;
        ++i;
        ++j;
    }
    return true;
}

std::optional<Term> Term::divided_by(const Term& divisor) const {
    if (!divisor.divides(*this)) return std::nullopt;
    Term out = *this;
    for (const auto& [name, exp] : divisor.monomial_) {
        out.monomial_[name] -= exp;
        if (out.monomial_[name] == 0) out.monomial_.erase(name);
    }
    for (const auto& atom : divisor.atoms_) {
        auto it = std::find(out.atoms_.begin(), out.atoms_.end(), atom);
        out.atoms_.erase(it);
    }
    return out;
}

std::set<std::string> Term::state_names() const {
    std::set<std::string> names;
    for (const auto& [name, exp] : monomial_) names.insert(name);
    for (const auto& atom : atoms_) {
        names.insert(atom.lhs);
        if (!atom.rhs.empty()) names.insert(atom.rhs);
    }
    return names;
}

std::string Term::encoding() const {
    if (is_constant()) return "1";
    std::ostringstream out;
    bool first = true;
    for (const auto& [name, exp] : monomial_) {
        if (!first) out << '*';
        out << name;
        if (exp > 1) out << '^' << exp;
        first = false;
    }
    for (const auto& atom : atoms_) {
        if (!first) out << '*';
        out << (atom.kind == TrigAtom::Kind::Sin ? "sin(" : "cos(") << atom.lhs;
        if (!atom.rhs.empty()) out << '-' << atom.rhs;
        out << ')';
        first = false;
    }
    return out.str();
}

double Term::evaluate(const TimeSeriesTable& table, Eigen::Index row,
                      const std::vector<int>& column_of_state) const {
    double v = 1.0;
    int slot = 0;
    for (const auto& [name, exp] : monomial_) {
        const double x = table.values(row, column_of_state[slot++]);
        for (int k = 0; k < exp; ++k) v *= x;
    }
    for (const auto& atom : atoms_) {
        double arg = table.values(row, column_of_state[slot++]);
        if (!atom.rhs.empty()) arg -= table.values(row, column_of_state[slot++]);
        v *= atom.kind == TrigAtom::Kind::Sin ? std::sin(arg) : std::cos(arg);
    }
    return v;
}

int complexity_score(const Term& term) { return term.degree() + term.atom_count(); }

int CandidateLibrary::index_of(const Term& term) const {
    for (std::size_t i = 0; i < terms.size(); ++i)
        if (terms[i] == term) return static_cast<int>(i);
    return -1;
}

std::size_t LibraryMatrix::usable_columns() const {
    std::size_t n = 0;
    for (bool d : degenerate)
        if (!d) ++n;
    return n;
}

std::vector<Term> AlgebraicRelation::support() const {
    std::vector<Term> terms;
    terms.reserve(coefficients.size());
    for (const auto& [term, coeff] : coefficients)
        if (coeff != 0.0) terms.push_back(term);
    return terms;
}

CandidateLibrary build_polynomial_library(const std::vector<std::string>& states, int max_degree,
                                          bool include_constant) {
    const std::string op = "build_polynomial_library";
    if (states.empty()) throw err(op, "EmptyStates", "need at least one state");
    if (max_degree < 1) throw err(op, "BadDegree", "max_degree must be >= 1");
    std::set<std::string> unique(states.begin(), states.end());
    if (unique.size() != states.size()) throw err(op, "DuplicateName", "state names must be unique");

    std::vector<std::string> sorted_states(states.begin(), states.end());
    std::sort(sorted_states.begin(), sorted_states.end());

    CandidateLibrary lib;
    if (include_constant) lib.terms.push_back(Term::constant());

    // Monomials of exact degree d, enumerated as non-decreasing index
    // sequences so the order within a degree is lexicographic.
    const int n = static_cast<int>(sorted_states.size());
    for (int d = 1; d <= max_degree; ++d) {
        std::vector<int> idx;
        std::function<void(int)> emit = [&](int lo) {
            if (static_cast<int>(idx.size()) == d) {
                Term t;
                for (int i : idx) t = t * Term::state(sorted_states[i]);
                lib.terms.push_back(t);
                return;
            }
            for (int i = lo; i < n; ++i) {
                idx.push_back(i);
                emit(i);
                idx.pop_back();
            }
        };
        emit(0);
    }
    return lib;
}

CandidateLibrary build_grid_library(int n_nodes, std::optional<int> restrict_to_node) {
    const std::string op = "build_grid_library";
    if (n_nodes < 2) throw err(op, "BadNodeCount", "need at least 2 nodes");
    if (restrict_to_node && (*restrict_to_node < 1 || *restrict_to_node > n_nodes))
        throw err(op, "BadNodeIndex", "restrict_to_node out of range");

    auto phi = [](int i) { return "phi_" + std::to_string(i); };
    CandidateLibrary lib;
    for (int i = 1; i <= n_nodes; ++i) lib.terms.push_back(Term::state("Pe_" + std::to_string(i)));
    for (int i = 1; i <= n_nodes; ++i) lib.terms.push_back(Term::state(phi(i)));
    for (int i = 1; i <= n_nodes; ++i)
        lib.terms.push_back(Term::state("phidot_" + std::to_string(i)));

    if (restrict_to_node) {
        const int i = *restrict_to_node;
        for (int j = 1; j <= n_nodes; ++j)
            if (j != i) lib.terms.push_back(Term::sin_diff(phi(i), phi(j)));
    } else {
        for (int i = 1; i <= n_nodes; ++i)
            for (int j = i; j <= n_nodes; ++j) lib.terms.push_back(Term::sin_diff(phi(i), phi(j)));
    }
    return lib;
}

LibraryMatrix evaluate_library(const CandidateLibrary& lib, const TimeSeriesTable& table,
                               bool normalize) {
    const std::string op = "evaluate_library";
    table.validate(op);
    const Eigen::Index n = table.rows();
    const auto j_count = static_cast<Eigen::Index>(lib.size());

    LibraryMatrix out;
    out.library = lib;
    out.values.resize(n, j_count);
    out.column_scales = Eigen::VectorXd::Ones(j_count);
    out.degenerate.assign(lib.size(), false);

    for (Eigen::Index j = 0; j < j_count; ++j) {
        const Term& term = lib.terms[j];
        // Resolve state columns once per term, in evaluate()'s access order.
        std::vector<int> cols;
        for (const auto& [name, exp] : term.monomial()) {
            const int c = table.column_index(name);
            if (c < 0) throw err(op, "MissingState", "state '" + name + "' not in table");
            cols.push_back(c);
        }
        for (const auto& atom : term.atoms()) {
            const int c = table.column_index(atom.lhs);
            if (c < 0) throw err(op, "MissingState", "state '" + atom.lhs + "' not in table");
            cols.push_back(c);
            if (!atom.rhs.empty()) {
                const int c2 = table.column_index(atom.rhs);
                if (c2 < 0) throw err(op, "MissingState", "state '" + atom.rhs + "' not in table");
                cols.push_back(c2);
            }
        }
        for (Eigen::Index r = 0; r < n; ++r) out.values(r, j) = term.evaluate(table, r, cols);
        if (!out.values.col(j).allFinite())
            throw err(op, "NonFiniteValue", "term " + term.encoding() + " evaluated non-finite");

        const double rms = std::sqrt(out.values.col(j).squaredNorm() / static_cast<double>(n));
        if (rms <= 0.0) {
            out.degenerate[j] = true;
        } else if (normalize) {
            out.column_scales(j) = rms;
            out.values.col(j) /= rms;
        }
    }
    return out;
}

std::vector<Term> multiples_of(const Term& term, const CandidateLibrary& lib) {
    if (!lib.contains(term))
        throw err("multiples_of", "TermNotInLibrary", term.encoding() + " not in library");
    std::vector<Term> out;
    for (const Term& u : lib.terms)
        if (term.divides(u)) out.push_back(u);
    return out;
}

AlgebraicRelation reduce_relation(const AlgebraicRelation& relation) {
    const std::vector<Term> support = relation.support();
    if (support.empty())
        throw err("reduce_relation", "EmptyRelation", "relation has no nonzero terms");

    // Greatest common factor: componentwise minimum of exponents and the
    // multiset intersection of atoms across the support.
    std::map<std::string, int> gcd_mono = support.front().monomial();
    std::vector<TrigAtom> gcd_atoms = support.front().atoms();
    for (std::size_t i = 1; i < support.size(); ++i) {
        const auto& mono = support[i].monomial();
        for (auto it = gcd_mono.begin(); it != gcd_mono.end();) {
            auto found = mono.find(it->first);
            if (found == mono.end()) {
                it = gcd_mono.erase(it);
            } else {
                it->second = std::min(it->second, found->second);
                ++it;
            }
        }
        std::vector<TrigAtom> kept;
        std::vector<TrigAtom> other = support[i].atoms();
        for (const auto& atom : gcd_atoms) {
            auto found = std::find(other.begin(), other.end(), atom);
            if (found != other.end()) {
                kept.push_back(atom);
                other.erase(found);
            }
        }
        gcd_atoms = std::move(kept);
    }

    Term gcd;
    for (const auto& [name, exp] : gcd_mono) gcd = gcd * Term::state(name, exp);
    for (const auto& atom : gcd_atoms) {
        Term t;
        t = (atom.kind == TrigAtom::Kind::Sin)
                ? (atom.rhs.empty() ? Term::sin_of(atom.lhs) : Term::sin_diff(atom.lhs, atom.rhs))
                : Term::cos_of(atom.lhs);
        gcd = gcd * t;
    }
    if (gcd.is_constant()) return relation;

    AlgebraicRelation reduced;
    reduced.score = relation.score;
    reduced.iteration = relation.iteration;
    for (const auto& [term, coeff] : relation.coefficients) {
        if (coeff == 0.0) continue;
        reduced.coefficients[*term.divided_by(gcd)] = coeff;
    }
    reduced.pivot = relation.pivot.divided_by(gcd).value_or(relation.pivot);
    return reduced;
}

CandidateLibrary remove_terms(const CandidateLibrary& lib, const std::vector<Term>& removal) {
    for (const Term& t : removal)
        if (!lib.contains(t))
            throw err("remove_terms", "NotASubset", t.encoding() + " not in library");
    CandidateLibrary out;
    out.generation = lib.generation + 1;
    for (const Term& t : lib.terms) {
        const bool removed = std::any_of(removal.begin(), removal.end(),
                                         [&](const Term& r) { return r == t; });
        if (!removed) out.terms.push_back(t);
    }
    return out;
}

}  // namespace sparsedae
