#include "sparsedae/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "sparsedae/errors.hpp"

namespace sparsedae {

namespace {

Error err(const std::string& op, const std::string& code, const std::string& msg) {
    return Error("report", op, code, msg);
}

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

/// Support terms ordered for display: highest complexity first, encoding
/// breaking ties, constant last.
std::vector<std::pair<Term, double>> display_order(const std::map<Term, double>& coefficients) {
    std::vector<std::pair<Term, double>> entries;
    for (const auto& [term, coeff] : coefficients)
        if (coeff != 0.0) entries.emplace_back(term, coeff);
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        const int ca = complexity_score(a.first), cb = complexity_score(b.first);
        if (ca != cb) return ca > cb;
        return a.first.encoding() > b.first.encoding();
    });
    return entries;
}

void append_terms(std::ostringstream& out, const std::vector<std::pair<Term, double>>& entries) {
    bool first = true;
    for (const auto& [term, coeff] : entries) {
        const double mag = std::abs(coeff);
        if (first) {
            if (coeff < 0.0) out << '-';
        } else {
            out << (coeff < 0.0 ? " - " : " + ");
        }
        if (term.is_constant()) {
            out << format_number(mag);
        } else if (mag == 1.0) {
            out << term.encoding();
        } else {
            out << format_number(mag) << '*' << term.encoding();
        }
        first = false;
    }
}

}  // namespace

Term term_from_encoding(const std::string& text) {
    const std::string op = "term_from_encoding";
    if (text == "1") return Term::constant();
    Term term;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t next = pos;
        int depth = 0;
        while (next < text.size() && (text[next] != '*' || depth > 0)) {
            if (text[next] == '(') ++depth;
            if (text[next] == ')') --depth;
            ++next;
        }
        const std::string factor = text.substr(pos, next - pos);
        if (factor.rfind("sin(", 0) == 0 || factor.rfind("cos(", 0) == 0) {
            if (factor.back() != ')') throw err(op, "BadTerm", "unterminated atom in '" + text + "'");
            const bool is_sin = factor[0] == 's';
            const std::string inner = factor.substr(4, factor.size() - 5);
            const std::size_t dash = inner.find('-');
            if (dash == std::string::npos) {
                term = term * (is_sin ? Term::sin_of(inner) : Term::cos_of(inner));
            } else if (is_sin) {
                term = term * Term::sin_diff(inner.substr(0, dash), inner.substr(dash + 1));
            } else {
                throw err(op, "BadTerm", "cos of a difference is not in the grammar");
            }
        } else {
            const std::size_t caret = factor.find('^');
            if (caret == std::string::npos) {
                term = term * Term::state(factor);
            } else {
                term = term * Term::state(factor.substr(0, caret),
                                          std::atoi(factor.c_str() + caret + 1));
            }
        }
        pos = next + (next < text.size() ? 1 : 0);
    }
    return term;
}

namespace {

nlohmann::ordered_json relation_json(const AlgebraicRelation& relation) {
    nlohmann::ordered_json doc;
    nlohmann::ordered_json terms = nlohmann::ordered_json::array();
    nlohmann::ordered_json coeffs = nlohmann::ordered_json::array();
    for (const auto& [term, coeff] : relation.coefficients) {
        if (coeff == 0.0) continue;
        terms.push_back(term.encoding());
        coeffs.push_back(round_for_report(coeff));
    }
    doc["terms"] = std::move(terms);
    doc["coeffs"] = std::move(coeffs);
    doc["pivot"] = relation.pivot.encoding();
    doc["score"] = round_for_report(relation.score);
    doc["iteration"] = relation.iteration;
    doc["display"] = relation_to_string(relation);
    return doc;
}

nlohmann::ordered_json diagnostics_json(const SvdDiagnostics& diag) {
    nlohmann::ordered_json doc;
    nlohmann::ordered_json sv = nlohmann::ordered_json::array();
    for (double s : diag.singular_values) sv.push_back(round_for_report(s));
    nlohmann::ordered_json vr = nlohmann::ordered_json::array();
    for (double s : diag.variance_ratios) vr.push_back(round_for_report(s));
    doc["singular_values"] = std::move(sv);
    doc["variance_ratios"] = std::move(vr);
    doc["numeric_rank"] = diag.numeric_rank;
    doc["nullity_estimate"] = diag.nullity_estimate;
    doc["log_condition"] = round_for_report(diag.log_condition);
    return doc;
}

}  // namespace

double round_for_report(double v) {
    if (!std::isfinite(v)) return v;
    return std::strtod(format_number(v).c_str(), nullptr);
}

std::string relation_to_string(const AlgebraicRelation& relation) {
    std::vector<std::pair<Term, double>> entries = display_order(relation.coefficients);
    if (entries.empty()) return "0 = 0";
    const double lead = entries.front().second;
    for (auto& [term, coeff] : entries) coeff = round_for_report(coeff / lead);
    std::ostringstream out;
    out << "0 = ";
    append_terms(out, entries);
    return out.str();
}

std::string equation_to_string(const std::string& state, const OdeEquation& equation) {
    std::ostringstream out;
    if (equation.order == 2)
        out << "d2(" << state << ")/dt2 = ";
    else
        out << "d(" << state << ")/dt = ";
    if (!equation.discovered) {
        out << "<not discovered>";
        return out.str();
    }
    std::vector<std::pair<Term, double>> entries = display_order(equation.coefficients);
    if (entries.empty()) {
        out << '0';
        return out.str();
    }
    for (auto& [term, coeff] : entries) coeff = round_for_report(coeff);
    append_terms(out, entries);
    return out.str();
}

std::string rationale_name(RoleRationale rationale) {
    switch (rationale) {
        case RoleRationale::NoRelationMembership: return "no_relation_membership";
        case RoleRationale::UserPreference: return "user_preference";
        case RoleRationale::PivotElimination: return "pivot_elimination";
        case RoleRationale::DynamicRange: return "dynamic_range";
    }
    return "unknown";
}

std::string stop_reason_name(StopReason reason) {
    switch (reason) {
        case StopReason::ReachedK: return "reached_K";
        case StopReason::ConditionStagnation: return "condition_stagnation";
        case StopReason::NoFitAboveScoreFloor: return "no_fit_above_score_floor";
    }
    return "unknown";
}

nlohmann::ordered_json model_to_json(const DiscoveredModel& model) {
    nlohmann::ordered_json doc;
    doc["states"] = model.states;

    nlohmann::ordered_json roles;
    roles["differential"] = model.roles.differential;
    roles["algebraic"] = model.roles.algebraic;
    nlohmann::ordered_json rationale;
    for (const auto& [state, r] : model.roles.rationale) rationale[state] = rationale_name(r);
    roles["rationale"] = std::move(rationale);
    doc["roles"] = std::move(roles);

    nlohmann::ordered_json relations = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < model.algebraic.size(); ++i) {
        nlohmann::ordered_json rel = relation_json(model.algebraic[i]);
        const auto it = model.relation_residual_rms.find(static_cast<int>(i));
        if (it != model.relation_residual_rms.end())
            rel["residual_rms"] = round_for_report(it->second);
        relations.push_back(std::move(rel));
    }
    doc["algebraic"] = std::move(relations);

    nlohmann::ordered_json odes;
    for (const auto& [state, eq] : model.odes) {
        nlohmann::ordered_json entry;
        entry["order"] = eq.order;
        nlohmann::ordered_json terms = nlohmann::ordered_json::array();
        nlohmann::ordered_json coeffs = nlohmann::ordered_json::array();
        for (const auto& [term, coeff] : eq.coefficients) {
            if (coeff == 0.0) continue;
            terms.push_back(term.encoding());
            coeffs.push_back(round_for_report(coeff));
        }
        entry["terms"] = std::move(terms);
        entry["coeffs"] = std::move(coeffs);
        entry["score"] = round_for_report(eq.score);
        entry["discovered"] = eq.discovered;
        entry["display"] = equation_to_string(state, eq);
        odes[state] = std::move(entry);
    }
    doc["odes"] = std::move(odes);
    return doc;
}

DiscoveredModel model_from_json(const nlohmann::ordered_json& doc) {
    const std::string op = "model_from_json";
    DiscoveredModel model;
    model.states = doc.at("states").get<std::vector<std::string>>();
    model.roles.differential = doc.at("roles").at("differential").get<std::vector<std::string>>();
    model.roles.algebraic = doc.at("roles").at("algebraic").get<std::vector<std::string>>();
    for (const auto& [state, name] : doc.at("roles").at("rationale").items()) {
        const std::string n = name.get<std::string>();
        RoleRationale r = RoleRationale::NoRelationMembership;
        if (n == "user_preference") r = RoleRationale::UserPreference;
        else if (n == "pivot_elimination") r = RoleRationale::PivotElimination;
        else if (n == "dynamic_range") r = RoleRationale::DynamicRange;
        model.roles.rationale[state] = r;
    }

    int index = 0;
    for (const auto& rel_doc : doc.at("algebraic")) {
        AlgebraicRelation rel;
        const auto& terms = rel_doc.at("terms");
        const auto& coeffs = rel_doc.at("coeffs");
        if (terms.size() != coeffs.size()) throw err(op, "BadModel", "terms/coeffs length mismatch");
        for (std::size_t i = 0; i < terms.size(); ++i)
            rel.coefficients[term_from_encoding(terms[i].get<std::string>())] = coeffs[i].get<double>();
        rel.pivot = term_from_encoding(rel_doc.at("pivot").get<std::string>());
        rel.score = rel_doc.at("score").get<double>();
        rel.iteration = rel_doc.at("iteration").get<int>();
        if (rel_doc.contains("residual_rms"))
            model.relation_residual_rms[index] = rel_doc.at("residual_rms").get<double>();
        model.algebraic.push_back(std::move(rel));
        ++index;
    }

    for (const auto& [state, entry] : doc.at("odes").items()) {
        OdeEquation eq;
        eq.order = entry.at("order").get<int>();
        const auto& terms = entry.at("terms");
        const auto& coeffs = entry.at("coeffs");
        if (terms.size() != coeffs.size()) throw err(op, "BadModel", "terms/coeffs length mismatch");
        for (std::size_t i = 0; i < terms.size(); ++i)
            eq.coefficients[term_from_encoding(terms[i].get<std::string>())] = coeffs[i].get<double>();
        eq.score = entry.at("score").get<double>();
        eq.discovered = entry.at("discovered").get<bool>();
        model.odes[state] = std::move(eq);
    }
    return model;
}

nlohmann::ordered_json trace_to_json(const AlgebraicResult& result) {
    nlohmann::ordered_json doc;
    doc["stop_reason"] = stop_reason_name(result.stop_reason);
    if (!result.warning.empty()) doc["warning"] = result.warning;

    nlohmann::ordered_json steps = nlohmann::ordered_json::array();
    for (const RefinementStep& step : result.trace) {
        nlohmann::ordered_json entry;
        entry["iteration"] = step.iteration;
        entry["relation"] = relation_json(step.relation);
        entry["removed_pivot"] = step.removed_pivot.encoding();
        nlohmann::ordered_json removed = nlohmann::ordered_json::array();
        for (const Term& t : step.removed_set) removed.push_back(t.encoding());
        entry["removed_terms"] = std::move(removed);
        entry["score"] = round_for_report(step.score);
        entry["svd_before"] = diagnostics_json(step.diagnostics_before);
        entry["svd_after"] = diagnostics_json(step.diagnostics_after);
        entry["improvement"] = round_for_report(step.diagnostics_before.log_condition -
                                                step.diagnostics_after.log_condition);
        steps.push_back(std::move(entry));
    }
    doc["steps"] = std::move(steps);

    nlohmann::ordered_json refined = nlohmann::ordered_json::array();
    for (const Term& t : result.refined_library.terms) refined.push_back(t.encoding());
    doc["refined_library"] = std::move(refined);
    doc["generation"] = result.refined_library.generation;
    return doc;
}

std::string text_report(const DiscoveredModel& model) {
    std::ostringstream out;
    out << "Discovered DAE system\n";
    out << "=====================\n\n";
    out << "Algebraic relations (" << model.algebraic.size() << "):\n";
    for (std::size_t i = 0; i < model.algebraic.size(); ++i) {
        out << "  [" << (i + 1) << "] " << relation_to_string(model.algebraic[i])
            << "   (score=" << format_number(round_for_report(model.algebraic[i].score)) << ")\n";
    }
    out << "\nDifferential equations (" << model.odes.size() << "):\n";
    for (const auto& [state, eq] : model.odes)
        out << "  " << equation_to_string(state, eq)
            << "   (score=" << format_number(round_for_report(eq.score)) << ")\n";
    out << "\nRoles:\n";
    out << "  differential:";
    for (const auto& s : model.roles.differential) out << ' ' << s;
    out << "\n  algebraic:";
    for (const auto& s : model.roles.algebraic) out << ' ' << s;
    out << '\n';
    return out.str();
}

std::string dump_json(const nlohmann::ordered_json& doc) { return doc.dump(2) + "\n"; }

}  // namespace sparsedae
