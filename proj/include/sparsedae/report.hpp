#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "sparsedae/algfinder.hpp"
#include "sparsedae/dynfinder.hpp"

namespace sparsedae {

/// Parse a term back from its report encoding (`name^e` factors joined by
/// `*`, `sin(a-b)` / `cos(a)` atoms, `1` for the constant).
Term term_from_encoding(const std::string& text);

/// Render a relation or equation in the report grammar: terms ordered by
/// descending complexity (then descending encoding), the leading
/// coefficient normalized to +1 for relations, unit coefficients omitted.
std::string relation_to_string(const AlgebraicRelation& relation);
std::string equation_to_string(const std::string& state, const OdeEquation& equation);

/// Model document: {states, roles, algebraic:[{terms,coeffs,score}],
/// odes:{state:{order,terms,coeffs,score}}}. Deterministic: stable key
/// order, numbers rounded to 12 significant digits.
nlohmann::ordered_json model_to_json(const DiscoveredModel& model);
DiscoveredModel model_from_json(const nlohmann::ordered_json& doc);

nlohmann::ordered_json trace_to_json(const AlgebraicResult& result);

/// Human-readable report: relations ordered by discovery iteration, then
/// the differential equations.
std::string text_report(const DiscoveredModel& model);

/// Serialize with the canonical layout used by every artifact writer.
std::string dump_json(const nlohmann::ordered_json& doc);

/// Round to 12 significant digits so emitted documents are byte-stable
/// across emit -> parse -> emit cycles.
double round_for_report(double v);

std::string stop_reason_name(StopReason reason);
std::string rationale_name(RoleRationale rationale);

}  // namespace sparsedae
