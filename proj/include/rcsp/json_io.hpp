#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "rcsp/instance.hpp"
#include "rcsp/language.hpp"
#include "rcsp/prague.hpp"
#include "rcsp/rounding.hpp"
#include "rcsp/sdp.hpp"

namespace rcsp {

// Instances: {"num_variables": int, "domain_size": int,
//             "constraints": [{"scope": [int,...], "relation": [[int,...],...]}, ...]}
Instance parse_instance(const std::string& text);
std::string serialize_instance(const Instance& instance);

// Assignments: {"values": [int,...]}
Assignment parse_assignment(const std::string& text);
std::string serialize_assignment(const Assignment& assignment);

// Languages: {"domain_size": int, "relations": {"name": [[int,...],...]},
//             "f1": table or null, "f2": table or null}
// Operation tables are accepted both as flat row-major arrays and as nested
// arrays; they are written flat.
ConstraintLanguage parse_language(const std::string& text);
std::string serialize_language(const ConstraintLanguage& language);

// Vector files: {"dimension": int, "vectors": {"<var>:<val>": [real,...]}},
// reals written with 17 significant digits.
SDPVectors parse_vectors(const std::string& text);
std::string serialize_vectors(const SDPVectors& vectors);

// Symmetric binary instances reuse the instance schema with ordered-pair
// scopes; missing reversals are filled in, conflicting ones rejected.
PragueInstance parse_prague(const std::string& text);
std::string serialize_prague(const PragueInstance& prague);

nlohmann::json verdict_to_json(const PragueVerdict& verdict);
nlohmann::json feasibility_to_json(const FeasibilityReport& report);
nlohmann::json report_to_json(const RoundingReport& report);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace rcsp
