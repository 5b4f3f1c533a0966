#pragma once

// JSON serialization for the four file kinds (scenario, behavior, wiring,
// report) plus result payloads. Rationals travel as "num/den" strings;
// decimal and integer JSON numbers are accepted on input and converted
// exactly via their shortest decimal form.

#include <optional>
#include <string>

#include "json.hpp"

#include "ctxkit/quantifiers.hpp"
#include "ctxkit/scenario.hpp"
#include "ctxkit/wirings.hpp"

namespace ctxkit {

using Json = nlohmann::ordered_json;

Rational rational_from_json(const Json& v);
Json rational_to_json(const Rational& v);  // "p/q" string

Json scenario_to_json(const Scenario& s);
ScenarioPtr scenario_from_json(const Json& j);

// Behavior files either inline their scenario or reference it by path;
// relative paths resolve against `base_dir`.
Json behavior_to_json(const Behavior& b);
Behavior behavior_from_json(const Json& j, const std::string& base_dir = "");

// A wiring file may carry a pre part, a post part, or both (a full wiring).
struct WiringParts {
    std::optional<PreProcessing> pre;
    std::optional<PostProcessing> post;

    bool is_full() const { return pre && post; }
    NCWiring full() const;
};

Json wiring_to_json(const WiringParts& w);
WiringParts wiring_from_json(const Json& j, ScenarioPtr target,
                             const std::string& base_dir = "");

Json report_to_json(const SuiteReport& r);
SuiteReport report_from_json(const Json& j);

Json quantifier_result_to_json(const QuantifierResult& r, const Behavior* b = nullptr);
Json nc_result_to_json(const NoncontextualityResult& r, const Behavior& b);
Json nd_report_to_json(const NonDisturbanceReport& r, const Behavior& b);
Json diagnostics_to_json(const std::vector<Diagnostic>& diags);

// File helpers; parse failures raise ParseError naming the file and location.
Json load_json_file(const std::string& path);
void store_json_file(const std::string& path, const Json& j);

ScenarioPtr load_scenario(const std::string& path);
Behavior load_behavior(const std::string& path);
WiringParts load_wiring(const std::string& path, ScenarioPtr target);
SuiteReport load_report(const std::string& path);

void store_scenario(const std::string& path, const Scenario& s);
void store_behavior(const std::string& path, const Behavior& b);
void store_wiring(const std::string& path, const WiringParts& w);
void store_report(const std::string& path, const SuiteReport& r);

}  // namespace ctxkit
