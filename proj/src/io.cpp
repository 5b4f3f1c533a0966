#include "ctxkit/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace ctxkit {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    return parts;
}

int require_measurement(const Scenario& s, const std::string& name, const char* where) {
    int idx = s.measurement_index(name);
    if (idx < 0)
        throw ParseError(std::string(where) + ": unknown measurement '" + name + "'");
    return idx;
}

int require_outcome(const Scenario& s, const std::string& label, const char* where) {
    int idx = s.outcome_index(label);
    if (idx < 0) throw ParseError(std::string(where) + ": unknown outcome '" + label + "'");
    return idx;
}

std::string tuple_key(const Scenario& s, const OutcomeIndexTuple& t) {
    std::string key;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (i) key += ",";
        key += s.outcomes.at(t[i]);
    }
    return key;
}

std::string assignment_key(const Scenario& s, const GlobalAssignment& g) {
    std::string key;
    for (std::size_t m = 0; m < g.outcome_for.size(); ++m) {
        if (m) key += ",";
        key += s.outcomes.at(g.outcome_for[m]);
    }
    return key;
}

}  // namespace

Rational rational_from_json(const Json& v) {
    if (v.is_string()) return parse_rational(v.get<std::string>());
    if (v.is_number_integer()) return Rational(static_cast<long>(v.get<std::int64_t>()));
    if (v.is_number_unsigned()) return Rational(static_cast<unsigned long>(v.get<std::uint64_t>()));
    // shortest round-trip decimal of the stored double; terminating decimals
    // like 0.25 or 0.1 convert to the exact rational the author wrote
    if (v.is_number_float()) return parse_rational(v.dump());
    throw ParseError("expected a number or \"num/den\" string, got " + v.dump());
}

Json rational_to_json(const Rational& v) {
    return format_rational(v);
}

Json scenario_to_json(const Scenario& s) {
    Json j;
    j["measurements"] = s.measurements;
    j["outcomes"] = s.outcomes;
    Json contexts = Json::array();
    for (const auto& ctx : s.contexts) {
        Json c = Json::array();
        for (int m : ctx) c.push_back(s.measurements.at(m));
        contexts.push_back(c);
    }
    j["contexts"] = contexts;
    if (!s.renamed_from.empty()) j["renamed"] = s.renamed_from;
    return j;
}

ScenarioPtr scenario_from_json(const Json& j) {
    if (!j.is_object()) throw ParseError("scenario: expected an object");
    for (const char* field : {"measurements", "outcomes", "contexts"})
        if (!j.contains(field))
            throw ParseError(std::string("scenario: missing field '") + field + "'");
    auto s = make_scenario(j.at("measurements").get<std::vector<std::string>>(),
                           j.at("outcomes").get<std::vector<std::string>>(),
                           j.at("contexts").get<std::vector<std::vector<std::string>>>());
    if (j.contains("renamed")) {
        auto copy = std::make_shared<Scenario>(*s);
        copy->renamed_from = j.at("renamed").get<std::map<std::string, std::string>>();
        return copy;
    }
    return s;
}

Json behavior_to_json(const Behavior& b) {
    Json j;
    j["scenario"] = scenario_to_json(*b.scenario);
    Json tables = Json::object();
    for (std::size_t c = 0; c < b.tables.size(); ++c) {
        Json table = Json::object();
        for (const auto& [tuple, p] : b.tables[c])
            table[tuple_key(*b.scenario, tuple)] = rational_to_json(p);
        tables[std::to_string(c)] = table;
    }
    j["tables"] = tables;
    return j;
}

Behavior behavior_from_json(const Json& j, const std::string& base_dir) {
    if (!j.is_object() || !j.contains("scenario") || !j.contains("tables"))
        throw ParseError("behavior: expected an object with 'scenario' and 'tables'");

    ScenarioPtr scenario;
    if (j.at("scenario").is_string()) {
        std::filesystem::path p(j.at("scenario").get<std::string>());
        if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
        scenario = load_scenario(p.string());
    } else {
        scenario = scenario_from_json(j.at("scenario"));
    }
    ensure_valid_scenario(*scenario);

    Behavior b(scenario);
    for (const auto& [ctx_key, table] : j.at("tables").items()) {
        int ctx = -1;
        try {
            ctx = std::stoi(ctx_key);
        } catch (...) {
            throw ParseError("behavior: table key '" + ctx_key + "' is not a context index");
        }
        if (ctx < 0 || static_cast<std::size_t>(ctx) >= scenario->num_contexts())
            throw ParseError("behavior: context index " + ctx_key + " out of range");
        const auto& context = scenario->contexts[ctx];
        for (const auto& [cell_key, value] : table.items()) {
            auto labels = split(cell_key, ',');
            if (labels.size() != context.size())
                throw ParseError("behavior: tuple '" + cell_key + "' in context " + ctx_key +
                                 " has arity " + std::to_string(labels.size()) + ", expected " +
                                 std::to_string(context.size()));
            OutcomeIndexTuple tuple;
            for (const auto& label : labels)
                tuple.push_back(require_outcome(*scenario, label, "behavior"));
            b.set_probability(ctx, tuple, rational_from_json(value));
        }
    }
    auto diags = b.validate(NumericMode::floating(1e-9));
    if (has_errors(diags)) throw ValidationError("invalid behavior: " + join_messages(diags));
    return b;
}

NCWiring WiringParts::full() const {
    if (!is_full()) throw ValidationError("wiring file does not contain both pre and post parts");
    return NCWiring{*pre, *post};
}

namespace {

Json light_map_to_json(const Scenario& domain, const Scenario& target,
                       const std::vector<std::vector<int>>& map) {
    Json j = Json::object();
    for (std::size_t m = 0; m < map.size(); ++m)
        for (std::size_t o = 0; o < map[m].size(); ++o)
            j[domain.measurements[m] + "," + domain.outcomes[o]] =
                target.measurements.at(map[m][o]);
    return j;
}

std::vector<std::vector<int>> light_map_from_json(const Json& j, const Scenario& domain,
                                                  const Scenario& target, const char* where) {
    std::vector<std::vector<int>> map(domain.measurements.size(),
                                      std::vector<int>(domain.outcomes.size(), -1));
    for (const auto& [key, value] : j.items()) {
        auto parts = split(key, ',');
        if (parts.size() != 2)
            throw ParseError(std::string(where) + ": key '" + key +
                             "' is not 'measurement,outcome'");
        int m = require_measurement(domain, parts[0], where);
        int o = require_outcome(domain, parts[1], where);
        map[m][o] = require_measurement(target, value.get<std::string>(), where);
    }
    for (std::size_t m = 0; m < map.size(); ++m)
        for (std::size_t o = 0; o < map[m].size(); ++o)
            if (map[m][o] < 0)
                throw ParseError(std::string(where) + ": no entry for '" +
                                 domain.measurements[m] + "," + domain.outcomes[o] + "'");
    return map;
}

}  // namespace

Json wiring_to_json(const WiringParts& w) {
    Json j;
    if (w.pre) {
        Json pre;
        pre["behavior"] = behavior_to_json(w.pre->pre_box);
        pre["lightToButton"] =
            light_map_to_json(*w.pre->pre_box.scenario, *w.pre->target, w.pre->light_to_button);
        j["pre"] = pre;
    }
    if (w.post) {
        const auto& p = *w.post;
        Json post;
        post["scenario"] = scenario_to_json(*p.post);
        post["buttonFromLight"] = light_map_to_json(*p.target, *p.post, p.button_from_light);
        Json phi = Json::array();
        for (const auto& v : p.phi_dist) phi.push_back(rational_to_json(v));
        post["phi"] = phi;
        Json responses = Json::object();
        const Scenario* pre_scenario = w.pre ? w.pre->pre_box.scenario.get() : nullptr;
        for (const auto& [key, dist] : p.responses) {
            std::string k = std::to_string(key.phi) + "|" + p.post->measurements.at(key.post_button);
            if (key.pre_button >= 0) {
                if (!pre_scenario)
                    throw ValidationError(
                        "wiring: conditioned responses require a pre part in the same file");
                k += "|" + pre_scenario->measurements.at(key.pre_button) + "|" +
                     pre_scenario->outcomes.at(key.pre_light);
            }
            Json d = Json::array();
            for (const auto& v : dist) d.push_back(rational_to_json(v));
            responses[k] = d;
        }
        post["responses"] = responses;
        j["post"] = post;
    }
    return j;
}

WiringParts wiring_from_json(const Json& j, ScenarioPtr target, const std::string& base_dir) {
    WiringParts parts;
    if (!j.is_object() || (!j.contains("pre") && !j.contains("post")))
        throw ParseError("wiring: expected an object with 'pre' and/or 'post'");

    if (j.contains("pre")) {
        const Json& pj = j.at("pre");
        PreProcessing pre;
        pre.target = target;
        pre.pre_box = behavior_from_json(pj.at("behavior"), base_dir);
        pre.light_to_button = light_map_from_json(pj.at("lightToButton"), *pre.pre_box.scenario,
                                                  *target, "wiring.pre.lightToButton");
        parts.pre = std::move(pre);
    }
    if (j.contains("post")) {
        const Json& pj = j.at("post");
        PostProcessing post;
        post.target = target;
        post.post = scenario_from_json(pj.at("scenario"));
        ensure_valid_scenario(*post.post);
        post.button_from_light = light_map_from_json(pj.at("buttonFromLight"), *target,
                                                     *post.post, "wiring.post.buttonFromLight");
        for (const auto& v : pj.at("phi")) post.phi_dist.push_back(rational_from_json(v));
        const Scenario* pre_scenario =
            parts.pre ? parts.pre->pre_box.scenario.get() : nullptr;
        for (const auto& [key, value] : pj.at("responses").items()) {
            auto segs = split(key, '|');
            if (segs.size() != 2 && segs.size() != 4)
                throw ParseError("wiring.post.responses: key '" + key +
                                 "' must be 'phi|button' or 'phi|button|preButton|preLight'");
            ResponseKey rk;
            try {
                rk.phi = std::stoi(segs[0]);
            } catch (...) {
                throw ParseError("wiring.post.responses: bad phi index in '" + key + "'");
            }
            rk.post_button = require_measurement(*post.post, segs[1], "wiring.post.responses");
            if (segs.size() == 4) {
                if (!pre_scenario)
                    throw ParseError(
                        "wiring.post.responses: conditioned key without a pre part");
                rk.pre_button =
                    require_measurement(*pre_scenario, segs[2], "wiring.post.responses");
                rk.pre_light = require_outcome(*pre_scenario, segs[3], "wiring.post.responses");
            }
            std::vector<Rational> dist;
            for (const auto& v : value) dist.push_back(rational_from_json(v));
            if (dist.size() != post.post->outcomes.size())
                throw ParseError("wiring.post.responses: '" + key + "' lists " +
                                 std::to_string(dist.size()) + " probabilities for " +
                                 std::to_string(post.post->outcomes.size()) + " outcomes");
            post.responses[rk] = std::move(dist);
        }
        parts.post = std::move(post);
    }
    return parts;
}

Json report_to_json(const SuiteReport& r) {
    Json j;
    j["suite"] = r.suite;
    if (!r.quantifier.empty()) j["quantifier"] = r.quantifier;
    if (!r.opclass.empty()) j["opclass"] = r.opclass;
    j["trials"] = r.trials;
    j["seed"] = r.seed;
    j["passed"] = r.passed;
    if (r.suite == "preservation") {
        j["passedNd"] = r.passed_nd;
        j["passedNc"] = r.passed_nc;
    }
    j["seconds"] = r.seconds;
    Json failures = Json::array();
    for (const auto& f : r.failures) {
        Json fj;
        fj["trial"] = f.trial;
        fj["seed"] = f.trial_seed;
        fj["kind"] = f.kind;
        fj["detail"] = f.detail;
        failures.push_back(fj);
    }
    j["failures"] = failures;
    return j;
}

SuiteReport report_from_json(const Json& j) {
    SuiteReport r;
    r.suite = j.at("suite").get<std::string>();
    if (j.contains("quantifier")) r.quantifier = j.at("quantifier").get<std::string>();
    if (j.contains("opclass")) r.opclass = j.at("opclass").get<std::string>();
    r.trials = j.at("trials").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.passed = j.at("passed").get<int>();
    if (j.contains("passedNd")) r.passed_nd = j.at("passedNd").get<int>();
    if (j.contains("passedNc")) r.passed_nc = j.at("passedNc").get<int>();
    r.seconds = j.at("seconds").get<double>();
    for (const auto& fj : j.at("failures")) {
        TrialFailure f;
        f.trial = fj.at("trial").get<int>();
        f.trial_seed = fj.at("seed").get<std::uint64_t>();
        f.kind = fj.at("kind").get<std::string>();
        f.detail = fj.at("detail").get<std::string>();
        r.failures.push_back(std::move(f));
    }
    return r;
}

namespace {

Json nc_model_to_json(const NCModel& model, const Scenario& s) {
    Json j = Json::object();
    for (const auto& [g, w] : model.weights) j[assignment_key(s, g)] = rational_to_json(w);
    return j;
}

}  // namespace

Json quantifier_result_to_json(const QuantifierResult& r, const Behavior* b) {
    Json j;
    j["quantifier"] = r.quantifier;
    j["mode"] = r.mode;
    if (r.exact_value)
        j["value"] = rational_to_json(*r.exact_value);
    else
        j["value"] = r.value;
    if (r.lambda) j["lambda"] = rational_to_json(*r.lambda);
    if (r.lp_optimum) j["lpOptimum"] = rational_to_json(*r.lp_optimum);
    j["iterations"] = r.iterations;
    if (r.quantifier == "eu" || r.quantifier == "emax") j["gap"] = r.gap;
    if (r.witness) {
        if (b) {
            j["witness"] = nc_model_to_json(*r.witness, *b->scenario);
        } else {
            Json w = Json::array();
            for (const auto& [g, p] : r.witness->weights) {
                Json entry;
                entry["assignment"] = g.outcome_for;
                entry["weight"] = rational_to_json(p);
                w.push_back(entry);
            }
            j["witness"] = w;
        }
    }
    if (r.residual) j["residual"] = behavior_to_json(*r.residual);
    return j;
}

Json nc_result_to_json(const NoncontextualityResult& r, const Behavior& b) {
    Json j;
    j["noncontextual"] = r.noncontextual;
    j["pivots"] = r.lp_pivots;
    if (r.model) j["globalSection"] = nc_model_to_json(*r.model, *b.scenario);
    if (r.witness) {
        Json w;
        Json coeffs = Json::object();
        for (std::size_t c = 0; c < r.witness->coefficients.size(); ++c) {
            if (r.witness->coefficients[c].empty()) continue;
            Json table = Json::object();
            for (const auto& [tuple, v] : r.witness->coefficients[c])
                table[tuple_key(*b.scenario, tuple)] = rational_to_json(v);
            coeffs[std::to_string(c)] = table;
        }
        w["coefficients"] = coeffs;
        w["bound"] = rational_to_json(r.witness->bound);
        w["value"] = rational_to_json(r.witness->value_on_behavior);
        j["witness"] = w;
    }
    return j;
}

Json nd_report_to_json(const NonDisturbanceReport& r, const Behavior& b) {
    Json j;
    j["nondisturbing"] = r.nondisturbing;
    if (!r.nondisturbing) {
        j["contextA"] = b.scenario->context_label(r.context_a);
        j["contextB"] = b.scenario->context_label(r.context_b);
        j["maxDiscrepancy"] = rational_to_json(r.max_discrepancy);
    }
    return j;
}

Json diagnostics_to_json(const std::vector<Diagnostic>& diags) {
    Json j = Json::array();
    for (const auto& d : diags) {
        Json dj;
        dj["severity"] = d.is_error() ? "error" : "warning";
        dj["code"] = d.code;
        dj["message"] = d.message;
        j.push_back(dj);
    }
    return j;
}

Json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
}

void store_json_file(const std::string& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write file: " + path);
    out << j.dump(2) << "\n";
}

ScenarioPtr load_scenario(const std::string& path) {
    auto s = scenario_from_json(load_json_file(path));
    ensure_valid_scenario(*s);
    return s;
}

Behavior load_behavior(const std::string& path) {
    return behavior_from_json(load_json_file(path),
                              std::filesystem::path(path).parent_path().string());
}

WiringParts load_wiring(const std::string& path, ScenarioPtr target) {
    return wiring_from_json(load_json_file(path), target,
                            std::filesystem::path(path).parent_path().string());
}

SuiteReport load_report(const std::string& path) {
    return report_from_json(load_json_file(path));
}

void store_scenario(const std::string& path, const Scenario& s) {
    store_json_file(path, scenario_to_json(s));
}

void store_behavior(const std::string& path, const Behavior& b) {
    store_json_file(path, behavior_to_json(b));
}

void store_wiring(const std::string& path, const WiringParts& w) {
    store_json_file(path, wiring_to_json(w));
}

void store_report(const std::string& path, const SuiteReport& r) {
    store_json_file(path, report_to_json(r));
}

}  // namespace ctxkit
