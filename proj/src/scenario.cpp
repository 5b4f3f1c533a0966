#include "ctxkit/scenario.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace ctxkit {

bool has_errors(const std::vector<Diagnostic>& diags) {
    return std::any_of(diags.begin(), diags.end(),
                       [](const Diagnostic& d) { return d.is_error(); });
}

std::string join_messages(const std::vector<Diagnostic>& diags) {
    std::ostringstream os;
    for (std::size_t i = 0; i < diags.size(); ++i) {
        if (i) os << "; ";
        os << (diags[i].is_error() ? "error[" : "warning[") << diags[i].code
           << "]: " << diags[i].message;
    }
    return os.str();
}

int Scenario::measurement_index(const std::string& name) const {
    for (std::size_t i = 0; i < measurements.size(); ++i)
        if (measurements[i] == name) return static_cast<int>(i);
    return -1;
}

int Scenario::outcome_index(const std::string& label) const {
    for (std::size_t i = 0; i < outcomes.size(); ++i)
        if (outcomes[i] == label) return static_cast<int>(i);
    return -1;
}

int Scenario::find_context_with_set(const std::vector<int>& measurement_set) const {
    std::vector<int> want(measurement_set);
    std::sort(want.begin(), want.end());
    for (std::size_t c = 0; c < contexts.size(); ++c) {
        std::vector<int> have(contexts[c]);
        std::sort(have.begin(), have.end());
        if (have == want) return static_cast<int>(c);
    }
    return -1;
}

std::string Scenario::context_label(int ctx) const {
    std::ostringstream os;
    os << "{";
    const auto& c = contexts.at(ctx);
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (i) os << ",";
        os << measurements.at(c[i]);
    }
    os << "}";
    return os.str();
}

ScenarioPtr make_scenario(std::vector<std::string> measurements,
                          std::vector<std::string> outcomes,
                          std::vector<std::vector<std::string>> contexts_by_name) {
    auto s = std::make_shared<Scenario>();
    s->measurements = std::move(measurements);
    s->outcomes = std::move(outcomes);
    for (const auto& ctx : contexts_by_name) {
        std::vector<int> indices;
        for (const auto& name : ctx) {
            int idx = s->measurement_index(name);
            if (idx < 0)
                throw ValidationError("context references unknown measurement '" + name + "'");
            indices.push_back(idx);
        }
        s->contexts.push_back(std::move(indices));
    }
    return s;
}

std::vector<Diagnostic> validate_scenario(const Scenario& s) {
    std::vector<Diagnostic> diags;
    auto error = [&](std::string code, std::string msg) {
        diags.push_back({Diagnostic::Severity::Error, std::move(code), std::move(msg)});
    };
    auto warning = [&](std::string code, std::string msg) {
        diags.push_back({Diagnostic::Severity::Warning, std::move(code), std::move(msg)});
    };

    if (s.measurements.empty()) error("empty-measurements", "scenario has no measurements");
    if (s.outcomes.empty())
        error("empty-outcomes", "scenario has no outcomes");
    else if (s.outcomes.size() < 2)
        error("outcomes-too-small", "scenario needs at least two outcome labels");
    if (s.contexts.empty()) error("empty-contexts", "scenario has no contexts");

    {
        std::set<std::string> seen;
        for (const auto& m : s.measurements)
            if (!seen.insert(m).second)
                error("duplicate-measurement", "measurement '" + m + "' declared twice");
    }
    {
        std::set<std::string> seen;
        for (const auto& o : s.outcomes)
            if (!seen.insert(o).second)
                error("duplicate-outcome", "outcome '" + o + "' declared twice");
    }

    std::set<std::vector<int>> context_sets;
    std::vector<bool> covered(s.measurements.size(), false);
    for (std::size_t c = 0; c < s.contexts.size(); ++c) {
        const auto& ctx = s.contexts[c];
        if (ctx.empty()) {
            error("empty-context", "context #" + std::to_string(c) + " is empty");
            continue;
        }
        std::set<int> members;
        bool in_range = true;
        for (int m : ctx) {
            if (m < 0 || static_cast<std::size_t>(m) >= s.measurements.size()) {
                error("bad-measurement-index",
                      "context #" + std::to_string(c) + " references measurement index " +
                          std::to_string(m));
                in_range = false;
                continue;
            }
            if (!members.insert(m).second)
                error("repeated-measurement-in-context",
                      "context #" + std::to_string(c) + " lists '" + s.measurements[m] +
                          "' twice");
            covered[m] = true;
        }
        if (!in_range) continue;
        std::vector<int> sorted_ctx(members.begin(), members.end());
        if (!context_sets.insert(sorted_ctx).second)
            error("duplicate-context", "context " + s.context_label(static_cast<int>(c)) +
                                           " appears more than once");
    }

    for (std::size_t m = 0; m < s.measurements.size(); ++m)
        if (!covered[m])
            warning("uncovered-measurement",
                    "measurement '" + s.measurements[m] + "' belongs to no context");

    return diags;
}

void ensure_valid_scenario(const Scenario& s) {
    auto diags = validate_scenario(s);
    if (has_errors(diags)) throw ValidationError("invalid scenario: " + join_messages(diags));
}

// --- Behavior -------------------------------------------------------------

Behavior::Behavior(ScenarioPtr s) : scenario(std::move(s)) {
    if (scenario) tables.resize(scenario->num_contexts());
}

const Rational& Behavior::probability(int ctx, const OutcomeIndexTuple& tuple) const {
    static const Rational kZero = 0;
    const auto& table = tables.at(ctx);
    auto it = table.find(tuple);
    return it == table.end() ? kZero : it->second;
}

void Behavior::set_probability(int ctx, OutcomeIndexTuple tuple, Rational p) {
    if (sgn(p) == 0)
        tables.at(ctx).erase(tuple);
    else
        tables.at(ctx)[std::move(tuple)] = std::move(p);
}

std::vector<Diagnostic> Behavior::validate(const NumericMode& mode) const {
    std::vector<Diagnostic> diags;
    auto error = [&](std::string code, std::string msg) {
        diags.push_back({Diagnostic::Severity::Error, std::move(code), std::move(msg)});
    };
    if (!scenario) {
        error("missing-scenario", "behavior has no scenario");
        return diags;
    }
    for (auto& d : validate_scenario(*scenario))
        if (d.is_error()) diags.push_back(std::move(d));
    if (!diags.empty()) return diags;
    if (tables.size() != scenario->num_contexts()) {
        error("table-count", "behavior has " + std::to_string(tables.size()) +
                                 " tables for " + std::to_string(scenario->num_contexts()) +
                                 " contexts");
        return diags;
    }
    const int num_outcomes = static_cast<int>(scenario->outcomes.size());
    for (std::size_t c = 0; c < tables.size(); ++c) {
        const auto& ctx = scenario->contexts[c];
        Rational sum = 0;
        for (const auto& [tuple, p] : tables[c]) {
            if (tuple.size() != ctx.size()) {
                error("bad-tuple", "context " + scenario->context_label(static_cast<int>(c)) +
                                       " has a tuple of wrong arity");
                continue;
            }
            for (int o : tuple)
                if (o < 0 || o >= num_outcomes)
                    error("bad-outcome-index",
                          "tuple in context " + scenario->context_label(static_cast<int>(c)) +
                              " references outcome index " + std::to_string(o));
            if (sgn(p) < 0 || p > 1) {
                if (mode.is_exact() || to_double(p) < -mode.tolerance ||
                    to_double(p) > 1 + mode.tolerance)
                    error("probability-range",
                          "probability " + format_rational(p) + " outside [0,1] in context " +
                              scenario->context_label(static_cast<int>(c)));
            }
            sum += p;
        }
        Rational deficit = sum - 1;
        if (!mode.negligible(deficit))
            error("normalization", "context " + scenario->context_label(static_cast<int>(c)) +
                                       " sums to " + format_rational(sum) + ", not 1");
    }
    return diags;
}

void Behavior::ensure_valid(const NumericMode& mode) const {
    auto diags = validate(mode);
    if (has_errors(diags)) throw ValidationError("invalid behavior: " + join_messages(diags));
}

bool Behavior::operator==(const Behavior& other) const {
    if (!scenario || !other.scenario) return scenario == other.scenario && tables == other.tables;
    return *scenario == *other.scenario && tables == other.tables;
}

OutcomeIndexTuple GlobalAssignment::restrict_to(const std::vector<int>& context) const {
    OutcomeIndexTuple t;
    t.reserve(context.size());
    for (int m : context) t.push_back(outcome_for.at(m));
    return t;
}

unsigned long long global_assignment_count(const Scenario& s, unsigned long long saturate_at) {
    unsigned long long count = 1;
    const unsigned long long base = s.outcomes.size();
    for (std::size_t i = 0; i < s.measurements.size(); ++i) {
        if (count > saturate_at / std::max<unsigned long long>(base, 1)) return saturate_at;
        count *= base;
        if (count >= saturate_at) return saturate_at;
    }
    return count;
}

GlobalAssignmentEnumerator::GlobalAssignmentEnumerator(const Scenario& s, unsigned long long cap)
    : scenario_(s), count_(global_assignment_count(s)) {
    if (count_ > cap)
        throw CapExceededError("global assignment count " + std::to_string(count_) +
                               " exceeds cap " + std::to_string(cap));
    current_.assign(scenario_.measurements.size(), 0);
}

bool GlobalAssignmentEnumerator::next(GlobalAssignment& out) {
    if (done_) return false;
    if (!started_) {
        started_ = true;
        out.outcome_for = current_;
        return true;
    }
    const int num_outcomes = static_cast<int>(scenario_.outcomes.size());
    std::size_t i = current_.size();
    while (i > 0) {
        --i;
        if (++current_[i] < num_outcomes) {
            out.outcome_for = current_;
            return true;
        }
        current_[i] = 0;
    }
    done_ = true;
    return false;
}

void GlobalAssignmentEnumerator::reset() {
    current_.assign(scenario_.measurements.size(), 0);
    done_ = false;
    started_ = false;
}

std::vector<GlobalAssignment> enumerate_global_assignments(const Scenario& s,
                                                           unsigned long long cap) {
    GlobalAssignmentEnumerator en(s, cap);
    std::vector<GlobalAssignment> out;
    out.reserve(en.count());
    GlobalAssignment g;
    while (en.next(g)) out.push_back(g);
    return out;
}

CellIndexer::CellIndexer(const Scenario& s) : scenario_(&s) {
    offsets_.reserve(s.num_contexts());
    sizes_.reserve(s.num_contexts());
    for (const auto& ctx : s.contexts) {
        std::size_t cells = 1;
        for (std::size_t i = 0; i < ctx.size(); ++i) cells *= s.outcomes.size();
        offsets_.push_back(total_);
        sizes_.push_back(cells);
        total_ += cells;
    }
}

std::size_t CellIndexer::cell(int ctx, const OutcomeIndexTuple& tuple) const {
    std::size_t idx = 0;
    for (int o : tuple) idx = idx * scenario_->outcomes.size() + static_cast<std::size_t>(o);
    return offsets_.at(ctx) + idx;
}

OutcomeIndexTuple CellIndexer::tuple_of(int ctx, std::size_t local_index) const {
    const std::size_t arity = scenario_->contexts.at(ctx).size();
    OutcomeIndexTuple t(arity, 0);
    const std::size_t base = scenario_->outcomes.size();
    for (std::size_t i = arity; i-- > 0;) {
        t[i] = static_cast<int>(local_index % base);
        local_index /= base;
    }
    return t;
}

// --- operations -----------------------------------------------------------

ContextTable marginalize(const Behavior& b, int ctx, const std::vector<int>& subset) {
    const auto& context = b.scenario->contexts.at(ctx);
    std::vector<int> positions;
    positions.reserve(subset.size());
    for (int m : subset) {
        auto it = std::find(context.begin(), context.end(), m);
        if (it == context.end())
            throw ValidationError("marginalize: measurement '" + b.scenario->measurements.at(m) +
                                  "' is not in context " + b.scenario->context_label(ctx));
        positions.push_back(static_cast<int>(it - context.begin()));
    }
    ContextTable out;
    for (const auto& [tuple, p] : b.tables.at(ctx)) {
        OutcomeIndexTuple key;
        key.reserve(positions.size());
        for (int pos : positions) key.push_back(tuple.at(pos));
        out[key] += p;
    }
    return out;
}

NonDisturbanceReport check_nondisturbance(const Behavior& b, const NumericMode& mode) {
    b.ensure_valid(mode);
    NonDisturbanceReport report;
    const auto& s = *b.scenario;
    for (std::size_t a = 0; a < s.contexts.size(); ++a) {
        for (std::size_t c = a + 1; c < s.contexts.size(); ++c) {
            std::vector<int> inter;
            for (int m : s.contexts[a])
                if (std::find(s.contexts[c].begin(), s.contexts[c].end(), m) !=
                    s.contexts[c].end())
                    inter.push_back(m);
            if (inter.empty()) continue;
            std::sort(inter.begin(), inter.end());
            ContextTable ma = marginalize(b, static_cast<int>(a), inter);
            ContextTable mc = marginalize(b, static_cast<int>(c), inter);
            Rational worst = 0;
            for (const auto& [key, p] : ma) {
                Rational d = abs(p - (mc.count(key) ? mc.at(key) : Rational(0)));
                if (d > worst) worst = d;
            }
            for (const auto& [key, p] : mc)
                if (!ma.count(key) && abs(p) > worst) worst = abs(p);
            if (!mode.negligible(worst)) {
                report.nondisturbing = false;
                report.context_a = static_cast<int>(a);
                report.context_b = static_cast<int>(c);
                report.max_discrepancy = worst;
                return report;
            }
        }
    }
    return report;
}

Behavior assignment_to_behavior(const GlobalAssignment& g, ScenarioPtr scenario) {
    if (g.outcome_for.size() != scenario->measurements.size())
        throw ValidationError("assignment must be total on the measurement set");
    Behavior b(scenario);
    for (std::size_t c = 0; c < scenario->num_contexts(); ++c)
        b.set_probability(static_cast<int>(c), g.restrict_to(scenario->contexts[c]), 1);
    return b;
}

Behavior mix_behaviors(const std::vector<Rational>& weights,
                       const std::vector<Behavior>& behaviors, const NumericMode& mode) {
    if (weights.size() != behaviors.size() || behaviors.empty())
        throw ValidationError("mix_behaviors: need matching, non-empty weights and behaviors");
    Rational total = 0;
    for (const auto& w : weights) {
        if (sgn(w) < 0) throw ValidationError("mix_behaviors: negative weight");
        total += w;
    }
    if (!mode.negligible(total - 1))
        throw ValidationError("mix_behaviors: weights sum to " + format_rational(total));
    for (std::size_t i = 1; i < behaviors.size(); ++i)
        if (!(*behaviors[i].scenario == *behaviors[0].scenario))
            throw ValidationError("mix_behaviors: behaviors live on different scenarios");

    Behavior out(behaviors[0].scenario);
    for (std::size_t i = 0; i < behaviors.size(); ++i) {
        if (sgn(weights[i]) == 0) continue;
        for (std::size_t c = 0; c < out.tables.size(); ++c)
            for (const auto& [tuple, p] : behaviors[i].tables[c])
                out.tables[c][tuple] += weights[i] * p;
    }
    return out;
}

Behavior uniform_behavior(ScenarioPtr scenario) {
    Behavior b(scenario);
    const std::size_t num_outcomes = scenario->outcomes.size();
    for (std::size_t c = 0; c < scenario->num_contexts(); ++c) {
        unsigned long long cells = 1;
        for (std::size_t i = 0; i < scenario->contexts[c].size(); ++i) cells *= num_outcomes;
        Rational p(1, static_cast<unsigned long>(cells));
        p.canonicalize();
        for_each_tuple(scenario->contexts[c].size(), num_outcomes,
                       [&](const OutcomeIndexTuple& t) {
                           b.tables[c][t] = p;
                       });
    }
    return b;
}

namespace {

// Disjointness handling shared by product and controlled choice: on any name
// collision every left measurement gets an "L." prefix and every right one an
// "R." prefix, recorded in renamed_from.
std::pair<std::vector<std::string>, std::map<std::string, std::string>> merge_measurements(
    const Scenario& s1, const Scenario& s2) {
    bool collision = false;
    for (const auto& m : s2.measurements)
        if (s1.measurement_index(m) >= 0) collision = true;

    std::vector<std::string> merged;
    std::map<std::string, std::string> renames;
    for (const auto& m : s1.measurements) {
        std::string name = collision ? "L." + m : m;
        if (collision) renames[name] = m;
        merged.push_back(name);
    }
    for (const auto& m : s2.measurements) {
        std::string name = collision ? "R." + m : m;
        if (collision) renames[name] = m;
        merged.push_back(name);
    }
    return {merged, renames};
}

void require_same_outcomes(const Scenario& s1, const Scenario& s2, const char* op) {
    if (s1.outcomes != s2.outcomes)
        throw ValidationError(std::string(op) + ": outcome sets differ; boxes must share one "
                                                "outcome set");
}

}  // namespace

Behavior product_box(const Behavior& b1, const Behavior& b2) {
    const Scenario& s1 = *b1.scenario;
    const Scenario& s2 = *b2.scenario;
    require_same_outcomes(s1, s2, "product_box");

    auto [measurements, renames] = merge_measurements(s1, s2);
    auto out_scenario = std::make_shared<Scenario>();
    out_scenario->measurements = measurements;
    out_scenario->outcomes = s1.outcomes;
    out_scenario->renamed_from = renames;
    const int offset = static_cast<int>(s1.measurements.size());

    for (const auto& c1 : s1.contexts)
        for (const auto& c2 : s2.contexts) {
            std::vector<int> ctx(c1);
            for (int m : c2) ctx.push_back(m + offset);
            out_scenario->contexts.push_back(std::move(ctx));
        }

    Behavior out(out_scenario);
    int ctx_index = 0;
    for (std::size_t i = 0; i < s1.contexts.size(); ++i)
        for (std::size_t j = 0; j < s2.contexts.size(); ++j, ++ctx_index)
            for (const auto& [t1, p1] : b1.tables[i])
                for (const auto& [t2, p2] : b2.tables[j]) {
                    OutcomeIndexTuple t(t1);
                    t.insert(t.end(), t2.begin(), t2.end());
                    out.tables[ctx_index][std::move(t)] = p1 * p2;
                }
    return out;
}

Behavior controlled_choice(const Behavior& b1, const Behavior& b2) {
    const Scenario& s1 = *b1.scenario;
    const Scenario& s2 = *b2.scenario;
    require_same_outcomes(s1, s2, "controlled_choice");

    auto [measurements, renames] = merge_measurements(s1, s2);
    auto out_scenario = std::make_shared<Scenario>();
    out_scenario->measurements = measurements;
    out_scenario->outcomes = s1.outcomes;
    out_scenario->renamed_from = renames;
    const int offset = static_cast<int>(s1.measurements.size());

    for (const auto& c1 : s1.contexts) out_scenario->contexts.push_back(c1);
    for (const auto& c2 : s2.contexts) {
        std::vector<int> ctx;
        for (int m : c2) ctx.push_back(m + offset);
        out_scenario->contexts.push_back(std::move(ctx));
    }

    Behavior out(out_scenario);
    for (std::size_t i = 0; i < s1.contexts.size(); ++i) out.tables[i] = b1.tables[i];
    for (std::size_t j = 0; j < s2.contexts.size(); ++j)
        out.tables[s1.contexts.size() + j] = b2.tables[j];
    return out;
}

Behavior relabel_outcomes(const Behavior& b, const std::vector<std::vector<int>>& perms) {
    const Scenario& s = *b.scenario;
    if (perms.size() != s.measurements.size())
        throw ValidationError("relabel_outcomes: one permutation per measurement required");
    for (const auto& perm : perms) {
        std::vector<int> sorted(perm);
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < sorted.size(); ++i)
            if (sorted[i] != static_cast<int>(i) || perm.size() != s.outcomes.size())
                throw ValidationError("relabel_outcomes: not a permutation of the outcome set");
    }
    Behavior out(b.scenario);
    for (std::size_t c = 0; c < b.tables.size(); ++c) {
        const auto& ctx = s.contexts[c];
        for (const auto& [tuple, p] : b.tables[c]) {
            OutcomeIndexTuple t(tuple);
            for (std::size_t i = 0; i < t.size(); ++i) t[i] = perms[ctx[i]][t[i]];
            out.tables[c][std::move(t)] = p;
        }
    }
    return out;
}

Behavior rename_measurements(const Behavior& b, const std::map<std::string, std::string>& names) {
    auto out_scenario = std::make_shared<Scenario>(*b.scenario);
    std::set<std::string> used;
    for (auto& m : out_scenario->measurements) {
        auto it = names.find(m);
        if (it != names.end()) m = it->second;
        if (!used.insert(m).second)
            throw ValidationError("rename_measurements: name '" + m + "' would collide");
    }
    Behavior out(out_scenario);
    out.tables = b.tables;
    return out;
}

Behavior permute_behavior(const Behavior& b, const std::vector<int>& measurement_perm,
                          const std::vector<int>& outcome_perm,
                          const std::vector<int>& context_perm) {
    const Scenario& s = *b.scenario;
    auto out_scenario = std::make_shared<Scenario>();
    out_scenario->measurements.resize(s.measurements.size());
    std::vector<int> m_new_index(s.measurements.size());
    for (std::size_t i = 0; i < measurement_perm.size(); ++i) {
        out_scenario->measurements[i] = s.measurements.at(measurement_perm[i]);
        m_new_index[measurement_perm[i]] = static_cast<int>(i);
    }
    out_scenario->outcomes.resize(s.outcomes.size());
    std::vector<int> o_new_index(s.outcomes.size());
    for (std::size_t i = 0; i < outcome_perm.size(); ++i) {
        out_scenario->outcomes[i] = s.outcomes.at(outcome_perm[i]);
        o_new_index[outcome_perm[i]] = static_cast<int>(i);
    }
    out_scenario->contexts.resize(s.contexts.size());
    Behavior out;
    out.scenario = out_scenario;
    out.tables.resize(s.contexts.size());
    for (std::size_t c = 0; c < context_perm.size(); ++c) {
        const int old_c = context_perm[c];
        std::vector<int> ctx;
        for (int m : s.contexts.at(old_c)) ctx.push_back(m_new_index[m]);
        out_scenario->contexts[c] = std::move(ctx);
        for (const auto& [tuple, p] : b.tables.at(old_c)) {
            OutcomeIndexTuple t(tuple);
            for (auto& o : t) o = o_new_index[o];
            out.tables[c][std::move(t)] = p;
        }
    }
    return out;
}

}  // namespace ctxkit
