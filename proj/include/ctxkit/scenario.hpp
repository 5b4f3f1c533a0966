#pragma once

// Compatibility scenarios, behaviors (one probability table per context),
// deterministic global assignments, and the basic algebra on them:
// validation, marginals, non-disturbance, mixtures, product and controlled
// choice of boxes, relabelings.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ctxkit/rational.hpp"

namespace ctxkit {

struct Diagnostic {
    enum class Severity { Error, Warning };
    Severity severity;
    std::string code;     // stable machine-readable tag, e.g. "duplicate-context"
    std::string message;

    bool is_error() const { return severity == Severity::Error; }
};

bool has_errors(const std::vector<Diagnostic>& diags);
std::string join_messages(const std::vector<Diagnostic>& diags);

// Measurements and outcomes are referenced by index into the ordered lists
// below. Contexts keep the order they were declared in; outcome tuples for a
// context are index vectors aligned with that order.
struct Scenario {
    std::vector<std::string> measurements;
    std::vector<std::string> outcomes;
    std::vector<std::vector<int>> contexts;
    // Composition operations that had to rename colliding measurements record
    // new-name -> original-name here.
    std::map<std::string, std::string> renamed_from;

    int measurement_index(const std::string& name) const;
    int outcome_index(const std::string& label) const;
    std::size_t num_contexts() const { return contexts.size(); }
    std::size_t context_size(int ctx) const { return contexts.at(ctx).size(); }

    // Looks a context up as a set (order-insensitive); -1 when absent.
    int find_context_with_set(const std::vector<int>& measurement_set) const;

    std::string context_label(int ctx) const;  // "{x,y}" for diagnostics

    bool operator==(const Scenario& other) const {
        return measurements == other.measurements && outcomes == other.outcomes &&
               contexts == other.contexts;
    }
};

using ScenarioPtr = std::shared_ptr<const Scenario>;

ScenarioPtr make_scenario(std::vector<std::string> measurements,
                          std::vector<std::string> outcomes,
                          std::vector<std::vector<std::string>> contexts_by_name);

std::vector<Diagnostic> validate_scenario(const Scenario& s);
// Throws ValidationError when validate_scenario reports any error.
void ensure_valid_scenario(const Scenario& s);

// Outcome tuple for a context: outcome indices aligned with the context's
// declared measurement order.
using OutcomeIndexTuple = std::vector<int>;

using ContextTable = std::map<OutcomeIndexTuple, Rational>;

// Walks the full outcome grid O^n in lexicographic order (last slot fastest).
template <class Fn>
void for_each_tuple(std::size_t slots, std::size_t num_outcomes, Fn&& fn) {
    OutcomeIndexTuple t(slots, 0);
    while (true) {
        fn(const_cast<const OutcomeIndexTuple&>(t));
        std::size_t i = slots;
        while (i > 0) {
            --i;
            if (static_cast<std::size_t>(++t[i]) < num_outcomes) break;
            t[i] = 0;
            if (i == 0) return;
        }
        if (slots == 0) return;
    }
}

struct Behavior {
    ScenarioPtr scenario;
    std::vector<ContextTable> tables;  // one sparse table per context; missing keys mean 0

    explicit Behavior(ScenarioPtr s = nullptr);

    const Rational& probability(int ctx, const OutcomeIndexTuple& tuple) const;
    void set_probability(int ctx, OutcomeIndexTuple tuple, Rational p);

    std::vector<Diagnostic> validate(const NumericMode& mode = NumericMode::exact()) const;
    // Throws ValidationError when any table is malformed under `mode`.
    void ensure_valid(const NumericMode& mode = NumericMode::exact()) const;

    bool operator==(const Behavior& other) const;
};

struct GlobalAssignment {
    std::vector<int> outcome_for;  // outcome index per measurement, total on M

    // Tuple of this assignment restricted to a context (declared order).
    OutcomeIndexTuple restrict_to(const std::vector<int>& context) const;

    bool operator==(const GlobalAssignment& other) const = default;
    bool operator<(const GlobalAssignment& other) const { return outcome_for < other.outcome_for; }
};

inline constexpr unsigned long long kDefaultVertexCap = 1'000'000;

// |O|^|M| with saturation; values above `saturate_at` are clamped there.
unsigned long long global_assignment_count(const Scenario& s,
                                           unsigned long long saturate_at = 1ull << 62);

// Streams all |O|^|M| assignments in lexicographic order (measurement order
// major, outcome order minor). Construction throws CapExceededError when the
// count exceeds `cap`, naming the count.
class GlobalAssignmentEnumerator {
public:
    GlobalAssignmentEnumerator(const Scenario& s, unsigned long long cap = kDefaultVertexCap);

    // Fills `out` with the next assignment; false once exhausted.
    bool next(GlobalAssignment& out);

    unsigned long long count() const { return count_; }
    void reset();

private:
    const Scenario& scenario_;
    unsigned long long count_;
    std::vector<int> current_;
    bool done_ = false;
    bool started_ = false;
};

std::vector<GlobalAssignment> enumerate_global_assignments(
    const Scenario& s, unsigned long long cap = kDefaultVertexCap);

// Dense index over every (context, outcome tuple) cell of a scenario's full
// outcome grids; LP builders address table entries through it.
class CellIndexer {
public:
    explicit CellIndexer(const Scenario& s);

    std::size_t total() const { return total_; }
    std::size_t context_offset(int ctx) const { return offsets_.at(ctx); }
    std::size_t context_cells(int ctx) const { return sizes_.at(ctx); }
    std::size_t cell(int ctx, const OutcomeIndexTuple& tuple) const;
    OutcomeIndexTuple tuple_of(int ctx, std::size_t local_index) const;

private:
    const Scenario* scenario_;
    std::vector<std::size_t> offsets_;
    std::vector<std::size_t> sizes_;
    std::size_t total_ = 0;
};

// --- operations ---------------------------------------------------------

// Marginal of table `ctx` onto `subset` (measurement indices, all inside the
// context). Result keys are aligned with the order of `subset` as given.
ContextTable marginalize(const Behavior& b, int ctx, const std::vector<int>& subset);

struct NonDisturbanceReport {
    bool nondisturbing = true;
    int context_a = -1;
    int context_b = -1;
    Rational max_discrepancy = 0;  // over the first violating pair's marginal cells

    explicit operator bool() const { return nondisturbing; }
};

NonDisturbanceReport check_nondisturbance(const Behavior& b,
                                          const NumericMode& mode = NumericMode::exact());

Behavior assignment_to_behavior(const GlobalAssignment& g, ScenarioPtr scenario);

Behavior mix_behaviors(const std::vector<Rational>& weights,
                       const std::vector<Behavior>& behaviors,
                       const NumericMode& mode = NumericMode::exact());

Behavior uniform_behavior(ScenarioPtr scenario);

// Product box: contexts are all unions of one context from each side, tables
// are products. Outcome lists must match exactly; measurement collisions are
// renamed with "L."/"R." prefixes recorded in the scenario metadata.
Behavior product_box(const Behavior& b1, const Behavior& b2);

// Controlled choice: contexts are the concatenation of both context families,
// tables are the juxtaposition. Same collision and outcome rules as product.
Behavior controlled_choice(const Behavior& b1, const Behavior& b2);

// Per-measurement outcome relabeling: perms[m] is a permutation of outcome
// indices applied to measurement m's slot in every table.
Behavior relabel_outcomes(const Behavior& b, const std::vector<std::vector<int>>& perms);

// Renames measurements (bijection old name -> new name); tables unchanged.
Behavior rename_measurements(const Behavior& b, const std::map<std::string, std::string>& names);

// Reorders measurement declarations, context declarations, and outcome labels
// by the given permutations; the represented behavior is unchanged. Used for
// relabeling-invariance checks.
Behavior permute_behavior(const Behavior& b,
                          const std::vector<int>& measurement_perm,
                          const std::vector<int>& outcome_perm,
                          const std::vector<int>& context_perm);

}  // namespace ctxkit
