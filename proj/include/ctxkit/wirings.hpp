#pragma once

// Free operations: pre-processing boxes wired into a target box, per-wire
// post-processing responses mixed over a shared variable, and their
// composition into non-contextual wirings. Includes the causal-factorization
// gate, seeded samplers for wirings and behaviors, and the preservation /
// monotonicity harnesses.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ctxkit/quantifiers.hpp"
#include "ctxkit/scenario.hpp"

namespace ctxkit {

// Deterministic, platform-independent generator (splitmix64) so that every
// sampled wiring and behavior is reproducible from a seed alone.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    int below(int n) {
        if (n <= 0) throw std::invalid_argument("Rng::below needs n > 0");
        return static_cast<int>(next() % static_cast<std::uint64_t>(n));
    }

private:
    std::uint64_t state_;
};

struct PreProcessing {
    ScenarioPtr target;
    Behavior pre_box;  // lives on its own scenario; must certify non-contextual
    // [pre measurement][pre outcome] -> target measurement. For every pre
    // context and every jointly-firable light tuple the image set must be a
    // target context of matching size.
    std::vector<std::vector<int>> light_to_button;
};

struct ResponseKey {
    int phi = 0;
    int post_button = -1;
    int pre_button = -1;  // -1: unconditioned (standalone post-processing)
    int pre_light = -1;

    bool operator<(const ResponseKey& o) const {
        if (phi != o.phi) return phi < o.phi;
        if (post_button != o.post_button) return post_button < o.post_button;
        if (pre_button != o.pre_button) return pre_button < o.pre_button;
        return pre_light < o.pre_light;
    }
};

struct PostProcessing {
    ScenarioPtr target;
    ScenarioPtr post;  // the post box's scenario (M_POST, C_POST, O_POST)
    // [target measurement][target outcome] -> post measurement; image sets of
    // jointly-firable lights must be post contexts.
    std::vector<std::vector<int>> button_from_light;
    std::vector<Rational> phi_dist;
    // Per-wire response distributions over the post outcomes, conditioned on
    // the shared variable, the post button pressed, and (inside a full
    // wiring) the wire's pre button and light. Keys with pre_button = -1 act
    // as fallbacks for any conditioning.
    std::map<ResponseKey, std::vector<Rational>> responses;

    const std::vector<Rational>* find_response(int phi, int post_button, int pre_button,
                                               int pre_light) const;
};

struct NCWiring {
    PreProcessing pre;
    PostProcessing post;
};

// Structural checks (maps total, images are contexts, tables normalized).
std::vector<Diagnostic> validate_preprocessing(const PreProcessing& w, const Scenario& target);
std::vector<Diagnostic> validate_postprocessing(const PostProcessing& w, const Scenario& target,
                                                bool standalone);
// Full wiring validation; also certifies the pre box non-contextual by LP.
std::vector<Diagnostic> validate_wiring(const NCWiring& w, const Scenario& target,
                                        const QuantifierOptions& opts = {});

// Validates (including the pre-box LP certificate) and throws on any error.
NCWiring make_ncwiring(PreProcessing pre, PostProcessing post,
                       const QuantifierOptions& opts = {});

Behavior apply_preprocessing(const PreProcessing& w, const Behavior& b);
Behavior apply_postprocessing(const PostProcessing& w, const Behavior& b);
Behavior apply_ncwiring(const NCWiring& w, const Behavior& b);

// Gate for response tables supplied jointly instead of per wire: with no
// declared shared variable a joint must equal the product of its per-wire
// marginals; anything else smuggles correlation between wires and is
// rejected. Returns the per-wire factors.
std::vector<std::vector<Rational>> factorize_joint_response(
    const std::map<OutcomeIndexTuple, Rational>& joint, int wires, int num_outcomes);

// Identity operations (useful fixtures: they leave behaviors unchanged).
PreProcessing identity_preprocessing(ScenarioPtr target);
PostProcessing identity_postprocessing(ScenarioPtr target);

struct WiringSizeParams {
    int phi_min = 1;
    int phi_max = 4;
    int map_mutations = 8;   // attempted consistency-preserving map edits
    int weight_denom = 16;   // resolution of sampled rational weights
    int max_support = 6;     // support size of sampled NC mixtures
    bool refine_post = true; // allow outcome-splitting post buttons
};

// Random mixture of deterministic assignments (non-contextual by build).
Behavior sample_nc_behavior(ScenarioPtr scenario, Rng& rng,
                            const WiringSizeParams& params = {});
// Vertex of the non-disturbance polytope: basic optimum of a random linear
// objective over the non-disturbance constraints.
Behavior sample_nd_vertex(ScenarioPtr scenario, Rng& rng);
// Documented harness sampler: mixes an ND vertex with a random NC behavior
// using a random weight. Seeded, deterministic, not claimed uniform.
Behavior sample_nd_behavior(ScenarioPtr scenario, Rng& rng);
// Rejection-samples sample_nd_behavior until the contextual fraction is
// positive; throws after max_tries.
Behavior sample_contextual_behavior(ScenarioPtr scenario, Rng& rng,
                                    const QuantifierOptions& opts = {}, int max_tries = 64);

PreProcessing sample_random_preprocessing(ScenarioPtr target, Rng& rng,
                                          const WiringSizeParams& params = {});
PostProcessing sample_random_postprocessing(ScenarioPtr target, Rng& rng,
                                            const WiringSizeParams& params,
                                            bool standalone,
                                            const Scenario* pre_scenario = nullptr);
NCWiring sample_random_ncwiring(ScenarioPtr target, std::uint64_t seed,
                                const WiringSizeParams& params = {});

struct TrialFailure {
    int trial = -1;
    std::uint64_t trial_seed = 0;
    std::string kind;
    std::string detail;
};

struct SuiteReport {
    std::string suite;       // "preservation" | "monotonicity"
    std::string quantifier;  // monotonicity only
    std::string opclass;     // "full" | "post-only"
    int trials = 0;
    std::uint64_t seed = 0;
    int passed = 0;
    int passed_nd = 0;  // preservation: non-disturbance checks passed
    int passed_nc = 0;  // preservation: non-contextuality checks passed
    std::vector<TrialFailure> failures;
    double seconds = 0;

    bool ok() const { return failures.empty(); }
};

// Per trial: a seeded wiring applied to a seeded ND behavior must stay ND,
// and applied to a seeded NC behavior must stay NC (certified by LP).
SuiteReport run_preservation_suite(ScenarioPtr scenario, int trials, std::uint64_t seed,
                                   const QuantifierOptions& opts = {});

enum class OpClass { Full, PostOnly };
OpClass parse_opclass(const std::string& name);

// Per trial: Q(W(B)) <= Q(B) within the quantifier's tolerance (exact for
// cf/du/dmax, 1e-6 for eu, 1e-4 for emax). eu and du demand post-only
// wirings; requesting them with the full class is refused.
SuiteReport run_monotonicity_suite(const std::string& quantifier, ScenarioPtr scenario,
                                   int trials, std::uint64_t seed, OpClass opclass,
                                   const QuantifierOptions& opts = {});

}  // namespace ctxkit
