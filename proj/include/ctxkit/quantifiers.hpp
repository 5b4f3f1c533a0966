#pragma once

// Non-contextuality certification and the five contextuality quantifiers.
// CF, D_u and D_max are computed as exact linear programs over the polytope
// spanned by deterministic global assignments; E_u and E_max run Frank-Wolfe
// in float mode with a verifiable duality-gap stopping rule. Also houses the
// KL divergence, the nearest-linear-function distance nu, and the MBQC
// failure-probability bound built from CF and nu.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ctxkit/lp.hpp"
#include "ctxkit/scenario.hpp"

namespace ctxkit {

struct QuantifierOptions {
    NumericMode mode = NumericMode::exact();
    unsigned long long vertex_cap = kDefaultVertexCap;
    long pivot_limit = 1'000'000;
    std::ostream* lp_debug = nullptr;
};

// Finite-support global section: weights over deterministic assignments.
struct NCModel {
    std::vector<std::pair<GlobalAssignment, Rational>> weights;

    // Float-mode models may carry weights that sum to 1 only within
    // tolerance; pass the matching mode when replaying those.
    Behavior induced_behavior(ScenarioPtr scenario,
                              const NumericMode& mode = NumericMode::exact()) const;
    Rational total_weight() const;
};

// Farkas certificate of contextuality in inequality form: sum of
// coefficient[ctx][tuple] * p_ctx(tuple) is at most `bound` for every
// non-contextual behavior, yet equals `value_on_behavior` > bound here.
struct ContextualityWitness {
    std::vector<ContextTable> coefficients;
    Rational bound = 0;
    Rational value_on_behavior = 0;
};

// Exact replay of the witness: every deterministic assignment must satisfy
// the inequality and the behavior must violate it.
bool verify_witness(const ContextualityWitness& w, const Behavior& b,
                    unsigned long long vertex_cap = kDefaultVertexCap);

struct NoncontextualityResult {
    bool noncontextual = false;
    std::optional<NCModel> model;               // on success
    std::optional<ContextualityWitness> witness;  // on failure (exact mode)
    long lp_pivots = 0;
};

NoncontextualityResult check_noncontextual(const Behavior& b,
                                           const QuantifierOptions& opts = {});

struct QuantifierResult {
    std::string quantifier;  // "cf" | "du" | "dmax" | "eu" | "emax"
    double value = 0;
    std::optional<Rational> exact_value;   // exact quantifiers
    std::optional<Rational> lambda;        // cf: decomposition weight
    std::optional<Rational> lp_optimum;    // cf: raw LP optimum (1 - lambda)
    std::optional<NCModel> witness;        // closest NC model / NC part
    std::optional<Behavior> residual;      // cf: the arbitrary part B'
    long iterations = 0;                   // pivots or Frank-Wolfe iterations
    std::string mode;                      // "exact-rational" | "float"
    double gap = 0;                        // entropic: final duality gap
};

QuantifierResult contextual_fraction(const Behavior& b, const QuantifierOptions& opts = {});
QuantifierResult l1_uniform_distance(const Behavior& b, const QuantifierOptions& opts = {});
QuantifierResult l1_max_distance(const Behavior& b, const QuantifierOptions& opts = {});

// Base-2 Kullback-Leibler divergence with the conventions 0*log(0/q) = 0 and
// p > 0, q = 0 -> +infinity. Throws on length mismatch or negative entries.
double kl_divergence(const std::vector<double>& p, const std::vector<double>& q);

struct EntropicOptions {
    long max_iterations = 100'000;  // per Frank-Wolfe stage
    unsigned long long vertex_cap = kDefaultVertexCap;
};

QuantifierResult relative_entropy_uniform(const Behavior& b, double tol = 1e-6,
                                          const EntropicOptions& opts = {});
QuantifierResult relative_entropy_max(const Behavior& b, double tol = 1e-6,
                                      const EntropicOptions& opts = {});

// Average Hamming distance of a Boolean function (given as a truth table of
// length 2^m) to the closest Z2-linear function a.x, minimized over all 2^m
// coefficient vectors via a fast Walsh-Hadamard transform.
Rational nu_linear_distance(const std::vector<std::uint8_t>& truth_table);

// Lower bound (1 - cf) * nu on the average failure probability of an l2-MBQC
// computing a Boolean function at linear distance nu with resource behavior of
// contextual fraction cf.
Rational mbqc_failure_bound(const Rational& cf, const Rational& nu);
double mbqc_failure_bound(double cf, double nu);

// Shared dense view of a behavior over the assignment polytope: per-assignment
// cell hits plus the dense probability vector. Built once per quantifier call.
struct AssignmentPolytope {
    ScenarioPtr scenario;
    CellIndexer cells;
    std::vector<GlobalAssignment> assignments;
    std::vector<std::vector<std::size_t>> assignment_cell;  // [assignment][ctx] -> cell
    std::vector<Rational> target;                           // dense behavior table

    AssignmentPolytope(const Behavior& b, unsigned long long cap);
};

}  // namespace ctxkit
