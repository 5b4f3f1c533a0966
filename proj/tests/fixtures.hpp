#pragma once

// Shared scenario and behavior fixtures for the test suites.

#include <string>

#include "ctxkit/scenario.hpp"

namespace ctxfix {

using namespace ctxkit;

inline std::string data_file(const std::string& name) {
    return std::string(CTXKIT_DATA_DIR) + "/" + name;
}

inline ScenarioPtr chain_scenario() {
    return make_scenario({"x", "y", "z"}, {"0", "1"}, {{"x", "y"}, {"y", "z"}});
}

inline ScenarioPtr chsh_scenario() {
    return make_scenario({"a0", "a1", "b0", "b1"}, {"0", "1"},
                         {{"a0", "b0"}, {"a0", "b1"}, {"a1", "b0"}, {"a1", "b1"}});
}

inline ScenarioPtr triangle_scenario() {
    return make_scenario({"x", "y", "z"}, {"0", "1"}, {{"x", "y"}, {"y", "z"}, {"z", "x"}});
}

// PR box: outcomes satisfy a xor b = i*j in context {a_i, b_j}, uniformly.
inline Behavior pr_box() {
    Behavior b(chsh_scenario());
    const Rational half = make_rational(1, 2);
    for (int ctx = 0; ctx < 4; ++ctx) {
        int parity = (ctx == 3) ? 1 : 0;  // only {a1,b1} demands anticorrelation
        for (int a = 0; a < 2; ++a) b.set_probability(ctx, {a, a ^ parity}, half);
    }
    return b;
}

inline Behavior anti_pr_box() {
    Behavior b(chsh_scenario());
    const Rational half = make_rational(1, 2);
    for (int ctx = 0; ctx < 4; ++ctx) {
        int parity = (ctx == 3) ? 0 : 1;
        for (int a = 0; a < 2; ++a) b.set_probability(ctx, {a, a ^ parity}, half);
    }
    return b;
}

// Perfect anticorrelation around the triangle: non-disturbing but admits no
// global section (no 2-coloring of an odd cycle).
inline Behavior anticorrelated_triangle() {
    Behavior b(triangle_scenario());
    const Rational half = make_rational(1, 2);
    for (int ctx = 0; ctx < 3; ++ctx) {
        b.set_probability(ctx, {0, 1}, half);
        b.set_probability(ctx, {1, 0}, half);
    }
    return b;
}

inline ScenarioPtr pentagon_scenario() {
    return make_scenario(
        {"m0", "m1", "m2", "m3", "m4"}, {"0", "1"},
        {{"m0", "m1"}, {"m1", "m2"}, {"m2", "m3"}, {"m3", "m4"}, {"m4", "m0"}});
}

// Same odd-cycle trick on five measurements.
inline Behavior anticorrelated_pentagon() {
    Behavior b(pentagon_scenario());
    const Rational half = make_rational(1, 2);
    for (int ctx = 0; ctx < 5; ++ctx) {
        b.set_probability(ctx, {0, 1}, half);
        b.set_probability(ctx, {1, 0}, half);
    }
    return b;
}

// lambda*PR + (1-lambda)*uniform; crosses the non-contextual boundary at 1/2.
inline Behavior noisy_pr(const Rational& lambda) {
    Behavior pr = pr_box();
    return mix_behaviors({lambda, 1 - lambda}, {pr, uniform_behavior(pr.scenario)});
}

// Maximal disturbance: p_xy pins y to 0 while p_yz pins y to 1.
inline Behavior disturbing_chain() {
    Behavior b(chain_scenario());
    const Rational half = make_rational(1, 2);
    b.set_probability(0, {0, 0}, half);
    b.set_probability(0, {1, 0}, half);
    b.set_probability(1, {1, 0}, half);
    b.set_probability(1, {1, 1}, half);
    return b;
}

}  // namespace ctxfix
