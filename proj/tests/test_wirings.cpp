#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ctxkit/io.hpp"
#include "ctxkit/wirings.hpp"
#include "fixtures.hpp"

using namespace ctxkit;
using namespace ctxfix;

namespace {

// chain behavior with distinct context tables: x,y perfectly correlated,
// y,z independent uniform
Behavior correlated_chain() {
    Behavior b(chain_scenario());
    b.set_probability(0, {0, 0}, make_rational(1, 2));
    b.set_probability(0, {1, 1}, make_rational(1, 2));
    for (int y = 0; y < 2; ++y)
        for (int z = 0; z < 2; ++z) b.set_probability(1, {y, z}, make_rational(1, 4));
    return b;
}

}  // namespace

TEST_CASE("pre-processing") {
    auto chain = chain_scenario();
    Behavior b = correlated_chain();

    SUBCASE("identity pre-box leaves the behavior unchanged") {
        PreProcessing id = identity_preprocessing(chain);
        CHECK(validate_preprocessing(id, *chain).empty());
        Behavior out = apply_preprocessing(id, b);
        CHECK(out == b);
    }

    SUBCASE("deterministic routing to one fixed context") {
        PreProcessing w = identity_preprocessing(chain);
        // send every z light to x: both pre contexts now read the {x,y} table
        for (std::size_t o = 0; o < chain->outcomes.size(); ++o)
            w.light_to_button[chain->measurement_index("z")][o] = chain->measurement_index("x");
        CHECK(validate_preprocessing(w, *chain).empty());
        Behavior out = apply_preprocessing(w, b);
        CHECK(out.tables[0] == b.tables[0]);
        // pre context {y,z}: wire y reads y, wire z reads x; the correlated
        // table reappears with slots swapped
        CHECK(out.probability(1, {0, 0}) == make_rational(1, 2));
        CHECK(out.probability(1, {1, 1}) == make_rational(1, 2));
        CHECK(out.probability(1, {0, 1}) == 0);
    }

    SUBCASE("uniform two-outcome routing mixes two contexts (summation oracle)") {
        auto pre_scenario = make_scenario({"u", "v"}, {"0", "1"}, {{"u", "v"}});
        PreProcessing w;
        w.target = chain;
        Behavior pre_box(pre_scenario);
        pre_box.set_probability(0, {0, 0}, make_rational(1, 2));
        pre_box.set_probability(0, {1, 0}, make_rational(1, 2));
        w.pre_box = pre_box;
        w.light_to_button.assign(2, std::vector<int>(2, 0));
        w.light_to_button[0][0] = chain->measurement_index("x");
        w.light_to_button[0][1] = chain->measurement_index("z");
        w.light_to_button[1][0] = chain->measurement_index("y");
        w.light_to_button[1][1] = chain->measurement_index("y");
        CHECK(validate_preprocessing(w, *chain).empty());

        Behavior out = apply_preprocessing(w, b);
        // direct summation oracle: out(su,sv) = 1/2 p_xy(su,sv) + 1/2 p_yz(sv,su)
        for (int su = 0; su < 2; ++su)
            for (int sv = 0; sv < 2; ++sv) {
                Rational expected = b.probability(0, {su, sv}) / 2 +
                                    b.probability(1, {sv, su}) / 2;
                CHECK(out.probability(0, {su, sv}) == expected);
            }
        CHECK(check_nondisturbance(out));
    }

    SUBCASE("pre box with a larger light alphabet than the target") {
        auto pre_scenario = make_scenario({"u", "v"}, {"0", "1", "2"}, {{"u", "v"}});
        PreProcessing w;
        w.target = chain;
        Behavior pre_box(pre_scenario);
        pre_box.set_probability(0, {0, 0}, make_rational(1, 3));
        pre_box.set_probability(0, {1, 1}, make_rational(1, 3));
        pre_box.set_probability(0, {2, 2}, make_rational(1, 3));
        w.pre_box = pre_box;
        // lights 0 and 2 of u pick x, light 1 picks z; v always reads y
        w.light_to_button = {{chain->measurement_index("x"), chain->measurement_index("z"),
                              chain->measurement_index("x")},
                             {chain->measurement_index("y"), chain->measurement_index("y"),
                              chain->measurement_index("y")}};
        CHECK(validate_preprocessing(w, *chain).empty());
        Behavior out = apply_preprocessing(w, b);
        CHECK(check_nondisturbance(out));
        // 2/3 of the mass reads the {x,y} table, 1/3 reads {y,z} transposed
        for (int su = 0; su < 2; ++su)
            for (int sv = 0; sv < 2; ++sv) {
                Rational expected = b.probability(0, {su, sv}) * make_rational(2, 3) +
                                    b.probability(1, {sv, su}) * make_rational(1, 3);
                CHECK(out.probability(0, {su, sv}) == expected);
            }
    }

    SUBCASE("inconsistent light map is diagnosed with the offending tuple") {
        PreProcessing w = identity_preprocessing(chain);
        // map one x light onto z: {x,y} lights can then fire {z,y}... fine;
        // map it onto y instead so the image collapses to a single button
        w.light_to_button[chain->measurement_index("x")][1] = chain->measurement_index("y");
        auto diags = validate_preprocessing(w, *chain);
        REQUIRE(has_errors(diags));
        CHECK(diags[0].code == "light-map-context");
        CHECK(diags[0].message.find("{x,y}") != std::string::npos);
    }
}

TEST_CASE("post-processing") {
    auto chsh = chsh_scenario();
    Behavior pr = pr_box();

    SUBCASE("identity responses leave the behavior unchanged") {
        PostProcessing id = identity_postprocessing(chsh);
        CHECK(validate_postprocessing(id, *chsh, true).empty());
        Behavior out = apply_postprocessing(id, pr);
        CHECK(out.tables == pr.tables);
        CHECK(out.scenario->measurements == chsh->measurements);
        CHECK(out.scenario->outcomes == chsh->outcomes);
    }

    SUBCASE("constant response concentrates every table on one light") {
        PostProcessing w = identity_postprocessing(chsh);
        for (auto& [key, dist] : w.responses) {
            dist.assign(chsh->outcomes.size(), Rational(0));
            dist[1] = 1;
        }
        Behavior out = apply_postprocessing(w, pr);
        for (std::size_t c = 0; c < out.tables.size(); ++c) {
            REQUIRE(out.tables[c].size() == 1);
            CHECK(out.probability(static_cast<int>(c), {1, 1}) == 1);
        }
    }

    SUBCASE("flipping the Bob wire maps PR onto anti-PR (summation oracle)") {
        PostProcessing w = identity_postprocessing(chsh);
        for (const char* m : {"b0", "b1"})
            for (int o = 0; o < 2; ++o) {
                int button = w.button_from_light[chsh->measurement_index(m)][o];
                std::vector<Rational> dist(2, Rational(0));
                dist[1 - o] = 1;
                w.responses[ResponseKey{0, button, -1, -1}] = dist;
            }
        Behavior out = apply_postprocessing(w, pr);
        CHECK(out.tables == anti_pr_box().tables);
    }

    SUBCASE("ND is preserved") {
        Rng rng(99);
        Behavior b = sample_nd_behavior(chsh, rng);
        PostProcessing w = sample_random_postprocessing(chsh, rng, {}, true, nullptr);
        CHECK(check_nondisturbance(apply_postprocessing(w, b)));
    }
}

TEST_CASE("full wirings") {
    auto chain = chain_scenario();
    auto chsh = chsh_scenario();

    SUBCASE("identity pre + identity post is the identity map") {
        NCWiring id = make_ncwiring(identity_preprocessing(chsh), identity_postprocessing(chsh));
        Behavior pr = pr_box();
        Behavior out = apply_ncwiring(id, pr);
        CHECK(out.tables == pr.tables);
    }

    SUBCASE("validation accepts the identity wiring") {
        NCWiring id{identity_preprocessing(chain), identity_postprocessing(chain)};
        CHECK(validate_wiring(id, *chain).empty());
    }

    SUBCASE("a contextual pre-box is flagged") {
        NCWiring w{identity_preprocessing(chsh), identity_postprocessing(chsh)};
        w.pre.pre_box = pr_box();  // same scenario shape, but contextual
        auto diags = validate_wiring(w, *chsh);
        REQUIRE(has_errors(diags));
        bool found = false;
        for (const auto& d : diags)
            if (d.message.find("pre-box not non-contextual") != std::string::npos) found = true;
        CHECK(found);
        CHECK_THROWS_AS(make_ncwiring(w.pre, w.post), ValidationError);
    }

    SUBCASE("wiring application is linear in the behavior") {
        for (std::uint64_t seed = 5; seed <= 9; ++seed) {
            NCWiring w = sample_random_ncwiring(chsh, seed);
            Rng rng(seed + 1000);
            Behavior b1 = sample_nd_behavior(chsh, rng);
            Behavior b2 = sample_nd_behavior(chsh, rng);
            Rational mu = make_rational(1 + rng.below(15), 16);
            Behavior mixed = mix_behaviors({mu, 1 - mu}, {b1, b2});
            Behavior lhs = apply_ncwiring(w, mixed);
            Behavior rhs = mix_behaviors({mu, 1 - mu},
                                         {apply_ncwiring(w, b1), apply_ncwiring(w, b2)});
            CHECK(lhs == rhs);
        }
    }
}

TEST_CASE("joint response factorization gate") {
    SUBCASE("a product joint factorizes into its marginals") {
        std::map<OutcomeIndexTuple, Rational> joint;
        // wire 1: (3/4, 1/4); wire 2: (1/2, 1/2)
        joint[{0, 0}] = make_rational(3, 8);
        joint[{0, 1}] = make_rational(3, 8);
        joint[{1, 0}] = make_rational(1, 8);
        joint[{1, 1}] = make_rational(1, 8);
        auto factors = factorize_joint_response(joint, 2, 2);
        CHECK(factors[0][0] == make_rational(3, 4));
        CHECK(factors[1][1] == make_rational(1, 2));
    }

    SUBCASE("wires correlated through an undeclared shared bit are rejected") {
        // t1 = t2 = fair hidden coin: representable only with |Phi| >= 2
        std::map<OutcomeIndexTuple, Rational> joint;
        joint[{0, 0}] = make_rational(1, 2);
        joint[{1, 1}] = make_rational(1, 2);
        CHECK_THROWS_WITH_AS(factorize_joint_response(joint, 2, 2),
                             doctest::Contains("correlated across wires"), ValidationError);
    }

    SUBCASE("unnormalized joints are rejected") {
        std::map<OutcomeIndexTuple, Rational> joint;
        joint[{0, 0}] = make_rational(1, 2);
        CHECK_THROWS_AS(factorize_joint_response(joint, 2, 2), ValidationError);
    }
}

TEST_CASE("wiring sampler") {
    auto chsh = chsh_scenario();

    SUBCASE("same seed reproduces the identical wiring") {
        NCWiring w1 = sample_random_ncwiring(chsh, 42);
        NCWiring w2 = sample_random_ncwiring(chsh, 42);
        WiringParts p1{w1.pre, w1.post}, p2{w2.pre, w2.post};
        CHECK(wiring_to_json(p1) == wiring_to_json(p2));
        NCWiring w3 = sample_random_ncwiring(chsh, 43);
        WiringParts p3{w3.pre, w3.post};
        CHECK(wiring_to_json(p1) != wiring_to_json(p3));
    }

    SUBCASE("sampled wirings always validate") {
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            auto scenario = seed % 2 ? chsh : chain_scenario();
            NCWiring w = sample_random_ncwiring(scenario, seed);
            CHECK(validate_wiring(w, *scenario).empty());
        }
    }

    SUBCASE("sampled behaviors are valid and non-disturbing") {
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            Rng rng(seed);
            Behavior v = sample_nd_vertex(chsh, rng);
            CHECK_NOTHROW(v.ensure_valid());
            CHECK(check_nondisturbance(v));
            Behavior b = sample_nd_behavior(chsh, rng);
            CHECK(check_nondisturbance(b));
            Behavior nc = sample_nc_behavior(chsh, rng);
            CHECK(check_noncontextual(nc).noncontextual);
        }
    }

    SUBCASE("contextual sampler returns contextual behaviors") {
        Rng rng(77);
        Behavior b = sample_contextual_behavior(chsh, rng);
        CHECK(!check_noncontextual(b).noncontextual);
    }
}

TEST_CASE("preservation suite") {
    SUBCASE("chain") {
        auto report = run_preservation_suite(chain_scenario(), 100, 2024);
        CHECK(report.trials == 100);
        CHECK(report.passed == 100);
        CHECK(report.passed_nd == 100);
        CHECK(report.passed_nc == 100);
        CHECK(report.ok());
    }

    SUBCASE("CHSH") {
        auto report = run_preservation_suite(chsh_scenario(), 100, 7);
        CHECK(report.passed == 100);
        CHECK(report.ok());
    }

    SUBCASE("determinism in the seed") {
        auto r1 = run_preservation_suite(chain_scenario(), 25, 5);
        auto r2 = run_preservation_suite(chain_scenario(), 25, 5);
        CHECK(r1.passed == r2.passed);
        CHECK(r1.failures.size() == r2.failures.size());
    }

    SUBCASE("three-wide contexts (rigid cover exercising the sampler fallback)") {
        auto wide = make_scenario({"x", "y", "z", "w"}, {"0", "1"},
                                  {{"x", "y", "z"}, {"z", "w"}});
        auto report = run_preservation_suite(wide, 40, 19);
        CHECK(report.passed == 40);
        CHECK(report.ok());
    }

    SUBCASE("triangle cover (odd cycle)") {
        auto report = run_preservation_suite(triangle_scenario(), 40, 23);
        CHECK(report.passed == 40);
        CHECK(report.ok());
    }

    SUBCASE("five-cycle cover") {
        auto report = run_preservation_suite(pentagon_scenario(), 25, 29);
        CHECK(report.passed == 25);
    }

    SUBCASE("ternary outcomes") {
        auto ternary = make_scenario({"x", "y", "z"}, {"0", "1", "2"}, {{"x", "y"}, {"y", "z"}});
        auto report = run_preservation_suite(ternary, 25, 31);
        CHECK(report.passed == 25);
    }
}

TEST_CASE("monotonicity suite") {
    auto chsh = chsh_scenario();

    SUBCASE("cf under full wirings") {
        auto report = run_monotonicity_suite("cf", chsh, 40, 11, OpClass::Full);
        CHECK(report.passed == 40);
        CHECK(report.ok());
    }

    SUBCASE("dmax under full wirings") {
        auto report = run_monotonicity_suite("dmax", chsh, 20, 23, OpClass::Full);
        CHECK(report.ok());
    }

    SUBCASE("du and eu under post-only wirings") {
        CHECK(run_monotonicity_suite("du", chsh, 20, 31, OpClass::PostOnly).ok());
        CHECK(run_monotonicity_suite("eu", chsh, 10, 37, OpClass::PostOnly).ok());
    }

    SUBCASE("eu and du refuse the full class") {
        CHECK_THROWS_WITH_AS(run_monotonicity_suite("eu", chsh, 5, 1, OpClass::Full),
                             doctest::Contains("post-only"), ValidationError);
        CHECK_THROWS_AS(run_monotonicity_suite("du", chsh, 5, 1, OpClass::Full),
                        ValidationError);
    }

    SUBCASE("unknown quantifier is rejected") {
        CHECK_THROWS_AS(run_monotonicity_suite("q7", chsh, 5, 1, OpClass::Full),
                        ValidationError);
        CHECK_THROWS_AS(parse_opclass("sideways"), ValidationError);
    }

    SUBCASE("vertex cap is enforced up front") {
        QuantifierOptions opts;
        opts.vertex_cap = 4;
        CHECK_THROWS_AS(run_monotonicity_suite("cf", chsh, 5, 1, OpClass::Full, opts),
                        CapExceededError);
        CHECK_THROWS_AS(run_preservation_suite(chsh, 5, 1, opts), CapExceededError);
    }
}
