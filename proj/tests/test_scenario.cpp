#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ctxkit/wirings.hpp"
#include "fixtures.hpp"

using namespace ctxkit;
using namespace ctxfix;

TEST_CASE("scenario validation") {
    auto chain = chain_scenario();
    CHECK(validate_scenario(*chain).empty());

    SUBCASE("duplicate context is an error") {
        Scenario s(*chain);
        s.contexts.push_back({1, 0});  // {y,x} duplicates {x,y} as a set
        auto diags = validate_scenario(s);
        REQUIRE(has_errors(diags));
        CHECK(diags[0].code == "duplicate-context");
    }

    SUBCASE("uncovered measurement is a warning, not an error") {
        auto s = make_scenario({"x", "y", "z", "w"}, {"0", "1"}, {{"x", "y"}, {"y", "z"}});
        auto diags = validate_scenario(*s);
        REQUIRE(diags.size() == 1);
        CHECK(!diags[0].is_error());
        CHECK(diags[0].code == "uncovered-measurement");
        CHECK_NOTHROW(ensure_valid_scenario(*s));
    }

    SUBCASE("single outcome label is an error") {
        auto s = make_scenario({"x", "y"}, {"0"}, {{"x", "y"}});
        CHECK(has_errors(validate_scenario(*s)));
    }

    SUBCASE("unknown measurement in a context") {
        CHECK_THROWS_AS(make_scenario({"x"}, {"0", "1"}, {{"x", "w"}}), ValidationError);
    }
}

TEST_CASE("global assignment enumeration") {
    auto chain = chain_scenario();
    auto all = enumerate_global_assignments(*chain);
    CHECK(all.size() == 8);
    std::set<std::vector<int>> distinct;
    for (const auto& g : all) distinct.insert(g.outcome_for);
    CHECK(distinct.size() == 8);
    // lexicographic in (measurement, outcome) order
    CHECK(all.front().outcome_for == std::vector<int>{0, 0, 0});
    CHECK(all[1].outcome_for == std::vector<int>{0, 0, 1});
    CHECK(all.back().outcome_for == std::vector<int>{1, 1, 1});

    CHECK(enumerate_global_assignments(*chsh_scenario()).size() == 16);

    SUBCASE("cap exceeded names the count") {
        std::vector<std::string> ms;
        std::vector<std::vector<std::string>> ctxs;
        for (int i = 0; i < 21; ++i) ms.push_back("m" + std::to_string(i));
        for (int i = 0; i + 1 < 21; ++i) ctxs.push_back({ms[i], ms[i + 1]});
        auto big = make_scenario(ms, {"0", "1"}, ctxs);
        try {
            enumerate_global_assignments(*big, 1'000'000);
            FAIL("expected CapExceededError");
        } catch (const CapExceededError& e) {
            CHECK(std::string(e.what()).find("2097152") != std::string::npos);
        }
    }
}

TEST_CASE("marginalization") {
    Behavior pr = pr_box();
    const auto& s = *pr.scenario;

    SUBCASE("PR marginal onto one side is uniform") {
        int b0 = s.measurement_index("b0");
        auto marg = marginalize(pr, 0, {b0});
        REQUIRE(marg.size() == 2);
        CHECK(marg.at({0}) == make_rational(1, 2));
        CHECK(marg.at({1}) == make_rational(1, 2));
    }

    SUBCASE("marginal onto the full context is the table itself") {
        auto full = marginalize(pr, 0, s.contexts[0]);
        CHECK(full == pr.tables[0]);
    }

    SUBCASE("uniform table marginalizes to uniform") {
        Behavior u = uniform_behavior(chain_scenario());
        auto marg = marginalize(u, 0, {u.scenario->measurement_index("y")});
        CHECK(marg.at({0}) == make_rational(1, 2));
        CHECK(marg.at({1}) == make_rational(1, 2));
    }

    SUBCASE("subset outside the context is rejected") {
        CHECK_THROWS_AS(marginalize(pr, 0, {s.measurement_index("a1")}), ValidationError);
    }
}

TEST_CASE("non-disturbance check") {
    SUBCASE("chain behavior with matching y-marginals") {
        Behavior b(chain_scenario());
        // p_xy correlates x and y; p_yz leaves z uniform with the same p_y
        b.set_probability(0, {0, 0}, make_rational(1, 2));
        b.set_probability(0, {1, 1}, make_rational(1, 2));
        for (int y = 0; y < 2; ++y)
            for (int z = 0; z < 2; ++z) b.set_probability(1, {y, z}, make_rational(1, 4));
        CHECK(check_nondisturbance(b));
    }

    SUBCASE("independent uniform tables are non-disturbing") {
        CHECK(check_nondisturbance(uniform_behavior(chsh_scenario())));
        CHECK(check_nondisturbance(uniform_behavior(triangle_scenario())));
    }

    SUBCASE("maximal disturbance is caught with the pair and discrepancy") {
        auto report = check_nondisturbance(disturbing_chain());
        REQUIRE(!report);
        CHECK(report.context_a == 0);
        CHECK(report.context_b == 1);
        CHECK(report.max_discrepancy == 1);
    }

    SUBCASE("float mode tolerates tiny slack") {
        Behavior b = disturbing_chain();
        CHECK(!check_nondisturbance(b, NumericMode::floating(1e-9)));
        CHECK(check_nondisturbance(b, NumericMode::floating(2.0)));
    }
}

TEST_CASE("deterministic behaviors from assignments") {
    auto chain = chain_scenario();

    SUBCASE("restriction to contexts") {
        GlobalAssignment g{{0, 1, 0}};  // x:0 y:1 z:0
        Behavior b = assignment_to_behavior(g, chain);
        CHECK(b.probability(0, {0, 1}) == 1);
        CHECK(b.probability(1, {1, 0}) == 1);
        CHECK(b.tables[0].size() == 1);
    }

    SUBCASE("every deterministic behavior is non-disturbing") {
        for (const auto& g : enumerate_global_assignments(*chain))
            CHECK(check_nondisturbance(assignment_to_behavior(g, chain)));
    }

    SUBCASE("uniform mixture of all assignments is the uniform behavior") {
        auto all = enumerate_global_assignments(*chain);
        // direct summation oracle: add the deterministic tables entry by entry
        std::vector<ContextTable> expected(chain->num_contexts());
        for (const auto& g : all)
            for (std::size_t c = 0; c < chain->num_contexts(); ++c)
                expected[c][g.restrict_to(chain->contexts[c])] += make_rational(1, 8);

        std::vector<Rational> weights(all.size(), make_rational(1, 8));
        std::vector<Behavior> parts;
        for (const auto& g : all) parts.push_back(assignment_to_behavior(g, chain));
        Behavior mixed = mix_behaviors(weights, parts);

        CHECK(mixed.tables == expected);
        CHECK(mixed == uniform_behavior(chain));
    }

    SUBCASE("partial assignment is rejected") {
        GlobalAssignment g{{0, 1}};
        CHECK_THROWS_AS(assignment_to_behavior(g, chain), ValidationError);
    }
}

TEST_CASE("mixing behaviors") {
    SUBCASE("singleton mixture is the identity") {
        Behavior pr = pr_box();
        CHECK(mix_behaviors({Rational(1)}, {pr}) == pr);
    }

    SUBCASE("half-half deterministic mixture has entries in {0, 1/2, 1}") {
        auto chain = chain_scenario();
        Behavior b1 = assignment_to_behavior(GlobalAssignment{{0, 0, 0}}, chain);
        Behavior b2 = assignment_to_behavior(GlobalAssignment{{1, 1, 0}}, chain);
        Behavior mixed = mix_behaviors({make_rational(1, 2), make_rational(1, 2)}, {b1, b2});
        for (const auto& table : mixed.tables)
            for (const auto& [tuple, p] : table)
                CHECK((p == make_rational(1, 2) || p == 1));
        CHECK(mixed.probability(0, {0, 0}) == make_rational(1, 2));
    }

    SUBCASE("half PR plus half anti-PR is uniform (componentwise average oracle)") {
        Behavior pr = pr_box(), anti = anti_pr_box();
        Behavior mixed = mix_behaviors({make_rational(1, 2), make_rational(1, 2)}, {pr, anti});
        Behavior expected(pr.scenario);
        for (std::size_t c = 0; c < pr.tables.size(); ++c)
            for (int a = 0; a < 2; ++a)
                for (int b2 = 0; b2 < 2; ++b2) {
                    Rational avg = (pr.probability(static_cast<int>(c), {a, b2}) +
                                    anti.probability(static_cast<int>(c), {a, b2})) /
                                   2;
                    expected.set_probability(static_cast<int>(c), {a, b2}, avg);
                }
        CHECK(mixed == expected);
        CHECK(mixed == uniform_behavior(pr.scenario));
    }

    SUBCASE("weight and scenario validation") {
        Behavior pr = pr_box();
        CHECK_THROWS_AS(mix_behaviors({make_rational(1, 2)}, {pr}), ValidationError);
        CHECK_THROWS_AS(
            mix_behaviors({make_rational(1, 2), make_rational(1, 2)},
                          {pr, uniform_behavior(chain_scenario())}),
            ValidationError);
    }
}

TEST_CASE("product and controlled choice") {
    auto chain = chain_scenario();
    Behavior u = uniform_behavior(chain);

    SUBCASE("chain x chain: contexts multiply, measurements add") {
        Behavior prod = product_box(u, u);
        CHECK(prod.scenario->measurements.size() == 6);
        CHECK(prod.scenario->num_contexts() == 4);
        for (const auto& ctx : prod.scenario->contexts) CHECK(ctx.size() == 4);
        // collision forced the L./R. renaming, recorded in metadata
        CHECK(prod.scenario->measurement_index("L.x") >= 0);
        CHECK(prod.scenario->renamed_from.at("R.z") == "z");
    }

    SUBCASE("deterministic x deterministic is deterministic on the union") {
        Behavior d1 = assignment_to_behavior(GlobalAssignment{{0, 1, 0}}, chain);
        Behavior d2 = assignment_to_behavior(GlobalAssignment{{1, 0, 1}}, chain);
        Behavior prod = product_box(d1, d2);
        for (const auto& table : prod.tables) {
            REQUIRE(table.size() == 1);
            CHECK(table.begin()->second == 1);
        }
        CHECK(prod.probability(0, {0, 1, 1, 0}) == 1);  // L.x,L.y,R.x,R.y
    }

    SUBCASE("uniform x uniform is uniform") {
        Behavior prod = product_box(u, u);
        CHECK(prod == uniform_behavior(prod.scenario));
    }

    SUBCASE("controlled choice juxtaposes") {
        Behavior pick = controlled_choice(u, pr_box());
        CHECK(pick.scenario->measurements.size() == 7);
        CHECK(pick.scenario->num_contexts() == 6);
        CHECK(pick.scenario->contexts[0].size() == 2);
        CHECK(pick.tables[0] == u.tables[0]);
        CHECK(pick.tables[2] == pr_box().tables[0]);
    }

    SUBCASE("chain & chain context bookkeeping") {
        Behavior pick = controlled_choice(u, u);
        CHECK(pick.scenario->measurements.size() == 6);
        CHECK(pick.scenario->num_contexts() == 4);
        for (const auto& ctx : pick.scenario->contexts) CHECK(ctx.size() == 2);
    }

    SUBCASE("outcome set mismatch is an error") {
        auto other = make_scenario({"u", "v"}, {"a", "b"}, {{"u", "v"}});
        CHECK_THROWS_AS(product_box(u, uniform_behavior(other)), ValidationError);
        CHECK_THROWS_AS(controlled_choice(u, uniform_behavior(other)), ValidationError);
    }

    SUBCASE("compositions of sampled ND behaviors stay ND") {
        auto chsh = chsh_scenario();
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            Rng rng(seed);
            Behavior b1 = sample_nd_behavior(chain, rng);
            Behavior b2 = sample_nd_behavior(chsh, rng);
            CHECK(check_nondisturbance(product_box(b1, b2)));
            CHECK(check_nondisturbance(controlled_choice(b1, b2)));
        }
    }
}

TEST_CASE("marginalization is linear in the behavior") {
    auto chsh = chsh_scenario();
    for (std::uint64_t seed = 11; seed <= 15; ++seed) {
        Rng rng(seed);
        Behavior b1 = sample_nd_behavior(chsh, rng);
        Behavior b2 = sample_nd_behavior(chsh, rng);
        Rational mu = make_rational(rng.below(16) + 1, 17);
        Behavior mixed = mix_behaviors({mu, 1 - mu}, {b1, b2});

        std::vector<int> onto{chsh->measurement_index("a0")};
        auto lhs = marginalize(mixed, 0, onto);
        auto m1 = marginalize(b1, 0, onto);
        auto m2 = marginalize(b2, 0, onto);
        for (const auto& [key, p] : lhs) {
            Rational expect = mu * (m1.count(key) ? m1.at(key) : Rational(0)) +
                              (1 - mu) * (m2.count(key) ? m2.at(key) : Rational(0));
            CHECK(p == expect);
        }
    }
}

TEST_CASE("relabeling helpers preserve structure") {
    Behavior pr = pr_box();
    const auto n = pr.scenario->measurements.size();

    SUBCASE("outcome flip on every measurement keeps PR's support pattern") {
        std::vector<std::vector<int>> perms(n, {1, 0});
        Behavior flipped = relabel_outcomes(pr, perms);
        CHECK(check_nondisturbance(flipped));
        // a xor b is invariant under flipping both sides
        CHECK(flipped == pr);
    }

    SUBCASE("renaming measurements keeps tables") {
        Behavior renamed = rename_measurements(pr, {{"a0", "alice0"}});
        CHECK(renamed.scenario->measurement_index("alice0") == 0);
        CHECK(renamed.tables == pr.tables);
        CHECK_THROWS_AS(rename_measurements(pr, {{"a0", "a1"}}), ValidationError);
    }

    SUBCASE("permuting bookkeeping leaves a valid equivalent behavior") {
        Behavior shuffled = permute_behavior(pr, {2, 3, 0, 1}, {1, 0}, {3, 1, 2, 0});
        CHECK_NOTHROW(shuffled.ensure_valid());
        CHECK(check_nondisturbance(shuffled));
    }
}
