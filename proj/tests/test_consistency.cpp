#include <doctest.h>

#include "rcsp/consistency.hpp"
#include "rcsp/generator.hpp"
#include "test_util.hpp"

using namespace rcsp;
using namespace testutil;

namespace {

Instance or_with_unary_zero() {
    // x or y together with x in {0}: 1-consistency forces y = 1
    Instance instance;
    instance.num_variables = 2;
    instance.domain_size = 2;
    instance.constraints.push_back({{0, 1}, rel(2, {{0, 1}, {1, 0}, {1, 1}})});
    instance.constraints.push_back({{0}, rel(1, {{0}})});
    return instance;
}

Instance contradictory() {
    Instance instance;
    instance.num_variables = 1;
    instance.domain_size = 2;
    instance.constraints.push_back({{0}, rel(1, {{0}})});
    instance.constraints.push_back({{0}, rel(1, {{1}})});
    return instance;
}

}  // namespace

TEST_CASE("kl_minimize") {
    SUBCASE("propagation pins forced values") {
        auto minimal = kl_minimize(or_with_unary_zero(), 1, 1);
        auto py = minimal.projections.at({1});
        CHECK(py == std::vector<char>{0, 1});  // P_y = {1}
    }
    SUBCASE("contradiction empties everything") {
        auto minimal = kl_minimize(contradictory(), 1, 1);
        CHECK(is_trivial(minimal));
    }
    SUBCASE("fixpoint: minimizing a minimized instance changes nothing") {
        auto lang = twosat_language();
        Instance instance = random_instance(lang, 5, 8, 17);
        auto once = kl_minimize(instance, 2, 3);
        // run again against an instance rebuilt from the working constraints
        Instance again;
        again.num_variables = instance.num_variables;
        again.domain_size = instance.domain_size;
        for (const auto& wc : once.working) {
            std::vector<std::vector<int>> tuples;
            std::vector<int> digits(wc.scope.size());
            for (std::size_t idx = 0; idx < wc.allowed.size(); ++idx) {
                if (wc.allowed[idx]) {
                    std::size_t rest = idx;
                    for (int i = static_cast<int>(wc.scope.size()) - 1; i >= 0; --i) {
                        digits[i] = static_cast<int>(rest % instance.domain_size);
                        rest /= instance.domain_size;
                    }
                    tuples.push_back(digits);
                }
            }
            again.constraints.push_back(
                {wc.scope, Relation::make(static_cast<int>(wc.scope.size()), tuples,
                                          instance.domain_size)});
        }
        auto twice = kl_minimize(again, 2, 3);
        CHECK(once.projections == twice.projections);
    }
    SUBCASE("order independence") {
        auto lang = horn_language();
        Instance instance = random_instance(lang, 6, 12, 23);
        auto reference = kl_minimize(instance, 2, 3);
        for (std::uint64_t shuffle = 1; shuffle <= 5; ++shuffle) {
            ConsistencyOptions options;
            options.shuffle_seed = shuffle;
            auto shuffled = kl_minimize(instance, 2, 3, options);
            CHECK(shuffled.projections == reference.projections);
        }
    }
    SUBCASE("solution set unchanged") {
        auto lang = twosat_language();
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            Instance instance = random_instance(lang, 5, 10, seed);
            auto minimal = kl_minimize(instance, 2, 3);

            auto satisfies_working = [&](const Assignment& a) {
                for (const auto& wc : minimal.working) {
                    std::size_t idx = 0;
                    for (int v : wc.scope)
                        idx = idx * instance.domain_size + static_cast<std::size_t>(a[v]);
                    if (!wc.allowed[idx]) return false;
                }
                return true;
            };

            Assignment a(instance.num_variables, 0);
            std::function<void(int)> walk = [&](int var) {
                if (var == instance.num_variables) {
                    bool orig = satisfied_count(instance, a) == instance.m();
                    CHECK(orig == satisfies_working(a));
                    return;
                }
                for (int v = 0; v < 2; ++v) {
                    a[var] = v;
                    walk(var + 1);
                }
            };
            walk(0);
        }
    }
    SUBCASE("repeated variables in scope are rejected") {
        Instance instance;
        instance.num_variables = 2;
        instance.domain_size = 2;
        instance.constraints.push_back({{0, 0}, rel(2, {{0, 0}, {1, 1}})});
        CHECK_THROWS(kl_minimize(instance, 1, 2));
    }
}

TEST_CASE("solve_bounded_width") {
    auto horn = horn_language();
    auto twosat = twosat_language();

    SUBCASE("solves satisfiable planted instances with value 1") {
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            auto plant = plant_and_corrupt(horn, 8, 20, 0.0, seed);
            auto solved = solve_bounded_width(plant.instance, horn);
            REQUIRE(solved.has_value());
            CHECK(value(plant.instance, *solved).is_one());
        }
    }
    SUBCASE("trivial instance yields no solution") {
        auto solved = solve_bounded_width(contradictory(), horn);
        CHECK_FALSE(solved.has_value());
    }
    SUBCASE("recovers unique solutions exactly") {
        // pin every variable by singleton constraints through implications
        Instance instance;
        instance.num_variables = 4;
        instance.domain_size = 2;
        instance.constraints.push_back({{0}, rel(1, {{1}})});
        instance.constraints.push_back({{0, 1}, rel(2, {{0, 0}, {0, 1}, {1, 1}})});
        instance.constraints.push_back({{1, 2}, rel(2, {{0, 0}, {0, 1}, {1, 1}})});
        instance.constraints.push_back({{3}, rel(1, {{0}})});
        auto solved = solve_bounded_width(instance, horn);
        REQUIRE(solved.has_value());
        CHECK(*solved == Assignment{1, 1, 1, 0});
        auto brute = brute_force_opt(instance);
        CHECK(brute.assignment == *solved);
    }
    SUBCASE("agrees with brute force on satisfiability") {
        int sat_seen = 0, unsat_seen = 0;
        for (std::uint64_t seed = 1; seed <= 30; ++seed) {
            Instance instance = random_instance(twosat, 6, 14, seed);
            bool sat = brute_force_opt(instance).opt.is_one();
            auto solved = solve_bounded_width(instance, twosat);
            CHECK(solved.has_value() == sat);
            if (solved) CHECK(value(instance, *solved).is_one());
            (sat ? sat_seen : unsat_seen)++;
        }
        CHECK(sat_seen > 0);
        CHECK(unsat_seen > 0);
    }
    SUBCASE("missing witness is an error") {
        auto lang = horn_language();
        lang.witness.reset();
        CHECK_THROWS(solve_bounded_width(contradictory(), lang));
    }
}
