#include <doctest.h>

#include <cmath>

#include "rcsp/generator.hpp"
#include "rcsp/pipeline.hpp"
#include "rcsp/rounding.hpp"
#include "rcsp/sdp.hpp"
#include "test_util.hpp"

using namespace rcsp;
using namespace testutil;

TEST_CASE("paper_div follows the half-open-from-above convention") {
    // greatest integer i with gamma - i*psi > 0
    CHECK(paper_div(0.07, 0.03) == 2);
    CHECK(paper_div(0.06, 0.03) == 1);   // exact multiple belongs below
    CHECK(paper_div(0.0, 0.03) == -1);   // zero is not > 0
    CHECK(paper_div(-0.01, 0.03) == -1);
    CHECK(paper_div(1e-18, 0.03) == 0);
}

TEST_CASE("choose_level") {
    SUBCASE("formula evaluation at large omega") {
        // 1/(1-v) = 2^64 exceeds m, so omega = m ~ 2^63; the formula still
        // gives floor(63 / (4 log2 63)) = 2
        double v = 1.0 - std::pow(2.0, -64);
        auto choice = choose_level(v, std::numeric_limits<std::int64_t>::max(), 1);
        CHECK(choice.omega ==
              doctest::Approx(static_cast<double>(std::numeric_limits<std::int64_t>::max())));
        CHECK(choice.formula_n == 2);
        CHECK(choice.n == 2);
    }
    SUBCASE("v = 1 falls back to omega = m with the same level") {
        auto choice = choose_level(1.0, std::numeric_limits<std::int64_t>::max(), 1);
        CHECK(choice.omega ==
              doctest::Approx(static_cast<double>(std::numeric_limits<std::int64_t>::max())));
        CHECK(choice.formula_n == 2);
    }
    SUBCASE("clamping to the domain floor") {
        double v = 1.0 - std::pow(2.0, -64);
        auto choice = choose_level(v, std::numeric_limits<std::int64_t>::max(), 2);
        CHECK(choice.formula_n == 2);
        CHECK(choice.n == 3);  // |D| + 1
        CHECK(choice.clamped);
    }
    SUBCASE("the level guarantee is re-checked numerically") {
        // v so large that n^{4n} <= 1/(1-v) holds after selection
        double v = 1.0 - 1e-12;
        auto choice = choose_level(v, 1'000'000'000, 1);
        double bound = std::pow(static_cast<double>(choice.n), 4.0 * choice.n);
        CHECK(choice.guarantee_ok == (v >= 1.0 - 1.0 / bound));
        CHECK(choice.guarantee_ok);
    }
    SUBCASE("tiny omega clamps with a warning") {
        auto choice = choose_level(0.0, 2, 1);
        CHECK(choice.clamped);
        CHECK_FALSE(choice.warning.empty());
    }
}

TEST_CASE("geometry: t-count sandwich") {
    RoundingParams params;
    params.n = 3;
    params.r = 1;
    params.mode = RoundingMode::randomized;
    RoundingParams::fill_params(params, 2);
    params.s = params.u2 / 3;

    const double pi_log_n = std::numbers::pi * std::log2(3.0);
    for (double norm = std::pow(3.0, -2.0); norm <= 1.0; norm += 0.013) {
        double norm_sq = norm * norm;
        if (norm_sq < std::pow(3.0, -4.0)) continue;
        int t = params.t_of(norm_sq);
        CHECK(t >= pi_log_n * std::pow(3.0, 2.0) * norm - 1e-9);
        CHECK(t <= 2 * pi_log_n * std::pow(3.0, 2.0) * norm + 1 + 1e-9);
    }
}

TEST_CASE("prune") {
    auto lang = twosat_language();
    auto plant = plant_and_corrupt(lang, 6, 18, 0.0, 12);

    SUBCASE("integral vectors survive every threshold step") {
        auto vectors = integral_embedding(plant.instance, plant.planted);
        RoundingParams params;
        params.n = 2;
        params.r = 1;
        params.mode = RoundingMode::randomized;
        RoundingParams::fill_params(params, 2);
        params.s = params.u2 / 2;
        auto result = prune(plant.instance, vectors, params);
        CHECK(result.removed_step2 == 0);
        CHECK(result.removed_step3 == 0);
        CHECK(result.removed_step5 == 0);
        CHECK(result.retained.size() == plant.instance.m());
    }
    SUBCASE("a weight inside the gap removes the constraint at step 2") {
        // synthetic vectors: x and y share a unit axis except for one pair
        // with dot product right inside [n^{-8}, n^{-4})
        SDPVectors vectors(2, 2, 3);
        double w = std::pow(2.0, -6);  // inside [2^-8, 2^-4)
        // x_0 = e1, x_1 = 0; y_0 = w e1 + sqrt(w - w^2)-ish rest on e2
        vectors.vec(0, 0) << 1, 0, 0;
        vectors.vec(1, 0) << w, std::sqrt(w - w * w), 0;
        vectors.vec(1, 1) << 1 - w, -std::sqrt(w - w * w), 0;
        Instance instance;
        instance.num_variables = 2;
        instance.domain_size = 2;
        instance.constraints.push_back({{0, 1}, rel(2, {{0, 0}, {0, 1}, {1, 0}, {1, 1}})});
        RoundingParams params;
        params.n = 2;
        params.r = 1;
        params.mode = RoundingMode::randomized;
        RoundingParams::fill_params(params, 2);
        params.s = params.u2 / 2;
        auto result = prune(instance, vectors, params);
        CHECK(result.removed_step2 == 1);
        CHECK(result.retained.empty());
    }
    SUBCASE("a corrupted constraint with heavy out-of-relation weight dies at step 3") {
        auto corrupted = plant_and_corrupt(lang, 6, 40, 0.15, 31);
        auto vectors = integral_embedding(corrupted.instance, corrupted.planted);
        RoundingParams params;
        params.n = 2;
        params.r = 1;
        params.mode = RoundingMode::randomized;
        RoundingParams::fill_params(params, 2);
        params.s = params.u2 / 2;
        auto result = prune(corrupted.instance, vectors, params);
        // exactly the constraints the planted assignment violates have weight
        // 1 outside their relation
        std::size_t violated = corrupted.instance.m() -
                               satisfied_count(corrupted.instance, corrupted.planted);
        CHECK(result.removed_step3 == violated);
        CHECK(result.removed_step2 == 0);
    }
}

TEST_CASE("hyperplane phase trivialities") {
    auto lang = twosat_language();
    auto plant = plant_and_corrupt(lang, 6, 18, 0.0, 13);
    auto vectors = integral_embedding(plant.instance, plant.planted);

    RoundingParams params;
    params.n = 2;
    params.r = 1;
    params.seed = 7;
    params.mode = RoundingMode::randomized;
    RoundingParams::fill_params(params, 2);
    params.s = params.u2 / 2;
    std::mt19937_64 rng(7);
    std::normal_distribution<double> gauss;
    for (int i = 0; i < 51; ++i) {
        Eigen::VectorXd q(1);
        q << (gauss(rng) >= 0 ? 1.0 : -1.0);
        params.hyperplanes.push_back(q);
    }

    PruneResult pruned = prune(plant.instance, vectors, params);
    auto cut = hyperplane_phase(plant.instance, vectors, pruned.retained, params);
    // integral vectors: every P_x is a singleton, so no step-7 pairs exist,
    // and the only almost-the-same pairs are identical vectors
    CHECK(cut.removed_step7 == 0);
    CHECK(cut.removed_step8 == 0);
    CHECK(cut.retained.size() == pruned.retained.size());
}

TEST_CASE("build_J on the published vectors at level 2") {
    // treat the three variables as one retained triangle; threshold 1/16
    Instance instance;
    instance.num_variables = 3;
    instance.domain_size = 2;
    Relation full = rel(2, {{0, 0}, {0, 1}, {1, 0}, {1, 1}});
    instance.constraints.push_back({{0, 1}, full});
    instance.constraints.push_back({{0, 2}, full});
    instance.constraints.push_back({{1, 2}, full});

    RoundingParams params;
    params.n = 2;
    params.r = 1;
    params.mode = RoundingMode::randomized;
    RoundingParams::fill_params(params, 2);
    params.s = params.u2 / 2;

    std::vector<int> retained{0, 1, 2};
    auto jres = build_J(instance, paper_vectors(), retained, params);
    CHECK(jres.prague.relation(0, 1).pairs() ==
          std::vector<std::pair<int, int>>{{0, 1}, {1, 0}, {1, 1}});
    CHECK(jres.prague.relation(0, 2).pairs() ==
          std::vector<std::pair<int, int>>{{0, 0}, {0, 1}, {1, 1}});
    CHECK(jres.prague.relation(1, 2).pair_count() == 4);
    CHECK(verify_weak_prague(jres.prague).pass());

    SUBCASE("threshold soundness: J relations sit inside constraint relations") {
        for (int ci : retained) {
            const auto& c = instance.constraints[ci];
            for (auto [a, b] : jres.prague.relation(c.scope[0], c.scope[1]).pairs()) {
                int t[2] = {a, b};
                CHECK(c.relation.contains(t));
            }
        }
    }
}

TEST_CASE("robust_round end to end") {
    auto lang = twosat_language();
    std::vector<OperationTable> ops{lang.witness->f1, lang.witness->f2};

    SUBCASE("integral vectors give value 1 with zero removals") {
        auto plant = plant_and_corrupt(lang, 8, 30, 0.0, 3);
        auto vectors = integral_embedding(plant.instance, plant.planted);
        auto result = robust_round(plant.instance, vectors, 2, 5, ops);
        CHECK(result.report.achieved_value.is_one());
        CHECK(result.report.retained == plant.instance.m());
        CHECK(result.report.satisfies_all_retained);
    }
    SUBCASE("solver vectors on a satisfiable instance reach value 1 at level 2") {
        auto plant = plant_and_corrupt(lang, 8, 40, 0.0, 11);
        auto vectors = solve_sdp(build_sdp(plant.instance), 1e-8);
        REQUIRE(vectors.objective >= 1.0 - 1e-8);
        auto result = robust_round(plant.instance, vectors, 2, 17, ops);
        CHECK(result.report.achieved_value.is_one());
        CHECK(result.report.satisfies_all_retained);
    }
    SUBCASE("determinism for a fixed seed") {
        auto plant = plant_and_corrupt(lang, 8, 30, 0.05, 19);
        auto vectors = solve_sdp(build_sdp(plant.instance), 1e-6);
        auto a = robust_round(plant.instance, vectors, 2, 23, ops);
        auto b = robust_round(plant.instance, vectors, 2, 23, ops);
        CHECK(a.assignment == b.assignment);
        CHECK(a.report.retained == b.report.retained);
        CHECK(a.report.r == b.report.r);
        CHECK(a.report.s == b.report.s);
    }
    SUBCASE("walk dichotomy holds on solver outputs") {
        auto plant = plant_and_corrupt(lang, 8, 30, 0.05, 29);
        auto vectors = solve_sdp(build_sdp(plant.instance), 1e-6);
        RoundingParams params;
        params.n = 2;
        params.r = 1;
        params.mode = RoundingMode::randomized;
        RoundingParams::fill_params(params, 2);
        params.s = params.u2 / 3;
        auto pruned = prune(plant.instance, vectors, params);
        // hyperplane budget irrelevant for the dichotomy; reuse prune output
        auto jres = build_J(plant.instance, vectors, pruned.retained, params);
        auto walk = check_walk_dichotomy(jres.prague, jres.prague_vars, vectors, params);
        CHECK(walk.pass);
    }
}

TEST_CASE("derandomized_round") {
    auto lang = horn_language();
    std::vector<OperationTable> ops{lang.witness->f1, lang.witness->f2};

    SUBCASE("integral vectors need zero hyperplanes") {
        auto plant = plant_and_corrupt(lang, 8, 24, 0.0, 41);
        auto vectors = integral_embedding(plant.instance, plant.planted);
        auto result = derandomized_round(plant.instance, vectors, 2, ops, 1);
        CHECK(result.report.achieved_value.is_one());
        CHECK(result.report.hyperplanes_used == 0);
        CHECK(result.report.estimator_initial == doctest::Approx(0.0));
    }
    SUBCASE("bitwise reproducible and estimator never increases") {
        auto plant = plant_and_corrupt(lang, 8, 30, 0.08, 43);
        auto vectors = solve_sdp(build_sdp(plant.instance), 1e-6);
        auto a = derandomized_round(plant.instance, vectors, 2, ops, 7);
        auto b = derandomized_round(plant.instance, vectors, 2, ops, 7);
        CHECK(a.assignment == b.assignment);
        CHECK(a.report.estimator_max_increase <= 1e-12);
        CHECK(a.report.achieved_value.num == b.report.achieved_value.num);
    }
}

TEST_CASE("run_robust pipeline") {
    auto lang = twosat_language();

    SUBCASE("satisfiable instances use the exact path") {
        auto plant = plant_and_corrupt(lang, 8, 30, 0.0, 51);
        RobustRunConfig config;
        auto result = run_robust(plant.instance, lang, config);
        CHECK(result.path == "exact");
        CHECK(result.value.is_one());
    }
    SUBCASE("rounding path with exact disabled still reaches value 1 at eps = 0") {
        auto plant = plant_and_corrupt(lang, 8, 40, 0.0, 53);
        RobustRunConfig config;
        config.exact_first = false;
        config.level = 2;
        config.seed = 9;
        auto result = run_robust(plant.instance, lang, config);
        CHECK(result.path == "rounding");
        CHECK(result.value.is_one());
    }
    SUBCASE("binarize handles wider constraints and lifts the assignment") {
        // Horn clauses of width 3 via the ternary language
        ConstraintLanguage wide;
        wide.domain_size = 2;
        wide.relations.emplace_back("impl2", rel(3, {{0, 0, 0}, {0, 0, 1}, {0, 1, 0}, {0, 1, 1},
                                                     {1, 0, 0}, {1, 0, 1}, {1, 1, 1}}));
        wide = singleton_expand(wide);
        wide.witness = WitnessPair{min_op(3), min_op(4)};
        auto plant = plant_and_corrupt(wide, 6, 10, 0.0, 55);
        RobustRunConfig config;
        config.binarize = true;
        auto result = run_robust(plant.instance, wide, config);
        CHECK(result.path == "exact");
        CHECK(result.value.is_one());
    }
}
