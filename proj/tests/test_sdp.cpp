#include <doctest.h>

#include "rcsp/generator.hpp"
#include "rcsp/json_io.hpp"
#include "rcsp/sdp.hpp"
#include "test_util.hpp"

using namespace rcsp;
using namespace testutil;

TEST_CASE("build_sdp objective structure") {
    SUBCASE("single unary constraint contributes its squared norm") {
        Instance instance;
        instance.num_variables = 1;
        instance.domain_size = 2;
        instance.constraints.push_back({{0}, rel(1, {{0}})});
        auto model = build_sdp(instance);
        CHECK(model.objective(0, 0) == doctest::Approx(1.0));
        CHECK(model.objective(1, 1) == doctest::Approx(0.0));
    }
    SUBCASE("full binary relation is worth exactly one at any feasible point") {
        Instance instance;
        instance.num_variables = 2;
        instance.domain_size = 2;
        instance.constraints.push_back({{0, 1}, rel(2, {{0, 0}, {0, 1}, {1, 0}, {1, 1}})});
        auto vectors = solve_sdp(build_sdp(instance), 1e-6);
        CHECK(vectors.objective == doctest::Approx(1.0).epsilon(1e-6));
    }
    SUBCASE("arity above two is rejected") {
        auto lang = parity_language();
        Instance instance;
        instance.num_variables = 3;
        instance.domain_size = 2;
        instance.constraints.push_back({{0, 1, 2}, lang.relations[0].second});
        CHECK_THROWS(build_sdp(instance));
    }
    SUBCASE("repeated variable in a binary scope is rejected") {
        Instance instance;
        instance.num_variables = 1;
        instance.domain_size = 2;
        instance.constraints.push_back({{0, 0}, rel(2, {{0, 0}, {1, 1}})});
        CHECK_THROWS(build_sdp(instance));
    }
}

TEST_CASE("integral embedding is exactly feasible") {
    auto lang = twosat_language();
    auto plant = plant_and_corrupt(lang, 6, 18, 0.0, 5);
    auto vectors = integral_embedding(plant.instance, plant.planted);
    auto feas = check_sdp_feasibility(vectors, 1e-15);
    CHECK(feas.pass());
    CHECK(vectors.objective == doctest::Approx(1.0));
}

TEST_CASE("solve_sdp") {
    SUBCASE("satisfiable instance reaches objective 1") {
        auto lang = horn_language();
        auto plant = plant_and_corrupt(lang, 8, 24, 0.0, 9);
        auto vectors = solve_sdp(build_sdp(plant.instance), 1e-6);
        CHECK(vectors.objective >= 1.0 - 1e-6);
        auto feas = check_sdp_feasibility(vectors, 1e-10);
        CHECK(feas.pass());
    }
    SUBCASE("contradictory singletons cap at one half") {
        Instance instance;
        instance.num_variables = 1;
        instance.domain_size = 2;
        instance.constraints.push_back({{0}, rel(1, {{0}})});
        instance.constraints.push_back({{0}, rel(1, {{1}})});
        auto vectors = solve_sdp(build_sdp(instance), 1e-8);
        // ||x_0||^2 + ||x_1||^2 = 1 splits across the two constraints
        CHECK(vectors.objective == doctest::Approx(0.5).epsilon(1e-6));
    }
    SUBCASE("objective dominates the true optimum") {
        auto lang = twosat_language();
        for (std::uint64_t seed = 1; seed <= 8; ++seed) {
            Instance instance = random_instance(lang, 6, 12, seed);
            auto vectors = solve_sdp(build_sdp(instance), 1e-6);
            auto brute = brute_force_opt(instance);
            CHECK(vectors.objective + 1e-6 >= brute.opt.to_double());
        }
    }
    SUBCASE("deterministic across runs") {
        auto lang = horn_language();
        Instance instance = random_instance(lang, 5, 10, 33);
        auto a = solve_sdp(build_sdp(instance), 1e-6);
        auto b = solve_sdp(build_sdp(instance), 1e-6);
        REQUIRE(a.dimension() == b.dimension());
        for (int x = 0; x < a.num_variables(); ++x)
            for (int v = 0; v < a.domain_size(); ++v)
                CHECK(a.vec(x, v) == b.vec(x, v));  // bitwise
    }
    SUBCASE("subset-sum identity and monotone lengths on solver output") {
        auto lang = twosat_language();
        auto plant = plant_and_corrupt(lang, 6, 15, 0.05, 3);
        auto vectors = solve_sdp(build_sdp(plant.instance), 1e-6);
        const unsigned full = (1u << 2) - 1;
        for (int x = 0; x < vectors.num_variables(); ++x) {
            auto xd = vectors.subset_vector(0, full);
            for (unsigned mask = 0; mask <= full; ++mask) {
                auto xa = vectors.subset_vector(x, mask);
                CHECK(xa.dot(xd) == doctest::Approx(xa.squaredNorm()).epsilon(1e-8));
                for (unsigned super = mask;; super = (super + 1) | mask) {
                    if (super > full) break;
                    auto xb = vectors.subset_vector(x, super);
                    CHECK(xa.squaredNorm() <= xb.squaredNorm() + 1e-8);
                    if (super == full) break;
                }
            }
        }
    }
}

TEST_CASE("check_sdp_feasibility on the published vectors") {
    auto vectors = paper_vectors();
    auto feas = check_sdp_feasibility(vectors, 1e-12);
    CHECK(feas.pass());
    CHECK(feas.sdp1 == doctest::Approx(0.0));
    CHECK(feas.sdp2 == doctest::Approx(0.0));

    SUBCASE("all-zero vectors fail the unit-sum condition with residual 1") {
        SDPVectors zeros(2, 2, 3);
        auto report = check_sdp_feasibility(zeros, 1e-12);
        CHECK_FALSE(report.pass());
        CHECK(report.sdp3_norm == doctest::Approx(1.0));
    }
    SUBCASE("a small perturbation shows up at its own size") {
        auto bumped = paper_vectors();
        bumped.vec(1, 0)[2] += 1e-6;
        auto report = check_sdp_feasibility(bumped, 1e-12);
        CHECK_FALSE(report.pass());
        CHECK(report.max_residual() == doctest::Approx(1e-6).epsilon(0.1));
    }
}

TEST_CASE("lp_from_sdp") {
    auto vectors = paper_vectors();
    Instance instance;
    instance.num_variables = 3;
    instance.domain_size = 2;
    instance.constraints.push_back({{0, 1}, rel(2, {{0, 1}, {1, 0}, {1, 1}})});
    auto lp = lp_from_sdp(vectors, instance, 1e-8);
    CHECK(lp.valid);
    CHECK(lp.lambda_var[0][0] == doctest::Approx(0.5));    // ||x_0||^2
    CHECK(lp.lambda_var[1][0] == doctest::Approx(0.25));   // ||y_0||^2
    for (int x = 0; x < 3; ++x)
        CHECK(lp.lambda_var[x].sum() == doctest::Approx(1.0));
    CHECK(lp.objective == doctest::Approx(1.0));  // all weight sits inside the clause

    SUBCASE("solver output validates and tracks the SDP objective") {
        auto lang = horn_language();
        auto plant = plant_and_corrupt(lang, 6, 14, 0.1, 8);
        auto solved = solve_sdp(build_sdp(plant.instance), 1e-6);
        auto lp2 = lp_from_sdp(solved, plant.instance, 1e-8);
        CHECK(lp2.valid);
        CHECK(lp2.objective == doctest::Approx(solved.objective).epsilon(1e-8));
    }
}

TEST_CASE("vector files round trip at full precision") {
    auto vectors = paper_vectors();
    auto text = serialize_vectors(vectors);
    auto back = parse_vectors(text);
    REQUIRE(back.dimension() == vectors.dimension());
    for (int x = 0; x < 3; ++x)
        for (int a = 0; a < 2; ++a) CHECK(back.vec(x, a) == vectors.vec(x, a));
}
