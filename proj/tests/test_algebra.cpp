#include <doctest.h>

#include <random>

#include "rcsp/algebra.hpp"
#include "rcsp/consistency.hpp"
#include "test_util.hpp"

using namespace rcsp;
using namespace testutil;

TEST_CASE("is_compatible") {
    auto min2 = min_op(2);
    Relation impl = rel(2, {{0, 0}, {0, 1}, {1, 1}});
    Relation xor_rel = rel(2, {{0, 1}, {1, 0}});

    CHECK(is_compatible(min2, impl, 2));
    CHECK_FALSE(is_compatible(min2, xor_rel, 2));  // min((0,1),(1,0)) = (0,0)

    auto identity = OperationTable::projection(1, 2, 0);
    CHECK(is_compatible(identity, impl, 2));
    CHECK(is_compatible(identity, xor_rel, 2));

    SUBCASE("matches the independent recursion on random relations") {
        std::mt19937_64 rng(11);
        for (int trial = 0; trial < 40; ++trial) {
            std::vector<std::vector<int>> tuples;
            for (int i = 0; i < 4; ++i)
                if (rng() & 1) tuples.push_back({i >> 1 & 1, i & 1});
            if (tuples.empty()) continue;
            Relation r = rel(2, tuples);
            for (const auto& f : {min_op(2), majority3(), OperationTable::projection(2, 2, 1)})
                CHECK(is_compatible(f, r, 2) == naive_compatible(f, r));
        }
    }
}

TEST_CASE("verify_bw_witness") {
    auto lang2sat = twosat_language();
    CHECK(verify_bw_witness(majority3(), majority4_of3(), lang2sat));

    auto horn = horn_language();
    CHECK(verify_bw_witness(min_op(3), min_op(4), horn));

    SUBCASE("projections fail the identities") {
        auto proj = OperationTable::projection(3, 2, 0);
        CHECK_FALSE(verify_bw_witness(proj, min_op(4), horn));
    }
    SUBCASE("majority is not compatible with Horn negative clauses... but min is") {
        // sanity: the min witness really is needed for horn_language
        CHECK(is_compatible(min_op(3), *horn.find("nand"), 2));
    }
}

TEST_CASE("search_bw_witness_boolean") {
    SUBCASE("2-clause language yields a verified witness") {
        auto lang = twosat_language();
        lang.witness.reset();
        auto found = search_bw_witness_boolean(lang);
        REQUIRE(found.has_value());
        CHECK(verify_bw_witness(found->f1, found->f2, lang));
    }
    SUBCASE("parity admits no witness") {
        auto lang = parity_language();
        auto found = search_bw_witness_boolean(lang);
        CHECK_FALSE(found.has_value());
    }
    SUBCASE("empty language admits a witness") {
        ConstraintLanguage lang;
        lang.domain_size = 2;
        auto found = search_bw_witness_boolean(lang);
        REQUIRE(found.has_value());
        CHECK(verify_bw_witness(found->f1, found->f2, lang));
    }
    SUBCASE("larger domains are refused") {
        ConstraintLanguage lang;
        lang.domain_size = 3;
        CHECK_THROWS_AS(search_bw_witness_boolean(lang), CapExceededError);
    }
}

TEST_CASE("core_reduce") {
    SUBCASE("diagonal relation collapses to one element") {
        ConstraintLanguage lang;
        lang.domain_size = 3;
        lang.relations.emplace_back("diag", rel(2, {{0, 0}, {1, 1}, {2, 2}}, 3));
        auto core = core_reduce(lang);
        CHECK(core.domain_size == 1);
        CHECK(core.relations[0].second.size() == 1);
    }
    SUBCASE("singleton-expanded languages are already cores") {
        auto lang = singleton_expand(twosat_language());
        auto core = core_reduce(lang);
        CHECK(core.domain_size == 2);
        CHECK(core.relations.size() == lang.relations.size());
        CHECK(core.witness.has_value());  // unchanged language keeps its witness
    }
    SUBCASE("2-clause language with both singletons is unchanged") {
        auto lang = twosat_language();
        auto core = core_reduce(lang);
        CHECK(core.domain_size == 2);
    }
}

TEST_CASE("singleton_expand") {
    ConstraintLanguage lang;
    lang.domain_size = 2;
    lang.relations.emplace_back("impl", rel(2, {{0, 0}, {0, 1}, {1, 1}}));
    auto expanded = singleton_expand(lang);
    CHECK(expanded.relations.size() == 3);
    CHECK(expanded.singleton_expanded());

    SUBCASE("idempotent") {
        auto twice = singleton_expand(expanded);
        CHECK(twice.relations.size() == expanded.relations.size());
    }
    SUBCASE("empty language gains one singleton per element") {
        ConstraintLanguage empty;
        empty.domain_size = 3;
        auto out = singleton_expand(empty);
        CHECK(out.relations.size() == 3);
    }
}

TEST_CASE("binarize") {
    SUBCASE("unary-maximum language is essentially unchanged") {
        ConstraintLanguage lang;
        lang.domain_size = 2;
        lang.relations.emplace_back("one", rel(1, {{1}}));
        lang = singleton_expand(lang);
        Instance instance;
        instance.num_variables = 2;
        instance.domain_size = 2;
        instance.constraints.push_back({{0}, rel(1, {{1}})});
        auto bin = binarize(instance, lang);
        CHECK(bin.language.domain_size == 2);       // D' = D when l = 1
        CHECK(bin.instance.m() == 2);               // each constraint splits in two
        CHECK(bin.instance.num_variables == 3);
    }
    SUBCASE("one ternary constraint over two elements") {
        auto lang = singleton_expand(parity_language());
        Instance instance;
        instance.num_variables = 3;
        instance.domain_size = 2;
        instance.constraints.push_back({{0, 1, 2}, lang.relations[0].second});
        auto bin = binarize(instance, lang);
        CHECK(bin.language.domain_size == 8);  // 2^3 blocks
        CHECK(bin.instance.m() == 4);          // k + 1 constraints
        CHECK(bin.instance.num_variables == 4);
    }
    SUBCASE("satisfiability is preserved and assignments lift") {
        auto lang = singleton_expand(horn_language());
        // a small Horn instance with max arity 2 -> blocks of size 4
        auto plant = plant_and_corrupt(lang, 4, 8, 0.0, 21);
        auto bin = binarize(plant.instance, lang);
        auto orig_opt = brute_force_opt(plant.instance);
        auto bin_opt = brute_force_opt(bin.instance, 100'000'000);
        CHECK(orig_opt.opt.is_one());
        CHECK(bin_opt.opt.is_one());
        Assignment lifted = lift_assignment(bin_opt.assignment, bin.lift);
        CHECK(value(plant.instance, lifted).is_one());
    }
    SUBCASE("witness lifts digitwise") {
        auto lang = singleton_expand(horn_language());
        Instance instance;
        instance.num_variables = 2;
        instance.domain_size = 2;
        instance.constraints.push_back({{0, 1}, *lang.find("impl")});
        auto bin = binarize(instance, lang);
        REQUIRE(bin.language.witness.has_value());
        CHECK(verify_bw_witness(bin.language.witness->f1, bin.language.witness->f2,
                                bin.language));
    }
}

TEST_CASE("lift_assignment degenerate cases") {
    LiftMap lift{3, 2, 1};  // l = 1: identity on the original variables
    Assignment bin{1, 0, 1, 0, 0};
    Assignment lifted = lift_assignment(bin, lift);
    CHECK(lifted == Assignment{1, 0, 1});

    SUBCASE("block decoding takes the most significant digit") {
        LiftMap lift2{2, 2, 2};  // blocks of two Boolean digits
        // block value 2 = (1,0): first digit 1
        Assignment lifted2 = lift_assignment({2, 1, 3}, lift2);
        CHECK(lifted2 == Assignment{1, 0});
    }
}

TEST_CASE("clone_closure") {
    SUBCASE("identity leaves the instance unchanged") {
        auto prague = example_instance();
        auto closed = clone_closure(prague, {OperationTable::projection(1, 2, 0)});
        CHECK(closed == prague);
    }
    SUBCASE("min adds the meet of crossing pairs") {
        PragueInstance prague(2, 2);
        prague.set_relation(0, 1, BinaryRel::from_pairs(2, {{0, 1}, {1, 0}}));
        auto closed = clone_closure(prague, {min_op(2)});
        auto pairs = closed.relation(0, 1).pairs();
        CHECK(pairs == std::vector<std::pair<int, int>>{{0, 0}, {0, 1}, {1, 0}});
    }
    SUBCASE("idempotent and contains the input") {
        auto prague = example_p2_variant();
        std::vector<OperationTable> ops{min_op(2), majority3()};
        auto once = clone_closure(prague, ops);
        auto twice = clone_closure(once, ops);
        CHECK(once == twice);
        for (auto [x, y] : prague.scopes())
            for (auto [a, b] : prague.relation(x, y).pairs()) CHECK(once.relation(x, y).contains(a, b));
    }
    SUBCASE("transposed scopes stay transposed") {
        auto prague = example_instance();
        auto closed = clone_closure(prague, {min_op(2)});
        for (auto [x, y] : closed.scopes())
            CHECK(closed.relation(x, y).transpose() == closed.relation(y, x));
    }
}
