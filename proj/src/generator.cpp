#include "rcsp/generator.hpp"

#include <algorithm>
#include <random>

namespace rcsp {

std::size_t PlantResult::corrupted_count() const {
    return static_cast<std::size_t>(std::count(corrupted.begin(), corrupted.end(), 1));
}

namespace {

std::vector<int> random_distinct_scope(std::mt19937_64& rng, int num_vars, int arity) {
    std::vector<int> scope;
    std::uniform_int_distribution<int> pick(0, num_vars - 1);
    while (static_cast<int>(scope.size()) < arity) {
        int v = pick(rng);
        if (std::find(scope.begin(), scope.end(), v) == scope.end()) scope.push_back(v);
    }
    return scope;
}

}  // namespace

PlantResult plant_and_corrupt(const ConstraintLanguage& language, int num_vars,
                              int num_constraints, double epsilon, std::uint64_t seed) {
    if (language.relations.empty()) throw Error("language has no relations to plant");
    if (epsilon < 0 || epsilon > 1) throw Error("epsilon must lie in [0, 1]");
    for (const auto& [name, rel] : language.relations)
        if (rel.empty()) throw Error("relation '" + name + "' is empty; cannot plant");
    int max_arity = language.max_arity();
    if (max_arity > num_vars)
        throw Error("no scope of distinct variables fits the largest relation arity");

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> value_pick(0, language.domain_size - 1);
    std::uniform_int_distribution<std::size_t> relation_pick(0, language.relations.size() - 1);
    std::uniform_real_distribution<double> coin(0.0, 1.0);

    PlantResult result;
    result.instance.num_variables = num_vars;
    result.instance.domain_size = language.domain_size;
    result.planted.resize(num_vars);
    for (int x = 0; x < num_vars; ++x) result.planted[x] = value_pick(rng);

    constexpr int kRetryCap = 100000;
    for (int ci = 0; ci < num_constraints; ++ci) {
        // a constraint satisfied by the planted assignment, by rejection
        const Relation* rel = nullptr;
        std::vector<int> scope;
        int attempts = 0;
        while (true) {
            if (++attempts > kRetryCap)
                throw Error("could not plant a satisfied constraint; no relation of a "
                            "plantable arity under the planted assignment");
            const auto& cand = language.relations[relation_pick(rng)].second;
            std::vector<int> s = random_distinct_scope(rng, num_vars, cand.arity);
            std::vector<int> image;
            for (int v : s) image.push_back(result.planted[v]);
            if (cand.contains(image)) {
                rel = &cand;
                scope = std::move(s);
                break;
            }
        }

        bool corrupt = coin(rng) < epsilon;
        if (corrupt && language.relations.size() > 1) {
            // a different relation on a fresh random scope
            std::size_t original = 0;
            for (std::size_t i = 0; i < language.relations.size(); ++i)
                if (&language.relations[i].second == rel) original = i;
            std::size_t swap = relation_pick(rng);
            while (swap == original) swap = relation_pick(rng);
            const auto& cand = language.relations[swap].second;
            scope = random_distinct_scope(rng, num_vars, cand.arity);
            rel = &cand;
        }
        result.instance.constraints.push_back({scope, *rel});
        result.corrupted.push_back(corrupt ? 1 : 0);
    }
    return result;
}

Instance random_instance(const ConstraintLanguage& language, int num_vars, int num_constraints,
                         std::uint64_t seed) {
    if (language.relations.empty()) throw Error("language has no relations");
    if (language.max_arity() > num_vars)
        throw Error("no scope of distinct variables fits the largest relation arity");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> relation_pick(0, language.relations.size() - 1);

    Instance instance;
    instance.num_variables = num_vars;
    instance.domain_size = language.domain_size;
    for (int ci = 0; ci < num_constraints; ++ci) {
        const auto& rel = language.relations[relation_pick(rng)].second;
        instance.constraints.push_back({random_distinct_scope(rng, num_vars, rel.arity), rel});
    }
    return instance;
}

}  // namespace rcsp
