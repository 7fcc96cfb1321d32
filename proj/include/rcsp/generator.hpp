#pragma once

#include <cstdint>
#include <vector>

#include "rcsp/instance.hpp"
#include "rcsp/language.hpp"

namespace rcsp {

struct PlantResult {
    Instance instance;
    Assignment planted;
    std::vector<char> corrupted;  // flag per constraint
    std::size_t corrupted_count() const;
};

/// Benchmark generator: samples a random assignment F*, then m constraints
/// each satisfied by F*; each constraint is independently corrupted with
/// probability epsilon by swapping in a different language relation on a fresh
/// random scope. Opt >= value(F*) >= 1 - (fraction corrupted).
PlantResult plant_and_corrupt(const ConstraintLanguage& language, int num_vars, int num_constraints,
                              double epsilon, std::uint64_t seed);

/// Uniformly random instance of the language (no planting); scopes use
/// distinct variables.
Instance random_instance(const ConstraintLanguage& language, int num_vars, int num_constraints,
                         std::uint64_t seed);

}  // namespace rcsp
