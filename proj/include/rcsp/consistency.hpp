#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "rcsp/instance.hpp"
#include "rcsp/language.hpp"

namespace rcsp {

/// Working form of a (k,l)-minimal instance. Relations of the working
/// constraints are dense membership tables indexed by mixed-radix encoded
/// tuples. Projections P_S are materialized for every tuple S of at most k
/// distinct variables covered by some scope.
struct MinimalInstance {
    Instance base;
    int k{2};
    int l{3};

    struct WorkingConstraint {
        std::vector<int> scope;
        std::vector<char> allowed;  // size domain^arity
        std::size_t live{0};
    };
    std::vector<WorkingConstraint> working;

    // key: ascending variable tuple, value: dense table over domain^|S|
    std::map<std::vector<int>, std::vector<char>> projections;

    bool trivial() const;
};

struct ConsistencyOptions {
    int level_cap = 3;                       // largest admissible l
    std::uint64_t tuple_budget = 80'000'000; // added-constraint tuple guard
    std::uint64_t shuffle_seed = 0;          // nonzero randomizes the removal order
};

/// The unique (k,l)-minimal instance corresponding to the input: full
/// constraints are added over every l-subset of variables lacking one, then
/// tuples violating projection agreement are removed to a fixpoint. The
/// solution set is unchanged. Scopes with repeated variables are rejected.
MinimalInstance kl_minimize(const Instance& instance, int k, int l,
                            const ConsistencyOptions& options = {});

/// True iff some (equivalently, after minimization, every) working relation
/// is empty.
bool is_trivial(const MinimalInstance& minimal);

/// Decides the instance by (2,3)-minimality and, when nontrivial, extracts a
/// solution by imposing singleton constraints variable by variable in
/// ascending order, keeping the first value that leaves the instance
/// nontrivial. Requires a singleton-expanded language with a verified
/// bounded-width witness; throws WidthGuaranteeViolated when every value of
/// some variable trivializes the instance.
std::optional<Assignment> solve_bounded_width(const Instance& instance,
                                              const ConstraintLanguage& language,
                                              const ConsistencyOptions& options = {});

}  // namespace rcsp
