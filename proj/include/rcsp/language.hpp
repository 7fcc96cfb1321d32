#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rcsp/instance.hpp"
#include "rcsp/operation_table.hpp"

namespace rcsp {

/// Pair of operations (ternary f1, 4-ary f2) witnessing that a language is
/// solvable by local consistency; see verify_bw_witness in algebra.hpp for the
/// identities they must satisfy.
struct WitnessPair {
    OperationTable f1;
    OperationTable f2;
};

struct ConstraintLanguage {
    int domain_size{1};
    std::vector<std::pair<std::string, Relation>> relations;
    std::optional<WitnessPair> witness;

    const Relation* find(const std::string& name) const;
    bool contains_relation(const Relation& r) const;

    /// True when {a} is present for every domain element a.
    bool singleton_expanded() const;

    int max_arity() const;
};

}  // namespace rcsp
