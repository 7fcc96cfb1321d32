#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rcsp/errors.hpp"
#include "rcsp/fraction.hpp"

namespace rcsp {

/// A k-ary relation over the domain {0, ..., domain elements - 1}, stored as a
/// duplicate-free sorted tuple list.
struct Relation {
    int arity{1};
    std::vector<std::vector<int>> tuples;

    /// Sorts and dedupes; throws if a tuple has the wrong length or an entry
    /// outside [0, domain_size).
    static Relation make(int arity, std::vector<std::vector<int>> tuples, int domain_size);

    bool contains(std::span<const int> tuple) const;
    bool empty() const { return tuples.empty(); }
    std::size_t size() const { return tuples.size(); }

    friend bool operator==(const Relation& a, const Relation& b) {
        return a.arity == b.arity && a.tuples == b.tuples;
    }
};

struct Constraint {
    std::vector<int> scope;
    Relation relation;
};

/// CSP instance: variables 0..num_variables-1 over a common domain and an
/// ordered constraint list. The list order is part of the data; duplicates
/// count multiply in the value.
struct Instance {
    int num_variables{0};
    int domain_size{1};
    std::vector<Constraint> constraints;

    std::size_t m() const { return constraints.size(); }
    bool degenerate() const { return constraints.empty(); }
    int max_arity() const;

    /// Scope/arity/range checks; throws ParseError naming the offending
    /// constraint index.
    void validate() const;
};

using Assignment = std::vector<int>;

/// Fraction of constraints satisfied by the assignment. Throws
/// DegenerateInstanceError when the instance has no constraints.
Fraction value(const Instance& instance, const Assignment& assignment);

/// Number of constraints satisfied by the assignment.
std::size_t satisfied_count(const Instance& instance, const Assignment& assignment);

struct BruteForceResult {
    Assignment assignment;
    Fraction opt;
};

/// Exact maximum by enumeration of all |D|^|V| assignments, ties broken by the
/// lexicographically smallest assignment. Refuses when the search space
/// exceeds `cap`.
BruteForceResult brute_force_opt(const Instance& instance, std::uint64_t cap = 10'000'000);

}  // namespace rcsp
