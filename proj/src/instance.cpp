#include "rcsp/instance.hpp"

#include <algorithm>
#include <cmath>

namespace rcsp {

Relation Relation::make(int arity, std::vector<std::vector<int>> tuples, int domain_size) {
    if (arity < 1) throw ParseError("relation arity must be positive");
    for (const auto& t : tuples) {
        if (static_cast<int>(t.size()) != arity)
            throw ParseError("relation tuple length does not match arity");
        for (int v : t)
            if (v < 0 || v >= domain_size) throw ParseError("relation entry out of domain range");
    }
    std::sort(tuples.begin(), tuples.end());
    tuples.erase(std::unique(tuples.begin(), tuples.end()), tuples.end());
    return Relation{arity, std::move(tuples)};
}

bool Relation::contains(std::span<const int> tuple) const {
    return std::binary_search(tuples.begin(), tuples.end(), tuple,
                              [](const auto& a, const auto& b) {
                                  return std::lexicographical_compare(a.begin(), a.end(),
                                                                      b.begin(), b.end());
                              });
}

int Instance::max_arity() const {
    int m = 0;
    for (const auto& c : constraints) m = std::max(m, c.relation.arity);
    return m;
}

void Instance::validate() const {
    if (num_variables < 0) throw ParseError("negative variable count");
    if (domain_size < 1) throw ParseError("domain size must be at least 1");
    for (std::size_t i = 0; i < constraints.size(); ++i) {
        const auto& c = constraints[i];
        if (static_cast<int>(c.scope.size()) != c.relation.arity)
            throw ParseError("constraint " + std::to_string(i) + ": scope/arity mismatch");
        for (int v : c.scope)
            if (v < 0 || v >= num_variables)
                throw ParseError("constraint " + std::to_string(i) + ": variable out of range");
        for (const auto& t : c.relation.tuples)
            for (int e : t)
                if (e < 0 || e >= domain_size)
                    throw ParseError("constraint " + std::to_string(i) + ": value out of range");
    }
}

namespace {

bool satisfies(const Constraint& c, const Assignment& assignment) {
    thread_local std::vector<int> image;
    image.clear();
    for (int v : c.scope) image.push_back(assignment[v]);
    return c.relation.contains(image);
}

}  // namespace

std::size_t satisfied_count(const Instance& instance, const Assignment& assignment) {
    std::size_t count = 0;
    for (const auto& c : instance.constraints)
        if (satisfies(c, assignment)) ++count;
    return count;
}

Fraction value(const Instance& instance, const Assignment& assignment) {
    if (instance.degenerate())
        throw DegenerateInstanceError("value undefined on an instance with no constraints");
    if (static_cast<int>(assignment.size()) != instance.num_variables)
        throw Error("assignment length does not match variable count");
    return Fraction{static_cast<std::int64_t>(satisfied_count(instance, assignment)),
                    static_cast<std::int64_t>(instance.m())};
}

BruteForceResult brute_force_opt(const Instance& instance, std::uint64_t cap) {
    if (instance.degenerate())
        throw DegenerateInstanceError("optimum undefined on an instance with no constraints");
    double space = std::pow(static_cast<double>(instance.domain_size),
                            static_cast<double>(instance.num_variables));
    if (space > static_cast<double>(cap))
        throw CapExceededError("assignment space ~" + std::to_string(space) +
                               " exceeds brute-force cap " + std::to_string(cap));

    Assignment current(instance.num_variables, 0);
    Assignment best = current;
    std::size_t best_count = satisfied_count(instance, current);
    // odometer enumeration is lexicographic, so strict improvement keeps the
    // lexicographically smallest maximizer
    while (true) {
        int pos = instance.num_variables - 1;
        while (pos >= 0 && current[pos] == instance.domain_size - 1) current[pos--] = 0;
        if (pos < 0) break;
        ++current[pos];
        std::size_t count = satisfied_count(instance, current);
        if (count > best_count) {
            best_count = count;
            best = current;
        }
    }
    return BruteForceResult{best, Fraction{static_cast<std::int64_t>(best_count),
                                           static_cast<std::int64_t>(instance.m())}};
}

}  // namespace rcsp
