#pragma once

#include <span>
#include <vector>

#include "rcsp/errors.hpp"

namespace rcsp {

/// A finite operation D^arity -> D given by an explicit table. Entries are
/// stored row-major over argument tuples with the first argument as the most
/// significant mixed-radix digit.
struct OperationTable {
    int arity{1};
    int domain_size{1};
    std::vector<int> table;

    static OperationTable make(int arity, int domain_size, std::vector<int> table);

    /// i-th argument projection.
    static OperationTable projection(int arity, int domain_size, int index);

    std::size_t index_of(std::span<const int> args) const;
    int apply(std::span<const int> args) const { return table[index_of(args)]; }
    int apply(std::initializer_list<int> args) const {
        return apply(std::span<const int>(args.begin(), args.size()));
    }

    bool idempotent() const;

    friend bool operator==(const OperationTable& a, const OperationTable& b) {
        return a.arity == b.arity && a.domain_size == b.domain_size && a.table == b.table;
    }
};

}  // namespace rcsp
