#include "rcsp/operation_table.hpp"

#include <algorithm>
#include <string>

namespace rcsp {

namespace {

std::size_t table_size(int arity, int domain_size) {
    std::size_t n = 1;
    for (int i = 0; i < arity; ++i) n *= static_cast<std::size_t>(domain_size);
    return n;
}

}  // namespace

OperationTable OperationTable::make(int arity, int domain_size, std::vector<int> table) {
    if (arity < 1) throw Error("operation arity must be positive");
    if (domain_size < 1) throw Error("operation domain must be nonempty");
    if (table.size() != table_size(arity, domain_size))
        throw Error("operation table has " + std::to_string(table.size()) + " entries, expected " +
                    std::to_string(table_size(arity, domain_size)));
    for (int v : table)
        if (v < 0 || v >= domain_size) throw Error("operation table output out of range");
    return OperationTable{arity, domain_size, std::move(table)};
}

OperationTable OperationTable::projection(int arity, int domain_size, int index) {
    OperationTable op;
    op.arity = arity;
    op.domain_size = domain_size;
    op.table.resize(table_size(arity, domain_size));
    std::vector<int> args(arity, 0);
    for (std::size_t i = 0; i < op.table.size(); ++i) {
        op.table[i] = args[index];
        for (int pos = arity - 1; pos >= 0; --pos) {
            if (++args[pos] < domain_size) break;
            args[pos] = 0;
        }
    }
    return op;
}

std::size_t OperationTable::index_of(std::span<const int> args) const {
    std::size_t idx = 0;
    for (int a : args) idx = idx * static_cast<std::size_t>(domain_size) + static_cast<std::size_t>(a);
    return idx;
}

bool OperationTable::idempotent() const {
    std::vector<int> args(arity);
    for (int a = 0; a < domain_size; ++a) {
        std::fill(args.begin(), args.end(), a);
        if (apply(args) != a) return false;
    }
    return true;
}

}  // namespace rcsp
