#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rcsp/instance.hpp"
#include "rcsp/language.hpp"
#include "rcsp/operation_table.hpp"
#include "rcsp/prague.hpp"

namespace rcsp {

/// True iff applying f componentwise to every choice of arity(f) tuples from R
/// lands back in R. Throws on domain mismatch.
bool is_compatible(const OperationTable& f, const Relation& r, int domain_size);

/// Checks the bounded-width witness identities
///   f1(a,a,b) = f1(a,b,a) = f1(b,a,a)
///             = f2(a,a,a,b) = f2(a,a,b,a) = f2(a,b,a,a) = f2(b,a,a,a)
/// and f1(a,a,a) = a for all a, b, plus compatibility of both operations with
/// every relation of the language.
bool verify_bw_witness(const OperationTable& f1, const OperationTable& f2,
                       const ConstraintLanguage& language);

/// Brute-force witness search over the Boolean domain: enumerates ternary
/// tables satisfying the identities and compatible with the language, then
/// 4-ary tables constrained by the shared identity values. Domains larger
/// than 2 are refused (the table space is infeasible); supply a witness in
/// the language file instead.
std::optional<WitnessPair> search_bw_witness_boolean(const ConstraintLanguage& language);

/// Repeatedly collapses the language through non-surjective unary
/// polymorphisms until every unary polymorphism is a bijection. A witness
/// carried by the input is kept only if the language comes back unchanged.
ConstraintLanguage core_reduce(const ConstraintLanguage& language,
                               std::uint64_t map_cap = 10'000'000);

/// Adds the unary singleton {a} for every domain element; idempotent.
ConstraintLanguage singleton_expand(const ConstraintLanguage& language);

/// Mapping from an assignment of the binarized instance back to the original
/// variables: original variable values are the most significant mixed-radix
/// digit of the block value.
struct LiftMap {
    int original_num_variables{0};
    int original_domain_size{1};
    int block_arity{1};  // l = max arity of the original language
};

struct BinarizeResult {
    Instance instance;
    ConstraintLanguage language;
    LiftMap lift;
};

/// Reduction to a language with at most binary relations over blocks D^l.
/// Every original constraint ((x_1..x_k), R) becomes k+1 constraints on a
/// fresh block variable: ((x_C), R') and ((x_i, x_C), E_i), where R' fixes
/// the first k digits and E_i = {(u, v): digit_1(u) = digit_i(v)}.
/// A witness on the original language lifts digitwise.
BinarizeResult binarize(const Instance& instance, const ConstraintLanguage& language,
                        int block_domain_cap = 32);

Assignment lift_assignment(const Assignment& binarized, const LiftMap& lift);

/// Block value encoding helpers (most significant digit = coordinate 1).
int encode_block(std::span<const int> digits, int domain_size);
std::vector<int> decode_block(int value, int domain_size, int length);

/// Replaces every P_{x,y} by the least superset closed under componentwise
/// application of each op, iterated to a fixpoint. Symmetric scopes stay
/// transposes of each other.
PragueInstance clone_closure(const PragueInstance& prague,
                             const std::vector<OperationTable>& ops);

}  // namespace rcsp
