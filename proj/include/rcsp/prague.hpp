#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rcsp/errors.hpp"
#include "rcsp/instance.hpp"

namespace rcsp {

class SDPVectors;

/// Value sets over small domains are bitmasks; bit a set means element a is in
/// the set. Domains are capped at 12 elements wherever masks are enumerated.
using ValueSet = std::uint16_t;
constexpr int kMaxPragueDomain = 12;

std::vector<int> set_to_values(ValueSet s);
ValueSet values_to_set(std::span<const int> values);

/// Binary relation over D x D stored as one successor mask per first
/// coordinate: rows[a] has bit b set iff (a,b) is in the relation.
struct BinaryRel {
    int domain_size{1};
    std::vector<ValueSet> rows;

    static BinaryRel empty(int domain_size) {
        return BinaryRel{domain_size, std::vector<ValueSet>(domain_size, 0)};
    }
    static BinaryRel from_pairs(int domain_size, const std::vector<std::pair<int, int>>& pairs);
    static BinaryRel from_relation(const Relation& r, int domain_size);

    bool contains(int a, int b) const { return rows[a] >> b & 1; }
    void insert(int a, int b) { rows[a] = static_cast<ValueSet>(rows[a] | (ValueSet{1} << b)); }
    BinaryRel transpose() const;
    Relation to_relation() const;
    std::vector<std::pair<int, int>> pairs() const;
    ValueSet image(ValueSet from) const;  // union of rows over the set bits
    ValueSet first_projection() const;
    std::size_t pair_count() const;
    bool relation_empty() const;

    friend bool operator==(const BinaryRel& a, const BinaryRel& b) {
        return a.domain_size == b.domain_size && a.rows == b.rows;
    }
};

/// Symmetric binary instance: at most one constraint per ordered pair of
/// distinct variables, closed under reversal with P_{y,x} the transpose of
/// P_{x,y}. Repeated-variable scopes are rejected.
class PragueInstance {
public:
    PragueInstance(int num_variables, int domain_size);

    int num_variables() const { return num_variables_; }
    int domain_size() const { return domain_size_; }

    /// Installs P_{x,y} = rel and P_{y,x} = transpose.
    void set_relation(int x, int y, const BinaryRel& rel);
    bool has_scope(int x, int y) const;
    const BinaryRel& relation(int x, int y) const;

    /// Ordered scope pairs, lexicographically sorted.
    const std::vector<std::pair<int, int>>& scopes() const { return scope_list_; }
    std::vector<int> neighbors(int x) const;
    bool variable_covered(int x) const;

    /// First-coordinate projection of the lexicographically least scope at x;
    /// 0 if x is in no scope. verify_weak_prague checks all scopes agree.
    ValueSet projection(int x) const;

    friend bool operator==(const PragueInstance& a, const PragueInstance& b) {
        return a.num_variables_ == b.num_variables_ && a.domain_size_ == b.domain_size_ &&
               a.relations_ == b.relations_;
    }

private:
    int num_variables_;
    int domain_size_;
    std::map<std::pair<int, int>, BinaryRel> relations_;
    std::vector<std::pair<int, int>> scope_list_;
};

/// A pattern is a walk through constraint scopes: consecutive variables must
/// form a step (the scope of a constraint).
using Pattern = std::vector<int>;

Pattern reversed(const Pattern& p);
Pattern concat(const Pattern& p, const Pattern& q);
Pattern repeat(const Pattern& p, int k);

/// Stepwise image of the value set A along the pattern. Throws on a non-step
/// pair.
ValueSet add_pattern(const PragueInstance& prague, ValueSet a, const Pattern& p);

/// Stable closure [A]_p of A under repeated addition of the cyclic pattern p:
/// the first iterate with [A]_p + p = [A]_p, verified to contain A. Throws
/// NotWeakPragueError (with the failing iterate) if the iteration cycles
/// without reaching a fixpoint or the fixpoint does not contain A.
ValueSet pattern_closure(const PragueInstance& prague, ValueSet a, const Pattern& p);

struct PragueVerdict {
    enum class Status { pass, fail_p1, fail_p2, fail_p3 };
    Status status{Status::pass};
    std::string witness;  // human-readable certificate, empty on pass

    // P2 witness: an edge (x, A) -> (y, B) inside a strong component whose
    // reverse is missing. P3 witness: (x, A) and (x, A') in one component.
    int var_x{-1}, var_y{-1};
    ValueSet set_a{0}, set_b{0};

    bool pass() const { return status == Status::pass; }
    std::string axiom() const;
};

/// Checks (P1) 1-minimality, then (P3) and (P2) through the strong components
/// of the digraph on pairs (A, x), A a nonempty subset of P_x, with edges
/// (A, x) -> (A + (x,y), y) per step.
PragueVerdict verify_weak_prague(const PragueInstance& prague);

struct P2StarViolation {
    int x, y;          // the step
    ValueSet set_a;
    Pattern p;         // pattern from y to x with A + (x,y) + p = A
};

struct P2StarReport {
    std::vector<P2StarViolation> violations;
    std::uint64_t patterns_checked{0};
    bool pass() const { return violations.empty(); }
};

/// Exhaustive check of the step-local form of (P2): over all steps (x,y), all
/// A in P_x and all patterns p from y to x of at most max_len steps, whenever
/// A + (x,y) + p = A it asserts A + (x,y,x) = A. Requires (P1).
P2StarReport audit_p2star(const PragueInstance& prague, int max_len,
                          std::uint64_t pattern_cap = 50'000'000);

/// Thresholded instance built from SDP vectors: scopes are all ordered pairs
/// of distinct variables and P_{x,y} keeps the pairs with dot product > tau.
/// Requires feasibility residuals at most tau/10.
PragueInstance sdp_to_prague(const SDPVectors& vectors, double tau = 1e-9);

struct ExtendFailure {
    int x, y, z;
    int a, b;  // (a,b) in P_{x,y} with no c such that (a,c) in P_{x,z}, (c,b) in P_{z,y}
};

/// For each variable triple with all three scopes present, reports the pairs
/// of P_{x,y} that cannot be extended through z.
std::vector<ExtendFailure> check_23_extendability(const PragueInstance& prague);

}  // namespace rcsp
