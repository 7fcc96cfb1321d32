#include "rcsp/consistency.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <random>
#include <set>

#include "rcsp/algebra.hpp"

namespace rcsp {

namespace {

std::size_t power(int base, int exp) {
    std::size_t v = 1;
    for (int i = 0; i < exp; ++i) v *= static_cast<std::size_t>(base);
    return v;
}

/// Propagation engine behind kl_minimize and the value-setting search.
/// Constraint relations are dense tables over mixed-radix encoded tuples;
/// every canonical (ascending) variable tuple S with |S| <= k carries the
/// common projection P_S, recomputed as the intersection of the projections of
/// the constraints covering S.
class KLState {
public:
    KLState(const Instance& instance, int k, int l, const ConsistencyOptions& options)
        : nv_(instance.num_variables), d_(instance.domain_size), k_(k) {
        if (k < 1 || k > l) throw Error("require 1 <= k <= l");
        if (l > options.level_cap)
            throw CapExceededError("consistency level " + std::to_string(l) +
                                   " exceeds the configured cap");
        for (std::size_t i = 0; i < instance.constraints.size(); ++i) {
            const auto& c = instance.constraints[i];
            if (c.relation.arity > options.level_cap)
                throw CapExceededError("constraint " + std::to_string(i) +
                                       " arity exceeds the consistency cap");
            std::set<int> distinct(c.scope.begin(), c.scope.end());
            if (distinct.size() != c.scope.size())
                throw Error("constraint " + std::to_string(i) +
                            " repeats a variable in its scope; such scopes are not supported "
                            "by the consistency engine");
        }

        const int s = std::min(l, nv_);
        // budget guard on the added full constraints
        double added = 1;
        for (int i = 0; i < s; ++i) added = added * (nv_ - i) / (i + 1);
        if (added * static_cast<double>(power(d_, s)) > static_cast<double>(options.tuple_budget))
            throw CapExceededError("l-subset expansion exceeds the tuple budget");

        for (const auto& c : instance.constraints) add_constraint(c.scope, c.relation);

        // full constraints over every s-subset not already inside a scope
        std::set<std::vector<int>> covered;
        for (const auto& c : instance.constraints) {
            std::vector<int> sorted_scope(c.scope);
            std::sort(sorted_scope.begin(), sorted_scope.end());
            if (static_cast<int>(sorted_scope.size()) == s) covered.insert(sorted_scope);
            // larger scopes cannot occur: arity <= l and s = min(l, nv)
        }
        if (s >= 1 && nv_ >= s) {
            std::vector<int> subset(s);
            for (int i = 0; i < s; ++i) subset[i] = i;
            while (true) {
                if (!covered.count(subset)) add_full_constraint(subset);
                int pos = s - 1;
                while (pos >= 0 && subset[pos] == nv_ - s + pos) --pos;
                if (pos < 0) break;
                ++subset[pos];
                for (int j = pos + 1; j < s; ++j) subset[j] = subset[j - 1] + 1;
            }
        }

        init_projections();
        for (std::size_t ci = 0; ci < constraints_.size(); ++ci) enqueue(static_cast<int>(ci));
    }

    void propagate(std::uint64_t shuffle_seed = 0) {
        std::mt19937_64 rng(shuffle_seed);
        while (!queue_.empty()) {
            std::size_t pick = 0;
            if (shuffle_seed != 0) pick = rng() % queue_.size();
            int ci = queue_[pick];
            queue_.erase(queue_.begin() + static_cast<std::ptrdiff_t>(pick));
            in_queue_[ci] = false;
            refilter(ci);
        }
    }

    /// Intersects P_x with {val} and repropagates; equivalent to adding the
    /// unary constraint (x, {val}).
    void impose(int x, int val) {
        int sid = subset_id({x});
        auto& table = proj_[sid];
        bool changed = false;
        for (int a = 0; a < d_; ++a) {
            if (a != val && table[a]) {
                table[a] = 0;
                changed = true;
            }
        }
        if (changed)
            for (int cj : covering_[sid]) enqueue(cj);
        propagate();
    }

    bool trivial() const {
        for (const auto& c : constraints_)
            if (c.live == 0) return true;
        return false;
    }

    std::vector<int> values_of(int x) const {
        std::vector<int> vals;
        int sid = subset_id({x});
        for (int a = 0; a < d_; ++a)
            if (proj_[sid][a]) vals.push_back(a);
        return vals;
    }

    struct Snapshot {
        std::vector<std::vector<char>> allowed;
        std::vector<std::size_t> live;
        std::vector<std::vector<char>> proj;
    };

    Snapshot snapshot() const {
        Snapshot s;
        s.allowed.reserve(constraints_.size());
        s.live.reserve(constraints_.size());
        for (const auto& c : constraints_) {
            s.allowed.push_back(c.allowed);
            s.live.push_back(c.live);
        }
        s.proj = proj_;
        return s;
    }

    void restore(const Snapshot& s) {
        for (std::size_t i = 0; i < constraints_.size(); ++i) {
            constraints_[i].allowed = s.allowed[i];
            constraints_[i].live = s.live[i];
        }
        proj_ = s.proj;
        queue_.clear();
        std::fill(in_queue_.begin(), in_queue_.end(), false);
    }

    MinimalInstance extract(const Instance& base, int l) const {
        MinimalInstance out;
        out.base = base;
        out.k = k_;
        out.l = l;
        for (const auto& c : constraints_)
            out.working.push_back({c.scope, c.allowed, c.live});
        for (std::size_t sid = 0; sid < subset_vars_.size(); ++sid)
            out.projections[subset_vars_[sid]] = proj_[sid];
        return out;
    }

    int domain_size() const { return d_; }

private:
    struct WC {
        std::vector<int> scope;
        std::vector<char> allowed;
        std::size_t live{0};
        // (subset id, tuple index -> subset tuple index)
        std::vector<std::pair<int, std::vector<int>>> maps;
    };

    void add_constraint(const std::vector<int>& scope, const Relation& rel) {
        WC c;
        c.scope = scope;
        c.allowed.assign(power(d_, static_cast<int>(scope.size())), 0);
        for (const auto& t : rel.tuples) {
            std::size_t idx = 0;
            for (int v : t) idx = idx * d_ + static_cast<std::size_t>(v);
            c.allowed[idx] = 1;
        }
        c.live = static_cast<std::size_t>(std::count(c.allowed.begin(), c.allowed.end(), 1));
        constraints_.push_back(std::move(c));
    }

    void add_full_constraint(const std::vector<int>& scope) {
        WC c;
        c.scope = scope;
        c.allowed.assign(power(d_, static_cast<int>(scope.size())), 1);
        c.live = c.allowed.size();
        constraints_.push_back(std::move(c));
    }

    int subset_id(const std::vector<int>& vars) const {
        auto it = subset_index_.find(vars);
        if (it == subset_index_.end()) throw Error("uncovered variable tuple");
        return it->second;
    }

    void init_projections() {
        // canonical subsets of every scope, sizes 1..k
        for (std::size_t ci = 0; ci < constraints_.size(); ++ci) {
            auto& c = constraints_[ci];
            std::vector<int> sorted_scope(c.scope);
            std::sort(sorted_scope.begin(), sorted_scope.end());
            const int a = static_cast<int>(c.scope.size());
            for (int size = 1; size <= std::min(k_, a); ++size) {
                std::vector<int> pick(size);
                for (int i = 0; i < size; ++i) pick[i] = i;
                while (true) {
                    std::vector<int> vars(size);
                    for (int i = 0; i < size; ++i) vars[i] = sorted_scope[pick[i]];
                    int sid;
                    auto it = subset_index_.find(vars);
                    if (it == subset_index_.end()) {
                        sid = static_cast<int>(subset_vars_.size());
                        subset_index_[vars] = sid;
                        subset_vars_.push_back(vars);
                        proj_.emplace_back(power(d_, size), 1);
                        covering_.emplace_back();
                    } else {
                        sid = it->second;
                    }
                    covering_[sid].push_back(static_cast<int>(ci));
                    c.maps.emplace_back(sid, projection_map(c.scope, vars));

                    int pos = size - 1;
                    while (pos >= 0 && pick[pos] == a - size + pos) --pos;
                    if (pos < 0) break;
                    ++pick[pos];
                    for (int j = pos + 1; j < size; ++j) pick[j] = pick[j - 1] + 1;
                }
            }
        }
        in_queue_.assign(constraints_.size(), false);
        // initial P_S = intersection of the raw projections
        for (std::size_t sid = 0; sid < subset_vars_.size(); ++sid)
            recompute_subset(static_cast<int>(sid), -1);
    }

    std::vector<int> projection_map(const std::vector<int>& scope,
                                    const std::vector<int>& vars) const {
        const int a = static_cast<int>(scope.size());
        std::vector<int> positions;  // positions in scope, ordered as vars
        for (int v : vars)
            positions.push_back(static_cast<int>(
                std::find(scope.begin(), scope.end(), v) - scope.begin()));
        std::vector<int> map(power(d_, a));
        std::vector<int> digits(a, 0);
        for (std::size_t idx = 0; idx < map.size(); ++idx) {
            int sub = 0;
            for (int p : positions) sub = sub * d_ + digits[p];
            map[idx] = sub;
            for (int pos = a - 1; pos >= 0; --pos) {
                if (++digits[pos] < d_) break;
                digits[pos] = 0;
            }
        }
        return map;
    }

    void enqueue(int ci) {
        if (!in_queue_[ci]) {
            in_queue_[ci] = true;
            queue_.push_back(ci);
        }
    }

    void refilter(int ci) {
        auto& c = constraints_[ci];
        bool changed = false;
        for (std::size_t idx = 0; idx < c.allowed.size(); ++idx) {
            if (!c.allowed[idx]) continue;
            for (const auto& [sid, map] : c.maps) {
                if (!proj_[sid][map[idx]]) {
                    c.allowed[idx] = 0;
                    --c.live;
                    changed = true;
                    break;
                }
            }
        }
        if (!changed) return;
        for (const auto& [sid, map] : c.maps) recompute_subset(sid, ci);
    }

    void recompute_subset(int sid, int trigger) {
        auto& table = proj_[sid];
        std::vector<char> fresh(table.size(), 1);
        for (int cj : covering_[sid]) {
            const auto& c = constraints_[cj];
            const std::vector<int>* map = nullptr;
            for (const auto& [s2, m] : c.maps)
                if (s2 == sid) {
                    map = &m;
                    break;
                }
            std::vector<char> have(table.size(), 0);
            for (std::size_t idx = 0; idx < c.allowed.size(); ++idx)
                if (c.allowed[idx]) have[(*map)[idx]] = 1;
            for (std::size_t j = 0; j < fresh.size(); ++j) fresh[j] &= have[j];
        }
        bool shrank = false;
        for (std::size_t j = 0; j < table.size(); ++j) {
            if (table[j] && !fresh[j]) {
                table[j] = 0;
                shrank = true;
            }
        }
        if (shrank)
            for (int cj : covering_[sid])
                if (cj != trigger) enqueue(cj);
    }

    int nv_, d_, k_;
    std::vector<WC> constraints_;
    std::vector<std::vector<int>> subset_vars_;
    std::map<std::vector<int>, int> subset_index_;
    std::vector<std::vector<char>> proj_;
    std::vector<std::vector<int>> covering_;
    std::deque<int> queue_;
    std::vector<char> in_queue_;
};

}  // namespace

bool MinimalInstance::trivial() const {
    for (const auto& c : working)
        if (c.live == 0) return true;
    return false;
}

MinimalInstance kl_minimize(const Instance& instance, int k, int l,
                            const ConsistencyOptions& options) {
    instance.validate();
    KLState state(instance, k, l, options);
    state.propagate(options.shuffle_seed);
    return state.extract(instance, l);
}

bool is_trivial(const MinimalInstance& minimal) { return minimal.trivial(); }

std::optional<Assignment> solve_bounded_width(const Instance& instance,
                                              const ConstraintLanguage& language,
                                              const ConsistencyOptions& options) {
    if (!language.singleton_expanded())
        throw Error("bounded-width search requires a singleton-expanded language");
    if (!language.witness)
        throw Error("bounded-width search requires a witness pair (f1, f2) on the language");
    if (!verify_bw_witness(language.witness->f1, language.witness->f2, language))
        throw Error("language witness fails the identity or compatibility checks");
    instance.validate();

    if (instance.num_variables == 0) return Assignment{};

    const int l = std::max({1, instance.max_arity(), std::min(3, instance.num_variables)});
    const int k = std::min(2, l);
    KLState state(instance, k, l, options);
    state.propagate();
    if (state.trivial()) return std::nullopt;

    Assignment result(instance.num_variables, -1);
    for (int x = 0; x < instance.num_variables; ++x) {
        bool fixed = false;
        for (int a : state.values_of(x)) {
            auto snap = state.snapshot();
            state.impose(x, a);
            if (!state.trivial()) {
                result[x] = a;
                fixed = true;
                break;
            }
            state.restore(snap);
        }
        if (!fixed)
            throw WidthGuaranteeViolated(
                "every value of variable " + std::to_string(x) +
                " trivializes the instance; the language witness is wrong or the instance "
                "is outside its guarantee");
    }
    return result;
}

}  // namespace rcsp
