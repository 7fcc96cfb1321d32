#include "rcsp/prague.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "rcsp/sdp.hpp"

namespace rcsp {

std::vector<int> set_to_values(ValueSet s) {
    std::vector<int> out;
    for (int a = 0; a < 16; ++a)
        if (s >> a & 1) out.push_back(a);
    return out;
}

ValueSet values_to_set(std::span<const int> values) {
    ValueSet s = 0;
    for (int v : values) s = static_cast<ValueSet>(s | (ValueSet{1} << v));
    return s;
}

namespace {

std::string set_to_string(ValueSet s) {
    std::ostringstream os;
    os << '{';
    bool first = true;
    for (int v : set_to_values(s)) {
        if (!first) os << ',';
        os << v;
        first = false;
    }
    os << '}';
    return os.str();
}

}  // namespace

BinaryRel BinaryRel::from_pairs(int domain_size, const std::vector<std::pair<int, int>>& pairs) {
    BinaryRel rel = BinaryRel::empty(domain_size);
    for (auto [a, b] : pairs) rel.insert(a, b);
    return rel;
}

BinaryRel BinaryRel::from_relation(const Relation& r, int domain_size) {
    if (r.arity != 2) throw Error("binary relation expected");
    BinaryRel rel = BinaryRel::empty(domain_size);
    for (const auto& t : r.tuples) rel.insert(t[0], t[1]);
    return rel;
}

BinaryRel BinaryRel::transpose() const {
    BinaryRel rel = BinaryRel::empty(domain_size);
    for (int a = 0; a < domain_size; ++a)
        for (int b = 0; b < domain_size; ++b)
            if (contains(a, b)) rel.insert(b, a);
    return rel;
}

Relation BinaryRel::to_relation() const {
    std::vector<std::vector<int>> tuples;
    for (int a = 0; a < domain_size; ++a)
        for (int b = 0; b < domain_size; ++b)
            if (contains(a, b)) tuples.push_back({a, b});
    return Relation::make(2, std::move(tuples), domain_size);
}

std::vector<std::pair<int, int>> BinaryRel::pairs() const {
    std::vector<std::pair<int, int>> out;
    for (int a = 0; a < domain_size; ++a)
        for (int b = 0; b < domain_size; ++b)
            if (contains(a, b)) out.emplace_back(a, b);
    return out;
}

ValueSet BinaryRel::image(ValueSet from) const {
    ValueSet out = 0;
    for (int a = 0; a < domain_size; ++a)
        if (from >> a & 1) out = static_cast<ValueSet>(out | rows[a]);
    return out;
}

ValueSet BinaryRel::first_projection() const {
    ValueSet out = 0;
    for (int a = 0; a < domain_size; ++a)
        if (rows[a]) out = static_cast<ValueSet>(out | (ValueSet{1} << a));
    return out;
}

std::size_t BinaryRel::pair_count() const {
    std::size_t n = 0;
    for (auto r : rows) n += static_cast<std::size_t>(__builtin_popcount(r));
    return n;
}

bool BinaryRel::relation_empty() const {
    for (auto r : rows)
        if (r) return false;
    return true;
}

PragueInstance::PragueInstance(int num_variables, int domain_size)
    : num_variables_(num_variables), domain_size_(domain_size) {
    if (domain_size > kMaxPragueDomain)
        throw CapExceededError("domain size " + std::to_string(domain_size) +
                               " exceeds the subset-enumeration cap of " +
                               std::to_string(kMaxPragueDomain));
    if (domain_size < 1 || num_variables < 0) throw Error("bad instance dimensions");
}

void PragueInstance::set_relation(int x, int y, const BinaryRel& rel) {
    if (x == y) throw Error("repeated-variable scopes are not allowed");
    if (x < 0 || y < 0 || x >= num_variables_ || y >= num_variables_)
        throw Error("scope variable out of range");
    if (rel.domain_size != domain_size_) throw Error("relation domain mismatch");
    bool fresh = relations_.find({x, y}) == relations_.end();
    relations_[{x, y}] = rel;
    relations_[{y, x}] = rel.transpose();
    if (fresh) {
        scope_list_.push_back({x, y});
        scope_list_.push_back({y, x});
        std::sort(scope_list_.begin(), scope_list_.end());
    }
}

bool PragueInstance::has_scope(int x, int y) const {
    return relations_.find({x, y}) != relations_.end();
}

const BinaryRel& PragueInstance::relation(int x, int y) const {
    auto it = relations_.find({x, y});
    if (it == relations_.end())
        throw Error("no constraint with scope (" + std::to_string(x) + "," + std::to_string(y) + ")");
    return it->second;
}

std::vector<int> PragueInstance::neighbors(int x) const {
    std::vector<int> out;
    auto it = relations_.lower_bound({x, -1});
    for (; it != relations_.end() && it->first.first == x; ++it) out.push_back(it->first.second);
    return out;
}

bool PragueInstance::variable_covered(int x) const {
    auto it = relations_.lower_bound({x, -1});
    return it != relations_.end() && it->first.first == x;
}

ValueSet PragueInstance::projection(int x) const {
    auto it = relations_.lower_bound({x, -1});
    if (it == relations_.end() || it->first.first != x) return 0;
    return it->second.first_projection();
}

Pattern reversed(const Pattern& p) { return Pattern(p.rbegin(), p.rend()); }

Pattern concat(const Pattern& p, const Pattern& q) {
    if (p.empty() || q.empty()) throw Error("cannot concatenate empty patterns");
    if (p.back() != q.front()) throw Error("pattern endpoints do not match");
    Pattern out = p;
    out.insert(out.end(), q.begin() + 1, q.end());
    return out;
}

Pattern repeat(const Pattern& p, int k) {
    if (p.empty() || p.front() != p.back()) throw Error("repetition needs a cyclic pattern");
    Pattern out = p;
    for (int i = 1; i < k; ++i) out = concat(out, p);
    return out;
}

ValueSet add_pattern(const PragueInstance& prague, ValueSet a, const Pattern& p) {
    if (p.empty()) throw Error("empty pattern");
    ValueSet current = a;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        int x = p[i], y = p[i + 1];
        if (!prague.has_scope(x, y))
            throw Error("pattern uses non-step pair (" + std::to_string(x) + "," +
                        std::to_string(y) + ")");
        current = prague.relation(x, y).image(current);
    }
    return current;
}

ValueSet pattern_closure(const PragueInstance& prague, ValueSet a, const Pattern& p) {
    if (p.empty() || p.front() != p.back()) throw Error("closure needs a cyclic pattern");
    // iterate A + kp; in a weak Prague instance the sequence reaches a
    // fixpoint (a longer cycle would contradict (P3))
    std::map<ValueSet, int> seen;
    ValueSet current = a;
    int step = 0;
    seen[current] = 0;
    while (true) {
        ValueSet next = add_pattern(prague, current, p);
        if (next == current) break;
        ++step;
        auto it = seen.find(next);
        if (it != seen.end())
            throw NotWeakPragueError("pattern iteration cycles without a fixpoint (period " +
                                     std::to_string(step - it->second) + ", witness iterate " +
                                     set_to_string(next) + "); not a weak Prague instance");
        seen[next] = step;
        current = next;
    }
    if ((a & current) != a)
        throw NotWeakPragueError("closure " + set_to_string(current) + " does not contain " +
                                 set_to_string(a) + "; not a weak Prague instance");
    return current;
}

std::string PragueVerdict::axiom() const {
    switch (status) {
        case Status::fail_p1: return "P1";
        case Status::fail_p2: return "P2";
        case Status::fail_p3: return "P3";
        default: return "";
    }
}

namespace {

/// Tarjan SCC over the (variable, subset) digraph; deterministic order.
struct SubsetDigraph {
    const PragueInstance& prague;
    std::vector<std::pair<int, ValueSet>> nodes;
    std::map<std::pair<int, ValueSet>, int> index_of;
    std::vector<std::vector<int>> adjacency;
    std::vector<int> component;
    int component_count{0};

    explicit SubsetDigraph(const PragueInstance& p) : prague(p) {
        for (int x = 0; x < prague.num_variables(); ++x) {
            ValueSet px = prague.projection(x);
            for (ValueSet a = 1; a < (ValueSet{1} << prague.domain_size()); ++a) {
                if ((a & px) != a || a == 0) continue;
                index_of[{x, a}] = static_cast<int>(nodes.size());
                nodes.push_back({x, a});
            }
        }
        adjacency.resize(nodes.size());
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            auto [x, a] = nodes[i];
            for (int y : prague.neighbors(x)) {
                ValueSet b = prague.relation(x, y).image(a);
                auto it = index_of.find({y, b});
                if (it != index_of.end()) adjacency[i].push_back(it->second);
            }
        }
        tarjan();
    }

    void tarjan() {
        const int n = static_cast<int>(nodes.size());
        component.assign(n, -1);
        std::vector<int> low(n, 0), disc(n, -1), stack;
        std::vector<char> on_stack(n, 0);
        int timer = 0;
        // iterative DFS
        for (int root = 0; root < n; ++root) {
            if (disc[root] != -1) continue;
            std::vector<std::pair<int, std::size_t>> frames{{root, 0}};
            while (!frames.empty()) {
                auto& [v, ei] = frames.back();
                if (ei == 0) {
                    disc[v] = low[v] = timer++;
                    stack.push_back(v);
                    on_stack[v] = 1;
                }
                if (ei < adjacency[v].size()) {
                    int w = adjacency[v][ei++];
                    if (disc[w] == -1)
                        frames.push_back({w, 0});
                    else if (on_stack[w])
                        low[v] = std::min(low[v], disc[w]);
                } else {
                    if (low[v] == disc[v]) {
                        while (true) {
                            int w = stack.back();
                            stack.pop_back();
                            on_stack[w] = 0;
                            component[w] = component_count;
                            if (w == v) break;
                        }
                        ++component_count;
                    }
                    int child = v;
                    frames.pop_back();
                    if (!frames.empty())
                        low[frames.back().first] =
                            std::min(low[frames.back().first], low[child]);
                }
            }
        }
    }
};

}  // namespace

PragueVerdict verify_weak_prague(const PragueInstance& prague) {
    PragueVerdict verdict;

    // (P1): every variable in some scope, and all first-coordinate
    // projections at a variable agree
    for (int x = 0; x < prague.num_variables(); ++x) {
        if (!prague.variable_covered(x)) {
            verdict.status = PragueVerdict::Status::fail_p1;
            verdict.var_x = x;
            verdict.witness = "variable " + std::to_string(x) + " is in no scope";
            return verdict;
        }
        ValueSet px = prague.projection(x);
        for (int y : prague.neighbors(x)) {
            ValueSet from_xy = prague.relation(x, y).first_projection();
            if (from_xy != px) {
                verdict.status = PragueVerdict::Status::fail_p1;
                verdict.var_x = x;
                verdict.var_y = y;
                verdict.set_a = px;
                verdict.set_b = from_xy;
                verdict.witness = "projections at variable " + std::to_string(x) +
                                  " disagree: " + set_to_string(px) + " vs " +
                                  set_to_string(from_xy) + " from scope (" + std::to_string(x) +
                                  "," + std::to_string(y) + ")";
                return verdict;
            }
        }
    }

    SubsetDigraph graph(prague);

    // (P3): no strong component holds two different subsets at one variable
    {
        std::map<std::pair<int, int>, ValueSet> seen;  // (component, variable) -> subset
        for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
            auto [x, a] = graph.nodes[i];
            auto key = std::make_pair(graph.component[i], x);
            auto it = seen.find(key);
            if (it == seen.end()) {
                seen[key] = a;
            } else if (it->second != a) {
                verdict.status = PragueVerdict::Status::fail_p3;
                verdict.var_x = x;
                verdict.set_a = it->second;
                verdict.set_b = a;
                verdict.witness = "strong component contains " + set_to_string(it->second) +
                                  " and " + set_to_string(a) + " at variable " + std::to_string(x);
                return verdict;
            }
        }
    }

    // (P2): inside a strong component every edge has its reverse
    for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
        auto [x, a] = graph.nodes[i];
        for (int j : graph.adjacency[i]) {
            if (graph.component[i] != graph.component[j]) continue;
            auto [y, b] = graph.nodes[j];
            ValueSet back = prague.relation(y, x).image(b);
            if (back != a) {
                verdict.status = PragueVerdict::Status::fail_p2;
                verdict.var_x = x;
                verdict.var_y = y;
                verdict.set_a = a;
                verdict.set_b = b;
                verdict.witness = "edge (" + std::to_string(x) + "," + set_to_string(a) +
                                  ") -> (" + std::to_string(y) + "," + set_to_string(b) +
                                  ") lies in a strong component but " + set_to_string(b) + "+(" +
                                  std::to_string(y) + "," + std::to_string(x) +
                                  ") = " + set_to_string(back);
                return verdict;
            }
        }
    }
    return verdict;
}

P2StarReport audit_p2star(const PragueInstance& prague, int max_len, std::uint64_t pattern_cap) {
    P2StarReport report;
    {
        auto p1 = verify_weak_prague(prague);
        // only (P1) is required here; (P2)/(P3) failures are what we hunt for
        if (p1.status == PragueVerdict::Status::fail_p1)
            throw Error("audit_p2star requires a 1-minimal instance: " + p1.witness);
    }

    // DFS over patterns p = (y, ..., x) of at most max_len steps, tracking the
    // image of A + (x,y) along the way
    for (auto [x, y] : prague.scopes()) {
        ValueSet px = prague.projection(x);
        for (ValueSet a = 1; a < (ValueSet{1} << prague.domain_size()); ++a) {
            if ((a & px) != a) continue;
            ValueSet start = prague.relation(x, y).image(a);
            ValueSet back = prague.relation(x, y).transpose().image(start);
            bool p2star_holds = back == a;  // A + (x,y,x) = A
            if (p2star_holds) continue;     // nothing to hunt: condition satisfied

            // look for a pattern p from y to x with A + (x,y) + p = A
            Pattern walk{y};
            std::function<bool(int, ValueSet, int)> dfs = [&](int var, ValueSet image,
                                                              int depth) -> bool {
                if (report.patterns_checked++ > pattern_cap)
                    throw CapExceededError("pattern enumeration exceeded the cap");
                if (var == x && image == a && depth > 0) {
                    report.violations.push_back({x, y, a, walk});
                    return true;
                }
                if (depth == max_len) return false;
                for (int z : prague.neighbors(var)) {
                    walk.push_back(z);
                    bool found = dfs(z, prague.relation(var, z).image(image), depth + 1);
                    walk.pop_back();
                    if (found) return true;
                }
                return false;
            };
            dfs(y, start, 0);
        }
    }
    return report;
}

PragueInstance sdp_to_prague(const SDPVectors& vectors, double tau) {
    auto feas = check_sdp_feasibility(vectors, tau / 10);
    if (!feas.pass())
        throw ToleranceContractError("vectors violate feasibility beyond tau/10 (residual " +
                                     std::to_string(feas.max_residual()) + ")");

    const int nv = vectors.num_variables();
    const int d = vectors.domain_size();
    PragueInstance prague(nv, d);
    for (int x = 0; x < nv; ++x) {
        for (int y = x + 1; y < nv; ++y) {
            BinaryRel rel = BinaryRel::empty(d);
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b)
                    if (vectors.vec(x, a).dot(vectors.vec(y, b)) > tau) rel.insert(a, b);
            prague.set_relation(x, y, rel);
        }
    }
    return prague;
}

std::vector<ExtendFailure> check_23_extendability(const PragueInstance& prague) {
    std::vector<ExtendFailure> failures;
    const int nv = prague.num_variables();
    for (int x = 0; x < nv; ++x) {
        for (int y = 0; y < nv; ++y) {
            if (x == y || !prague.has_scope(x, y)) continue;
            for (int z = 0; z < nv; ++z) {
                if (z == x || z == y) continue;
                if (!prague.has_scope(x, z) || !prague.has_scope(z, y)) continue;
                const auto& pxy = prague.relation(x, y);
                const auto& pxz = prague.relation(x, z);
                const auto& pzy = prague.relation(z, y);
                for (auto [a, b] : pxy.pairs()) {
                    bool extendable = false;
                    for (int c = 0; c < prague.domain_size() && !extendable; ++c)
                        if (pxz.contains(a, c) && pzy.contains(c, b)) extendable = true;
                    if (!extendable) failures.push_back({x, y, z, a, b});
                }
            }
        }
    }
    return failures;
}

}  // namespace rcsp
