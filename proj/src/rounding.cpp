#include "rcsp/rounding.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "rcsp/algebra.hpp"
#include "rcsp/consistency.hpp"

namespace rcsp {

long paper_div(double gamma, double psi) {
    // greatest integer i with gamma - i*psi > 0
    return static_cast<long>(std::ceil(gamma / psi)) - 1;
}

LevelChoice choose_level(double v, std::int64_t m, int domain_size) {
    if (m < 1) throw Error("level selection needs m >= 1");
    LevelChoice choice;
    double omega = static_cast<double>(m);
    if (v < 1.0) omega = std::min(1.0 / (1.0 - v), omega);
    choice.omega = omega;

    if (omega <= 4.0) {
        choice.formula_n = 2;
        choice.warning = "omega <= 4: level formula degenerates, clamped";
        choice.clamped = true;
    } else {
        double log_omega = std::log2(omega);
        choice.formula_n = static_cast<int>(std::floor(log_omega / (4.0 * std::log2(log_omega))));
    }

    int floor_n = std::max(2, domain_size + 1);
    if (choice.formula_n < floor_n) {
        choice.n = floor_n;
        choice.clamped = true;
        if (choice.warning.empty())
            choice.warning = "level clamped to |D|+1 = " + std::to_string(floor_n) +
                             " (the rounding guarantee assumes n > |D|)";
    } else {
        choice.n = choice.formula_n;
    }

    double bound = std::pow(static_cast<double>(choice.n), 4.0 * choice.n);
    choice.guarantee_ok = v >= 1.0 - 1.0 / bound;
    return choice;
}

double RoundingParams::gap_low() const { return std::pow(n, -4.0 * r - 4.0); }
double RoundingParams::gap_high() const { return std::pow(n, -4.0 * r); }

double RoundingParams::hyperplane_constant(RoundingMode mode) {
    return mode == RoundingMode::randomized ? std::numbers::pi : 4.0;
}

std::int64_t RoundingParams::nominal_hyperplane_count(int n, RoundingMode mode) {
    return static_cast<std::int64_t>(
        std::ceil(hyperplane_constant(mode) * std::log2(n) * std::pow(n, 2.0 * n)));
}

void RoundingParams::fill_params(RoundingParams& p, int domain_size) {
    p.u1 = 2.0 * domain_size * domain_size * std::pow(p.n, -4.0 * p.r - 4.0);
    p.u2 = std::pow(p.n, -4.0 * p.r) - p.u1;
    if (p.u2 <= 0)
        throw Error("u2 <= 0: level n = " + std::to_string(p.n) +
                    " is too small for domain size " + std::to_string(domain_size));
}

int RoundingParams::t_count(long block_index) const {
    double c = hyperplane_constant(mode);
    double radius = std::sqrt(std::max(0.0, static_cast<double>(block_index + 2)) * u2);
    return static_cast<int>(std::ceil(c * std::log2(n) * std::pow(n, 2.0 * r) *
                                      std::min(radius, 1.0)));
}

namespace {

int sign_of(double v) { return v >= 0 ? 1 : -1; }  // sign(0) = +

/// Per-variable cache of subset vectors, norms and hyperplane dot products.
struct SubsetCache {
    const SDPVectors& vectors;
    const RoundingParams& params;
    int d;
    // indexed [variable][mask]
    std::vector<std::vector<Eigen::VectorXd>> sums;
    std::vector<std::vector<double>> norms_sq;
    std::vector<std::vector<std::vector<int>>> signs;  // prefix of sign(<x_A, q_i>), lazy

    SubsetCache(const SDPVectors& v, const RoundingParams& p)
        : vectors(v), params(p), d(v.domain_size()) {
        const int nv = v.num_variables();
        sums.resize(nv);
        norms_sq.resize(nv);
        signs.assign(nv, {});
        for (int x = 0; x < nv; ++x) {
            sums[x].resize(std::size_t{1} << d);
            norms_sq[x].resize(std::size_t{1} << d);
            signs[x].resize(std::size_t{1} << d);
            for (unsigned mask = 0; mask < (1u << d); ++mask) {
                sums[x][mask] = v.subset_vector(x, mask);
                norms_sq[x][mask] = sums[x][mask].squaredNorm();
            }
        }
    }

    long block(int x, unsigned mask) const { return params.block(norms_sq[x][mask]); }
    int budget(int x, unsigned mask) const {
        int t = params.t_count(block(x, mask));
        return std::min<int>(t, static_cast<int>(params.hyperplanes.size()));
    }

    const std::vector<int>& sign_prefix(int x, unsigned mask, int upto) {
        auto& cache = signs[x][mask];
        if (static_cast<int>(cache.size()) < upto) {
            int start = static_cast<int>(cache.size());
            cache.resize(upto);
            for (int i = start; i < upto; ++i)
                cache[i] = sign_of(sums[x][mask].dot(params.hyperplanes[i]));
        }
        return cache;
    }

    /// True if some hyperplane with index < budget separates the two subset
    /// vectors.
    bool cut_within(int x, unsigned ma, int y, unsigned mb, int budget_count) {
        const auto& sa = sign_prefix(x, ma, budget_count);
        const auto& sb = sign_prefix(y, mb, budget_count);
        for (int i = 0; i < budget_count; ++i)
            if (sa[i] != sb[i]) return true;
        return false;
    }
};

ValueSet threshold_set(const SDPVectors& vectors, int x, double threshold) {
    ValueSet s = 0;
    for (int a = 0; a < vectors.domain_size(); ++a)
        if (vectors.vec(x, a).squaredNorm() >= threshold) s = static_cast<ValueSet>(s | (1u << a));
    return s;
}

}  // namespace

PruneResult prune(const Instance& instance, const SDPVectors& vectors,
                  const RoundingParams& params) {
    PruneResult result;
    const double low = params.gap_low();
    const double high = params.gap_high();
    const int d = vectors.domain_size();

    std::vector<std::vector<double>> norms(vectors.num_variables(),
                                           std::vector<double>(std::size_t{1} << d));
    for (int x = 0; x < vectors.num_variables(); ++x)
        for (unsigned mask = 0; mask < (1u << d); ++mask)
            norms[x][mask] = vectors.subset_vector(x, mask).squaredNorm();

    for (std::size_t ci = 0; ci < instance.constraints.size(); ++ci) {
        const auto& c = instance.constraints[ci];
        bool removed = false;

        // step 2: any weight inside the gap [n^{-4r-4}, n^{-4r})
        if (c.relation.arity == 1) {
            int x = c.scope[0];
            for (int a = 0; a < d && !removed; ++a) {
                double wgt = vectors.vec(x, a).squaredNorm();
                if (wgt >= low && wgt < high) removed = true;
            }
        } else {
            int x = c.scope[0], y = c.scope[1];
            for (int a = 0; a < d && !removed; ++a)
                for (int b = 0; b < d && !removed; ++b) {
                    double wgt = vectors.vec(x, a).dot(vectors.vec(y, b));
                    if (wgt >= low && wgt < high) removed = true;
                }
        }
        if (removed) {
            ++result.removed_step2;
            continue;
        }

        // step 3: heavy weight outside the relation
        if (c.relation.arity == 1) {
            int x = c.scope[0];
            for (int a = 0; a < d && !removed; ++a) {
                if (vectors.vec(x, a).squaredNorm() >= high) {
                    int t[1] = {a};
                    if (!c.relation.contains(t)) removed = true;
                }
            }
        } else {
            int x = c.scope[0], y = c.scope[1];
            for (int a = 0; a < d && !removed; ++a)
                for (int b = 0; b < d && !removed; ++b) {
                    if (vectors.vec(x, a).dot(vectors.vec(y, b)) >= high) {
                        int t[2] = {a, b};
                        if (!c.relation.contains(t)) removed = true;
                    }
                }
        }
        if (removed) {
            ++result.removed_step3;
            continue;
        }

        // step 5: nearly equal subset lengths split across layers
        if (c.relation.arity == 2) {
            int x = c.scope[0], y = c.scope[1];
            for (unsigned ma = 0; ma < (1u << d) && !removed; ++ma)
                for (unsigned mb = 0; mb < (1u << d) && !removed; ++mb) {
                    double na = norms[x][ma], nb = norms[y][mb];
                    if (std::abs(na - nb) <= params.u1 &&
                        paper_div(na - params.s, params.u2) != paper_div(nb - params.s, params.u2))
                        removed = true;
                }
        }
        if (removed) {
            ++result.removed_step5;
            continue;
        }
        result.retained.push_back(static_cast<int>(ci));
    }
    return result;
}

HyperplaneResult hyperplane_phase(const Instance& instance, const SDPVectors& vectors,
                                  const std::vector<int>& retained,
                                  const RoundingParams& params) {
    HyperplaneResult result;
    SubsetCache cache(vectors, params);
    const double high = params.gap_high();

    std::set<int> active_vars;
    for (int ci : retained)
        for (int v : instance.constraints[ci].scope) active_vars.insert(v);

    // step 7: a variable is uncut when two distinct same-layer subsets of P_x
    // agree on every hyperplane within their budget
    std::set<int> uncut;
    for (int x : active_vars) {
        ValueSet px = threshold_set(vectors, x, high);
        bool is_uncut = false;
        for (unsigned ma = 1; ma < (1u << vectors.domain_size()) && !is_uncut; ++ma) {
            if ((ma & px) != ma) continue;
            for (unsigned mb = ma + 1; mb < (1u << vectors.domain_size()) && !is_uncut; ++mb) {
                if ((mb & px) != mb) continue;
                if (cache.block(x, ma) != cache.block(x, mb)) continue;
                if (!cache.cut_within(x, ma, x, mb, cache.budget(x, ma))) is_uncut = true;
            }
        }
        if (is_uncut) {
            uncut.insert(x);
            result.uncut_variables.push_back(x);
        }
    }

    std::vector<int> after7;
    for (int ci : retained) {
        const auto& scope = instance.constraints[ci].scope;
        bool hit = std::any_of(scope.begin(), scope.end(),
                               [&](int v) { return uncut.count(v) != 0; });
        if (hit)
            ++result.removed_step7;
        else
            after7.push_back(ci);
    }

    // step 8: almost-the-same subset vectors split by a hyperplane within
    // their budget
    for (int ci : after7) {
        const auto& c = instance.constraints[ci];
        bool removed = false;
        if (c.relation.arity == 2) {
            int x = c.scope[0], y = c.scope[1];
            ValueSet px = threshold_set(vectors, x, high);
            ValueSet py = threshold_set(vectors, y, high);
            for (unsigned ma = 1; ma < (1u << vectors.domain_size()) && !removed; ++ma) {
                if ((ma & px) != ma) continue;
                for (unsigned mb = 1; mb < (1u << vectors.domain_size()) && !removed; ++mb) {
                    if ((mb & py) != mb) continue;
                    if (cache.block(x, ma) != cache.block(y, mb)) continue;
                    double dist = (cache.sums[x][ma] - cache.sums[y][mb]).squaredNorm();
                    if (dist > params.u1) continue;
                    if (cache.sums[x][ma] == cache.sums[y][mb]) continue;  // never separated
                    if (cache.cut_within(x, ma, y, mb, cache.budget(x, ma))) removed = true;
                }
            }
        }
        if (removed)
            ++result.removed_step8;
        else
            result.retained.push_back(ci);
    }
    return result;
}

BuildJResult build_J(const Instance& instance, const SDPVectors& vectors,
                     const std::vector<int>& retained, const RoundingParams& params) {
    const double high = params.gap_high();
    const int d = vectors.domain_size();

    std::set<int> covered, binary_covered;
    std::set<std::pair<int, int>> scopes;
    for (int ci : retained) {
        const auto& c = instance.constraints[ci];
        for (int v : c.scope) covered.insert(v);
        if (c.relation.arity == 2) {
            binary_covered.insert(c.scope[0]);
            binary_covered.insert(c.scope[1]);
            int x = std::min(c.scope[0], c.scope[1]);
            int y = std::max(c.scope[0], c.scope[1]);
            scopes.insert({x, y});
        }
    }

    BuildJResult result{PragueInstance(static_cast<int>(binary_covered.size()), d), {}, {}, {}};
    result.v0.assign(covered.begin(), covered.end());
    std::vector<int> prague_vars(binary_covered.begin(), binary_covered.end());
    std::map<int, int> reindex;
    for (std::size_t i = 0; i < prague_vars.size(); ++i) reindex[prague_vars[i]] = static_cast<int>(i);

    result.p_x.resize(instance.num_variables);
    for (int x = 0; x < instance.num_variables; ++x) result.p_x[x] = threshold_set(vectors, x, high);

    for (int x : result.v0) {
        if (result.p_x[x] == 0)
            throw PipelineError("covered variable " + std::to_string(x) +
                                " has empty threshold set; the vectors breach the tolerance "
                                "contract");
    }

    for (auto [x, y] : scopes) {
        BinaryRel rel = BinaryRel::empty(d);
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b)
                if (vectors.vec(x, a).dot(vectors.vec(y, b)) >= high) rel.insert(a, b);
        result.prague.set_relation(reindex[x], reindex[y], rel);
    }

    // 1-minimality must come out of the threshold construction
    for (auto [ix, iy] : result.prague.scopes()) {
        ValueSet proj = result.prague.relation(ix, iy).first_projection();
        if (proj != result.p_x[prague_vars[ix]]) {
            std::ostringstream os;
            os << "thresholded instance is not 1-minimal at variable " << prague_vars[ix]
               << " against " << prague_vars[iy] << "; tolerance breach";
            throw PipelineError(os.str());
        }
    }

    result.prague_vars = std::move(prague_vars);
    return result;
}

WalkCheckResult check_walk_dichotomy(const PragueInstance& prague,
                                     const std::vector<int>& prague_vars,
                                     const SDPVectors& vectors, const RoundingParams& params) {
    WalkCheckResult result;
    SubsetCache cache(vectors, params);
    for (auto [x, y] : prague.scopes()) {
        const int vx = prague_vars[x], vy = prague_vars[y];
        ValueSet px = prague.relation(x, y).first_projection();
        for (ValueSet a = 1; a < (1u << prague.domain_size()); ++a) {
            if ((a & px) != a) continue;
            ValueSet b = prague.relation(x, y).image(a);
            ValueSet back = prague.relation(y, x).image(b);
            long block_a = cache.block(vx, a);
            long block_b = cache.block(vy, b);
            double dist = (cache.sums[vx][a] - cache.sums[vy][b]).squaredNorm();
            bool almost_same = block_a == block_b && dist <= params.u1;
            bool ok = (block_b > block_a) || (almost_same && back == a);
            if (!ok) {
                std::ostringstream os;
                os << "walk dichotomy fails at step (" << vx << "," << vy << ") with A bitmask "
                   << a << ": blocks " << block_a << "/" << block_b << ", dist^2 " << dist
                   << ", back-image bitmask " << back;
                result.pass = false;
                result.witness = os.str();
                return result;
            }
        }
    }
    return result;
}

namespace {

std::vector<Eigen::VectorXd> sample_unit_vectors(std::mt19937_64& rng, std::int64_t count,
                                                 int dimension) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Eigen::VectorXd> planes;
    planes.reserve(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i) {
        Eigen::VectorXd q(dimension);
        double norm = 0;
        do {
            for (int j = 0; j < dimension; ++j) q[j] = gauss(rng);
            norm = q.norm();
        } while (norm == 0);
        planes.push_back(q / norm);
    }
    return planes;
}

ValueSet close_set(ValueSet mask, const std::vector<OperationTable>& ops, int d) {
    ValueSet current = mask;
    bool grew = true;
    while (grew) {
        grew = false;
        auto elems = set_to_values(current);
        for (const auto& op : ops) {
            std::vector<std::size_t> choice(op.arity, 0);
            std::vector<int> args(op.arity);
            if (elems.empty()) break;
            while (true) {
                for (int j = 0; j < op.arity; ++j) args[j] = elems[choice[j]];
                int out = op.apply(args);
                if (!(current >> out & 1)) {
                    current = static_cast<ValueSet>(current | (1u << out));
                    grew = true;
                }
                int pos = op.arity - 1;
                while (pos >= 0 && choice[pos] == elems.size() - 1) choice[pos--] = 0;
                if (pos < 0) break;
                ++choice[pos];
            }
            if (grew) break;  // recompute elems
        }
        (void)d;
    }
    return current;
}

const OperationTable* find_by_arity(const std::vector<OperationTable>& ops, int arity) {
    for (const auto& op : ops)
        if (op.arity == arity) return &op;
    return nullptr;
}

/// Steps 9 and on: threshold instance, closure, verification, and the
/// local-consistency solve. Shared by the randomized and derandomized paths.
struct FinishResult {
    Assignment assignment;
    std::string j_verdict, j_closed_verdict;
    std::size_t v0_size{0};
    bool satisfies_all_retained{true};
    Fraction achieved{0, 1};
};

FinishResult finish_rounding(const Instance& instance, const SDPVectors& vectors,
                             const std::vector<int>& retained, const RoundingParams& params,
                             const std::vector<OperationTable>& ops) {
    const OperationTable* f1 = find_by_arity(ops, 3);
    const OperationTable* f2 = find_by_arity(ops, 4);
    if (!f1 || !f2)
        throw Error("rounding needs the witness operations (arities 3 and 4) for the closure");

    BuildJResult jres = build_J(instance, vectors, retained, params);
    FinishResult out;
    out.v0_size = jres.v0.size();

    PragueInstance closed = clone_closure(jres.prague, ops);
    auto j_verdict = verify_weak_prague(jres.prague);
    auto closed_verdict = verify_weak_prague(closed);
    out.j_verdict = j_verdict.pass() ? "pass" : ("fail(" + j_verdict.axiom() + ")");
    out.j_closed_verdict =
        closed_verdict.pass() ? "pass" : ("fail(" + closed_verdict.axiom() + ")");
    if (!j_verdict.pass())
        throw PipelineError("thresholded instance fails the pattern axioms: " + j_verdict.witness);
    if (!closed_verdict.pass())
        throw PipelineError("closed instance fails the pattern axioms: " + closed_verdict.witness);

    const int d = instance.domain_size;
    Assignment assignment(instance.num_variables, -1);

    // closed projections per original variable
    std::map<int, ValueSet> closed_p;
    for (std::size_t i = 0; i < jres.prague_vars.size(); ++i)
        closed_p[jres.prague_vars[i]] = closed.projection(static_cast<int>(i));
    for (int x : jres.v0)
        if (!closed_p.count(x)) closed_p[x] = close_set(jres.p_x[x], ops, d);

    if (!jres.prague_vars.empty()) {
        Instance jprime;
        jprime.num_variables = static_cast<int>(jres.prague_vars.size());
        jprime.domain_size = d;
        ConstraintLanguage jlang;
        jlang.domain_size = d;
        jlang.witness = WitnessPair{*f1, *f2};
        auto add_relation = [&](const Relation& rel) {
            if (!jlang.contains_relation(rel))
                jlang.relations.emplace_back(
                    "r" + std::to_string(jlang.relations.size()), rel);
        };
        for (auto [ix, iy] : closed.scopes()) {
            if (ix > iy) continue;
            Relation rel = closed.relation(ix, iy).to_relation();
            jprime.constraints.push_back({{ix, iy}, rel});
            add_relation(rel);
        }
        for (int i = 0; i < jprime.num_variables; ++i) {
            ValueSet mask = closed_p[jres.prague_vars[i]];
            Relation rel = Relation::make(
                1, [&] {
                    std::vector<std::vector<int>> ts;
                    for (int a : set_to_values(mask)) ts.push_back({a});
                    return ts;
                }(),
                d);
            jprime.constraints.push_back({{i}, rel});
            add_relation(rel);
        }
        jlang = singleton_expand(jlang);

        auto solved = solve_bounded_width(jprime, jlang);
        if (!solved)
            throw PipelineError(
                "the closed instance has no solution; the witness operations or the tolerance "
                "contract are at fault");
        for (std::size_t i = 0; i < jres.prague_vars.size(); ++i)
            assignment[jres.prague_vars[i]] = (*solved)[i];
    }

    // covered variables without a binary scope: any value of the closed
    // threshold set satisfies their retained unary constraints
    for (int x : jres.v0) {
        if (assignment[x] != -1) continue;
        ValueSet mask = closed_p[x];
        int best = -1;
        double best_norm = -1;
        for (int a : set_to_values(mask)) {
            double nrm = vectors.vec(x, a).squaredNorm();
            if (nrm > best_norm) {
                best_norm = nrm;
                best = a;
            }
        }
        assignment[x] = best;
    }

    // variables outside the retained part: heaviest value
    for (int x = 0; x < instance.num_variables; ++x) {
        if (assignment[x] != -1) continue;
        int best = 0;
        double best_norm = -1;
        for (int a = 0; a < d; ++a) {
            double nrm = vectors.vec(x, a).squaredNorm();
            if (nrm > best_norm) {
                best_norm = nrm;
                best = a;
            }
        }
        assignment[x] = best;
    }

    for (int ci : retained) {
        const auto& c = instance.constraints[ci];
        std::vector<int> image;
        for (int v : c.scope) image.push_back(assignment[v]);
        if (!c.relation.contains(image)) {
            out.satisfies_all_retained = false;
            throw PipelineError("assignment violates retained constraint " + std::to_string(ci) +
                                "; rounding invariant broken");
        }
    }
    out.satisfies_all_retained = true;
    out.achieved = value(instance, assignment);
    out.assignment = std::move(assignment);
    return out;
}

void check_tolerance_contract(const SDPVectors& vectors, int n, double margin) {
    double strictest = std::pow(n, -4.0 * n - 4.0) / margin;
    auto feas = check_sdp_feasibility(vectors, strictest);
    if (!feas.pass())
        throw ToleranceContractError(
            "vector residuals " + std::to_string(feas.max_residual()) +
            " exceed the contract " + std::to_string(strictest) + " for level " +
            std::to_string(n));
}

}  // namespace

RobustResult robust_round(const Instance& instance, const SDPVectors& vectors, int n,
                          std::uint64_t seed, const std::vector<OperationTable>& ops,
                          const RoundingOptions& options) {
    auto start = std::chrono::steady_clock::now();
    if (n < 2) throw Error("level n must be at least 2");
    if (instance.domain_size > kMaxPragueDomain)
        throw CapExceededError("rounding caps the domain at " + std::to_string(kMaxPragueDomain));
    check_tolerance_contract(vectors, n, options.feasibility_margin);

    RoundingParams params;
    params.n = n;
    params.seed = seed;
    params.mode = RoundingMode::randomized;

    std::mt19937_64 rng(seed);
    params.r = std::uniform_int_distribution<int>(1, n - 1)(rng);
    RoundingParams::fill_params(params, instance.domain_size);
    params.s = std::uniform_real_distribution<double>(0.0, params.u2)(rng);
    std::int64_t nominal = RoundingParams::nominal_hyperplane_count(n, params.mode);
    params.hyperplanes = sample_unit_vectors(rng, nominal, vectors.dimension());

    RoundingReport report;
    report.n = n;
    report.r = params.r;
    report.s = params.s;
    report.seed = seed;
    report.mode = "randomized";
    report.generator = "mt19937_64/normal_distribution";
    report.hyperplane_count = nominal;
    report.hyperplanes_used = nominal;
    report.m = instance.m();

    double objective_floor = 1.0 - 1.0 / std::pow(static_cast<double>(n), 4.0 * n);
    if (vectors.objective < objective_floor)
        report.warning = "objective below 1 - 1/n^{4n}; the removal guarantee is void";

    PruneResult pruned = prune(instance, vectors, params);
    HyperplaneResult cut = hyperplane_phase(instance, vectors, pruned.retained, params);
    report.removed_step2 = pruned.removed_step2;
    report.removed_step3 = pruned.removed_step3;
    report.removed_step5 = pruned.removed_step5;
    report.removed_step7 = cut.removed_step7;
    report.removed_step8 = cut.removed_step8;
    report.retained = cut.retained.size();

    FinishResult fin = finish_rounding(instance, vectors, cut.retained, params, ops);
    report.v0_size = fin.v0_size;
    report.j_verdict = fin.j_verdict;
    report.j_closed_verdict = fin.j_closed_verdict;
    report.satisfies_all_retained = fin.satisfies_all_retained;
    report.achieved_value = fin.achieved;
    report.milliseconds = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - start)
                              .count();
    return RobustResult{fin.assignment, report};
}

namespace {

struct PairGroup {
    int x;
    unsigned mask_a, mask_b;
    int y{-1};  // -1 for same-variable (step 7) groups
    int t{0};
    double p{0};      // pessimistic probability bound
    long count{1};    // multiplicity across constraints
    bool resolved{false};  // cut (step 7 lists) or cut (step 8 lists)
};

/// Greedy conditional-expectation selection. Returns the chosen hyperplanes
/// and estimator traces.
struct GreedyOutcome {
    std::vector<Eigen::VectorXd> planes;
    double estimator_initial{0}, estimator_final{0}, max_increase{0};
};

GreedyOutcome greedy_select(std::vector<PairGroup>& l7, std::vector<PairGroup>& l8,
                            const std::vector<Eigen::VectorXd>& pool, SubsetCache& cache,
                            std::int64_t l7_total, std::int64_t l8_total) {
    GreedyOutcome outcome;
    int horizon = 0;
    for (const auto& g : l7) horizon = std::max(horizon, g.t);
    for (const auto& g : l8) horizon = std::max(horizon, g.t);
    if (horizon == 0 || (l7.empty() && l8.empty())) return outcome;

    long l8_cut = 0;
    auto estimator = [&](int i) {
        double e7 = 0, e8 = 0;
        for (const auto& g : l7)
            if (!g.resolved)
                e7 += g.count * std::pow(g.p, std::max(g.t - i, 0));
        for (const auto& g : l8)
            if (!g.resolved)
                e8 += g.count * std::max(g.t - i, 0) * g.p;
        double total = 0;
        if (l7_total > 0) total += e7 / static_cast<double>(l7_total);
        if (l8_total > 0) total += (static_cast<double>(l8_cut) + e8) / static_cast<double>(l8_total);
        return total;
    };

    // sign of <x_A, q> for a pool candidate, cached lazily
    std::vector<std::vector<int8_t>> pool_signs(pool.size());
    std::vector<std::pair<int, unsigned>> subsets;
    std::map<std::pair<int, unsigned>, int> subset_index;
    auto register_subset = [&](int var, unsigned mask) {
        auto key = std::make_pair(var, mask);
        if (!subset_index.count(key)) {
            subset_index[key] = static_cast<int>(subsets.size());
            subsets.push_back(key);
        }
    };
    for (const auto& g : l7) {
        register_subset(g.x, g.mask_a);
        register_subset(g.x, g.mask_b);
    }
    for (const auto& g : l8) {
        register_subset(g.x, g.mask_a);
        register_subset(g.y, g.mask_b);
    }
    auto candidate_sign = [&](std::size_t qi, int var, unsigned mask) {
        auto& row = pool_signs[qi];
        if (row.empty()) {
            row.resize(subsets.size());
            for (std::size_t s = 0; s < subsets.size(); ++s)
                row[s] = static_cast<int8_t>(
                    sign_of(cache.sums[subsets[s].first][subsets[s].second].dot(pool[qi])));
        }
        return row[subset_index.at({var, mask})];
    };

    double current = estimator(0);
    outcome.estimator_initial = current;

    for (int i = 0; i < horizon; ++i) {
        bool chosen = false;
        for (std::size_t qi = 0; qi < pool.size() && !chosen; ++qi) {
            // hypothetical cuts by pool[qi] at step i+1
            double e7 = 0, e8 = 0;
            long new_l8_cut = l8_cut;
            for (const auto& g : l7) {
                if (g.resolved) continue;
                bool cut = g.t > i && candidate_sign(qi, g.x, g.mask_a) !=
                                          candidate_sign(qi, g.x, g.mask_b);
                if (!cut) e7 += g.count * std::pow(g.p, std::max(g.t - (i + 1), 0));
            }
            for (const auto& g : l8) {
                if (g.resolved) continue;
                bool cut = g.t > i && candidate_sign(qi, g.x, g.mask_a) !=
                                          candidate_sign(qi, g.y, g.mask_b);
                if (cut)
                    new_l8_cut += g.count;
                else
                    e8 += g.count * std::max(g.t - (i + 1), 0) * g.p;
            }
            double next = 0;
            if (l7_total > 0) next += e7 / static_cast<double>(l7_total);
            if (l8_total > 0)
                next += (static_cast<double>(new_l8_cut) + e8) / static_cast<double>(l8_total);

            if (next <= current + 1e-12) {
                outcome.max_increase = std::max(outcome.max_increase, next - current);
                // commit
                for (auto& g : l7)
                    if (!g.resolved && g.t > i &&
                        candidate_sign(qi, g.x, g.mask_a) != candidate_sign(qi, g.x, g.mask_b))
                        g.resolved = true;
                for (auto& g : l8)
                    if (!g.resolved && g.t > i &&
                        candidate_sign(qi, g.x, g.mask_a) != candidate_sign(qi, g.y, g.mask_b)) {
                        g.resolved = true;
                        l8_cut += g.count;
                    }
                outcome.planes.push_back(pool[qi]);
                current = next;
                chosen = true;
            }
        }
        if (!chosen)
            throw PipelineError(
                "no pool candidate keeps the estimator from increasing; enlarge the hyperplane "
                "pool");
    }
    outcome.estimator_final = current;
    return outcome;
}

}  // namespace

RobustResult derandomized_round(const Instance& instance, const SDPVectors& vectors, int n,
                                const std::vector<OperationTable>& ops, std::uint64_t pool_seed,
                                const RoundingOptions& options) {
    auto start = std::chrono::steady_clock::now();
    if (n < 2) throw Error("level n must be at least 2");
    if (instance.domain_size > kMaxPragueDomain)
        throw CapExceededError("rounding caps the domain at " + std::to_string(kMaxPragueDomain));
    check_tolerance_contract(vectors, n, options.feasibility_margin);

    std::int64_t pool_size = options.pool_size;
    if (pool_size <= 0)
        pool_size = static_cast<std::int64_t>(64 * std::pow(static_cast<double>(n), 2.0 * n));
    std::mt19937_64 rng(pool_seed);
    std::vector<Eigen::VectorXd> pool = sample_unit_vectors(rng, pool_size, vectors.dimension());

    const int d = vectors.domain_size();
    const int s_grid = static_cast<int>(std::pow(n, 4.0));

    struct Trial {
        RoundingParams params;
        std::vector<int> retained;
        std::size_t rem2, rem3, rem5, rem7, rem8;
        GreedyOutcome greedy;
        std::optional<FinishResult> finished;
    };
    std::optional<Trial> best;

    for (int r = 1; r <= n - 1; ++r) {
        for (int sj = 0; sj < s_grid; ++sj) {
            RoundingParams params;
            params.n = n;
            params.r = r;
            params.mode = RoundingMode::derandomized;
            RoundingParams::fill_params(params, d);
            params.s = sj * params.u2 / s_grid;

            PruneResult pruned = prune(instance, vectors, params);

            // build the cut/don't-cut lists over the pruned constraints
            SubsetCache cache(vectors, params);
            const double high = params.gap_high();
            std::map<std::tuple<int, unsigned, unsigned>, long> l7_groups;
            std::map<std::tuple<int, unsigned, int, unsigned>, long> l8_groups;
            for (int ci : pruned.retained) {
                const auto& c = instance.constraints[ci];
                for (int x : c.scope) {
                    ValueSet px = threshold_set(vectors, x, high);
                    for (unsigned ma = 1; ma < (1u << d); ++ma) {
                        if ((ma & px) != ma) continue;
                        for (unsigned mb = ma + 1; mb < (1u << d); ++mb) {
                            if ((mb & px) != mb) continue;
                            if (cache.block(x, ma) != cache.block(x, mb)) continue;
                            l7_groups[{x, ma, mb}] += 1;
                        }
                    }
                }
                if (c.relation.arity == 2) {
                    int x = c.scope[0], y = c.scope[1];
                    ValueSet px = threshold_set(vectors, x, high);
                    ValueSet py = threshold_set(vectors, y, high);
                    for (unsigned ma = 1; ma < (1u << d); ++ma) {
                        if ((ma & px) != ma) continue;
                        for (unsigned mb = 1; mb < (1u << d); ++mb) {
                            if ((mb & py) != mb) continue;
                            if (cache.block(x, ma) != cache.block(y, mb)) continue;
                            double dist = (cache.sums[x][ma] - cache.sums[y][mb]).squaredNorm();
                            if (dist > params.u1) continue;
                            if (cache.sums[x][ma] == cache.sums[y][mb]) continue;
                            l8_groups[{x, ma, y, mb}] += 1;
                        }
                    }
                }
            }

            std::vector<PairGroup> l7, l8;
            std::int64_t l7_total = 0, l8_total = 0;
            const double nr = std::pow(n, -2.0 * r);
            for (const auto& [key, count] : l7_groups) {
                auto [x, ma, mb] = key;
                PairGroup g;
                g.x = x;
                g.mask_a = ma;
                g.mask_b = mb;
                // pessimistic side: the longer vector gives the weaker bound
                double norm = std::sqrt(std::max(cache.norms_sq[x][ma], cache.norms_sq[x][mb]));
                g.p = 1.0 - nr / (4.0 * norm);
                g.p = std::clamp(g.p, 0.0, 1.0);
                g.t = params.t_count(cache.block(x, ma));
                g.count = count;
                l7_total += count;
                l7.push_back(g);
            }
            for (const auto& [key, count] : l8_groups) {
                auto [x, ma, y, mb] = key;
                PairGroup g;
                g.x = x;
                g.mask_a = ma;
                g.y = y;
                g.mask_b = mb;
                double norm = std::sqrt(std::min(cache.norms_sq[x][ma], cache.norms_sq[y][mb]));
                g.p = 4.0 * std::sqrt(params.u1) / norm;
                g.t = params.t_count(cache.block(x, ma));
                g.count = count;
                l8_total += count;
                l8.push_back(g);
            }

            GreedyOutcome greedy = greedy_select(l7, l8, pool, cache, l7_total, l8_total);
            params.hyperplanes = greedy.planes;

            HyperplaneResult cut = hyperplane_phase(instance, vectors, pruned.retained, params);

            Trial trial{std::move(params), cut.retained,          pruned.removed_step2,
                        pruned.removed_step3, pruned.removed_step5, cut.removed_step7,
                        cut.removed_step8,    std::move(greedy)};
            if (options.full_sweep) {
                // rank by achieved value instead of the retained-count bound
                FinishResult fin = finish_rounding(instance, vectors, trial.retained, trial.params,
                                                   ops);
                trial.finished = std::move(fin);
            }
            bool better;
            if (!best) {
                better = true;
            } else if (options.full_sweep) {
                better = trial.finished->achieved > best->finished->achieved;
            } else {
                better = trial.retained.size() > best->retained.size();
            }
            if (better) best = std::move(trial);
        }
    }

    if (!best) throw Error("derandomized rounding found no parameter choice");

    RoundingReport report;
    report.n = n;
    report.r = best->params.r;
    report.s = best->params.s;
    report.mode = "derandomized";
    report.generator = "mt19937_64/normal_distribution pool";
    report.pool_seed = pool_seed;
    report.pool_size = pool_size;
    report.hyperplane_count = RoundingParams::nominal_hyperplane_count(n, RoundingMode::derandomized);
    report.hyperplanes_used = static_cast<std::int64_t>(best->params.hyperplanes.size());
    report.m = instance.m();
    report.removed_step2 = best->rem2;
    report.removed_step3 = best->rem3;
    report.removed_step5 = best->rem5;
    report.removed_step7 = best->rem7;
    report.removed_step8 = best->rem8;
    report.retained = best->retained.size();
    report.estimator_initial = best->greedy.estimator_initial;
    report.estimator_final = best->greedy.estimator_final;
    report.estimator_max_increase = best->greedy.max_increase;

    FinishResult fin = best->finished
                           ? std::move(*best->finished)
                           : finish_rounding(instance, vectors, best->retained, best->params, ops);
    report.v0_size = fin.v0_size;
    report.j_verdict = fin.j_verdict;
    report.j_closed_verdict = fin.j_closed_verdict;
    report.satisfies_all_retained = fin.satisfies_all_retained;
    report.achieved_value = fin.achieved;
    report.milliseconds = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - start)
                              .count();
    return RobustResult{fin.assignment, report};
}

}  // namespace rcsp
