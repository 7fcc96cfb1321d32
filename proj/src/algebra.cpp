#include "rcsp/algebra.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

namespace rcsp {

const Relation* ConstraintLanguage::find(const std::string& name) const {
    for (const auto& [n, rel] : relations)
        if (n == name) return &rel;
    return nullptr;
}

bool ConstraintLanguage::contains_relation(const Relation& r) const {
    for (const auto& [n, rel] : relations)
        if (rel == r) return true;
    return false;
}

bool ConstraintLanguage::singleton_expanded() const {
    for (int a = 0; a < domain_size; ++a) {
        Relation singleton = Relation::make(1, {{a}}, domain_size);
        if (!contains_relation(singleton)) return false;
    }
    return true;
}

int ConstraintLanguage::max_arity() const {
    int m = 0;
    for (const auto& [n, rel] : relations) m = std::max(m, rel.arity);
    return m;
}

bool is_compatible(const OperationTable& f, const Relation& r, int domain_size) {
    if (f.domain_size != domain_size) throw Error("operation/relation domain mismatch");
    if (r.tuples.empty()) return true;
    const int k = r.arity;
    const int l = f.arity;
    const std::size_t nt = r.tuples.size();

    // odometer over all choices of l tuples from R (with repetition)
    std::vector<std::size_t> choice(l, 0);
    std::vector<int> args(l);
    std::vector<int> image(k);
    while (true) {
        for (int coord = 0; coord < k; ++coord) {
            for (int j = 0; j < l; ++j) args[j] = r.tuples[choice[j]][coord];
            image[coord] = f.apply(args);
        }
        if (!r.contains(image)) return false;
        int pos = l - 1;
        while (pos >= 0 && choice[pos] == nt - 1) choice[pos--] = 0;
        if (pos < 0) break;
        ++choice[pos];
    }
    return true;
}

namespace {

bool witness_identities_hold(const OperationTable& f1, const OperationTable& f2) {
    const int d = f1.domain_size;
    for (int a = 0; a < d; ++a) {
        if (f1.apply({a, a, a}) != a) return false;
        for (int b = 0; b < d; ++b) {
            const int v = f1.apply({a, a, b});
            if (f1.apply({a, b, a}) != v) return false;
            if (f1.apply({b, a, a}) != v) return false;
            if (f2.apply({a, a, a, b}) != v) return false;
            if (f2.apply({a, a, b, a}) != v) return false;
            if (f2.apply({a, b, a, a}) != v) return false;
            if (f2.apply({b, a, a, a}) != v) return false;
        }
    }
    return true;
}

bool compatible_with_language(const OperationTable& f, const ConstraintLanguage& language) {
    for (const auto& [name, rel] : language.relations)
        if (!is_compatible(f, rel, language.domain_size)) return false;
    return true;
}

}  // namespace

bool verify_bw_witness(const OperationTable& f1, const OperationTable& f2,
                       const ConstraintLanguage& language) {
    if (f1.arity != 3 || f2.arity != 4) throw Error("witness operations must have arities 3 and 4");
    if (f1.domain_size != language.domain_size || f2.domain_size != language.domain_size)
        throw Error("witness operation domain mismatch");
    if (!witness_identities_hold(f1, f2)) return false;
    return compatible_with_language(f1, language) && compatible_with_language(f2, language);
}

std::optional<WitnessPair> search_bw_witness_boolean(const ConstraintLanguage& language) {
    if (language.domain_size != 2)
        throw CapExceededError(
            "witness search is only feasible over the Boolean domain; supply f1/f2 in the "
            "language file for larger domains");

    for (int code1 = 0; code1 < 256; ++code1) {
        std::vector<int> t1(8);
        for (int i = 0; i < 8; ++i) t1[i] = code1 >> i & 1;
        auto f1 = OperationTable::make(3, 2, t1);
        bool ids = true;
        for (int a = 0; a < 2 && ids; ++a) {
            if (f1.apply({a, a, a}) != a) ids = false;
            for (int b = 0; b < 2 && ids; ++b) {
                int v = f1.apply({a, a, b});
                if (f1.apply({a, b, a}) != v || f1.apply({b, a, a}) != v) ids = false;
            }
        }
        if (!ids || !compatible_with_language(f1, language)) continue;

        // f2 entries on tuples with at least three equal coordinates are pinned
        // by the shared identity values; the rest are free.
        std::vector<int> pinned(16, -1);
        std::vector<int> free_slots;
        std::vector<int> args(4);
        for (int idx = 0; idx < 16; ++idx) {
            for (int j = 0; j < 4; ++j) args[j] = idx >> (3 - j) & 1;
            int ones = args[0] + args[1] + args[2] + args[3];
            if (ones == 0 || ones == 4)
                pinned[idx] = args[0];
            else if (ones == 1)
                pinned[idx] = f1.apply({0, 0, 1});
            else if (ones == 3)
                pinned[idx] = f1.apply({1, 1, 0});
            else
                free_slots.push_back(idx);
        }
        const int free_count = static_cast<int>(free_slots.size());
        for (int code2 = 0; code2 < (1 << free_count); ++code2) {
            std::vector<int> t2 = pinned;
            for (int j = 0; j < free_count; ++j) t2[free_slots[j]] = code2 >> j & 1;
            auto f2 = OperationTable::make(4, 2, t2);
            if (!compatible_with_language(f2, language)) continue;
            if (verify_bw_witness(f1, f2, language)) return WitnessPair{f1, f2};
        }
    }
    return std::nullopt;
}

namespace {

Relation map_relation(const Relation& r, const std::vector<int>& e) {
    std::vector<std::vector<int>> mapped;
    mapped.reserve(r.tuples.size());
    for (const auto& t : r.tuples) {
        std::vector<int> image(t.size());
        for (std::size_t i = 0; i < t.size(); ++i) image[i] = e[t[i]];
        mapped.push_back(std::move(image));
    }
    int max_entry = 0;
    for (int v : e) max_entry = std::max(max_entry, v);
    return Relation::make(r.arity, std::move(mapped), max_entry + 1);
}

bool unary_polymorphism(const std::vector<int>& e, const ConstraintLanguage& language) {
    std::vector<int> image(1);
    for (const auto& [name, rel] : language.relations) {
        for (const auto& t : rel.tuples) {
            std::vector<int> mapped(t.size());
            for (std::size_t i = 0; i < t.size(); ++i) mapped[i] = e[t[i]];
            if (!rel.contains(mapped)) return false;
        }
    }
    return true;
}

}  // namespace

ConstraintLanguage core_reduce(const ConstraintLanguage& language, std::uint64_t map_cap) {
    ConstraintLanguage current = language;
    bool changed_ever = false;

    while (true) {
        const int d = current.domain_size;
        double maps = std::pow(static_cast<double>(d), static_cast<double>(d));
        if (maps > static_cast<double>(map_cap))
            throw CapExceededError("unary map space exceeds the core-reduction cap");

        std::vector<int> e(d, 0);
        bool found = false;
        while (true) {
            bool surjective = [&] {
                std::vector<char> hit(d, 0);
                for (int v : e) hit[v] = 1;
                return std::all_of(hit.begin(), hit.end(), [](char c) { return c != 0; });
            }();
            if (!surjective && unary_polymorphism(e, current)) {
                found = true;
                break;
            }
            int pos = d - 1;
            while (pos >= 0 && e[pos] == d - 1) e[pos--] = 0;
            if (pos < 0) break;
            ++e[pos];
        }
        if (!found) break;

        // restrict to the image and reindex
        std::vector<int> image_sorted;
        for (int v : e) image_sorted.push_back(v);
        std::sort(image_sorted.begin(), image_sorted.end());
        image_sorted.erase(std::unique(image_sorted.begin(), image_sorted.end()),
                           image_sorted.end());
        std::vector<int> reindex(d, -1);
        for (std::size_t i = 0; i < image_sorted.size(); ++i) reindex[image_sorted[i]] = static_cast<int>(i);
        std::vector<int> e_reindexed(d);
        for (int a = 0; a < d; ++a) e_reindexed[a] = reindex[e[a]];

        ConstraintLanguage next;
        next.domain_size = static_cast<int>(image_sorted.size());
        for (const auto& [name, rel] : current.relations)
            next.relations.emplace_back(name, map_relation(rel, e_reindexed));
        current = std::move(next);
        changed_ever = true;
    }

    if (!changed_ever) return language;  // witness untouched
    current.witness.reset();             // tables no longer match the domain
    return current;
}

ConstraintLanguage singleton_expand(const ConstraintLanguage& language) {
    ConstraintLanguage out = language;
    for (int a = 0; a < language.domain_size; ++a) {
        Relation singleton = Relation::make(1, {{a}}, language.domain_size);
        if (!out.contains_relation(singleton))
            out.relations.emplace_back("singleton_" + std::to_string(a), singleton);
    }
    return out;
}

int encode_block(std::span<const int> digits, int domain_size) {
    int v = 0;
    for (int d : digits) v = v * domain_size + d;
    return v;
}

std::vector<int> decode_block(int value, int domain_size, int length) {
    std::vector<int> digits(length);
    for (int i = length - 1; i >= 0; --i) {
        digits[i] = value % domain_size;
        value /= domain_size;
    }
    return digits;
}

namespace {

OperationTable lift_coordinatewise(const OperationTable& f, int domain_size, int l,
                                   int block_domain) {
    std::size_t size = 1;
    for (int i = 0; i < f.arity; ++i) size *= static_cast<std::size_t>(block_domain);
    std::vector<int> table(size);
    std::vector<int> args(f.arity, 0);
    std::vector<std::vector<int>> digit_args(f.arity);
    std::vector<int> column(f.arity), out(l);
    for (std::size_t idx = 0; idx < size; ++idx) {
        for (int j = 0; j < f.arity; ++j) digit_args[j] = decode_block(args[j], domain_size, l);
        for (int c = 0; c < l; ++c) {
            for (int j = 0; j < f.arity; ++j) column[j] = digit_args[j][c];
            out[c] = f.apply(column);
        }
        table[idx] = encode_block(out, domain_size);
        for (int pos = f.arity - 1; pos >= 0; --pos) {
            if (++args[pos] < block_domain) break;
            args[pos] = 0;
        }
    }
    return OperationTable::make(f.arity, block_domain, std::move(table));
}

}  // namespace

BinarizeResult binarize(const Instance& instance, const ConstraintLanguage& language,
                        int block_domain_cap) {
    const int d = language.domain_size;
    const int l = std::max(1, language.max_arity());
    double block_domain_f = std::pow(static_cast<double>(d), static_cast<double>(l));
    if (block_domain_f > static_cast<double>(block_domain_cap))
        throw CapExceededError("block domain |D|^l = " + std::to_string(block_domain_f) +
                               " exceeds the encoding width cap");
    const int dd = static_cast<int>(block_domain_f);

    ConstraintLanguage out_lang;
    out_lang.domain_size = dd;

    // R' keeps the blocks whose first k digits form a tuple of R
    auto lifted_unary = [&](const Relation& r) {
        std::vector<std::vector<int>> tuples;
        for (int v = 0; v < dd; ++v) {
            auto digits = decode_block(v, d, l);
            std::vector<int> prefix(digits.begin(), digits.begin() + r.arity);
            if (r.contains(prefix)) tuples.push_back({v});
        }
        return Relation::make(1, std::move(tuples), dd);
    };

    for (const auto& [name, rel] : language.relations)
        out_lang.relations.emplace_back(name + "'", lifted_unary(rel));

    std::vector<Relation> eks;
    for (int k = 1; k <= l; ++k) {
        std::vector<std::vector<int>> tuples;
        for (int u = 0; u < dd; ++u) {
            auto du = decode_block(u, d, l);
            for (int v = 0; v < dd; ++v) {
                auto dv = decode_block(v, d, l);
                if (du[0] == dv[k - 1]) tuples.push_back({u, v});
            }
        }
        eks.push_back(Relation::make(2, std::move(tuples), dd));
        out_lang.relations.emplace_back("E" + std::to_string(k), eks.back());
    }
    out_lang = singleton_expand(out_lang);

    if (language.witness) {
        out_lang.witness = WitnessPair{lift_coordinatewise(language.witness->f1, d, l, dd),
                                       lift_coordinatewise(language.witness->f2, d, l, dd)};
    }

    Instance out;
    out.domain_size = dd;
    out.num_variables = instance.num_variables + static_cast<int>(instance.m());
    int next_var = instance.num_variables;
    for (const auto& c : instance.constraints) {
        const int xc = next_var++;
        out.constraints.push_back({{xc}, lifted_unary(c.relation)});
        for (int i = 0; i < c.relation.arity; ++i)
            out.constraints.push_back({{c.scope[i], xc}, eks[i]});
    }

    return BinarizeResult{std::move(out), std::move(out_lang),
                          LiftMap{instance.num_variables, d, l}};
}

Assignment lift_assignment(const Assignment& binarized, const LiftMap& lift) {
    if (static_cast<int>(binarized.size()) < lift.original_num_variables)
        throw Error("binarized assignment does not cover the original variables");
    Assignment out(lift.original_num_variables);
    int msd = 1;
    for (int i = 0; i < lift.block_arity - 1; ++i) msd *= lift.original_domain_size;
    for (int x = 0; x < lift.original_num_variables; ++x) out[x] = binarized[x] / msd;
    return out;
}

PragueInstance clone_closure(const PragueInstance& prague,
                             const std::vector<OperationTable>& ops) {
    PragueInstance out(prague.num_variables(), prague.domain_size());
    const int d = prague.domain_size();

    for (const auto& [x, y] : prague.scopes()) {
        if (x > y) continue;  // transpose is installed together with (x, y)
        BinaryRel rel = prague.relation(x, y);
        bool grew = true;
        while (grew) {
            grew = false;
            auto pair_list = rel.pairs();
            for (const auto& op : ops) {
                if (op.domain_size != d) throw Error("closure operation domain mismatch");
                const int k = op.arity;
                const std::size_t np = pair_list.size();
                if (np == 0) continue;
                std::vector<std::size_t> choice(k, 0);
                std::vector<int> as(k), bs(k);
                while (true) {
                    for (int j = 0; j < k; ++j) {
                        as[j] = pair_list[choice[j]].first;
                        bs[j] = pair_list[choice[j]].second;
                    }
                    int fa = op.apply(as), fb = op.apply(bs);
                    if (!rel.contains(fa, fb)) {
                        rel.insert(fa, fb);
                        grew = true;
                    }
                    int pos = k - 1;
                    while (pos >= 0 && choice[pos] == np - 1) choice[pos--] = 0;
                    if (pos < 0) break;
                    ++choice[pos];
                }
            }
        }
        out.set_relation(x, y, rel);
    }
    return out;
}

}  // namespace rcsp
