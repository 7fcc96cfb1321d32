#include "rcsp/json_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace rcsp {

using json = nlohmann::ordered_json;

namespace {

json must_get(const json& j, const char* key, const char* where) {
    if (!j.contains(key))
        throw ParseError(std::string(where) + ": missing field '" + key + "'");
    return j.at(key);
}

std::string format_real(double v) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    return buffer;
}

Relation relation_from_json(const json& j, int domain_size, const std::string& where) {
    if (!j.is_array()) throw ParseError(where + ": relation must be an array of tuples");
    std::vector<std::vector<int>> tuples;
    int arity = -1;
    for (const auto& t : j) {
        if (!t.is_array()) throw ParseError(where + ": tuple must be an array");
        std::vector<int> tuple = t.get<std::vector<int>>();
        if (arity == -1) arity = static_cast<int>(tuple.size());
        if (static_cast<int>(tuple.size()) != arity)
            throw ParseError(where + ": tuples of mixed length");
        tuples.push_back(std::move(tuple));
    }
    if (arity <= 0) throw ParseError(where + ": empty relation needs at least one tuple");
    try {
        return Relation::make(arity, std::move(tuples), domain_size);
    } catch (const ParseError& e) {
        throw ParseError(where + ": " + e.what());
    }
}

json relation_to_json(const Relation& r) {
    json out = json::array();
    for (const auto& t : r.tuples) out.push_back(t);
    return out;
}

// operation tables: flat row-major array or nested arrays of depth = arity
void flatten_table(const json& j, std::vector<int>& out) {
    if (j.is_number_integer()) {
        out.push_back(j.get<int>());
        return;
    }
    if (!j.is_array()) throw ParseError("operation table entries must be integers or arrays");
    for (const auto& e : j) flatten_table(e, out);
}

OperationTable table_from_json(const json& j, int domain_size, const char* name) {
    std::vector<int> flat;
    flatten_table(j, flat);
    // infer arity from the size
    std::size_t size = flat.size();
    int arity = 0;
    std::size_t acc = 1;
    while (acc < size) {
        acc *= static_cast<std::size_t>(domain_size);
        ++arity;
    }
    if (acc != size)
        throw ParseError(std::string(name) + ": table size " + std::to_string(size) +
                         " is not a power of the domain size");
    try {
        return OperationTable::make(std::max(1, arity), domain_size, std::move(flat));
    } catch (const Error& e) {
        throw ParseError(std::string(name) + ": " + e.what());
    }
}

}  // namespace

Instance parse_instance(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what());
    }
    Instance instance;
    instance.num_variables = must_get(j, "num_variables", "instance").get<int>();
    instance.domain_size = must_get(j, "domain_size", "instance").get<int>();
    if (instance.domain_size < 1) throw ParseError("instance: domain_size must be positive");
    std::size_t index = 0;
    for (const auto& cj : must_get(j, "constraints", "instance")) {
        std::string where = "constraint " + std::to_string(index);
        Constraint c;
        c.scope = must_get(cj, "scope", where.c_str()).get<std::vector<int>>();
        for (int v : c.scope)
            if (v < 0 || v >= instance.num_variables)
                throw ParseError(where + ": variable out of range");
        c.relation = relation_from_json(must_get(cj, "relation", where.c_str()),
                                        instance.domain_size, where);
        if (c.relation.arity != static_cast<int>(c.scope.size()))
            throw ParseError(where + ": scope length does not match relation arity");
        instance.constraints.push_back(std::move(c));
        ++index;
    }
    instance.validate();
    return instance;
}

std::string serialize_instance(const Instance& instance) {
    json j;
    j["num_variables"] = instance.num_variables;
    j["domain_size"] = instance.domain_size;
    j["constraints"] = json::array();
    for (const auto& c : instance.constraints)
        j["constraints"].push_back({{"scope", c.scope}, {"relation", relation_to_json(c.relation)}});
    return j.dump(2);
}

Assignment parse_assignment(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what());
    }
    return must_get(j, "values", "assignment").get<std::vector<int>>();
}

std::string serialize_assignment(const Assignment& assignment) {
    json j;
    j["values"] = assignment;
    return j.dump(2);
}

ConstraintLanguage parse_language(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what());
    }
    ConstraintLanguage lang;
    lang.domain_size = must_get(j, "domain_size", "language").get<int>();
    json relations = must_get(j, "relations", "language");
    for (const auto& [name, rj] : relations.items())
        lang.relations.emplace_back(name,
                                    relation_from_json(rj, lang.domain_size, "relation " + name));

    bool has_f1 = j.contains("f1") && !j["f1"].is_null();
    bool has_f2 = j.contains("f2") && !j["f2"].is_null();
    if (has_f1 != has_f2) throw ParseError("language: f1 and f2 must be given together");
    if (has_f1) {
        auto f1 = table_from_json(j["f1"], lang.domain_size, "f1");
        auto f2 = table_from_json(j["f2"], lang.domain_size, "f2");
        if (f1.arity != 3 || f2.arity != 4)
            throw ParseError("language: f1 must be ternary and f2 4-ary");
        lang.witness = WitnessPair{std::move(f1), std::move(f2)};
    }
    return lang;
}

std::string serialize_language(const ConstraintLanguage& language) {
    json j;
    j["domain_size"] = language.domain_size;
    j["relations"] = json::object();
    for (const auto& [name, rel] : language.relations) j["relations"][name] = relation_to_json(rel);
    if (language.witness) {
        j["f1"] = language.witness->f1.table;
        j["f2"] = language.witness->f2.table;
    } else {
        j["f1"] = nullptr;
        j["f2"] = nullptr;
    }
    return j.dump(2);
}

SDPVectors parse_vectors(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what());
    }
    int dimension = must_get(j, "dimension", "vectors").get<int>();
    json vj = must_get(j, "vectors", "vectors");
    int max_var = -1, max_val = -1;
    for (const auto& [key, arr] : vj.items()) {
        auto colon = key.find(':');
        if (colon == std::string::npos)
            throw ParseError("vectors: key '" + key + "' is not of the form <var>:<val>");
        max_var = std::max(max_var, std::stoi(key.substr(0, colon)));
        max_val = std::max(max_val, std::stoi(key.substr(colon + 1)));
    }
    if (max_var < 0) throw ParseError("vectors: empty vector map");
    SDPVectors vectors(max_var + 1, max_val + 1, dimension);
    std::vector<char> seen(static_cast<std::size_t>(max_var + 1) * (max_val + 1), 0);
    for (const auto& [key, arr] : vj.items()) {
        auto colon = key.find(':');
        int var = std::stoi(key.substr(0, colon));
        int val = std::stoi(key.substr(colon + 1));
        auto values = arr.get<std::vector<double>>();
        if (static_cast<int>(values.size()) != dimension)
            throw ParseError("vectors: entry '" + key + "' has the wrong dimension");
        for (int i = 0; i < dimension; ++i) vectors.vec(var, val)[i] = values[i];
        seen[static_cast<std::size_t>(var) * (max_val + 1) + val] = 1;
    }
    for (std::size_t i = 0; i < seen.size(); ++i)
        if (!seen[i]) throw ParseError("vectors: missing entry for some (variable, value) pair");
    return vectors;
}

std::string serialize_vectors(const SDPVectors& vectors) {
    std::ostringstream os;
    os << "{\n  \"dimension\": " << vectors.dimension() << ",\n  \"vectors\": {";
    bool first = true;
    for (int x = 0; x < vectors.num_variables(); ++x) {
        for (int a = 0; a < vectors.domain_size(); ++a) {
            if (!first) os << ',';
            first = false;
            os << "\n    \"" << x << ':' << a << "\": [";
            const auto& v = vectors.vec(x, a);
            for (int i = 0; i < v.size(); ++i) {
                if (i) os << ", ";
                os << format_real(v[i]);
            }
            os << ']';
        }
    }
    os << "\n  }\n}\n";
    return os.str();
}

PragueInstance parse_prague(const std::string& text) {
    Instance raw = parse_instance(text);
    PragueInstance prague(raw.num_variables, raw.domain_size);
    for (std::size_t ci = 0; ci < raw.constraints.size(); ++ci) {
        const auto& c = raw.constraints[ci];
        if (c.relation.arity != 2)
            throw ParseError("constraint " + std::to_string(ci) + ": scopes must be pairs");
        int x = c.scope[0], y = c.scope[1];
        if (x == y)
            throw ParseError("constraint " + std::to_string(ci) + ": repeated-variable scope");
        BinaryRel rel = BinaryRel::from_relation(c.relation, raw.domain_size);
        if (prague.has_scope(x, y)) {
            if (!(prague.relation(x, y) == rel))
                throw ParseError("constraint " + std::to_string(ci) +
                                 ": scope appears twice with different relations");
        } else {
            prague.set_relation(x, y, rel);
        }
    }
    return prague;
}

std::string serialize_prague(const PragueInstance& prague) {
    Instance raw;
    raw.num_variables = prague.num_variables();
    raw.domain_size = prague.domain_size();
    for (auto [x, y] : prague.scopes())
        raw.constraints.push_back({{x, y}, prague.relation(x, y).to_relation()});
    return serialize_instance(raw);
}

nlohmann::json verdict_to_json(const PragueVerdict& verdict) {
    nlohmann::json j;
    j["status"] = verdict.pass() ? "pass" : "fail";
    if (!verdict.pass()) {
        j["axiom"] = verdict.axiom();
        j["witness"] = verdict.witness;
    }
    return j;
}

nlohmann::json feasibility_to_json(const FeasibilityReport& report) {
    nlohmann::json j;
    j["sdp1"] = report.sdp1;
    j["sdp2"] = report.sdp2;
    j["sdp3_sum_mismatch"] = report.sdp3_sum_mismatch;
    j["sdp3_norm"] = report.sdp3_norm;
    j["max_residual"] = report.max_residual();
    j["tol"] = report.tol;
    j["pass"] = report.pass();
    return j;
}

nlohmann::json report_to_json(const RoundingReport& report) {
    nlohmann::json j;
    j["n"] = report.n;
    j["r"] = report.r;
    j["s"] = report.s;
    j["seed"] = report.seed;
    j["mode"] = report.mode;
    j["generator"] = report.generator;
    j["hyperplane_count"] = report.hyperplane_count;
    j["hyperplanes_used"] = report.hyperplanes_used;
    j["m"] = report.m;
    j["removed"] = {{"step2", report.removed_step2}, {"step3", report.removed_step3},
                    {"step5", report.removed_step5}, {"step7", report.removed_step7},
                    {"step8", report.removed_step8}};
    j["retained"] = report.retained;
    j["removed_fraction"] = report.removed_fraction();
    j["v0_size"] = report.v0_size;
    j["j_verdict"] = report.j_verdict;
    j["j_closed_verdict"] = report.j_closed_verdict;
    if (!report.warning.empty()) j["warning"] = report.warning;
    j["satisfies_all_retained"] = report.satisfies_all_retained;
    j["value"] = {{"num", report.achieved_value.num}, {"den", report.achieved_value.den},
                  {"ratio", report.achieved_value.to_double()}};
    if (report.mode.rfind("derandomized", 0) == 0) {
        j["estimator_initial"] = report.estimator_initial;
        j["estimator_final"] = report.estimator_final;
        j["estimator_max_increase"] = report.estimator_max_increase;
        j["pool_size"] = report.pool_size;
        j["pool_seed"] = report.pool_seed;
    }
    j["milliseconds"] = report.milliseconds;
    return j;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write file: " + path);
    out << content;
}

}  // namespace rcsp
