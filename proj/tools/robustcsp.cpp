// Command-line surface for the robust CSP toolkit: exact solving, the
// SDP-based robust pipeline, instance/vector verification, and a benchmark
// sweep over planted instances.

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "rcsp/algebra.hpp"
#include "rcsp/consistency.hpp"
#include "rcsp/generator.hpp"
#include "rcsp/json_io.hpp"
#include "rcsp/pipeline.hpp"
#include "rcsp/prague.hpp"

using namespace rcsp;
using json = nlohmann::json;

namespace {

int cmd_solve(const std::string& instance_path, const std::string& language_path,
              const std::string& out_path) {
    Instance instance = parse_instance(read_file(instance_path));
    ConstraintLanguage language = parse_language(read_file(language_path));
    if (!language.witness) {
        std::cerr << "error: the language file carries no witness pair; add f1/f2 tables "
                     "(search is available for Boolean domains via the library)\n";
        return 2;
    }
    if (!language.singleton_expanded()) language = singleton_expand(language);

    auto solution = solve_bounded_width(instance, language);
    if (!solution) {
        std::cout << "unsatisfiable\n";
        return 1;
    }
    std::string payload = serialize_assignment(*solution);
    if (!out_path.empty())
        write_file(out_path, payload);
    else
        std::cout << payload << '\n';
    std::cerr << "value: " << value(instance, *solution).to_double() << '\n';
    return 0;
}

int cmd_robust(const std::string& instance_path, const std::string& language_path,
               const RobustRunConfig& config, const std::string& out_path) {
    Instance instance = parse_instance(read_file(instance_path));
    ConstraintLanguage language = parse_language(read_file(language_path));

    RobustRunResult result = run_robust(instance, language, config);

    json j;
    j["path"] = result.path;
    j["value"] = result.value.to_double();
    j["assignment"] = result.assignment;
    if (result.path == "rounding") {
        j["sdp_objective"] = result.sdp_objective;
        j["sdp_feasibility"] = feasibility_to_json(result.sdp_feasibility);
        j["level"] = {{"n", config.level ? *config.level : result.level.n},
                      {"formula_n", result.level.formula_n},
                      {"omega", result.level.omega},
                      {"clamped", result.level.clamped},
                      {"guarantee_ok", result.level.guarantee_ok}};
        if (!result.level.warning.empty()) j["level"]["warning"] = result.level.warning;
        j["rounding"] = report_to_json(result.rounding);
    }
    if (result.binarized_value)
        j["binarized_value"] = result.binarized_value->to_double();

    std::string payload = j.dump(2);
    if (!out_path.empty())
        write_file(out_path, payload);
    else
        std::cout << payload << '\n';
    return 0;
}

int cmd_verify(const std::string& prague_path, const std::string& vectors_path, bool extend,
               double tau, const std::string& out_path) {
    json j;
    PragueInstance prague(1, 1);
    bool have_prague = false;

    if (!vectors_path.empty()) {
        SDPVectors vectors = parse_vectors(read_file(vectors_path));
        auto feas = check_sdp_feasibility(vectors, 1e-12);
        j["feasibility"] = feasibility_to_json(feas);
        prague = sdp_to_prague(vectors, tau);
        have_prague = true;
    }
    if (!prague_path.empty()) {
        prague = parse_prague(read_file(prague_path));
        have_prague = true;
    }
    if (!have_prague) {
        std::cerr << "error: verify needs --prague or --vectors\n";
        return 2;
    }

    auto verdict = verify_weak_prague(prague);
    j["weak_prague"] = verdict_to_json(verdict);

    if (extend) {
        auto failures = check_23_extendability(prague);
        json fj = json::array();
        for (const auto& f : failures)
            fj.push_back({{"x", f.x}, {"y", f.y}, {"z", f.z}, {"a", f.a}, {"b", f.b}});
        j["extendability_failures"] = fj;
    }

    std::string payload = j.dump(2);
    if (!out_path.empty())
        write_file(out_path, payload);
    else
        std::cout << payload << '\n';
    return 0;
}

int cmd_bench(const std::string& language_path, const std::string& language_name,
              std::vector<std::size_t> ms, std::vector<double> epsilons, std::vector<int> levels,
              int seeds, int num_vars, const std::string& mode_name, const std::string& out_path) {
    ConstraintLanguage language = parse_language(read_file(language_path));
    if (!language.witness) {
        std::cerr << "error: bench needs a language with a witness\n";
        return 2;
    }
    if (!language.singleton_expanded()) language = singleton_expand(language);

    std::ostringstream csv;
    csv << bench_csv_header() << '\n';

    struct Agg {
        double sum = 0, sum_sq = 0;
        int count = 0;
        void add(double v) {
            sum += v;
            sum_sq += v * v;
            ++count;
        }
        double mean() const { return count ? sum / count : 0; }
        double stddev() const {
            if (count < 2) return 0;
            double m = mean();
            return std::sqrt(std::max(0.0, sum_sq / count - m * m));
        }
    };

    auto aggregate_row = [&](const std::string& kind, std::size_t m, double eps, int level,
                             double removed, double value) {
        std::ostringstream os;
        os << "1," << language_name << ',' << num_vars << ',' << m << ',' << eps << ',' << level
           << ',' << mode_name << ',' << kind << ",,,,,,,,,,," << removed << ',' << value
           << ",,";
        return os.str();
    };

    for (std::size_t m : ms) {
        for (double eps : epsilons) {
            for (int level : levels) {
                Agg value_agg, removed_agg;
                for (int seed = 1; seed <= seeds; ++seed) {
                    auto t0 = std::chrono::steady_clock::now();
                    PlantResult plant = plant_and_corrupt(language, num_vars,
                                                          static_cast<int>(m), eps,
                                                          static_cast<std::uint64_t>(seed));
                    RobustRunConfig config;
                    config.level = level;
                    config.seed = static_cast<std::uint64_t>(seed);
                    config.mode = mode_name == "derandomized" ? RoundingMode::derandomized
                                                              : RoundingMode::randomized;
                    config.exact_first = false;
                    RobustRunResult result = run_robust(plant.instance, language, config);

                    BenchRow row;
                    row.language_name = language_name;
                    row.num_vars = num_vars;
                    row.m = m;
                    row.epsilon = eps;
                    row.level = level;
                    row.mode = mode_name;
                    row.seed = static_cast<std::uint64_t>(seed);
                    row.path = result.path;
                    row.sdp_objective = result.sdp_objective;
                    row.report = result.rounding;
                    row.value = result.value.to_double();
                    row.millis = std::chrono::duration<double, std::milli>(
                                     std::chrono::steady_clock::now() - t0)
                                     .count();
                    csv << bench_csv_row(row) << '\n';
                    value_agg.add(row.value);
                    removed_agg.add(row.report.removed_fraction());
                }
                csv << aggregate_row("mean", m, eps, level, removed_agg.mean(), value_agg.mean())
                    << '\n';
                csv << aggregate_row("stddev", m, eps, level, removed_agg.stddev(),
                                     value_agg.stddev())
                    << '\n';
            }
        }
    }

    if (!out_path.empty())
        write_file(out_path, csv.str());
    else
        std::cout << csv.str();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"robust approximation toolkit for bounded-width constraint satisfaction"};
    app.require_subcommand(1);

    std::string instance_path, language_path, out_path;
    std::string prague_path, vectors_path;

    auto* solve = app.add_subcommand("solve", "exact decision and solution search");
    solve->add_option("instance", instance_path, "instance JSON")->required();
    solve->add_option("language", language_path, "language JSON")->required();
    solve->add_option("--out", out_path, "assignment output path");

    auto* robust = app.add_subcommand("robust", "SDP relaxation and rounding pipeline");
    int level = 0;
    std::string mode = "randomized";
    std::uint64_t seed = 1;
    double delta = 0, eta = 1e-10, tau = 1e-9;
    bool do_binarize = false, no_exact = false;
    std::string robust_vectors;
    robust->add_option("instance", instance_path, "instance JSON")->required();
    robust->add_option("language", language_path, "language JSON")->required();
    robust->add_option("--level", level, "rounding level n (overrides the selection rule)");
    robust->add_option("--mode", mode, "randomized | derandomized")
        ->check(CLI::IsMember({"randomized", "derandomized"}));
    robust->add_option("--seed", seed, "rounding seed (pool seed when derandomized)");
    robust->add_option("--delta", delta, "SDP objective precision (default 1/m)");
    robust->add_option("--eta", eta, "SDP feasibility target");
    robust->add_option("--tau", tau, "threshold for vector-derived instances");
    robust->add_flag("--binarize", do_binarize, "reduce to at-most-binary constraints first");
    robust->add_flag("--no-exact", no_exact, "skip the exact decision path");
    robust->add_option("--vectors", robust_vectors, "precomputed vector file (skips the solver)");
    robust->add_option("--out", out_path, "report output path");

    auto* verify = app.add_subcommand("verify", "pattern-axiom and feasibility checks");
    bool extend = false;
    double verify_tau = 1e-9;
    verify->add_option("--prague", prague_path, "symmetric binary instance JSON");
    verify->add_option("--vectors", vectors_path, "vector file JSON");
    verify->add_flag("--extend", extend, "report pairs that fail triangle extendability");
    verify->add_option("--tau", verify_tau, "threshold for vector-derived instances");
    verify->add_option("--out", out_path, "verdict output path");

    auto* bench = app.add_subcommand("bench", "benchmark sweep over planted instances");
    std::vector<std::size_t> bench_ms{1000};
    std::vector<double> bench_eps{0.01};
    std::vector<int> bench_levels{2};
    int bench_seeds = 10, bench_vars = 40;
    std::string bench_name = "language";
    bench->add_option("language", language_path, "language JSON")->required();
    bench->add_option("--m", bench_ms, "constraint counts");
    bench->add_option("--eps", bench_eps, "corruption rates");
    bench->add_option("--levels", bench_levels, "rounding levels");
    bench->add_option("--seeds", bench_seeds, "seeds per grid point");
    bench->add_option("--vars", bench_vars, "variable count");
    bench->add_option("--name", bench_name, "language name for the CSV");
    bench->add_option("--mode", mode, "randomized | derandomized");
    bench->add_option("--out", out_path, "CSV output path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) return cmd_solve(instance_path, language_path, out_path);
        if (robust->parsed()) {
            RobustRunConfig config;
            if (level > 0) config.level = level;
            config.mode = mode == "derandomized" ? RoundingMode::derandomized
                                                 : RoundingMode::randomized;
            config.seed = seed;
            if (delta > 0) config.delta = delta;
            config.eta_feas = eta;
            config.tau = tau;
            config.binarize = do_binarize;
            config.exact_first = !no_exact;
            if (!robust_vectors.empty()) config.vectors_path = robust_vectors;
            return cmd_robust(instance_path, language_path, config, out_path);
        }
        if (verify->parsed())
            return cmd_verify(prague_path, vectors_path, extend, verify_tau, out_path);
        if (bench->parsed())
            return cmd_bench(language_path, bench_name, bench_ms, bench_eps, bench_levels,
                             bench_seeds, bench_vars, mode, out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
