#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rcsp/instance.hpp"
#include "rcsp/language.hpp"
#include "rcsp/rounding.hpp"
#include "rcsp/sdp.hpp"

namespace rcsp {

struct RobustRunConfig {
    std::optional<int> level;          // overrides choose_level
    RoundingMode mode{RoundingMode::randomized};
    std::uint64_t seed{1};
    std::optional<double> delta;       // SDP precision; default 1/m
    double eta_feas{1e-10};            // solver feasibility target
    double tau{1e-9};
    bool binarize{false};
    bool exact_first{true};            // try the exact decision path first
    std::optional<std::string> vectors_path;  // precomputed vectors, bypasses the solver
    RoundingOptions rounding;
};

struct RobustRunResult {
    std::string path;  // "exact" or "rounding"
    Assignment assignment;
    Fraction value{0, 1};
    double sdp_objective{0};
    FeasibilityReport sdp_feasibility;
    LevelChoice level;
    RoundingReport rounding;           // meaningful on the rounding path
    // --binarize bookkeeping: value on the block instance and the lift bound
    std::optional<Fraction> binarized_value;
    bool lift_bound_ok{true};
};

/// Orchestration shared by the CLI and the test suites: exact decision first
/// (bounded-width search), otherwise SDP at precision delta, level selection,
/// and randomized or derandomized rounding. With `binarize` the pipeline runs
/// on the block instance and lifts the assignment back.
RobustRunResult run_robust(const Instance& instance, const ConstraintLanguage& language,
                           const RobustRunConfig& config);

/// Solver-or-file vector acquisition honoring the tolerance contract
/// (residuals <= n^{-4r-4}/10 for every admissible r at the requested level).
SDPVectors obtain_vectors(const Instance& instance, const RobustRunConfig& config);

struct BenchRow {
    std::string language_name;
    int num_vars{0};
    std::size_t m{0};
    double epsilon{0};
    int level{0};
    std::string mode;
    std::uint64_t seed{0};
    std::string path;
    double sdp_objective{0};
    RoundingReport report;
    double value{0};
    double millis{0};
};

std::string bench_csv_header();
std::string bench_csv_row(const BenchRow& row);

}  // namespace rcsp
