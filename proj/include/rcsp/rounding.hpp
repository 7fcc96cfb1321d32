#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rcsp/instance.hpp"
#include "rcsp/language.hpp"
#include "rcsp/prague.hpp"
#include "rcsp/sdp.hpp"

namespace rcsp {

/// Integer division convention used for layer indices: gamma div psi is the
/// greatest integer i with gamma - i*psi > 0 (boundaries are half-open from
/// above).
long paper_div(double gamma, double psi);

struct LevelChoice {
    double omega{0};
    int formula_n{2};   // floor(log2 w / (4 log2 log2 w)) before clamping
    int n{2};           // after clamping to n >= max(2, |D|+1)
    bool clamped{false};
    bool guarantee_ok{false};  // v >= 1 - 1/n^{4n} for the returned n
    std::string warning;
};

/// Level selection: omega = min{1/(1-v), m} (infinite first term when v = 1),
/// n = floor(log2 omega / (4 log2 log2 omega)), clamped up to |D|+1 (the core
/// rounding assumes n > |D|) with a warning.
LevelChoice choose_level(double v, std::int64_t m, int domain_size);

enum class RoundingMode { randomized, derandomized };

struct RoundingParams {
    int n{2};
    int r{1};
    double s{0};
    double u1{0}, u2{0};
    std::uint64_t seed{0};
    RoundingMode mode{RoundingMode::randomized};
    std::vector<Eigen::VectorXd> hyperplanes;

    double gap_low() const;    // n^{-4r-4}
    double gap_high() const;   // n^{-4r}
    long block(double norm_sq) const { return paper_div(norm_sq - s, u2); }
    /// Number of hyperplanes consulted for a vector in the given layer;
    /// c = pi when randomized, 4 when derandomized.
    int t_count(long block_index) const;
    int t_of(double norm_sq) const { return t_count(block(norm_sq)); }

    static double hyperplane_constant(RoundingMode mode);
    /// ceil(c * log2(n) * n^{2n})
    static std::int64_t nominal_hyperplane_count(int n, RoundingMode mode);
    static void fill_params(RoundingParams& p, int domain_size);  // u1, u2 from n, r
};

struct RoundingReport {
    int n{2}, r{1};
    double s{0};
    std::uint64_t seed{0};
    std::string mode;
    std::string generator;  // RNG description for replay
    std::int64_t hyperplane_count{0};
    std::int64_t hyperplanes_used{0};  // truncated to the largest t horizon

    std::size_t m{0};
    std::size_t removed_step2{0}, removed_step3{0}, removed_step5{0};
    std::size_t removed_step7{0}, removed_step8{0};
    std::size_t retained{0};
    std::size_t v0_size{0};

    std::string j_verdict, j_closed_verdict;
    std::string warning;
    bool satisfies_all_retained{false};
    Fraction achieved_value{0, 1};
    double removed_fraction() const {
        return m == 0 ? 0.0 : 1.0 - static_cast<double>(retained) / static_cast<double>(m);
    }

    // derandomization diagnostics
    double estimator_initial{0}, estimator_final{0};
    double estimator_max_increase{0};  // max over steps of E_{i+1} - E_i
    std::int64_t pool_size{0};
    std::uint64_t pool_seed{0};

    double milliseconds{0};
};

/// Constraint indices retained after the threshold pruning steps: step 2 drops
/// constraints with any weight inside the gap [n^{-4r-4}, n^{-4r}), step 3
/// those with weight >= n^{-4r} outside the relation, step 5 binary
/// constraints with subset vectors of nearly equal length in different layers.
struct PruneResult {
    std::vector<int> retained;
    std::size_t removed_step2{0}, removed_step3{0}, removed_step5{0};
};

PruneResult prune(const Instance& instance, const SDPVectors& vectors,
                  const RoundingParams& params);

/// Steps 7 and 8: drop constraints at uncut variables (two distinct same-layer
/// subset vectors never separated within their hyperplane budget) and binary
/// constraints whose almost-the-same subset vectors get separated.
struct HyperplaneResult {
    std::vector<int> retained;
    std::size_t removed_step7{0}, removed_step8{0};
    std::vector<int> uncut_variables;
};

HyperplaneResult hyperplane_phase(const Instance& instance, const SDPVectors& vectors,
                                  const std::vector<int>& retained,
                                  const RoundingParams& params);

/// The thresholded instance on the retained scopes: P_{x,y} keeps pairs with
/// weight >= n^{-4r}, variables are those covered by a retained constraint.
/// Asserts nonempty P_x on the covered variables and 1-minimality of the
/// result; a failure signals a tolerance breach and throws PipelineError.
struct BuildJResult {
    PragueInstance prague;                 // over the binary-covered variables, reindexed
    std::vector<int> prague_vars;          // prague index -> original variable
    std::vector<int> v0;                   // covered variables, ascending
    std::vector<ValueSet> p_x;             // threshold set per variable (all variables)
};

BuildJResult build_J(const Instance& instance, const SDPVectors& vectors,
                     const std::vector<int>& retained, const RoundingParams& params);

/// Walk dichotomy behind the pattern axioms: for a step (x,y) of J and
/// nonempty A within P_x with B = A + (x,y), either block(y_B) > block(x_A),
/// or x_A and y_B are almost the same and B + (y,x) = A.
struct WalkCheckResult {
    bool pass{true};
    std::string witness;
};

/// prague_vars maps prague variable indices to vector variable indices.
WalkCheckResult check_walk_dichotomy(const PragueInstance& prague,
                                     const std::vector<int>& prague_vars,
                                     const SDPVectors& vectors, const RoundingParams& params);

struct RobustResult {
    Assignment assignment;
    RoundingReport report;
};

struct RoundingOptions {
    std::int64_t pool_size{0};     // derandomized candidate pool; 0 = 64 * n^{2n}
    bool full_sweep{false};        // solve J' for every (r, s) instead of the best bound
    double feasibility_margin{10}; // residuals must be <= n^{-4r-4} / margin
};

/// Randomized rounding: threshold pruning, layered hyperplane cutting,
/// thresholded instance, closure under the witness operations, and a
/// local-consistency solve of the closed instance. Variables outside the
/// retained part are assigned their heaviest value. The returned assignment
/// satisfies every retained constraint.
RobustResult robust_round(const Instance& instance, const SDPVectors& vectors, int n,
                          std::uint64_t seed, const std::vector<OperationTable>& ops,
                          const RoundingOptions& options = {});

/// Deterministic variant: exhausts r and a discretized s, selects hyperplanes
/// greedily from a seeded candidate pool so that the pessimistic estimator sum
/// never increases, and returns the best run. Bitwise reproducible for a fixed
/// pool seed.
RobustResult derandomized_round(const Instance& instance, const SDPVectors& vectors, int n,
                                const std::vector<OperationTable>& ops, std::uint64_t pool_seed,
                                const RoundingOptions& options = {});

}  // namespace rcsp
