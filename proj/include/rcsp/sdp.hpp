#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "rcsp/instance.hpp"

namespace rcsp {

/// Residuals of the vector-program constraints, measured on the Gram matrix of
/// a set of vectors:
///   SDP1: cross dot products are nonnegative       (residual = max(0, -min dot))
///   SDP2: same-variable vectors are orthogonal     (residual = max |<x_a, x_b>|, a != b)
///   SDP3: per-variable sums share one unit vector  (residual = max ||x_D - y_D||
///                                                    and max |  ||x_D||^2 - 1 |)
struct FeasibilityReport {
    double sdp1{0};
    double sdp2{0};
    double sdp3_sum_mismatch{0};
    double sdp3_norm{0};
    double tol{0};

    double max_residual() const;
    bool pass() const { return max_residual() <= tol; }
};

/// One real vector per (variable, value) pair plus solve metadata.
class SDPVectors {
public:
    SDPVectors() = default;
    SDPVectors(int num_variables, int domain_size, int dimension);

    int num_variables() const { return num_variables_; }
    int domain_size() const { return domain_size_; }
    int dimension() const { return dimension_; }

    Eigen::VectorXd& vec(int var, int val) { return vecs_[var * domain_size_ + val]; }
    const Eigen::VectorXd& vec(int var, int val) const { return vecs_[var * domain_size_ + val]; }

    /// x_A = sum over a in A of x_a; A given as a bitmask.
    Eigen::VectorXd subset_vector(int var, unsigned mask) const;

    double objective{0};       // value of the relaxation sum on these vectors
    bool converged{true};      // false when the iteration cap was hit
    int iterations{0};
    double eigenvalue_clip{0}; // magnitude of the most negative clipped eigenvalue

private:
    int num_variables_{0};
    int domain_size_{0};
    int dimension_{0};
    std::vector<Eigen::VectorXd> vecs_;
};

/// The relaxation model for an at-most-binary instance: a Gram-matrix index
/// map, the objective coefficient matrix (unary constraints contribute
/// ||x_a||^2 for a in R, binary ones <x_a, y_b> for (a,b) in R, scaled by
/// 1/m), and the SDP1-SDP3 constraint structure.
struct SDPModel {
    int num_variables{0};
    int domain_size{0};
    int gram_size{0};  // |V| * |D|
    Eigen::MatrixXd objective;  // symmetric coefficient matrix C
    const Instance* instance{nullptr};

    int row(int var, int val) const { return var * domain_size + val; }
};

SDPModel build_sdp(const Instance& instance);

struct SdpOptions {
    double feasibility_target = 1e-12;  // entry-level residual aimed for
    int max_iterations = 20000;
    int polish_iterations = 4000;
    double rho = 1.0;
    double over_relaxation = 1.6;
};

/// Solves the relaxation to additive objective precision delta by an
/// operator-splitting scheme on the Gram matrix: alternating projection onto
/// the per-block simplex constraints (SDP1-SDP3) and onto the positive
/// semidefinite cone restricted to the common-sum subspace, with
/// over-relaxation and a scaled dual ascent on the objective. Deterministic:
/// no randomness, fixed iteration order. On hitting the iteration cap the
/// best iterate is returned with `converged = false`.
SDPVectors solve_sdp(const SDPModel& model, double delta, const SdpOptions& options = {});

FeasibilityReport check_sdp_feasibility(const SDPVectors& vectors, double tol);

struct LPValues {
    std::vector<Eigen::VectorXd> lambda_var;       // per variable, size |D|
    std::vector<Eigen::MatrixXd> lambda_pair;      // per binary constraint, |D| x |D|
    std::vector<int> pair_constraint_index;        // constraint index per entry above
    double objective{0};
    bool valid{true};
    std::vector<std::string> violations;
};

/// Linear-programming values read off the vectors: lambda_x(a) = ||x_a||^2 and
/// lambda_{(x,y)}(a,b) = <x_a, y_b>. Validates unit mass per variable and
/// marginal consistency within tol.
LPValues lp_from_sdp(const SDPVectors& vectors, const Instance& instance, double tol = 1e-8);

/// Exactly feasible vectors encoding an assignment: x_{F(x)} is one shared
/// unit axis, every other vector is zero. Objective equals value(F).
SDPVectors integral_embedding(const Instance& instance, const Assignment& assignment);

}  // namespace rcsp
