#include "rcsp/sdp.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace rcsp {

double FeasibilityReport::max_residual() const {
    return std::max({sdp1, sdp2, sdp3_sum_mismatch, sdp3_norm});
}

SDPVectors::SDPVectors(int num_variables, int domain_size, int dimension)
    : num_variables_(num_variables), domain_size_(domain_size), dimension_(dimension),
      vecs_(static_cast<std::size_t>(num_variables) * domain_size,
            Eigen::VectorXd::Zero(dimension)) {}

Eigen::VectorXd SDPVectors::subset_vector(int var, unsigned mask) const {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(dimension_);
    for (int a = 0; a < domain_size_; ++a)
        if (mask >> a & 1) sum += vec(var, a);
    return sum;
}

SDPModel build_sdp(const Instance& instance) {
    instance.validate();
    if (instance.degenerate()) throw DegenerateInstanceError("relaxation needs m >= 1");

    SDPModel model;
    model.num_variables = instance.num_variables;
    model.domain_size = instance.domain_size;
    model.gram_size = instance.num_variables * instance.domain_size;
    model.instance = &instance;
    model.objective = Eigen::MatrixXd::Zero(model.gram_size, model.gram_size);

    const double w = 1.0 / static_cast<double>(instance.m());
    for (std::size_t ci = 0; ci < instance.constraints.size(); ++ci) {
        const auto& c = instance.constraints[ci];
        if (c.relation.arity > 2)
            throw Error("constraint " + std::to_string(ci) +
                        ": the relaxation only accepts unary and binary constraints");
        if (c.relation.arity == 2 && c.scope[0] == c.scope[1])
            throw Error("constraint " + std::to_string(ci) +
                        ": repeated variable in a binary scope is not supported");
        if (c.relation.arity == 1) {
            for (const auto& t : c.relation.tuples) {
                int i = model.row(c.scope[0], t[0]);
                model.objective(i, i) += w;
            }
        } else {
            for (const auto& t : c.relation.tuples) {
                int i = model.row(c.scope[0], t[0]);
                int j = model.row(c.scope[1], t[1]);
                model.objective(i, j) += w / 2;
                model.objective(j, i) += w / 2;
            }
        }
    }
    return model;
}

namespace {

/// Euclidean projection of v onto the probability simplex {w >= 0, sum w = 1}.
void project_simplex(Eigen::Ref<Eigen::VectorXd> v) {
    const int n = static_cast<int>(v.size());
    std::vector<double> u(v.data(), v.data() + n);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cum = 0, theta = 0;
    int support = 0;
    for (int i = 0; i < n; ++i) {
        cum += u[i];
        double candidate = (cum - 1.0) / (i + 1);
        if (u[i] - candidate > 0) {
            support = i + 1;
            theta = candidate;
        }
    }
    (void)support;
    for (int i = 0; i < n; ++i) v[i] = std::max(0.0, v[i] - theta);
}

/// Exact projection onto the entrywise constraint set: same-variable
/// off-diagonals vanish, the diagonal of each variable block and every
/// cross-variable block lie on the probability simplex.
void project_entry_constraints(Eigen::MatrixXd& m, int nv, int d) {
    Eigen::VectorXd buffer(d * d);
    for (int x = 0; x < nv; ++x) {
        // diagonal block
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b)
                if (a != b) m(x * d + a, x * d + b) = 0.0;
        Eigen::VectorXd diag(d);
        for (int a = 0; a < d; ++a) diag[a] = m(x * d + a, x * d + a);
        project_simplex(diag);
        for (int a = 0; a < d; ++a) m(x * d + a, x * d + a) = diag[a];

        for (int y = x + 1; y < nv; ++y) {
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b)
                    buffer[a * d + b] = 0.5 * (m(x * d + a, y * d + b) + m(y * d + b, x * d + a));
            project_simplex(buffer);
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) {
                    m(x * d + a, y * d + b) = buffer[a * d + b];
                    m(y * d + b, x * d + a) = buffer[a * d + b];
                }
        }
    }
}

/// Orthonormal basis of the complement of span{1_x - 1_y}: the common-sum
/// directions every feasible Gram matrix annihilates.
Eigen::MatrixXd reduced_basis(int nv, int d) {
    const int n = nv * d;
    if (nv <= 1) return Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd null_basis = Eigen::MatrixXd::Zero(n, nv - 1);
    for (int x = 1; x < nv; ++x) {
        for (int a = 0; a < d; ++a) {
            null_basis(a, x - 1) = 1.0;           // block of variable 0
            null_basis(x * d + a, x - 1) = -1.0;  // block of variable x
        }
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(null_basis);
    Eigen::MatrixXd q = qr.householderQ();
    return q.rightCols(n - (nv - 1));
}

struct PsdProjector {
    const Eigen::MatrixXd& basis;  // columns orthonormal, span excludes the null directions
    double last_clip{0};

    Eigen::MatrixXd operator()(const Eigen::MatrixXd& m) {
        Eigen::MatrixXd reduced = basis.transpose() * m * basis;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(reduced);
        Eigen::VectorXd lambda = eig.eigenvalues();
        last_clip = std::max(0.0, -lambda.minCoeff());
        for (int i = 0; i < lambda.size(); ++i) lambda[i] = std::max(0.0, lambda[i]);
        Eigen::MatrixXd half = eig.eigenvectors() * lambda.asDiagonal() *
                               eig.eigenvectors().transpose();
        return basis * half * basis.transpose();
    }
};

double entry_residual(const Eigen::MatrixXd& m, int nv, int d) {
    double worst = 0;
    for (int x = 0; x < nv; ++x) {
        double diag_sum = 0;
        for (int a = 0; a < d; ++a) {
            diag_sum += m(x * d + a, x * d + a);
            for (int b = 0; b < d; ++b) {
                if (a != b) worst = std::max(worst, std::abs(m(x * d + a, x * d + b)));
            }
        }
        worst = std::max(worst, std::abs(diag_sum - 1.0));
        for (int y = x + 1; y < nv; ++y) {
            double block_sum = 0;
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) {
                    double v = m(x * d + a, y * d + b);
                    block_sum += v;
                    if (v < 0) worst = std::max(worst, -v);
                }
            worst = std::max(worst, std::abs(block_sum - 1.0));
        }
    }
    return worst;
}

/// Relative-interior feasible point: cross weights 1/d^2, marginals 1/d.
Eigen::MatrixXd uniform_feasible(int nv, int d) {
    const int n = nv * d;
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(n, n, 1.0 / (d * d));
    for (int x = 0; x < nv; ++x)
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b)
                m(x * d + a, x * d + b) = (a == b) ? 1.0 / d : 0.0;
    return m;
}

}  // namespace

SDPVectors solve_sdp(const SDPModel& model, double delta, const SdpOptions& options) {
    if (delta <= 0) throw Error("precision delta must be positive");
    const int nv = model.num_variables;
    const int d = model.domain_size;
    const int n = model.gram_size;

    Eigen::MatrixXd basis = reduced_basis(nv, d);
    PsdProjector psd{basis};

    Eigen::MatrixXd z = uniform_feasible(nv, d);
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd m_iter, m_relaxed, z_prev;

    double rho = options.rho;
    const double alpha = options.over_relaxation;
    double objective = (model.objective.array() * z.array()).sum();
    double stall_reference = objective;
    bool converged = false;
    int iter = 0;

    for (; iter < options.max_iterations; ++iter) {
        m_iter = z - u + model.objective / rho;
        project_entry_constraints(m_iter, nv, d);
        m_relaxed = alpha * m_iter + (1 - alpha) * z;
        z_prev = z;
        z = psd(m_relaxed + u);
        u += m_relaxed - z;

        if (iter % 25 == 24) {
            double r_prim = (m_iter - z).norm() / n;
            double r_dual = rho * (z - z_prev).norm() / n;
            objective = (model.objective.array() * z.array()).sum();
            if (r_prim < 2e-12 && r_dual < 2e-12 &&
                std::abs(objective - stall_reference) < delta * 1e-3) {
                converged = true;
                break;
            }
            stall_reference = objective;
            if (iter % 50 == 49) {
                if (r_prim > 10 * r_dual) {
                    rho *= 2;
                    u /= 2;
                } else if (r_dual > 10 * r_prim) {
                    rho /= 2;
                    u *= 2;
                }
                rho = std::clamp(rho, 1e-6, 1e6);
            }
        }
    }

    // feasibility polish: plain alternating projections have no objective pull
    // and drive the entry residuals to machine level
    Eigen::MatrixXd w = z;
    for (int i = 0; i < options.polish_iterations; ++i) {
        project_entry_constraints(w, nv, d);
        w = psd(w);
        if (i % 10 == 9 && entry_residual(w, nv, d) < options.feasibility_target / 10) break;
    }
    project_entry_constraints(w, nv, d);

    // extraction in the reduced space keeps the common-sum identity exact
    Eigen::MatrixXd reduced = basis.transpose() * w * basis;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(reduced);
    Eigen::VectorXd lambda = eig.eigenvalues();
    double clip = std::max(0.0, -lambda.minCoeff());
    for (int i = 0; i < lambda.size(); ++i) lambda[i] = std::sqrt(std::max(0.0, lambda[i]));
    Eigen::MatrixXd factors = basis * (eig.eigenvectors() * lambda.asDiagonal());

    const int dim = static_cast<int>(factors.cols());
    SDPVectors vectors(nv, d, dim);
    for (int x = 0; x < nv; ++x)
        for (int a = 0; a < d; ++a) vectors.vec(x, a) = factors.row(x * d + a).transpose();

    // normalize the common sum to exactly unit length
    Eigen::VectorXd common = vectors.subset_vector(0, (1u << d) - 1);
    double scale = common.norm();
    if (scale > 0.5) {
        for (int x = 0; x < nv; ++x)
            for (int a = 0; a < d; ++a) vectors.vec(x, a) /= scale;
    }

    double obj = 0;
    for (const auto& c : model.instance->constraints) {
        if (c.relation.arity == 1) {
            for (const auto& t : c.relation.tuples)
                obj += vectors.vec(c.scope[0], t[0]).squaredNorm();
        } else {
            for (const auto& t : c.relation.tuples)
                obj += vectors.vec(c.scope[0], t[0]).dot(vectors.vec(c.scope[1], t[1]));
        }
    }
    vectors.objective = obj / static_cast<double>(model.instance->m());
    vectors.converged = converged;
    vectors.iterations = iter;
    vectors.eigenvalue_clip = clip;
    return vectors;
}

FeasibilityReport check_sdp_feasibility(const SDPVectors& vectors, double tol) {
    FeasibilityReport report;
    report.tol = tol;
    const int nv = vectors.num_variables();
    const int d = vectors.domain_size();

    double min_dot = 0;
    for (int x = 0; x < nv; ++x)
        for (int y = x + 1; y < nv; ++y)
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b)
                    min_dot = std::min(min_dot, vectors.vec(x, a).dot(vectors.vec(y, b)));
    report.sdp1 = std::max(0.0, -min_dot);

    for (int x = 0; x < nv; ++x)
        for (int a = 0; a < d; ++a)
            for (int b = a + 1; b < d; ++b)
                report.sdp2 = std::max(report.sdp2,
                                       std::abs(vectors.vec(x, a).dot(vectors.vec(x, b))));

    const unsigned full = (1u << d) - 1;
    std::vector<Eigen::VectorXd> sums;
    for (int x = 0; x < nv; ++x) sums.push_back(vectors.subset_vector(x, full));
    for (int x = 0; x < nv; ++x) {
        report.sdp3_norm = std::max(report.sdp3_norm, std::abs(sums[x].squaredNorm() - 1.0));
        for (int y = x + 1; y < nv; ++y)
            report.sdp3_sum_mismatch =
                std::max(report.sdp3_sum_mismatch, (sums[x] - sums[y]).norm());
    }
    return report;
}

LPValues lp_from_sdp(const SDPVectors& vectors, const Instance& instance, double tol) {
    LPValues lp;
    const int d = vectors.domain_size();
    for (int x = 0; x < vectors.num_variables(); ++x) {
        Eigen::VectorXd lam(d);
        for (int a = 0; a < d; ++a) lam[a] = vectors.vec(x, a).squaredNorm();
        if (std::abs(lam.sum() - 1.0) > tol) {
            lp.valid = false;
            lp.violations.push_back("unit mass violated at variable " + std::to_string(x) +
                                    " (sum " + std::to_string(lam.sum()) + ")");
        }
        lp.lambda_var.push_back(std::move(lam));
    }

    double obj = 0;
    for (std::size_t ci = 0; ci < instance.constraints.size(); ++ci) {
        const auto& c = instance.constraints[ci];
        if (c.relation.arity == 1) {
            for (const auto& t : c.relation.tuples) obj += lp.lambda_var[c.scope[0]][t[0]];
            continue;
        }
        int x = c.scope[0], y = c.scope[1];
        Eigen::MatrixXd lam(d, d);
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) lam(a, b) = vectors.vec(x, a).dot(vectors.vec(y, b));
        for (int a = 0; a < d; ++a) {
            if (std::abs(lam.row(a).sum() - lp.lambda_var[x][a]) > tol) {
                lp.valid = false;
                lp.violations.push_back("marginal of constraint " + std::to_string(ci) +
                                        " disagrees with variable " + std::to_string(x) +
                                        " at value " + std::to_string(a));
            }
            if (std::abs(lam.col(a).sum() - lp.lambda_var[y][a]) > tol) {
                lp.valid = false;
                lp.violations.push_back("marginal of constraint " + std::to_string(ci) +
                                        " disagrees with variable " + std::to_string(y) +
                                        " at value " + std::to_string(a));
            }
        }
        for (const auto& t : c.relation.tuples) obj += lam(t[0], t[1]);
        lp.lambda_pair.push_back(std::move(lam));
        lp.pair_constraint_index.push_back(static_cast<int>(ci));
    }
    lp.objective = obj / static_cast<double>(instance.m());
    return lp;
}

SDPVectors integral_embedding(const Instance& instance, const Assignment& assignment) {
    SDPVectors vectors(instance.num_variables, instance.domain_size, 1);
    for (int x = 0; x < instance.num_variables; ++x) {
        vectors.vec(x, assignment[x])[0] = 1.0;
    }
    double obj = 0;
    if (!instance.degenerate())
        obj = value(instance, assignment).to_double();
    vectors.objective = obj;
    return vectors;
}

}  // namespace rcsp
