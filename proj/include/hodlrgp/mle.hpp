#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "hodlrgp/factorization.hpp"
#include "hodlrgp/oracle.hpp"
#include "hodlrgp/sketch.hpp"

namespace hodlrgp {

/// Gaussian log-likelihood of y ~ N(ybar, K) with K given by its
/// factorization: -(n/2) log 2pi - logdet/2 - r^T K^{-1} r / 2.
double log_likelihood(const HodlrFactorization& f, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& ybar);

/// Score vector: S_j = -tr(K^{-1} K_j)/2 + r^T K^{-1} K_j K^{-1} r / 2.
/// f must be Left-oriented (exact trace path).
Eigen::VectorXd score(const HodlrFactorization& f, const std::vector<HodlrMatrix>& deriv,
                      const Eigen::VectorXd& y, const Eigen::VectorXd& ybar);

/// Fisher information: I_ij = tr(K^{-1} K_i K^{-1} K_j) / 2, symmetrized.
Eigen::MatrixXd fisher_information(const HodlrFactorization& f,
                                   const std::vector<HodlrMatrix>& deriv);

/// Stochastic cross-check of tr(K^{-1} B) with Rademacher probes.
struct HutchinsonResult {
    double estimate = 0;
    double std_error = 0;
};
HutchinsonResult hutchinson_trace(const HodlrFactorization& f, const HodlrMatrix& b,
                                  int n_samples, std::uint64_t seed);

/// Optimizer-side parameterization keeping iterates in the valid domain.
enum class ParamTransform {
    Positive,     // theta = exp(u)
    Correlation,  // theta = tanh(u), stays in (-1, 1)
    Unbounded,    // theta = u
};

struct GpProblem {
    CovarianceOracle& oracle;
    ClusterTree tree;
    Index k = 0;
    std::uint64_t sketch_seed = 0;
    Eigen::VectorXd y;
    Eigen::VectorXd ybar;  // empty means zero mean
    std::vector<ParamTransform> transforms;  // one per parameter
};

struct FitOptions {
    int max_iter = 100;
    double rel_tol = 1e-6;
    bool dense = false;  // exact dense evaluation path (small n only)
};

struct FitReport {
    Eigen::VectorXd theta_hat;
    int iterations = 0;
    bool converged = false;
    std::string status;
    std::vector<double> loglik_trace;
    std::vector<double> grad_norm_trace;
    std::vector<Eigen::VectorXd> theta_trace;
    Eigen::MatrixXd fisher;  // p x p at theta_hat
    Eigen::MatrixXd ci;      // p x 2 columns (lo, hi)
    bool ci_valid = false;
    std::uint64_t apply_columns = 0;
    std::uint64_t derivative_columns = 0;
    double seconds = 0;
};

/// BFGS on the transformed parameters with backtracking line search; the
/// sketch plan is fixed once, making the objective a deterministic smooth
/// function of theta. Non-positive-definite iterates trigger step halving
/// (up to 20) before failing.
FitReport fit_mle(GpProblem& problem, const Eigen::VectorXd& theta0,
                  const FitOptions& options = {});

/// theta_i +- z_{0.975} sqrt((I^{-1})_ii); flags invalid when the Fisher
/// matrix is not positive definite instead of fabricating intervals.
struct ConfidenceIntervals {
    Eigen::MatrixXd bounds;  // p x 2
    bool valid = false;
};
ConfidenceIntervals confidence_intervals(const Eigen::VectorXd& theta_hat,
                                         const Eigen::MatrixXd& fisher,
                                         double level = 0.95);

/// Exact dense likelihood/score/Fisher from an oracle (n <= 2^13 guard),
/// the reference for accuracy reporting.
struct DenseExact {
    double loglik = 0;
    Eigen::VectorXd score;
    Eigen::MatrixXd fisher;
};
DenseExact dense_exact(const CovarianceOracle& oracle, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& ybar);

struct AccuracyMetrics {
    double eps_L = 0;   // |L - Lt| / |L|
    double eps_S = 0;   // ||S - St|| / ||S||
    double eps_I = 0;   // ||I - It||_F / ||I||_F
    double eta_g = 0;   // sqrt((S - St)^T I^{-1} (S - St))
    double eta_I = 0;   // sqrt(tr((I - It)(I^{-1} - It^{-1})))
};
AccuracyMetrics accuracy_metrics(double loglik, const Eigen::VectorXd& score_exact,
                                 const Eigen::MatrixXd& fisher_exact, double loglik_approx,
                                 const Eigen::VectorXd& score_approx,
                                 const Eigen::MatrixXd& fisher_approx);

}  // namespace hodlrgp
