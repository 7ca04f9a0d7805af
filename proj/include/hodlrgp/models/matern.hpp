#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <deque>
#include <memory>
#include <mutex>

#include "hodlrgp/models/fem.hpp"

namespace hodlrgp {

/// Exact Whittle-Matern correlation at smoothness nu = 1:
/// (r/l) K_1(r/l), with the r -> 0 limit equal to 1.
double matern_exact_cov(double r, double l);

/// SPDE Matern latent covariance at nu = 1, d = 2, unit marginal variance:
/// K_w(l) = gamma^{-2} A^{-1} Ct A^{-1} with A = C/l^2 + S and
/// gamma^{-2} = 4 pi / l^2. The sparse factorization of A is cached per
/// length scale (bounded LRU of 4).
class MaternOperator {
public:
    explicit MaternOperator(const FemDiscretization& fem) : fem_(fem) {}

    Index dim() const { return fem_.n_basis; }
    const FemDiscretization& fem() const { return fem_; }

    /// K_w(l) v.
    Eigen::MatrixXd apply(double l, const Eigen::Ref<const Eigen::MatrixXd>& v) const;
    /// (d K_w / d l) v.
    Eigen::MatrixXd apply_dl(double l, const Eigen::Ref<const Eigen::MatrixXd>& v) const;
    /// Exact square-root sample path: gamma^{-1} A^{-1} Ct^{1/2} z has
    /// covariance K_w(l) for standard normal z.
    Eigen::MatrixXd sample_sqrt(double l, const Eigen::Ref<const Eigen::MatrixXd>& z) const;

private:
    using Solver = Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>;
    std::shared_ptr<const Solver> factor(double l) const;

    const FemDiscretization& fem_;
    mutable std::mutex mutex_;
    mutable std::deque<std::pair<double, std::shared_ptr<const Solver>>> cache_;
};

}  // namespace hodlrgp
