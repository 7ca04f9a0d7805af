#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "hodlrgp/cluster_tree.hpp"

namespace hodlrgp {

/// y = mean + chol(K) z with seeded standard normal z. If the Cholesky fails,
/// a single jitter of 1e-10 * trace/n is added before giving up. Guarded to
/// n <= 2^14.
Eigen::VectorXd sample_gaussian_dense(const Eigen::MatrixXd& k, const Eigen::VectorXd& mean,
                                      std::uint64_t seed);

/// g x g regular grid {lo + i h : i = 1..g}^2 with h = (hi - lo)/g; the
/// points of the g/2 grid are an exact subset, so coarsening by 2 nests.
Eigen::MatrixXd regular_grid(Index g, double lo, double hi);

/// Seeded random subset of n rows (order preserved).
Eigen::MatrixXd thin_points(const Eigen::MatrixXd& pts, Index n, std::uint64_t seed);

/// n observation points in [lo, hi]^2: the smallest nesting power-of-two grid
/// with g^2 >= n, randomly thinned to exactly n when g^2 > n.
Eigen::MatrixXd observation_points(Index n, double lo, double hi, std::uint64_t seed);

}  // namespace hodlrgp
