#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "hodlrgp/hodlr_matrix.hpp"
#include "hodlrgp/oracle.hpp"

namespace hodlrgp {

/// Fixed Gaussian sampling matrices for the peeling construction. Generated
/// once from the seed and reused verbatim across parameter values and
/// optimizer iterations, so the built approximation is a deterministic
/// function of theta.
class SketchPlan {
public:
    SketchPlan() = default;
    SketchPlan(const ClusterTree& tree, Index k, std::uint64_t seed);

    std::uint64_t seed() const { return seed_; }
    Index rank() const { return k_; }
    bool dimensioned_for(const ClusterTree& tree, Index k) const;

    /// Patterned n x k sampler for level l: Gaussian block on each node's
    /// right-child rows, zeros on left-child rows.
    const Eigen::MatrixXd& level_sampler(int l) const { return level_samplers_[l - 1]; }
    /// n x max_leaf_size sampler: identity rows per leaf (vertical identity
    /// concatenation; ragged leaves use the leading columns).
    const Eigen::MatrixXd& leaf_sampler() const { return leaf_sampler_; }

private:
    std::uint64_t seed_ = 0;
    Index k_ = 0;
    Index n_ = 0;
    int tau_ = 0;
    std::vector<Eigen::MatrixXd> level_samplers_;  // [l-1], n x k
    Eigen::MatrixXd leaf_sampler_;
};

/// Compact column-pivoted QR with fixed rank: y * P = q * r. Rank-deficient
/// input keeps k columns by completing q with canonical basis vectors
/// orthogonalized against the existing columns (those rows of r are zero).
/// Diagonal of r forced nonnegative.
struct RangeResult {
    Eigen::MatrixXd q;        // m x k, orthonormal columns
    Eigen::MatrixXd r;        // k x k, upper triangular, diag >= 0
    Eigen::VectorXi perm;     // column permutation P (y.col(perm[i]) -> position i)
    Index numeric_rank = 0;
};
RangeResult randomized_range(const Eigen::MatrixXd& y, Index k);

/// Derivative of the compact QR factorization b = q r under perturbation db,
/// holding column pivots fixed. Returns dq, dr with q^T dq skew-symmetric and
/// dr upper triangular. Sets ill_conditioned when cond(r) > 1e12.
struct DiffQrResult {
    Eigen::MatrixXd dq;
    Eigen::MatrixXd dq_span;  ///< in-span rotation component q * domega of dq
    Eigen::MatrixXd dr;
    bool ill_conditioned = false;
};
DiffQrResult diff_qr(const Eigen::Ref<const Eigen::MatrixXd>& b,
                     const Eigen::Ref<const Eigen::MatrixXd>& db,
                     const Eigen::Ref<const Eigen::MatrixXd>& q,
                     const Eigen::Ref<const Eigen::MatrixXd>& r);

/// Matrix-free peeling: levels 1..tau are sketched coarse-to-fine, each pass
/// subtracting the already-captured blocks by matvec; leaves are recovered
/// with the identity-concatenation sampler. Consumes exactly
/// 2*k*tau + max_leaf_size oracle columns.
HodlrMatrix build_hodlr(const CovarianceOracle& oracle, const ClusterTree& tree, Index k,
                        const SketchPlan& plan);

/// Peeling plus the differentiated construction: h is bitwise identical to
/// build_hodlr's output; deriv[j] approximates dK/dtheta_j on the same tree,
/// off-diagonal blocks stored as width-2k factor pairs and leaves dense.
struct BuildResult {
    HodlrMatrix h;
    std::vector<HodlrMatrix> deriv;
    std::vector<std::string> warnings;  // ill-conditioned QR tags, "level l param j"
};
BuildResult build_hodlr_with_derivatives(const CovarianceOracle& oracle,
                                         const ClusterTree& tree, Index k,
                                         const SketchPlan& plan);

}  // namespace hodlrgp
