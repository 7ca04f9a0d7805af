#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cstdint>
#include <vector>

#include "hodlrgp/cluster_tree.hpp"

namespace hodlrgp {

/// Multiply-add counter for the scaling assertions and the bench command.
namespace flops {
void reset();
std::uint64_t count();
void add(std::uint64_t n);
}  // namespace flops

/// left * right^T with left m x r, right m' x r.
struct LowRankBlock {
    Eigen::MatrixXd left;
    Eigen::MatrixXd right;

    Index rank() const { return left.cols(); }
    bool empty() const { return left.cols() == 0; }
    Eigen::MatrixXd dense() const { return left * right.transpose(); }

    /// Y += (left right^T) X
    void apply(const Eigen::Ref<const Eigen::MatrixXd>& x, Eigen::Ref<Eigen::MatrixXd> y) const;
    /// Y += (left right^T)^T X
    void apply_transpose(const Eigen::Ref<const Eigen::MatrixXd>& x,
                         Eigen::Ref<Eigen::MatrixXd> y) const;

    /// Concatenate factor pairs; represents the sum of the two blocks.
    static LowRankBlock concat(const LowRankBlock& a, const LowRankBlock& b);

    /// Same block re-factored at its numerical rank: singular values below
    /// rtol times the largest are dropped.
    LowRankBlock compressed(double rtol) const;
};

/// Hierarchically off-diagonal low-rank matrix over a cluster tree.
///
/// Level l in [1, tau] holds one off-diagonal factor pair per depth-(l-1)
/// node: upper(l, j) covers rows of the node's left child and columns of its
/// right child. Symmetric matrices store only the upper factors; the lower
/// block is the transpose. Leaves are dense diagonal blocks in tree order.
class HodlrMatrix {
public:
    HodlrMatrix() = default;

    /// Zero-structure matrix: empty off-diagonal blocks, zero leaves.
    static HodlrMatrix zero(const ClusterTree& tree, bool symmetric = true);
    /// Identity.
    static HodlrMatrix identity(const ClusterTree& tree);
    /// Exact HODLR compression of a dense matrix (test/oracle support).
    static HodlrMatrix from_dense(const ClusterTree& tree, const Eigen::MatrixXd& a,
                                  bool symmetric);
    /// Random symmetric positive definite instance with off-diagonal rank k.
    static HodlrMatrix random_spd(const ClusterTree& tree, Index k, std::uint64_t seed);
    /// Random symmetric indefinite instance (derivative-matrix stand-in).
    static HodlrMatrix random_symmetric(const ClusterTree& tree, Index k, std::uint64_t seed);

    const ClusterTree& tree() const { return tree_; }
    Index size() const { return tree_.size(); }
    int depth() const { return tree_.depth(); }
    bool symmetric() const { return symmetric_; }

    LowRankBlock& upper(int level, Index node) { return upper_[level - 1][node]; }
    const LowRankBlock& upper(int level, Index node) const { return upper_[level - 1][node]; }
    /// Lower-left factor pair; for symmetric matrices this is derived.
    LowRankBlock lower_block(int level, Index node) const;
    LowRankBlock& lower(int level, Index node);

    Eigen::MatrixXd& leaf(Index i) { return leaves_[i]; }
    const Eigen::MatrixXd& leaf(Index i) const { return leaves_[i]; }
    Index num_leaves() const { return static_cast<Index>(leaves_.size()); }

    /// Breaks the symmetric storage out into explicit upper/lower factors.
    void make_asymmetric();

    /// y = H x (x may have multiple columns).
    Eigen::MatrixXd matvec(const Eigen::MatrixXd& x) const;
    Eigen::VectorXd matvec(const Eigen::VectorXd& x) const;

    /// y = H_sub x for the diagonal sub-block of the depth-d node `node`;
    /// x has the node's range length. transpose applies H_sub^T.
    Eigen::MatrixXd sub_matvec(int d, Index node, const Eigen::Ref<const Eigen::MatrixXd>& x,
                               bool transpose = false) const;

    double trace() const;

    /// Dense assembly; guarded to n <= 2^14.
    Eigen::MatrixXd densify() const;

    /// tr(A * B) for two HODLR matrices on the same tree, computed exactly
    /// from matching block pairs without forming the product.
    static double trace_product(const HodlrMatrix& a, const HodlrMatrix& b);

private:
    ClusterTree tree_;
    bool symmetric_ = true;
    std::vector<std::vector<LowRankBlock>> upper_;  // [level-1][node]
    std::vector<std::vector<LowRankBlock>> lower_;  // empty when symmetric
    std::vector<Eigen::MatrixXd> leaves_;
};

}  // namespace hodlrgp
