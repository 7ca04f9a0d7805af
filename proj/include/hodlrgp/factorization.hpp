#pragma once

#include <Eigen/Dense>
#include <memory>
#include <stdexcept>
#include <vector>

#include "hodlrgp/hodlr_matrix.hpp"

namespace hodlrgp {

/// Thrown when a factorization or log-determinant detects loss of positive
/// definiteness (non-positive capacitance or leaf determinant).
struct NotPositiveDefinite : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Orientation {
    Right,  ///< A = Abar * (I + U^(tau) V^(tau)T) ... (I + U^(1) V^(1)T)
    Left,   ///< A = (I + V^(1) U^(1)T) ... (I + V^(tau) U^(tau)T) * Abar
};

/// Dense decomposition of one leaf diagonal block: Cholesky when the source
/// is symmetric and SPD, partially pivoted LU otherwise.
class LeafFactor {
public:
    void compute(const Eigen::MatrixXd& a, bool prefer_llt);
    Eigen::MatrixXd solve(const Eigen::Ref<const Eigen::MatrixXd>& b) const;
    Eigen::MatrixXd multiply(const Eigen::Ref<const Eigen::MatrixXd>& b) const;
    /// log|det|; throws NotPositiveDefinite if det <= 0.
    double logdet_positive() const;

private:
    Eigen::MatrixXd mat_;
    bool use_llt_ = false;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

/// Identity-plus-low-rank factorization of a symmetric HODLR matrix.
///
/// Level i in [1, tau] holds 2^(i-1) diagonal blocks, each a rank-2k update
/// to identity. The Left orientation is the transposed factor order, valid
/// for the symmetric sources this class accepts.
class HodlrFactorization {
public:
    struct LevelBlock {
        Eigen::MatrixXd u;  // node_size x 2k
        Eigen::MatrixXd v;  // node_size x 2k
        Eigen::PartialPivLU<Eigen::MatrixXd> cap;  // LU of I + v^T u
        double logdet_cap = 0.0;                   // log|det|, sign tracked below
        bool cap_positive = true;
    };

    const ClusterTree& tree() const { return tree_; }
    Orientation orientation() const { return orient_; }
    int depth() const { return static_cast<int>(levels_.size()); }
    Index size() const { return tree_.size(); }

    const std::vector<LevelBlock>& level(int i) const { return levels_[i - 1]; }
    const LeafFactor& leaf(Index b) const { return leaf_factors_[b]; }
    Index num_leaves() const { return static_cast<Index>(leaf_factors_.size()); }

    /// A^{-1} b.
    Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const;
    Eigen::VectorXd solve(const Eigen::VectorXd& b) const;

    /// log det A via Sylvester's identity; requires positive determinant.
    double logdet() const;

    friend HodlrFactorization factorize(const HodlrMatrix& h, Orientation orient);

private:
    ClusterTree tree_;
    Orientation orient_ = Orientation::Right;
    std::vector<LeafFactor> leaf_factors_;
    std::vector<std::vector<LevelBlock>> levels_;  // [i-1][block]
};

/// Appendix-style factorization into leaf blocks and per-level identity
/// updates. Requires invertible leaf blocks; O(n k^2 tau^2).
HodlrFactorization factorize(const HodlrMatrix& h, Orientation orient = Orientation::Right);

}  // namespace hodlrgp
