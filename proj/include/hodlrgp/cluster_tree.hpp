#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace hodlrgp {

using Index = std::int64_t;

/// Observation locations, n x d with d in {1, 2}.
struct PointSet {
    Eigen::MatrixXd coords;

    Index size() const { return coords.rows(); }
    int dim() const { return static_cast<int>(coords.cols()); }
};

/// Recursive binary bisection of [0, n) driving the HODLR block structure.
///
/// The tree is full binary of uniform depth tau: depth d has 2^d nodes,
/// each owning a contiguous range of the reordered index space. Sibling
/// ranges are adjacent and partition the parent exactly.
class ClusterTree {
public:
    struct Range {
        Index lo = 0;
        Index hi = 0;
        Index size() const { return hi - lo; }
    };

    ClusterTree() = default;
    ClusterTree(Index n, int tau);

    Index size() const { return n_; }
    int depth() const { return tau_; }

    /// Nodes at a given depth d in [0, tau], left to right.
    const std::vector<Range>& level(int d) const { return levels_[d]; }
    /// Leaf ranges (depth tau).
    const std::vector<Range>& leaves() const { return levels_[tau_]; }
    Index num_leaves() const { return static_cast<Index>(levels_[tau_].size()); }
    Index max_leaf_size() const;

    bool same_structure(const ClusterTree& other) const;

private:
    Index n_ = 0;
    int tau_ = 0;
    std::vector<std::vector<Range>> levels_;  // levels_[d] has 2^d entries
};

struct KdOrdering {
    /// perm[original] = reordered position.
    std::vector<Index> perm;
    /// inv[reordered position] = original index.
    std::vector<Index> inv;
    ClusterTree tree;
    /// Coordinates in reordered order.
    Eigen::MatrixXd reordered_coords;
};

/// Depth rule shared by all builders: 0 when n fits one leaf, otherwise
/// max(1, floor(log2(n / leaf_min))).
int tree_depth(Index n, Index leaf_min, Index leaf_max);

/// KD-tree median bisection: split along the longest bounding-box axis,
/// stable tie-break by lower original index, left child takes ceil(len/2).
/// Depth is floor(log2(n / leaf_min)) so every leaf holds at least leaf_min
/// points (single-leaf tree when n < 2 * leaf_min).
KdOrdering build_kd_ordering(const PointSet& points, Index leaf_min, Index leaf_max);

}  // namespace hodlrgp
