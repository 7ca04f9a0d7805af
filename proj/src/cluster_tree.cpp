#include "hodlrgp/cluster_tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace hodlrgp {

ClusterTree::ClusterTree(Index n, int tau) : n_(n), tau_(tau) {
    levels_.resize(tau + 1);
    levels_[0] = {Range{0, n}};
    for (int d = 1; d <= tau; ++d) {
        levels_[d].reserve(std::size_t(1) << d);
        for (const Range& parent : levels_[d - 1]) {
            Index len = parent.size();
            Index left = (len + 1) / 2;  // left child takes ceil(len/2)
            levels_[d].push_back(Range{parent.lo, parent.lo + left});
            levels_[d].push_back(Range{parent.lo + left, parent.hi});
        }
    }
}

Index ClusterTree::max_leaf_size() const {
    Index m = 0;
    for (const Range& r : leaves()) m = std::max(m, r.size());
    return m;
}

bool ClusterTree::same_structure(const ClusterTree& other) const {
    return n_ == other.n_ && tau_ == other.tau_;
}

int tree_depth(Index n, Index leaf_min, Index leaf_max) {
    if (n <= leaf_max) return 0;
    int tau = static_cast<int>(std::floor(std::log2(double(n) / double(leaf_min))));
    return std::max(tau, 1);
}

KdOrdering build_kd_ordering(const PointSet& points, Index leaf_min, Index leaf_max) {
    const Index n = points.size();
    const int d = points.dim();
    if (n < 1) throw std::invalid_argument("build_kd_ordering: empty point set");
    if (d != 1 && d != 2) throw std::invalid_argument("build_kd_ordering: d must be 1 or 2");
    if (leaf_min < 1 || leaf_min > leaf_max)
        throw std::invalid_argument("build_kd_ordering: need 1 <= leaf_min <= leaf_max");
    if (!points.coords.allFinite())
        throw std::invalid_argument("build_kd_ordering: non-finite coordinates");

    KdOrdering out;
    out.tree = ClusterTree(n, tree_depth(n, leaf_min, leaf_max));

    // order[pos] = original index; refined level by level.
    std::vector<Index> order(n);
    std::iota(order.begin(), order.end(), Index{0});

    const Eigen::MatrixXd& c = points.coords;
    for (int depth = 0; depth < out.tree.depth(); ++depth) {
        for (const ClusterTree::Range& node : out.tree.level(depth)) {
            auto first = order.begin() + node.lo;
            auto last = order.begin() + node.hi;
            // Longest bounding-box axis of this node's points.
            int axis = 0;
            if (d == 2) {
                double ext0 = 0, ext1 = 0;
                double lo0 = c(*first, 0), hi0 = lo0, lo1 = c(*first, 1), hi1 = lo1;
                for (auto it = first; it != last; ++it) {
                    lo0 = std::min(lo0, c(*it, 0));
                    hi0 = std::max(hi0, c(*it, 0));
                    lo1 = std::min(lo1, c(*it, 1));
                    hi1 = std::max(hi1, c(*it, 1));
                }
                ext0 = hi0 - lo0;
                ext1 = hi1 - lo1;
                axis = ext1 > ext0 ? 1 : 0;
            }
            std::stable_sort(first, last, [&](Index a, Index b) {
                if (c(a, axis) != c(b, axis)) return c(a, axis) < c(b, axis);
                return a < b;
            });
        }
    }

    out.inv = order;
    out.perm.resize(n);
    for (Index pos = 0; pos < n; ++pos) out.perm[order[pos]] = pos;
    out.reordered_coords.resize(n, d);
    for (Index pos = 0; pos < n; ++pos) out.reordered_coords.row(pos) = c.row(order[pos]);
    return out;
}

}  // namespace hodlrgp
