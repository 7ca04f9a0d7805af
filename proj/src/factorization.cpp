#include "hodlrgp/factorization.hpp"

#include <cmath>

namespace hodlrgp {

void LeafFactor::compute(const Eigen::MatrixXd& a, bool prefer_llt) {
    mat_ = a;
    use_llt_ = false;
    if (prefer_llt) {
        llt_.compute(a);
        if (llt_.info() == Eigen::Success) {
            use_llt_ = true;
            return;
        }
    }
    lu_.compute(a);
}

Eigen::MatrixXd LeafFactor::solve(const Eigen::Ref<const Eigen::MatrixXd>& b) const {
    return use_llt_ ? llt_.solve(b).eval() : lu_.solve(b).eval();
}

Eigen::MatrixXd LeafFactor::multiply(const Eigen::Ref<const Eigen::MatrixXd>& b) const {
    return mat_ * b;
}

double LeafFactor::logdet_positive() const {
    if (use_llt_) {
        double ld = 0;
        for (Index i = 0; i < mat_.rows(); ++i) ld += std::log(llt_.matrixL()(i, i));
        return 2.0 * ld;
    }
    const auto& lu_mat = lu_.matrixLU();
    double ld = 0;
    double sign = lu_.permutationP().determinant();
    for (Index i = 0; i < lu_mat.rows(); ++i) {
        double d = lu_mat(i, i);
        if (d < 0) sign = -sign;
        ld += std::log(std::abs(d));
    }
    if (sign <= 0) throw NotPositiveDefinite("leaf block has non-positive determinant");
    return ld;
}

namespace {

double lu_log_abs_det(const Eigen::PartialPivLU<Eigen::MatrixXd>& lu, bool& positive) {
    double ld = 0;
    double sign = lu.permutationP().determinant();
    for (Index i = 0; i < lu.matrixLU().rows(); ++i) {
        double d = lu.matrixLU()(i, i);
        if (d < 0) sign = -sign;
        ld += std::log(std::abs(d));
    }
    positive = sign > 0;
    return ld;
}

}  // namespace

HodlrFactorization factorize(const HodlrMatrix& h, Orientation orient) {
    const ClusterTree& tree = h.tree();
    const int tau = h.depth();
    HodlrFactorization f;
    f.tree_ = tree;
    f.orient_ = orient;

    f.leaf_factors_.resize(h.num_leaves());
#pragma omp parallel for schedule(static)
    for (Index b = 0; b < h.num_leaves(); ++b)
        f.leaf_factors_[b].compute(h.leaf(b), h.symmetric());

    // Working left factors per level: wbar rows span the node's left child,
    // xbar the right child; the right factors (w, x) stay fixed.
    struct Work {
        Eigen::MatrixXd wbar, xbar;  // updated left factors
        Eigen::MatrixXd w, x;        // original factors (right side of V)
    };
    std::vector<std::vector<Work>> work(tau);
    for (int l = 1; l <= tau; ++l) {
        const auto nodes = static_cast<Index>(tree.level(l - 1).size());
        work[l - 1].resize(nodes);
        for (Index j = 0; j < nodes; ++j) {
            const LowRankBlock& blk = h.upper(l, j);
            Work& wk = work[l - 1][j];
            if (blk.empty()) {
                auto cl = tree.level(l)[2 * j], cr = tree.level(l)[2 * j + 1];
                wk.w = wk.wbar = Eigen::MatrixXd::Zero(cl.size(), 0);
                wk.x = wk.xbar = Eigen::MatrixXd::Zero(cr.size(), 0);
            } else {
                wk.w = blk.left;
                wk.x = blk.right;
                wk.wbar = blk.left;
                wk.xbar = blk.right;
            }
        }
    }

    // Factor out the leaf blocks: apply leaf inverses blockwise to every
    // left factor's rows.
    auto leaf_solve_rows = [&](Eigen::MatrixXd& m, Index row_lo) {
        Index row_hi = row_lo + m.rows();
        for (Index b = 0; b < h.num_leaves(); ++b) {
            auto r = tree.leaves()[b];
            if (r.hi <= row_lo || r.lo >= row_hi) continue;
            m.middleRows(r.lo - row_lo, r.size()) =
                f.leaf_factors_[b].solve(m.middleRows(r.lo - row_lo, r.size()));
        }
    };
    for (int l = 1; l <= tau; ++l) {
        const auto& kids = tree.level(l);
        const auto nodes = static_cast<Index>(tree.level(l - 1).size());
#pragma omp parallel for schedule(static)
        for (Index j = 0; j < nodes; ++j) {
            leaf_solve_rows(work[l - 1][j].wbar, kids[2 * j].lo);
            leaf_solve_rows(work[l - 1][j].xbar, kids[2 * j + 1].lo);
        }
    }

    f.levels_.resize(tau);
    for (int i = tau; i >= 1; --i) {
        const auto& nodes = tree.level(i - 1);
        auto& lev = f.levels_[i - 1];
        lev.resize(nodes.size());
        for (std::size_t j = 0; j < nodes.size(); ++j) {
            const Work& wk = work[i - 1][j];
            const Index m1 = wk.wbar.rows(), m2 = wk.xbar.rows();
            const Index r = wk.w.cols();
            HodlrFactorization::LevelBlock& blk = lev[j];
            blk.u = Eigen::MatrixXd::Zero(m1 + m2, 2 * r);
            blk.u.topLeftCorner(m1, r) = wk.wbar;
            blk.u.bottomRightCorner(m2, r) = wk.xbar;
            blk.v = Eigen::MatrixXd::Zero(m1 + m2, 2 * r);
            blk.v.topRightCorner(m1, r) = wk.w;
            blk.v.bottomLeftCorner(m2, r) = wk.x;
            Eigen::MatrixXd cap = Eigen::MatrixXd::Identity(2 * r, 2 * r);
            cap.noalias() += blk.v.transpose() * blk.u;
            blk.cap.compute(cap);
            blk.logdet_cap = lu_log_abs_det(blk.cap, blk.cap_positive);
        }

        // Update coarser-level left factors by the inverse of this factor.
        for (int l = 1; l < i; ++l) {
            const int shift = (i - 1) - l;  // depth (i-1) nodes under a depth-l node
            const auto ncoarse = static_cast<Index>(tree.level(l - 1).size());
#pragma omp parallel for schedule(static)
            for (Index j = 0; j < ncoarse; ++j) {
                auto apply_inv = [&](Eigen::MatrixXd& m, Index child_node) {
                    Index first = child_node << shift;
                    Index count = Index{1} << shift;
                    Index row_lo = tree.level(i - 1)[first].lo;
                    for (Index b = first; b < first + count; ++b) {
                        const auto& blk = lev[b];
                        auto rng = tree.level(i - 1)[b];
                        auto rows = m.middleRows(rng.lo - row_lo, rng.size());
                        if (blk.u.cols() == 0) continue;
                        rows.noalias() -=
                            blk.u * blk.cap.solve(blk.v.transpose() * rows);
                    }
                };
                apply_inv(work[l - 1][j].wbar, 2 * j);
                apply_inv(work[l - 1][j].xbar, 2 * j + 1);
            }
        }
    }
    return f;
}

Eigen::MatrixXd HodlrFactorization::solve(const Eigen::MatrixXd& b) const {
    if (b.rows() != size()) throw std::invalid_argument("solve: dimension mismatch");
    Eigen::MatrixXd y = b;
    auto leaf_solve_all = [&]() {
#pragma omp parallel for schedule(static)
        for (Index i = 0; i < num_leaves(); ++i) {
            auto r = tree_.leaves()[i];
            y.middleRows(r.lo, r.size()) =
                leaf_factors_[i].solve(y.middleRows(r.lo, r.size()));
        }
    };
    auto apply_level_inverse = [&](int i, bool transposed_factor) {
        const auto& nodes = tree_.level(i - 1);
        const auto& lev = levels_[i - 1];
#pragma omp parallel for schedule(static)
        for (Index j = 0; j < static_cast<Index>(nodes.size()); ++j) {
            const LevelBlock& blk = lev[j];
            if (blk.u.cols() == 0) continue;
            auto rows = y.middleRows(nodes[j].lo, nodes[j].size());
            if (!transposed_factor) {
                // (I + u v^T)^{-1} = I - u (I + v^T u)^{-1} v^T
                rows.noalias() -= blk.u * blk.cap.solve(blk.v.transpose() * rows);
            } else {
                // (I + v u^T)^{-1} = I - v (I + u^T v)^{-1} u^T, where
                // I + u^T v = (I + v^T u)^T reuses the capacitance LU.
                Eigen::MatrixXd t = blk.cap.transpose().solve(blk.u.transpose() * rows);
                rows.noalias() -= blk.v * t;
            }
        }
    };
    if (orient_ == Orientation::Right) {
        leaf_solve_all();
        for (int i = depth(); i >= 1; --i) apply_level_inverse(i, false);
    } else {
        for (int i = 1; i <= depth(); ++i) apply_level_inverse(i, true);
        leaf_solve_all();
    }
    return y;
}

Eigen::VectorXd HodlrFactorization::solve(const Eigen::VectorXd& b) const {
    return solve(Eigen::MatrixXd(b)).col(0);
}

double HodlrFactorization::logdet() const {
    double ld = 0;
    for (const auto& lf : leaf_factors_) ld += lf.logdet_positive();
    for (const auto& lev : levels_)
        for (const auto& blk : lev) {
            if (!blk.cap_positive)
                throw NotPositiveDefinite("capacitance has non-positive determinant");
            ld += blk.logdet_cap;
        }
    return ld;
}

}  // namespace hodlrgp
