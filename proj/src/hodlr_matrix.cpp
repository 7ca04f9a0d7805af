#include "hodlrgp/hodlr_matrix.hpp"

#include <random>
#include <stdexcept>

namespace hodlrgp {

namespace flops {
namespace {
std::atomic<std::uint64_t> g_count{0};
}
void reset() { g_count.store(0, std::memory_order_relaxed); }
std::uint64_t count() { return g_count.load(std::memory_order_relaxed); }
void add(std::uint64_t n) { g_count.fetch_add(n, std::memory_order_relaxed); }
}  // namespace flops

void LowRankBlock::apply(const Eigen::Ref<const Eigen::MatrixXd>& x,
                         Eigen::Ref<Eigen::MatrixXd> y) const {
    if (empty()) return;
    y.noalias() += left * (right.transpose() * x);
    flops::add(std::uint64_t(rank()) * (left.rows() + right.rows()) * x.cols());
}

void LowRankBlock::apply_transpose(const Eigen::Ref<const Eigen::MatrixXd>& x,
                                   Eigen::Ref<Eigen::MatrixXd> y) const {
    if (empty()) return;
    y.noalias() += right * (left.transpose() * x);
    flops::add(std::uint64_t(rank()) * (left.rows() + right.rows()) * x.cols());
}

LowRankBlock LowRankBlock::concat(const LowRankBlock& a, const LowRankBlock& b) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    LowRankBlock out;
    out.left.resize(a.left.rows(), a.rank() + b.rank());
    out.left << a.left, b.left;
    out.right.resize(a.right.rows(), a.rank() + b.rank());
    out.right << a.right, b.right;
    return out;
}

LowRankBlock LowRankBlock::compressed(double rtol) const {
    if (empty()) return *this;
    Eigen::HouseholderQR<Eigen::MatrixXd> ql(left);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(right);
    const Index wl = std::min(left.rows(), left.cols());
    const Index wr = std::min(right.rows(), right.cols());
    Eigen::MatrixXd tl = ql.matrixQR()
                             .topRows(wl)
                             .template triangularView<Eigen::Upper>();
    Eigen::MatrixXd tr = qr.matrixQR()
                             .topRows(wr)
                             .template triangularView<Eigen::Upper>();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(tl * tr.transpose(),
                                          Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const Index wmin = std::min(wl, wr);
    Index r = 0;
    while (r < wmin && sv[r] > rtol * sv[0]) ++r;
    LowRankBlock out;
    out.left = (ql.householderQ() * Eigen::MatrixXd::Identity(left.rows(), wl)) *
               (svd.matrixU().leftCols(r) * sv.head(r).asDiagonal());
    out.right = (qr.householderQ() * Eigen::MatrixXd::Identity(right.rows(), wr)) *
                svd.matrixV().leftCols(r);
    return out;
}

HodlrMatrix HodlrMatrix::zero(const ClusterTree& tree, bool symmetric) {
    HodlrMatrix h;
    h.tree_ = tree;
    h.symmetric_ = symmetric;
    h.upper_.resize(tree.depth());
    for (int l = 1; l <= tree.depth(); ++l) h.upper_[l - 1].resize(tree.level(l - 1).size());
    if (!symmetric) h.lower_ = h.upper_;
    h.leaves_.resize(tree.num_leaves());
    for (Index i = 0; i < tree.num_leaves(); ++i) {
        Index m = tree.leaves()[i].size();
        h.leaves_[i] = Eigen::MatrixXd::Zero(m, m);
    }
    return h;
}

HodlrMatrix HodlrMatrix::identity(const ClusterTree& tree) {
    HodlrMatrix h = zero(tree);
    for (Index i = 0; i < tree.num_leaves(); ++i)
        h.leaves_[i].setIdentity();
    return h;
}

HodlrMatrix HodlrMatrix::from_dense(const ClusterTree& tree, const Eigen::MatrixXd& a,
                                    bool symmetric) {
    if (a.rows() != tree.size() || a.cols() != tree.size())
        throw std::invalid_argument("from_dense: size mismatch");
    HodlrMatrix h = zero(tree, symmetric);
    auto factor = [](const Eigen::MatrixXd& block) {
        // Exact factorization of the block via thin SVD, dropping null space.
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(block,
                                              Eigen::ComputeThinU | Eigen::ComputeThinV);
        double tol = 1e-13 * std::max<double>(1.0, svd.singularValues()(0));
        Index r = 0;
        while (r < svd.singularValues().size() && svd.singularValues()(r) > tol) ++r;
        LowRankBlock lr;
        lr.left = svd.matrixU().leftCols(r);
        lr.right = svd.matrixV().leftCols(r) * svd.singularValues().head(r).asDiagonal();
        return lr;
    };
    for (int l = 1; l <= tree.depth(); ++l) {
        const auto& nodes = tree.level(l - 1);
        const auto& kids = tree.level(l);
        for (std::size_t j = 0; j < nodes.size(); ++j) {
            auto cl = kids[2 * j], cr = kids[2 * j + 1];
            h.upper(l, j) = factor(a.block(cl.lo, cr.lo, cl.size(), cr.size()));
            if (!symmetric)
                h.lower(l, j) = factor(a.block(cr.lo, cl.lo, cr.size(), cl.size()));
        }
    }
    for (Index i = 0; i < tree.num_leaves(); ++i) {
        auto r = tree.leaves()[i];
        h.leaves_[i] = a.block(r.lo, r.lo, r.size(), r.size());
    }
    return h;
}

namespace {

HodlrMatrix random_with_shift(const ClusterTree& tree, Index k, std::uint64_t seed,
                              double shift) {
    HodlrMatrix h = HodlrMatrix::zero(tree);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto randn = [&](Index r, Index c) {
        Eigen::MatrixXd m(r, c);
        for (Index i = 0; i < r; ++i)
            for (Index j = 0; j < c; ++j) m(i, j) = gauss(rng);
        return m;
    };
    for (int l = 1; l <= tree.depth(); ++l) {
        const auto& kids = tree.level(l);
        for (std::size_t j = 0; j < tree.level(l - 1).size(); ++j) {
            Index m1 = kids[2 * j].size(), m2 = kids[2 * j + 1].size();
            Index r = std::min({k, m1, m2});
            LowRankBlock lr;
            lr.left = randn(m1, r) / std::sqrt(double(m1));
            lr.right = randn(m2, r) / std::sqrt(double(m2));
            h.upper(l, j) = lr;
        }
    }
    for (Index i = 0; i < tree.num_leaves(); ++i) {
        Index m = tree.leaves()[i].size();
        Eigen::MatrixXd g = randn(m, m) / std::sqrt(double(m));
        h.leaf(i) = 0.5 * (g + g.transpose());
        if (shift > 0.0) {
            h.leaf(i) = g * g.transpose();
            h.leaf(i).diagonal().array() += shift;
        }
    }
    return h;
}

}  // namespace

HodlrMatrix HodlrMatrix::random_spd(const ClusterTree& tree, Index k, std::uint64_t seed) {
    // Leaf diagonal shift dominates the off-diagonal spectral norm, keeping
    // the assembled matrix safely positive definite at moderate condition.
    double shift = 2.0 + 2.0 * tree.depth();
    return random_with_shift(tree, k, seed, shift);
}

HodlrMatrix HodlrMatrix::random_symmetric(const ClusterTree& tree, Index k,
                                          std::uint64_t seed) {
    return random_with_shift(tree, k, seed, 0.0);
}

LowRankBlock HodlrMatrix::lower_block(int level, Index node) const {
    if (symmetric_) {
        const LowRankBlock& u = upper_[level - 1][node];
        return LowRankBlock{u.right, u.left};
    }
    return lower_[level - 1][node];
}

LowRankBlock& HodlrMatrix::lower(int level, Index node) {
    if (symmetric_) throw std::logic_error("lower(): symmetric storage");
    return lower_[level - 1][node];
}

void HodlrMatrix::make_asymmetric() {
    if (!symmetric_) return;
    lower_.resize(upper_.size());
    for (std::size_t l = 0; l < upper_.size(); ++l) {
        lower_[l].resize(upper_[l].size());
        for (std::size_t j = 0; j < upper_[l].size(); ++j)
            lower_[l][j] = LowRankBlock{upper_[l][j].right, upper_[l][j].left};
    }
    symmetric_ = false;
}

Eigen::MatrixXd HodlrMatrix::matvec(const Eigen::MatrixXd& x) const {
    if (x.rows() != size()) throw std::invalid_argument("matvec: dimension mismatch");
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(x.rows(), x.cols());
    const auto& lv = tree_.leaves();
#pragma omp parallel for schedule(static)
    for (Index i = 0; i < num_leaves(); ++i) {
        auto r = lv[i];
        y.middleRows(r.lo, r.size()).noalias() +=
            leaves_[i] * x.middleRows(r.lo, r.size());
    }
    flops::add(std::uint64_t(size()) * tree_.max_leaf_size() * x.cols());
    for (int l = 1; l <= depth(); ++l) {
        const auto& kids = tree_.level(l);
        const Index nodes = static_cast<Index>(tree_.level(l - 1).size());
#pragma omp parallel for schedule(static)
        for (Index j = 0; j < nodes; ++j) {
            auto cl = kids[2 * j], cr = kids[2 * j + 1];
            upper(l, j).apply(x.middleRows(cr.lo, cr.size()),
                              y.middleRows(cl.lo, cl.size()));
            lower_block(l, j).apply(x.middleRows(cl.lo, cl.size()),
                                    y.middleRows(cr.lo, cr.size()));
        }
    }
    return y;
}

Eigen::VectorXd HodlrMatrix::matvec(const Eigen::VectorXd& x) const {
    return matvec(Eigen::MatrixXd(x)).col(0);
}

Eigen::MatrixXd HodlrMatrix::sub_matvec(int d, Index node,
                                        const Eigen::Ref<const Eigen::MatrixXd>& x,
                                        bool transpose) const {
    auto range = tree_.level(d)[node];
    if (x.rows() != range.size()) throw std::invalid_argument("sub_matvec: dimension mismatch");
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(x.rows(), x.cols());
    // Leaves under this node.
    Index leaves_per = num_leaves() >> d;
    for (Index i = node * leaves_per; i < (node + 1) * leaves_per; ++i) {
        auto r = tree_.leaves()[i];
        Index off = r.lo - range.lo;
        if (transpose)
            y.middleRows(off, r.size()).noalias() +=
                leaves_[i].transpose() * x.middleRows(off, r.size());
        else
            y.middleRows(off, r.size()).noalias() +=
                leaves_[i] * x.middleRows(off, r.size());
    }
    // Off-diagonal levels strictly inside this node: levels d+1 .. tau.
    for (int l = d + 1; l <= depth(); ++l) {
        Index per = (Index{1} << (l - 1)) >> d;  // nodes of level l under this node
        const auto& kids = tree_.level(l);
        for (Index j = node * per; j < (node + 1) * per; ++j) {
            auto cl = kids[2 * j], cr = kids[2 * j + 1];
            Index ol = cl.lo - range.lo, orr = cr.lo - range.lo;
            const LowRankBlock up = upper(l, j);
            const LowRankBlock lo = lower_block(l, j);
            if (transpose) {
                up.apply_transpose(x.middleRows(ol, cl.size()), y.middleRows(orr, cr.size()));
                lo.apply_transpose(x.middleRows(orr, cr.size()), y.middleRows(ol, cl.size()));
            } else {
                up.apply(x.middleRows(orr, cr.size()), y.middleRows(ol, cl.size()));
                lo.apply(x.middleRows(ol, cl.size()), y.middleRows(orr, cr.size()));
            }
        }
    }
    return y;
}

double HodlrMatrix::trace() const {
    double t = 0;
    for (const auto& leaf : leaves_) t += leaf.trace();
    return t;
}

Eigen::MatrixXd HodlrMatrix::densify() const {
    if (size() > (Index{1} << 14)) throw std::length_error("densify: matrix too large");
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(size(), size());
    for (Index i = 0; i < num_leaves(); ++i) {
        auto r = tree_.leaves()[i];
        a.block(r.lo, r.lo, r.size(), r.size()) = leaves_[i];
    }
    for (int l = 1; l <= depth(); ++l) {
        const auto& kids = tree_.level(l);
        for (std::size_t j = 0; j < tree_.level(l - 1).size(); ++j) {
            auto cl = kids[2 * j], cr = kids[2 * j + 1];
            if (!upper(l, j).empty())
                a.block(cl.lo, cr.lo, cl.size(), cr.size()) = upper(l, j).dense();
            LowRankBlock lo = lower_block(l, j);
            if (!lo.empty())
                a.block(cr.lo, cl.lo, cr.size(), cl.size()) = lo.dense();
        }
    }
    return a;
}

double HodlrMatrix::trace_product(const HodlrMatrix& a, const HodlrMatrix& b) {
    if (!a.tree().same_structure(b.tree()))
        throw std::invalid_argument("trace_product: tree mismatch");
    double t = 0;
    for (Index i = 0; i < a.num_leaves(); ++i)
        t += (a.leaf(i).transpose().cwiseProduct(b.leaf(i))).sum();
    // Off-diagonal (I,J) of A pairs with (J,I) of B.
    for (int l = 1; l <= a.depth(); ++l) {
        for (std::size_t j = 0; j < a.tree().level(l - 1).size(); ++j) {
            const LowRankBlock au = a.upper(l, j);
            const LowRankBlock al = a.lower_block(l, j);
            const LowRankBlock bu = b.upper(l, j);
            const LowRankBlock bl = b.lower_block(l, j);
            if (!au.empty() && !bl.empty())
                t += ((bl.right.transpose() * au.left) *
                      (au.right.transpose() * bl.left))
                         .trace();
            if (!al.empty() && !bu.empty())
                t += ((bu.right.transpose() * al.left) *
                      (al.right.transpose() * bu.left))
                         .trace();
        }
    }
    return t;
}

}  // namespace hodlrgp
