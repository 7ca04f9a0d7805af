#include "hodlrgp/product_rep.hpp"

#include <stdexcept>

namespace hodlrgp {

using CorrBlock = ProductRep::CorrBlock;

Eigen::MatrixXd ProductRep::densify() const {
    Eigen::MatrixXd a = base.densify();
    const ClusterTree& tree = base.tree();
    for (std::size_t i = 0; i < corrections.size(); ++i) {
        const auto& nodes = tree.level(static_cast<int>(i));
        for (std::size_t j = 0; j < corrections[i].size(); ++j) {
            const CorrBlock& c = corrections[i][j];
            if (c.u.cols() == 0) continue;
            auto r = nodes[j];
            a.block(r.lo, r.lo, r.size(), r.size()).noalias() += c.u * c.v.transpose();
        }
    }
    return a;
}

namespace {

struct LevelFactor {
    std::vector<Eigen::MatrixXd> p, q;  // factor on node b is I + p_b q_b^T
};

/// Rows of m span the depth-d node `node`; apply every depth-df factor block
/// under that node to the matching row chunk: rows += p_b (q_b^T rows).
void apply_blocks_to_rows(const ClusterTree& tree, const LevelFactor& lf, int df,
                          Eigen::MatrixXd& m, int d, Index node) {
    const int shift = df - d;
    const Index first = node << shift;
    const Index count = Index{1} << shift;
    const Index row0 = tree.level(d)[node].lo;
    for (Index b = first; b < first + count; ++b) {
        if (lf.p[b].cols() == 0) continue;
        auto rng = tree.level(df)[b];
        auto rows = m.middleRows(rng.lo - row0, rng.size());
        rows.noalias() += lf.p[b] * (lf.q[b].transpose() * rows);
        flops::add(std::uint64_t(2 * lf.p[b].cols()) * rng.size() * m.cols());
    }
}

ProductRep pipeline(const HodlrFactorization& f, const HodlrMatrix& b, bool inverse) {
    if (!f.tree().same_structure(b.tree()))
        throw std::invalid_argument("product pipeline: tree structure mismatch");
    if (!inverse && f.orientation() != Orientation::Right)
        throw std::invalid_argument("multiply: factorization must be Right-oriented");
    if (inverse && f.orientation() != Orientation::Left)
        throw std::invalid_argument("solve_multiply: factorization must be Left-oriented");

    const ClusterTree& tree = f.tree();
    const int tau = f.depth();

    ProductRep rep;
    rep.base = b;
    rep.base.make_asymmetric();  // left-factor row updates break symmetric storage
    rep.corrections.resize(tau);

    for (int i = 1; i <= tau; ++i) {
        const auto& nodes = tree.level(i - 1);
        const auto& lev = f.level(i);
        LevelFactor lf;
        lf.p.resize(nodes.size());
        lf.q.resize(nodes.size());
        for (std::size_t j = 0; j < nodes.size(); ++j) {
            const auto& blk = lev[j];
            if (blk.u.cols() == 0) {
                lf.p[j].resize(nodes[j].size(), 0);
                lf.q[j].resize(nodes[j].size(), 0);
            } else if (inverse) {
                // Woodbury: (I + v u^T)^{-1} = I - v (I + u^T v)^{-1} u^T
                lf.p[j] = -(blk.cap.solve(blk.v.transpose())).transpose();
                lf.q[j] = blk.u;
            } else {
                lf.p[j] = blk.u;
                lf.q[j] = blk.v;
            }
        }

        // Update previously spawned (coarser) corrections.
        for (int m = 1; m < i; ++m)
            for (std::size_t j = 0; j < rep.corrections[m - 1].size(); ++j) {
                CorrBlock& c = rep.corrections[m - 1][j];
                if (c.u.cols() == 0) continue;
                apply_blocks_to_rows(tree, lf, i - 1, c.u, m - 1, static_cast<Index>(j));
            }

        // Update the running HODLR's coarser off-diagonal left factors: those
        // blocks carry this node's rows to columns outside the node.
        for (int m = 1; m < i; ++m) {
            const Index coarse = static_cast<Index>(tree.level(m - 1).size());
            for (Index j = 0; j < coarse; ++j) {
                LowRankBlock& up = rep.base.upper(m, j);
                if (!up.empty())
                    apply_blocks_to_rows(tree, lf, i - 1, up.left, m, 2 * j);
                LowRankBlock& lo = rep.base.lower(m, j);
                if (!lo.empty())
                    apply_blocks_to_rows(tree, lf, i - 1, lo.left, m, 2 * j + 1);
            }
        }

        // Spawn the level-i correction from the (still untouched) diagonal
        // sub-blocks of the running HODLR.
        rep.corrections[i - 1].resize(nodes.size());
        for (std::size_t j = 0; j < nodes.size(); ++j) {
            CorrBlock& c = rep.corrections[i - 1][j];
            if (lf.p[j].cols() == 0) {
                c.u.resize(nodes[j].size(), 0);
                c.v.resize(nodes[j].size(), 0);
                continue;
            }
            c.u = lf.p[j];
            c.v = rep.base.sub_matvec(i - 1, static_cast<Index>(j), lf.q[j],
                                      /*transpose=*/true);
        }
    }

    // Leaf factor: blockwise dense multiply (or solve) on every stored row
    // chunk — correction left factors, off-diagonal left factors, leaves.
    auto apply_leaf_rows = [&](Eigen::MatrixXd& m, int d, Index node) {
        const int shift = tau - d;
        const Index first = node << shift;
        const Index count = Index{1} << shift;
        const Index row0 = tree.level(d)[node].lo;
        for (Index lb = first; lb < first + count; ++lb) {
            auto rng = tree.leaves()[lb];
            Eigen::MatrixXd rows = m.middleRows(rng.lo - row0, rng.size());
            m.middleRows(rng.lo - row0, rng.size()) =
                inverse ? f.leaf(lb).solve(rows) : f.leaf(lb).multiply(rows);
        }
    };
    for (int i = 1; i <= tau; ++i)
        for (std::size_t j = 0; j < rep.corrections[i - 1].size(); ++j) {
            CorrBlock& c = rep.corrections[i - 1][j];
            if (c.u.cols() != 0) apply_leaf_rows(c.u, i - 1, static_cast<Index>(j));
        }
    for (int m = 1; m <= tau; ++m) {
        const Index coarse = static_cast<Index>(tree.level(m - 1).size());
        for (Index j = 0; j < coarse; ++j) {
            LowRankBlock& up = rep.base.upper(m, j);
            if (!up.empty()) apply_leaf_rows(up.left, m, 2 * j);
            LowRankBlock& lo = rep.base.lower(m, j);
            if (!lo.empty()) apply_leaf_rows(lo.left, m, 2 * j + 1);
        }
    }
    for (Index lb = 0; lb < rep.base.num_leaves(); ++lb)
        rep.base.leaf(lb) =
            inverse ? f.leaf(lb).solve(rep.base.leaf(lb)) : f.leaf(lb).multiply(rep.base.leaf(lb));

    return rep;
}

/// tr( (coarse-level block-diagonal u v^T) * (fine-level block-diagonal u v^T) )
/// for nested block partitions; fi >= ci.
double pair_term(const ClusterTree& tree, const std::vector<ProductRep::CorrBlock>& coarse,
                 int ci, const std::vector<ProductRep::CorrBlock>& fine, int fi) {
    const int dc = ci - 1, df = fi - 1, shift = df - dc;
    double s = 0;
    for (std::size_t b = 0; b < fine.size(); ++b) {
        const ProductRep::CorrBlock& fb = fine[b];
        if (fb.u.cols() == 0) continue;
        const Index big = static_cast<Index>(b) >> shift;
        const ProductRep::CorrBlock& cb = coarse[big];
        if (cb.u.cols() == 0) continue;
        const Index off = tree.level(df)[b].lo - tree.level(dc)[big].lo;
        const Index sz = tree.level(df)[b].size();
        Eigen::MatrixXd g1 = cb.v.middleRows(off, sz).transpose() * fb.u;
        Eigen::MatrixXd g2 = fb.v.transpose() * cb.u.middleRows(off, sz);
        s += (g1.cwiseProduct(g2.transpose())).sum();  // tr(g1 g2)
    }
    return s;
}

}  // namespace

ProductRep multiply(const HodlrFactorization& f, const HodlrMatrix& b) {
    return pipeline(f, b, false);
}

ProductRep solve_multiply(const HodlrFactorization& f, const HodlrMatrix& b) {
    return pipeline(f, b, true);
}

double trace_product_rep(const ProductRep& p) {
    double t = p.base.trace();
    for (const auto& lev : p.corrections)
        for (const auto& c : lev)
            if (c.u.cols() != 0) t += (c.u.cwiseProduct(c.v)).sum();  // tr(u v^T)
    return t;
}

double trace_solve(const HodlrFactorization& f_left, const HodlrMatrix& b) {
    return trace_product_rep(solve_multiply(f_left, b));
}

double trace_solve(const HodlrMatrix& a, const HodlrMatrix& b) {
    return trace_solve(factorize(a, Orientation::Left), b);
}

double trace_pair(const ProductRep& pb, const ProductRep& pd) {
    const ClusterTree& tree = pb.base.tree();
    const int tau = pb.base.depth();

    // tr(B~ D~): exact aligned block-pair trace of the two HODLR bases.
    double t = HodlrMatrix::trace_product(pb.base, pd.base);

    // Cross terms tr(base * u v^T) = sum over blocks tr(v^T base_sub u).
    auto cross = [&](const HodlrMatrix& h, const std::vector<std::vector<ProductRep::CorrBlock>>& corr) {
        double s = 0;
        for (int i = 1; i <= tau; ++i)
            for (std::size_t j = 0; j < corr[i - 1].size(); ++j) {
                const ProductRep::CorrBlock& c = corr[i - 1][j];
                if (c.u.cols() == 0) continue;
                Eigen::MatrixXd hu = h.sub_matvec(i - 1, static_cast<Index>(j), c.u);
                s += (c.v.cwiseProduct(hu)).sum();
            }
        return s;
    };
    t += cross(pb.base, pd.corrections);
    t += cross(pd.base, pb.corrections);

    // Correction-correction double sum, aligned by the finer of each pair.
    for (int i = 1; i <= tau; ++i)
        for (int j = 1; j <= tau; ++j) {
            if (i <= j)
                t += pair_term(tree, pb.corrections[i - 1], i, pd.corrections[j - 1], j);
            else
                t += pair_term(tree, pd.corrections[j - 1], j, pb.corrections[i - 1], i);
        }
    return t;
}

double trace_quad(const HodlrFactorization& fa, const HodlrMatrix& b,
                  const HodlrFactorization& fc, const HodlrMatrix& d) {
    return trace_pair(solve_multiply(fa, b), solve_multiply(fc, d));
}

double trace_quad(const HodlrMatrix& a, const HodlrMatrix& b, const HodlrMatrix& c,
                  const HodlrMatrix& d) {
    return trace_quad(factorize(a, Orientation::Left), b, factorize(c, Orientation::Left), d);
}

}  // namespace hodlrgp
