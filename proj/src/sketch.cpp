#include "hodlrgp/sketch.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace hodlrgp {

SketchPlan::SketchPlan(const ClusterTree& tree, Index k, std::uint64_t seed)
    : seed_(seed), k_(k), n_(tree.size()), tau_(tree.depth()) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    level_samplers_.resize(tau_);
    for (int l = 1; l <= tau_; ++l) {
        Eigen::MatrixXd& s = level_samplers_[l - 1];
        s = Eigen::MatrixXd::Zero(n_, k);
        const auto& kids = tree.level(l);
        for (std::size_t j = 0; j < tree.level(l - 1).size(); ++j) {
            auto cr = kids[2 * j + 1];  // Gaussian on right-child rows only
            for (Index i = cr.lo; i < cr.hi; ++i)
                for (Index c = 0; c < k; ++c) s(i, c) = gauss(rng);
        }
    }
    const Index m = tree.max_leaf_size();
    leaf_sampler_ = Eigen::MatrixXd::Zero(n_, m);
    for (Index b = 0; b < tree.num_leaves(); ++b) {
        auto r = tree.leaves()[b];
        leaf_sampler_.block(r.lo, 0, r.size(), r.size()).setIdentity();
    }
}

bool SketchPlan::dimensioned_for(const ClusterTree& tree, Index k) const {
    return n_ == tree.size() && tau_ == tree.depth() && k_ == k;
}

RangeResult randomized_range(const Eigen::MatrixXd& y, Index k) {
    const Index m = y.rows();
    if (y.cols() != k) throw std::invalid_argument("randomized_range: expected k columns");
    if (m < k) throw std::invalid_argument("randomized_range: m < k");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(y);
    RangeResult out;
    out.q = qr.householderQ() * Eigen::MatrixXd::Identity(m, k);
    out.r = qr.matrixR().topLeftCorner(k, k).template triangularView<Eigen::Upper>();
    out.perm = qr.colsPermutation().indices();
    for (Index i = 0; i < k; ++i) {
        if (out.r(i, i) < 0) {
            out.q.col(i) = -out.q.col(i);
            out.r.row(i) = -out.r.row(i);
        }
    }
    // The pivoted diagonal is non-increasing; columns that are zero to
    // machine precision carry no directional information at all.
    const double d0 = std::abs(out.r(0, 0));
    out.numeric_rank = 0;
    while (out.numeric_rank < k &&
           std::abs(out.r(out.numeric_rank, out.numeric_rank)) >
               64 * std::numeric_limits<double>::epsilon() * d0)
        ++out.numeric_rank;
    if (out.numeric_rank < k) {
        // Complete deficient columns with canonical basis vectors
        // orthogonalized against the kept ones; zero the matching r rows.
        out.r.bottomRows(k - out.numeric_rank).setZero();
        Index filled = out.numeric_rank;
        for (Index e = 0; e < m && filled < k; ++e) {
            Eigen::VectorXd v = Eigen::VectorXd::Unit(m, e);
            for (int pass = 0; pass < 2; ++pass)
                v -= out.q.leftCols(filled) * (out.q.leftCols(filled).transpose() * v);
            double nv = v.norm();
            if (nv < 0.5) continue;
            out.q.col(filled) = v / nv;
            ++filled;
        }
    }
    return out;
}

DiffQrResult diff_qr(const Eigen::Ref<const Eigen::MatrixXd>& b,
                     const Eigen::Ref<const Eigen::MatrixXd>& db,
                     const Eigen::Ref<const Eigen::MatrixXd>& q,
                     const Eigen::Ref<const Eigen::MatrixXd>& r) {
    const Index k = r.rows();
    DiffQrResult out;
    double dmax = 0, dmin = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < k; ++i) {
        dmax = std::max(dmax, std::abs(r(i, i)));
        dmin = std::min(dmin, std::abs(r(i, i)));
    }
    out.ill_conditioned = !(dmin > 0) || dmax / dmin > 1e12;

    Eigen::MatrixXd y = q.transpose() * db;
    r.template triangularView<Eigen::Upper>().template solveInPlace<Eigen::OnTheRight>(y);
    // y = dOmega + dr r^{-1} with dOmega skew (zero diagonal) and the second
    // term upper triangular; the strict lower triangle pins dOmega.
    Eigen::MatrixXd domega = Eigen::MatrixXd::Zero(k, k);
    for (Index i = 1; i < k; ++i)
        for (Index j = 0; j < i; ++j) {
            domega(i, j) = y(i, j);
            domega(j, i) = -y(i, j);
        }
    Eigen::MatrixXd m = y - domega;
    out.dr = m * r;
    out.dr = out.dr.template triangularView<Eigen::Upper>();

    Eigen::MatrixXd resid = db - q * (q.transpose() * db);
    r.template triangularView<Eigen::Upper>().template solveInPlace<Eigen::OnTheRight>(resid);
    out.dq_span = q * domega;
    out.dq = out.dq_span + resid;
    (void)b;
    return out;
}

namespace {

void check_rank_fits(const ClusterTree& tree, Index k) {
    for (int l = 1; l <= tree.depth(); ++l) {
        const auto& kids = tree.level(l);
        for (std::size_t j = 0; j < tree.level(l - 1).size(); ++j) {
            Index m = std::min(kids[2 * j].size(), kids[2 * j + 1].size());
            if (k > m)
                throw std::invalid_argument("build_hodlr: rank " + std::to_string(k) +
                                            " exceeds block dimension at level " +
                                            std::to_string(l));
        }
    }
}

BuildResult build_impl(const CovarianceOracle& oracle, const ClusterTree& tree, Index k,
                       const SketchPlan& plan, bool with_deriv) {
    if (oracle.dim() != tree.size())
        throw std::invalid_argument("build_hodlr: oracle dimension mismatch");
    if (!plan.dimensioned_for(tree, k))
        throw std::invalid_argument("build_hodlr: sketch plan not dimensioned for tree");
    check_rank_fits(tree, k);

    const Index n = tree.size();
    const int tau = tree.depth();
    const Index p = with_deriv ? oracle.num_params() : 0;

    BuildResult out;
    out.h = HodlrMatrix::zero(tree);
    out.deriv.assign(p, HodlrMatrix::zero(tree));

    for (int l = 1; l <= tau; ++l) {
        const auto& kids = tree.level(l);
        const Index nodes = static_cast<Index>(tree.level(l - 1).size());
        const Eigen::MatrixXd& rs = plan.level_sampler(l);

        // Pass 1: sample the upper blocks through the patterned Gaussian
        // sampler, peeling off everything captured at coarser levels.
        Eigen::MatrixXd y = oracle.apply(rs) - out.h.matvec(rs);
        std::vector<Eigen::MatrixXd> dy(p);
        for (Index j = 0; j < p; ++j)
            dy[j] = oracle.apply_derivative(static_cast<int>(j), rs) - out.deriv[j].matvec(rs);

        std::vector<RangeResult> cap(nodes);
        std::vector<char> full_width(static_cast<std::size_t>(nodes), 0);
#pragma omp parallel for schedule(static)
        for (Index j = 0; j < nodes; ++j) {
            auto cl = kids[2 * j];
            if (cl.size() == k) {
                // Width-k block: the canonical basis spans it exactly and is
                // parameter-independent, so dq vanishes identically. The
                // sketch QR would be numerically singular here and its
                // differentiation amplifies roundoff by its condition number.
                cap[j].q = Eigen::MatrixXd::Identity(k, k);
                cap[j].r = Eigen::MatrixXd::Zero(k, k);
                cap[j].perm = Eigen::VectorXi::LinSpaced(static_cast<int>(k), 0,
                                                         static_cast<int>(k) - 1);
                cap[j].numeric_rank = k;
                full_width[static_cast<std::size_t>(j)] = 1;
            } else {
                cap[j] = randomized_range(y.middleRows(cl.lo, cl.size()), k);
            }
        }

        // Pass 2: project through the orthonormal bases to capture b^T q.
        Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, k);
        for (Index j = 0; j < nodes; ++j) {
            auto cl = kids[2 * j];
            s.middleRows(cl.lo, cl.size()) = cap[j].q;
        }
        Eigen::MatrixXd z = oracle.apply(s) - out.h.matvec(s);

        // The two differentiated passes below recover the component of each
        // derivative block that lives in the span of the value basis q. The
        // remainder is visible in the derivative sketches dy once q is
        // projected out; capture it with a second orthonormal basis per node
        // so the recovered block does not lose derivative mass orthogonal to
        // the value range.
        std::vector<Eigen::MatrixXd> q2(static_cast<std::size_t>(nodes));
        Eigen::MatrixXd s2;
        Index w2max = 0;
        if (p > 0) {
            s2 = Eigen::MatrixXd::Zero(n, k * p);
#pragma omp parallel for schedule(static)
            for (Index j = 0; j < nodes; ++j) {
                if (full_width[static_cast<std::size_t>(j)]) continue;
                auto cl = kids[2 * j];
                Eigen::MatrixXd resid(cl.size(), k * p);
                double presc = 0;
                for (Index param = 0; param < p; ++param) {
                    resid.middleCols(param * k, k) = dy[param].middleRows(cl.lo, cl.size());
                    presc = std::max(presc, resid.middleCols(param * k, k).norm());
                }
                const Eigen::MatrixXd& q = cap[j].q;
                for (int pass = 0; pass < 2; ++pass)
                    resid -= q * (q.transpose() * resid);
                Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr2(resid);
                Eigen::MatrixXd r2 = qr2.matrixR();
                // The projection leaves roundoff of order eps times the
                // pre-projection sketch scale; directions at that floor are
                // not orthogonal to q and must not be kept.
                const double d0 = std::abs(r2(0, 0));
                const double floor_ = std::max(
                    1e-10 * d0,
                    1e-12 * presc);
                const Index w2cap = std::min(resid.cols(), cl.size() - k);
                Index w2 = 0;
                while (w2 < w2cap && std::abs(r2(w2, w2)) > floor_)
                    ++w2;
                if (w2 > 0)
                    q2[static_cast<std::size_t>(j)] =
                        qr2.householderQ() * Eigen::MatrixXd::Identity(cl.size(), w2);
            }
            for (Index j = 0; j < nodes; ++j) {
                const Eigen::MatrixXd& b = q2[static_cast<std::size_t>(j)];
                if (b.cols() == 0) continue;
                auto cl = kids[2 * j];
                s2.block(cl.lo, 0, cl.size(), b.cols()) = b;
                w2max = std::max(w2max, b.cols());
            }
        }

        // Differentiate both passes; the pivots of each node's QR are fixed.
        std::vector<std::vector<Eigen::MatrixXd>> dqc(p), dt(p), dt2(p);
        for (Index param = 0; param < p; ++param) {
            dqc[param].resize(nodes);
            for (Index j = 0; j < nodes; ++j) {
                auto cl = kids[2 * j];
                const RangeResult& c = cap[j];
                const Index rr = c.numeric_rank;
                dqc[param][j] = Eigen::MatrixXd::Zero(cl.size(), k);
                if (rr == 0 || full_width[static_cast<std::size_t>(j)]) continue;
                // Differentiating the QR divides by the pivoted diagonal, so
                // restrict it to the leading columns whose diagonal keeps the
                // solve well conditioned; the weak directions' derivative
                // content is already captured by the dedicated basis above.
                Index rw = 0;
                while (rw < rr &&
                       std::abs(c.r(rw, rw)) > 1e-6 * std::abs(c.r(0, 0)))
                    ++rw;
                if (rw == 0) continue;
                Eigen::MatrixXd bp(cl.size(), rw), dbp(cl.size(), rw);
                for (Index i = 0; i < rw; ++i) {
                    bp.col(i) = y.block(cl.lo, c.perm(i), cl.size(), 1);
                    dbp.col(i) = dy[param].block(cl.lo, c.perm(i), cl.size(), 1);
                }
                DiffQrResult d = diff_qr(bp, dbp, c.q.leftCols(rw),
                                         c.r.topLeftCorner(rw, rw));
                // Only the in-span rotation enters the committed block: the
                // out-of-span residual is recaptured through the dedicated
                // basis, without the oblique sketch-inversion factor the
                // QR-differentiated residual carries.
                dqc[param][j].leftCols(rw) = d.dq_span;
                if (d.ill_conditioned)
                    out.warnings.push_back("ill-conditioned QR at level " + std::to_string(l) +
                                           " param " + std::to_string(param));
            }
            Eigen::MatrixXd ds = Eigen::MatrixXd::Zero(n, k);
            for (Index j = 0; j < nodes; ++j) {
                auto cl = kids[2 * j];
                ds.middleRows(cl.lo, cl.size()) = dqc[param][j];
            }
            Eigen::MatrixXd dz = oracle.apply_derivative(static_cast<int>(param), s) -
                                 out.deriv[param].matvec(s) + oracle.apply(ds) -
                                 out.h.matvec(ds);
            dt[param].resize(nodes);
            for (Index j = 0; j < nodes; ++j) {
                auto cr = kids[2 * j + 1];
                dt[param][j] = dz.middleRows(cr.lo, cr.size());
            }
            if (w2max > 0) {
                Eigen::MatrixXd probe2 = s2.leftCols(w2max);
                Eigen::MatrixXd dz2 = oracle.apply_derivative(static_cast<int>(param), probe2) -
                                      out.deriv[param].matvec(probe2);
                dt2[param].resize(nodes);
                for (Index j = 0; j < nodes; ++j) {
                    auto cr = kids[2 * j + 1];
                    Index w2 = q2[static_cast<std::size_t>(j)].cols();
                    if (w2 > 0)
                        dt2[param][j] = dz2.block(cr.lo, 0, cr.size(), w2);
                }
            }
        }

        // Commit this level only after every pass above has peeled against
        // the strictly coarser captured blocks.
        for (Index j = 0; j < nodes; ++j) {
            auto cr = kids[2 * j + 1];
            Eigen::MatrixXd t = z.middleRows(cr.lo, cr.size());
            out.h.upper(l, j) = LowRankBlock{cap[j].q, t};
            for (Index param = 0; param < p; ++param) {
                LowRankBlock d = LowRankBlock::concat(
                    LowRankBlock{dqc[param][j], t}, LowRankBlock{cap[j].q, dt[param][j]});
                const Eigen::MatrixXd& b = q2[static_cast<std::size_t>(j)];
                if (b.cols() > 0)
                    d = LowRankBlock::concat(d, LowRankBlock{b, dt2[param][j]});
                out.deriv[param].upper(l, j) = d;
            }
        }
    }

    // Leaf recovery: identity-concatenation sampler, everything off-diagonal
    // already captured and subtracted.
    const Eigen::MatrixXd& sl = plan.leaf_sampler();
    Eigen::MatrixXd y = oracle.apply(sl) - out.h.matvec(sl);
    for (Index b = 0; b < tree.num_leaves(); ++b) {
        auto r = tree.leaves()[b];
        out.h.leaf(b) = y.block(r.lo, 0, r.size(), r.size());
    }
    for (Index param = 0; param < p; ++param) {
        Eigen::MatrixXd dyl = oracle.apply_derivative(static_cast<int>(param), sl) -
                              out.deriv[param].matvec(sl);
        for (Index b = 0; b < tree.num_leaves(); ++b) {
            auto r = tree.leaves()[b];
            out.deriv[param].leaf(b) = dyl.block(r.lo, 0, r.size(), r.size());
        }
    }

    // The concatenated derivative factors are usually far from full column
    // rank; re-factoring them at numerical rank keeps every downstream
    // trace pipeline proportional to the true ranks.
    for (Index param = 0; param < p; ++param)
        for (int l = 1; l <= tau; ++l) {
            const Index nodes = static_cast<Index>(tree.level(l - 1).size());
#pragma omp parallel for schedule(static)
            for (Index j = 0; j < nodes; ++j)
                out.deriv[param].upper(l, j) =
                    out.deriv[param].upper(l, j).compressed(1e-13);
        }
    return out;
}

}  // namespace

HodlrMatrix build_hodlr(const CovarianceOracle& oracle, const ClusterTree& tree, Index k,
                        const SketchPlan& plan) {
    return build_impl(oracle, tree, k, plan, false).h;
}

BuildResult build_hodlr_with_derivatives(const CovarianceOracle& oracle,
                                         const ClusterTree& tree, Index k,
                                         const SketchPlan& plan) {
    return build_impl(oracle, tree, k, plan, true);
}

}  // namespace hodlrgp
