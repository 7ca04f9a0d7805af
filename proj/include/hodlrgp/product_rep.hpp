#pragma once

#include <Eigen/Dense>
#include <vector>

#include "hodlrgp/factorization.hpp"
#include "hodlrgp/hodlr_matrix.hpp"

namespace hodlrgp {

/// Exact quasilinear representation of A*B or A^{-1}B for HODLR operands:
/// an updated HODLR matrix plus one block-diagonal low-rank correction per
/// level, with 2^{i-1} diagonal blocks of width <= 2k at level i.
struct ProductRep {
    struct CorrBlock {
        Eigen::MatrixXd u;  // node_size x w
        Eigen::MatrixXd v;  // node_size x w
    };

    HodlrMatrix base;
    std::vector<std::vector<CorrBlock>> corrections;  // [i-1][node at depth i-1]

    Index size() const { return base.size(); }
    /// Dense assembly for small-n verification.
    Eigen::MatrixXd densify() const;
};

/// A*B with F the Right-oriented factorization of A. Factors of A are applied
/// to B coarsest first; each application updates previously spawned
/// corrections, updates the left factors of the running HODLR's coarser
/// off-diagonal blocks, and spawns one new correction level.
ProductRep multiply(const HodlrFactorization& f, const HodlrMatrix& b);

/// A^{-1}B with F the Left-oriented factorization of A: the same pipeline
/// with each factor replaced by its Woodbury inverse and the leaf factor by
/// per-block dense solves.
ProductRep solve_multiply(const HodlrFactorization& f, const HodlrMatrix& b);

/// Exact trace of the represented product: leaf diagonal sums plus per-block
/// small inner-product traces.
double trace_product_rep(const ProductRep& p);

/// tr(P Q) for two product representations over the same tree.
double trace_pair(const ProductRep& p, const ProductRep& q);

/// tr(A^{-1} B), exact up to roundoff, O(n log^2 n).
double trace_solve(const HodlrFactorization& f_left, const HodlrMatrix& b);
double trace_solve(const HodlrMatrix& a, const HodlrMatrix& b);

/// tr(A^{-1} B C^{-1} D), exact up to roundoff, O(n log^2 n). fa, fc must be
/// Left-oriented.
double trace_quad(const HodlrFactorization& fa, const HodlrMatrix& b,
                  const HodlrFactorization& fc, const HodlrMatrix& d);
double trace_quad(const HodlrMatrix& a, const HodlrMatrix& b, const HodlrMatrix& c,
                  const HodlrMatrix& d);

}  // namespace hodlrgp
