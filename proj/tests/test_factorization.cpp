#include <Eigen/Dense>

#include "doctest.h"
#include "hodlrgp/factorization.hpp"

using namespace hodlrgp;

TEST_SUITE_BEGIN("factorization");

TEST_CASE("right-oriented solve inverts the matrix") {
    ClusterTree tree(128, 3);
    HodlrMatrix h = HodlrMatrix::random_spd(tree, 4, 1);
    Eigen::MatrixXd a = h.densify();
    HodlrFactorization f = factorize(h, Orientation::Right);
    Eigen::MatrixXd b = Eigen::MatrixXd::Random(128, 4);
    Eigen::MatrixXd x = f.solve(b);
    CHECK((a * x - b).norm() <= 1e-9 * b.norm());
}

TEST_CASE("left-oriented solve inverts the matrix") {
    ClusterTree tree(144, 3);  // ragged leaves
    HodlrMatrix h = HodlrMatrix::random_spd(tree, 5, 2);
    Eigen::MatrixXd a = h.densify();
    HodlrFactorization f = factorize(h, Orientation::Left);
    Eigen::VectorXd b = Eigen::VectorXd::Random(144);
    Eigen::VectorXd x = f.solve(b);
    CHECK((a * x - b).norm() <= 1e-9 * b.norm());
}

TEST_CASE("logdet matches the dense Cholesky value") {
    ClusterTree tree(100, 2);
    HodlrMatrix h = HodlrMatrix::random_spd(tree, 3, 3);
    Eigen::MatrixXd a = h.densify();
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    REQUIRE(llt.info() == Eigen::Success);
    double exact = 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
    for (auto orient : {Orientation::Right, Orientation::Left}) {
        HodlrFactorization f = factorize(h, orient);
        CHECK(f.logdet() == doctest::Approx(exact).epsilon(1e-10));
    }
}

TEST_CASE("factor structure: level i has 2^(i-1) rank-2k identity updates") {
    ClusterTree tree(256, 3);
    Index k = 4;
    HodlrMatrix h = HodlrMatrix::random_spd(tree, k, 4);
    HodlrFactorization f = factorize(h);
    REQUIRE(f.depth() == 3);
    for (int i = 1; i <= 3; ++i) {
        const auto& lev = f.level(i);
        CHECK(lev.size() == std::size_t(1) << (i - 1));
        for (const auto& blk : lev) CHECK(blk.u.cols() == 2 * k);
    }
    // Reassemble A from the factorization:
    // A = Abar (I + U^(tau) V^(tau)T) ... (I + U^(1) V^(1)T).
    Eigen::MatrixXd acc = Eigen::MatrixXd::Identity(256, 256);
    for (int i = 1; i <= 3; ++i) {
        Eigen::MatrixXd fac = Eigen::MatrixXd::Identity(256, 256);
        const auto& nodes = tree.level(i - 1);
        for (std::size_t j = 0; j < nodes.size(); ++j) {
            const auto& blk = f.level(i)[j];
            fac.block(nodes[j].lo, nodes[j].lo, nodes[j].size(), nodes[j].size()) +=
                blk.u * blk.v.transpose();
        }
        acc = fac * acc;  // coarser factors applied last (rightmost first)
    }
    Eigen::MatrixXd abar = Eigen::MatrixXd::Zero(256, 256);
    for (Index b = 0; b < tree.num_leaves(); ++b) {
        auto r = tree.leaves()[b];
        abar.block(r.lo, r.lo, r.size(), r.size()) =
            f.leaf(b).multiply(Eigen::MatrixXd::Identity(r.size(), r.size()));
    }
    CHECK((abar * acc - h.densify()).norm() <= 1e-9 * h.densify().norm());
}

TEST_CASE("logdet rejects matrices with non-positive determinant sign") {
    ClusterTree tree(32, 1);
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(32, 32);
    a(0, 0) = -1.0;  // det < 0 through a leaf block
    HodlrMatrix h = HodlrMatrix::from_dense(tree, a, true);
    HodlrFactorization f = factorize(h);
    CHECK_THROWS_AS((void)f.logdet(), NotPositiveDefinite);
}

TEST_CASE("depth-0 tree degenerates to a dense factorization") {
    ClusterTree tree(20, 0);
    Eigen::MatrixXd g = Eigen::MatrixXd::Random(20, 20);
    Eigen::MatrixXd a = g * g.transpose() + 20.0 * Eigen::MatrixXd::Identity(20, 20);
    HodlrMatrix h = HodlrMatrix::from_dense(tree, a, true);
    HodlrFactorization f = factorize(h);
    Eigen::VectorXd b = Eigen::VectorXd::Random(20);
    CHECK((a * f.solve(b) - b).norm() <= 1e-10 * b.norm());
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    double exact = 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
    CHECK(f.logdet() == doctest::Approx(exact).epsilon(1e-11));
}

TEST_SUITE_END();
