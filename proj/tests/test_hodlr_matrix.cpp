#include <Eigen/Dense>
#include <random>

#include "doctest.h"
#include "hodlrgp/hodlr_matrix.hpp"

using namespace hodlrgp;

namespace {

Eigen::MatrixXd random_sym(Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Eigen::MatrixXd a(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) a(i, j) = g(rng);
    return 0.5 * (a + a.transpose());
}

}  // namespace

TEST_SUITE_BEGIN("hodlr_matrix");

TEST_CASE("from_dense round-trips an arbitrary symmetric matrix") {
    ClusterTree tree(70, 3);
    Eigen::MatrixXd a = random_sym(70, 1);
    HodlrMatrix h = HodlrMatrix::from_dense(tree, a, true);
    CHECK((h.densify() - a).norm() <= 1e-12 * a.norm());
}

TEST_CASE("from_dense round-trips an asymmetric matrix") {
    ClusterTree tree(64, 2);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    Eigen::MatrixXd a(64, 64);
    for (Index i = 0; i < 64; ++i)
        for (Index j = 0; j < 64; ++j) a(i, j) = g(rng);
    HodlrMatrix h = HodlrMatrix::from_dense(tree, a, false);
    CHECK((h.densify() - a).norm() <= 1e-12 * a.norm());
}

TEST_CASE("matvec agrees with the dense oracle") {
    ClusterTree tree(61, 3);
    Eigen::MatrixXd a = random_sym(61, 3);
    HodlrMatrix h = HodlrMatrix::from_dense(tree, a, true);
    Eigen::MatrixXd x = random_sym(61, 4).leftCols(5);
    CHECK((h.matvec(x) - a * x).norm() <= 1e-11 * (a * x).norm());
    Eigen::VectorXd v = x.col(0);
    CHECK((h.matvec(v) - a * v).norm() <= 1e-11 * (a * v).norm());
}

TEST_CASE("sub_matvec applies the diagonal sub-block, optionally transposed") {
    ClusterTree tree(64, 3);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    Eigen::MatrixXd a(64, 64);
    for (Index i = 0; i < 64; ++i)
        for (Index j = 0; j < 64; ++j) a(i, j) = g(rng);
    HodlrMatrix h = HodlrMatrix::from_dense(tree, a, false);
    for (int d = 0; d <= 3; ++d) {
        for (Index node = 0; node < (Index{1} << d); ++node) {
            auto r = tree.level(d)[node];
            Eigen::MatrixXd sub = a.block(r.lo, r.lo, r.size(), r.size());
            Eigen::MatrixXd x = random_sym(r.size(), 100 + d).leftCols(3);
            CHECK((h.sub_matvec(d, node, x) - sub * x).norm() <= 1e-11 * x.norm());
            CHECK((h.sub_matvec(d, node, x, true) - sub.transpose() * x).norm() <=
                  1e-11 * x.norm());
        }
    }
}

TEST_CASE("random_spd densifies to a positive definite symmetric matrix") {
    ClusterTree tree(96, 3);
    HodlrMatrix h = HodlrMatrix::random_spd(tree, 5, 11);
    Eigen::MatrixXd a = h.densify();
    CHECK((a - a.transpose()).norm() <= 1e-13 * a.norm());
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    CHECK(llt.info() == Eigen::Success);
}

TEST_CASE("symmetric storage derives the lower block as the transpose") {
    ClusterTree tree(32, 2);
    HodlrMatrix h = HodlrMatrix::random_spd(tree, 3, 7);
    LowRankBlock up = h.upper(1, 0);
    LowRankBlock lo = h.lower_block(1, 0);
    CHECK((lo.dense() - up.dense().transpose()).norm() <= 1e-14);
    Eigen::MatrixXd before = h.densify();
    h.make_asymmetric();
    CHECK(!h.symmetric());
    CHECK((h.densify() - before).norm() <= 1e-14 * before.norm());
}

TEST_CASE("trace and trace_product match dense values") {
    ClusterTree tree(80, 3);
    HodlrMatrix ha = HodlrMatrix::random_spd(tree, 4, 21);
    HodlrMatrix hb = HodlrMatrix::random_symmetric(tree, 4, 22);
    Eigen::MatrixXd a = ha.densify(), b = hb.densify();
    CHECK(ha.trace() == doctest::Approx(a.trace()).epsilon(1e-12));
    CHECK(HodlrMatrix::trace_product(ha, hb) ==
          doctest::Approx((a * b).trace()).epsilon(1e-10));

    // Asymmetric operands too.
    ha.make_asymmetric();
    CHECK(HodlrMatrix::trace_product(ha, hb) ==
          doctest::Approx((a * b).trace()).epsilon(1e-10));
}

TEST_CASE("ragged leaf sizes are handled") {
    ClusterTree tree(77, 2);  // leaves 20/20/19/18
    Eigen::MatrixXd a = random_sym(77, 31);
    HodlrMatrix h = HodlrMatrix::from_dense(tree, a, true);
    Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(77, -1, 1);
    CHECK((h.matvec(v) - a * v).norm() <= 1e-11 * (a * v).norm());
}

TEST_SUITE_END();
