#include <Eigen/Dense>
#include <numeric>
#include <random>

#include "doctest.h"
#include "hodlrgp/cluster_tree.hpp"

using namespace hodlrgp;

TEST_SUITE_BEGIN("cluster_tree");

TEST_CASE("uniform tree partitions every level exactly") {
    ClusterTree t(100, 3);
    CHECK(t.size() == 100);
    CHECK(t.depth() == 3);
    for (int d = 0; d <= 3; ++d) {
        const auto& lv = t.level(d);
        CHECK(lv.size() == std::size_t(1) << d);
        CHECK(lv.front().lo == 0);
        CHECK(lv.back().hi == 100);
        for (std::size_t j = 1; j < lv.size(); ++j) CHECK(lv[j].lo == lv[j - 1].hi);
    }
}

TEST_CASE("left child takes the ceiling half") {
    ClusterTree t(11, 1);
    CHECK(t.level(1)[0].size() == 6);
    CHECK(t.level(1)[1].size() == 5);
}

TEST_CASE("depth rule") {
    CHECK(tree_depth(100, 32, 128) == 0);   // fits one leaf
    CHECK(tree_depth(1024, 128, 256) == 3);
    CHECK(tree_depth(512, 32, 64) == 4);
    CHECK(tree_depth(8192, 32, 64) == 8);
    CHECK(tree_depth(130, 64, 128) == 1);   // barely split
}

TEST_CASE("kd ordering is a permutation with consistent inverse") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    Eigen::MatrixXd pts(37, 2);
    for (Index i = 0; i < 37; ++i) {
        pts(i, 0) = u(rng);
        pts(i, 1) = u(rng);
    }
    KdOrdering kd = build_kd_ordering(PointSet{pts}, 4, 8);
    std::vector<bool> seen(37, false);
    for (Index i = 0; i < 37; ++i) {
        Index p = kd.perm[i];
        CHECK(p >= 0);
        CHECK(p < 37);
        CHECK(!seen[p]);
        seen[p] = true;
        CHECK(kd.inv[p] == i);
        CHECK(kd.reordered_coords(p, 0) == pts(i, 0));
        CHECK(kd.reordered_coords(p, 1) == pts(i, 1));
    }
    CHECK(kd.tree.size() == 37);
}

TEST_CASE("kd split separates along the longest axis") {
    // Points stretched along x: the root split must separate low-x from
    // high-x.
    Eigen::MatrixXd pts(8, 2);
    for (Index i = 0; i < 8; ++i) {
        pts(i, 0) = double(i) * 10.0;
        pts(i, 1) = double(i % 2);
    }
    KdOrdering kd = build_kd_ordering(PointSet{pts}, 2, 4);
    REQUIRE(kd.tree.depth() >= 1);
    auto left = kd.tree.level(1)[0];
    for (Index r = left.lo; r < left.hi; ++r) CHECK(kd.reordered_coords(r, 0) < 40.0);
}

TEST_CASE("kd leaves hold at least leaf_min points") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0, 1);
    Eigen::MatrixXd pts(129, 1);
    for (Index i = 0; i < 129; ++i) pts(i, 0) = u(rng);
    KdOrdering kd = build_kd_ordering(PointSet{pts}, 16, 32);
    for (const auto& leaf : kd.tree.leaves()) CHECK(leaf.size() >= 16);
}

TEST_SUITE_END();
