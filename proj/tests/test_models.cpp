#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "doctest.h"
#include "hodlrgp/models/experiment.hpp"
#include "hodlrgp/models/fem.hpp"
#include "hodlrgp/models/matern.hpp"
#include "hodlrgp/models/nonstationary1d.hpp"
#include "hodlrgp/models/simulate.hpp"

using namespace hodlrgp;

namespace {

Eigen::MatrixXd dense_apply(const CovarianceOracle& o) {
    return o.apply(Eigen::MatrixXd::Identity(o.dim(), o.dim()));
}

Eigen::MatrixXd dense_deriv(const CovarianceOracle& o, int j) {
    return o.apply_derivative(j, Eigen::MatrixXd::Identity(o.dim(), o.dim()));
}

// Central finite difference of the dense covariance in parameter j.
Eigen::MatrixXd fd_deriv(CovarianceOracle& o, int j, double h) {
    Eigen::VectorXd t = o.parameters();
    Eigen::VectorXd tp = t, tm = t;
    tp[j] += h;
    tm[j] -= h;
    o.set_parameters(tp);
    Eigen::MatrixXd kp = dense_apply(o);
    o.set_parameters(tm);
    Eigen::MatrixXd km = dense_apply(o);
    o.set_parameters(t);
    return (kp - km) / (2 * h);
}

}  // namespace

TEST_SUITE_BEGIN("models");

TEST_CASE("mass matrix integrates constants to the domain area") {
    FemDiscretization fem = assemble_fem(0.0, 2.0, 0.0, 1.0, 8);
    CHECK(fem.n_basis == 81);
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(fem.n_basis);
    CHECK(ones.dot(fem.c * ones) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(fem.c_lumped.sum() == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(((fem.c * ones) - fem.c_lumped).norm() <= 1e-13);
}

TEST_CASE("stiffness matrix annihilates constants and integrates gradients") {
    FemDiscretization fem = assemble_fem(-1.0, 1.0, -1.0, 1.0, 10);
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(fem.n_basis);
    CHECK((fem.s * ones).norm() <= 1e-12);
    // For u = x on [-1,1]^2: integral |grad u|^2 = area = 4.
    Eigen::VectorXd u(fem.n_basis);
    for (Index i = 0; i < fem.n_basis; ++i) u[i] = fem.nodes(i, 0);
    CHECK(u.dot(fem.s * u) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("interpolation is exact for affine functions") {
    FemDiscretization fem = assemble_fem(0.0, 1.0, 0.0, 1.0, 7);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.02, 0.98);
    Eigen::MatrixXd pts(40, 2);
    for (Index i = 0; i < 40; ++i) {
        pts(i, 0) = u(rng);
        pts(i, 1) = u(rng);
    }
    Eigen::SparseMatrix<double> phi = fem.interpolation(pts);
    Eigen::VectorXd lin(fem.n_basis);
    for (Index i = 0; i < fem.n_basis; ++i)
        lin[i] = 3.0 + 2.0 * fem.nodes(i, 0) - 0.5 * fem.nodes(i, 1);
    Eigen::VectorXd at = phi * lin;
    for (Index i = 0; i < 40; ++i)
        CHECK(at[i] == doctest::Approx(3.0 + 2.0 * pts(i, 0) - 0.5 * pts(i, 1))
                           .epsilon(1e-12));
    // Points outside the rectangle are rejected.
    Eigen::MatrixXd bad(1, 2);
    bad << 1.5, 0.5;
    CHECK_THROWS_AS((void)fem.interpolation(bad), std::invalid_argument);
}

TEST_CASE("grid difference operators are exact for affine node functions") {
    FemDiscretization fem = assemble_fem(0.0, 1.0, 0.0, 2.0, 6);
    Eigen::SparseMatrix<double> dx = grid_diff_x(fem), dy = grid_diff_y(fem);
    Eigen::VectorXd f(fem.n_basis);
    for (Index i = 0; i < fem.n_basis; ++i)
        f[i] = 1.0 + 4.0 * fem.nodes(i, 0) - 3.0 * fem.nodes(i, 1);
    CHECK(((dx * f).array() - 4.0).abs().maxCoeff() <= 1e-11);
    CHECK(((dy * f).array() + 3.0).abs().maxCoeff() <= 1e-11);
}

TEST_CASE("advection-reaction Galerkin matrix matches quadrature identities") {
    FemDiscretization fem = assemble_fem(0.0, 1.0, 0.0, 1.0, 6);
    auto vel = [](double, double) { return Eigen::Vector2d(1.0, 0.0); };
    Eigen::SparseMatrix<double> l = assemble_adr_operator(fem, 0.0, 0.0, vel);
    // For pure advection with v = e_x: 1^T L u = boundary integral of u v.n
    // (divergence-free v, integration by parts); test against u = x.
    Eigen::VectorXd u(fem.n_basis), ones = Eigen::VectorXd::Ones(fem.n_basis);
    for (Index i = 0; i < fem.n_basis; ++i) u[i] = fem.nodes(i, 0);
    // integral of du/dx over the unit square = 1.
    CHECK(ones.dot(l * u) == doctest::Approx(1.0).epsilon(1e-12));
    // Reaction term alone reduces to the mass matrix.
    Eigen::SparseMatrix<double> r =
        assemble_adr_operator(fem, 0.0, 2.5, [](double, double) { return Eigen::Vector2d::Zero(); });
    CHECK((Eigen::MatrixXd(r) - 2.5 * Eigen::MatrixXd(fem.c)).norm() <= 1e-12);
}

TEST_CASE("latent Matern covariance approximates the exact Bessel kernel") {
    FemDiscretization fem = assemble_fem(-8.0, 8.0, -8.0, 8.0, 64);
    MaternOperator matern(fem);
    const double l = 1.0;
    // Columns of K_w at interpolation points near the center.
    Eigen::MatrixXd pts(2, 2);
    pts << 0.0, 0.0, 1.3, 0.0;
    Eigen::SparseMatrix<double> phi = fem.interpolation(pts);
    Eigen::MatrixXd rhs = Eigen::MatrixXd(phi.transpose());
    Eigen::MatrixXd cols = matern.apply(l, rhs);
    Eigen::MatrixXd small = Eigen::MatrixXd(phi) * cols;  // 2x2 covariance
    CHECK(small(0, 0) == doctest::Approx(1.0).epsilon(0.05));  // unit marginal variance
    double corr = small(0, 1) / std::sqrt(small(0, 0) * small(1, 1));
    CHECK(corr == doctest::Approx(matern_exact_cov(1.3, l)).epsilon(0.05));
    CHECK(matern_exact_cov(0.0, l) == 1.0);
    CHECK(matern_exact_cov(10.0, 1.0) < 1e-3);
}

TEST_CASE("Matern length-scale derivative matches finite differences") {
    FemDiscretization fem = assemble_fem(-3.0, 3.0, -3.0, 3.0, 16);
    MaternOperator matern(fem);
    Eigen::MatrixXd v = Eigen::MatrixXd::Random(fem.n_basis, 3);
    const double l = 0.8, h = 1e-5;
    Eigen::MatrixXd fd = (matern.apply(l + h, v) - matern.apply(l - h, v)) / (2 * h);
    Eigen::MatrixXd an = matern.apply_dl(l, v);
    CHECK((an - fd).norm() <= 1e-6 * fd.norm());
}

TEST_CASE("Matern square-root sampler reproduces the covariance") {
    FemDiscretization fem = assemble_fem(-2.0, 2.0, -2.0, 2.0, 10);
    MaternOperator matern(fem);
    const double l = 0.7;
    Eigen::MatrixXd m =
        matern.sample_sqrt(l, Eigen::MatrixXd::Identity(fem.n_basis, fem.n_basis));
    Eigen::MatrixXd kw = matern.apply(l, Eigen::MatrixXd::Identity(fem.n_basis, fem.n_basis));
    CHECK((m * m.transpose() - kw).norm() <= 1e-10 * kw.norm());
}

TEST_CASE("wind covariance is symmetric positive definite with exact derivatives") {
    WindExperiment exp(32, 12, 5);
    Eigen::VectorXd theta(4);
    theta << 0.4, 1.1, 0.6, 0.8;
    exp.oracle().set_parameters(theta);
    exp.oracle().set_sigma_n(0.01);
    Eigen::MatrixXd k = dense_apply(exp.oracle());
    CHECK(k.rows() == 64);
    CHECK((k - k.transpose()).norm() <= 1e-11 * k.norm());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
    CHECK(es.eigenvalues().minCoeff() >= 0.009);  // at least the nugget
    for (int j = 0; j < 4; ++j) {
        Eigen::MatrixXd an = dense_deriv(exp.oracle(), j);
        Eigen::MatrixXd fd = fd_deriv(exp.oracle(), j, 1e-5);
        CHECK((an - fd).norm() <= 2e-6 * (1.0 + fd.norm()));
    }
    CHECK_THROWS_AS(exp.oracle().set_parameters(Eigen::Vector4d(1.5, 1, 1, 1)),
                    std::invalid_argument);
}

TEST_CASE("wind sampler covariance matches the oracle covariance statistically") {
    WindExperiment exp(16, 10, 3);
    Eigen::VectorXd theta(4);
    theta << 0.5, 1.0, 0.5, 0.9;
    exp.oracle().set_parameters(theta);
    exp.oracle().set_sigma_n(0.0);
    Eigen::MatrixXd k = dense_apply(exp.oracle());
    std::mt19937_64 rng(77);
    const int m = 4000;
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(32, 32);
    for (int s = 0; s < m; ++s) {
        Eigen::VectorXd draw = exp.oracle().sample(theta, rng);
        acc.noalias() += draw * draw.transpose();
    }
    acc /= double(m);
    // Fixed seed: deterministic; 4000 draws put the empirical covariance
    // within a few percent of the truth in Frobenius norm.
    CHECK((acc - k).norm() <= 0.10 * k.norm());
}

TEST_CASE("ADR covariance: SPD, analytic derivatives, mean and Peclet flag") {
    AdrExperiment exp(24, 24, 16, 9);
    Eigen::VectorXd theta(2);
    theta << 1.2, 0.9;
    exp.oracle().set_parameters(theta);
    exp.oracle().set_sigma_n(0.02);
    Eigen::MatrixXd k = dense_apply(exp.oracle());
    CHECK((k - k.transpose()).norm() <= 1e-11 * k.norm());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
    CHECK(es.eigenvalues().minCoeff() >= 0.019);
    for (int j = 0; j < 2; ++j) {
        Eigen::MatrixXd an = dense_deriv(exp.oracle(), j);
        Eigen::MatrixXd fd = fd_deriv(exp.oracle(), j, 1e-5);
        CHECK((an - fd).norm() <= 2e-6 * (1.0 + fd.norm()));
    }
    CHECK(exp.mean().size() == 24);
    CHECK(exp.mean().norm() > 0.0);
    CHECK(exp.oracle().peclet() > 0.0);
}

TEST_CASE("ADR sampler covariance matches the oracle covariance statistically") {
    AdrExperiment exp(16, 16, 12, 2);
    Eigen::VectorXd theta(2);
    theta << 1.0, 1.0;
    exp.oracle().set_parameters(theta);
    exp.oracle().set_sigma_n(0.0);
    Eigen::MatrixXd k = dense_apply(exp.oracle());
    std::mt19937_64 rng(5);
    const int m = 4000;
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(16, 16);
    for (int s = 0; s < m; ++s) {
        Eigen::VectorXd draw = exp.oracle().sample(theta, rng) - exp.mean();
        acc.noalias() += draw * draw.transpose();
    }
    acc /= double(m);
    CHECK((acc - k).norm() <= 0.10 * k.norm());
}

TEST_CASE("1D kernel values and derivatives") {
    CHECK(nonstationary_1d_cov(0.1, 0.6, 1.0, 2.0, 2.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS((void)nonstationary_1d_cov(0.1, -0.6, 1.0, 2.0, 2.0),
                    std::invalid_argument);
    Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(20, 0.0, 10.0);
    Nonstationary1dOracle oracle(x);
    Eigen::VectorXd theta(2);
    theta << 0.15, 0.5;
    oracle.set_parameters(theta);
    Eigen::MatrixXd k = oracle.dense();
    CHECK(k(3, 3) == doctest::Approx(1.0 + 0.05));
    CHECK(k(2, 7) ==
          doctest::Approx(nonstationary_1d_cov(0.15, 0.5, 1.0, x[2], x[7])).epsilon(1e-13));
    for (int j = 0; j < 2; ++j) {
        Eigen::MatrixXd an = dense_deriv(oracle, j);
        Eigen::MatrixXd fd = fd_deriv(oracle, j, 1e-6);
        CHECK((an - fd).norm() <= 1e-7 * (1.0 + fd.norm()));
    }
}

TEST_CASE("regular grids nest under coarsening by two") {
    Eigen::MatrixXd fine = regular_grid(16, -5.0, 5.0);
    Eigen::MatrixXd coarse = regular_grid(8, -5.0, 5.0);
    CHECK(fine.rows() == 256);
    CHECK(coarse.rows() == 64);
    for (Index i = 0; i < coarse.rows(); ++i) {
        bool found = false;
        for (Index j = 0; j < fine.rows(); ++j)
            if ((fine.row(j) - coarse.row(i)).norm() <= 1e-12) found = true;
        CHECK(found);
    }
}

TEST_CASE("observation point sets are deterministic with the requested count") {
    Eigen::MatrixXd a = observation_points(512, -5.0, 5.0, 3);
    Eigen::MatrixXd b = observation_points(512, -5.0, 5.0, 3);
    CHECK(a.rows() == 512);
    CHECK((a - b).norm() == 0.0);
    CHECK(a.col(0).minCoeff() >= -5.0);
    CHECK(a.col(0).maxCoeff() <= 5.0);
    Eigen::MatrixXd full = observation_points(1024, -5.0, 5.0, 3);
    CHECK(full.rows() == 1024);  // exact power-of-two grid, no thinning
}

TEST_CASE("dense Gaussian sampler is seeded and matches its covariance") {
    Eigen::MatrixXd k = Eigen::MatrixXd::Identity(3, 3);
    k(0, 1) = k(1, 0) = 0.5;
    Eigen::VectorXd mu(3);
    mu << 1.0, 2.0, 3.0;
    Eigen::VectorXd y1 = sample_gaussian_dense(k, mu, 11);
    Eigen::VectorXd y2 = sample_gaussian_dense(k, mu, 11);
    CHECK((y1 - y2).norm() == 0.0);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(3);
    for (int s = 0; s < 2000; ++s) acc += sample_gaussian_dense(k, mu, 100 + s);
    CHECK((acc / 2000.0 - mu).norm() <= 0.1);
}

TEST_SUITE_END();
