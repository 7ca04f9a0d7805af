#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "doctest.h"
#include "hodlrgp/mle.hpp"
#include "hodlrgp/models/nonstationary1d.hpp"
#include "hodlrgp/models/simulate.hpp"
#include "hodlrgp/product_rep.hpp"

using namespace hodlrgp;

namespace {

// Two-parameter dense SPD family K(theta) = K0 + t0 D0 + t1 D1 with D_j SPD,
// giving exact analytic derivatives.
struct Family {
    ClusterTree tree;
    Eigen::MatrixXd k0, d0, d1;

    explicit Family(Index n, int tau, std::uint64_t seed) : tree(n, tau) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> g;
        auto rnd = [&](double shift) {
            Eigen::MatrixXd m(n, n);
            for (Index i = 0; i < n; ++i)
                for (Index j = 0; j < n; ++j) m(i, j) = g(rng);
            Eigen::MatrixXd s = m * m.transpose() / double(n);
            s.diagonal().array() += shift;
            return s;
        };
        k0 = rnd(4.0);
        d0 = rnd(1.0);
        d1 = rnd(1.0);
    }
    Eigen::MatrixXd k(const Eigen::VectorXd& t) const { return k0 + t[0] * d0 + t[1] * d1; }
    DenseMatrixOracle oracle(const Eigen::VectorXd& t) const {
        return DenseMatrixOracle(k(t), {d0, d1}, t);
    }
    double dense_loglik(const Eigen::VectorXd& t, const Eigen::VectorXd& y) const {
        Eigen::MatrixXd kk = k(t);
        Eigen::LLT<Eigen::MatrixXd> llt(kk);
        double ld = 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
        double q = y.dot(llt.solve(y));
        return -0.5 * double(y.size()) * std::log(2.0 * M_PI) - 0.5 * ld - 0.5 * q;
    }
};

}  // namespace

TEST_SUITE_BEGIN("mle");

TEST_CASE("log-likelihood, score and Fisher match the dense formulas") {
    Family fam(96, 2, 1);
    Eigen::VectorXd t(2);
    t << 0.7, 1.3;
    Eigen::MatrixXd kk = fam.k(t);
    HodlrMatrix h = HodlrMatrix::from_dense(fam.tree, kk, true);
    std::vector<HodlrMatrix> deriv = {HodlrMatrix::from_dense(fam.tree, fam.d0, true),
                                      HodlrMatrix::from_dense(fam.tree, fam.d1, true)};
    HodlrFactorization f = factorize(h, Orientation::Left);
    Eigen::VectorXd y = Eigen::VectorXd::Random(96);
    Eigen::VectorXd ybar = Eigen::VectorXd::Zero(96);

    CHECK(log_likelihood(f, y, ybar) ==
          doctest::Approx(fam.dense_loglik(t, y)).epsilon(1e-10));

    // Score against the dense identity S_j = -tr(K^{-1}K_j)/2 + w^T K_j w /2.
    Eigen::LLT<Eigen::MatrixXd> llt(kk);
    Eigen::VectorXd w = llt.solve(y);
    Eigen::MatrixXd kinv = llt.solve(Eigen::MatrixXd::Identity(96, 96));
    Eigen::VectorXd s = score(f, deriv, y, ybar);
    CHECK(s[0] == doctest::Approx(-0.5 * (kinv * fam.d0).trace() +
                                  0.5 * w.dot(fam.d0 * w)).epsilon(1e-9));
    CHECK(s[1] == doctest::Approx(-0.5 * (kinv * fam.d1).trace() +
                                  0.5 * w.dot(fam.d1 * w)).epsilon(1e-9));

    Eigen::MatrixXd fi = fisher_information(f, deriv);
    Eigen::MatrixXd m0 = kinv * fam.d0, m1 = kinv * fam.d1;
    CHECK(fi(0, 0) == doctest::Approx(0.5 * (m0 * m0).trace()).epsilon(1e-9));
    CHECK(fi(0, 1) == doctest::Approx(0.5 * (m0 * m1).trace()).epsilon(1e-9));
    CHECK(fi(1, 0) == fi(0, 1));
    CHECK(fi(1, 1) == doctest::Approx(0.5 * (m1 * m1).trace()).epsilon(1e-9));
}

TEST_CASE("score equals the finite-difference gradient of the likelihood") {
    Family fam(80, 2, 2);
    Eigen::VectorXd t(2);
    t << 0.5, 0.9;
    Eigen::VectorXd y = Eigen::VectorXd::Random(80);
    Eigen::VectorXd ybar = Eigen::VectorXd::Zero(80);
    HodlrMatrix h = HodlrMatrix::from_dense(fam.tree, fam.k(t), true);
    std::vector<HodlrMatrix> deriv = {HodlrMatrix::from_dense(fam.tree, fam.d0, true),
                                      HodlrMatrix::from_dense(fam.tree, fam.d1, true)};
    HodlrFactorization f = factorize(h, Orientation::Left);
    Eigen::VectorXd s = score(f, deriv, y, ybar);
    const double eps = 1e-5;
    for (int j = 0; j < 2; ++j) {
        Eigen::VectorXd tp = t, tm = t;
        tp[j] += eps;
        tm[j] -= eps;
        double fd = (fam.dense_loglik(tp, y) - fam.dense_loglik(tm, y)) / (2 * eps);
        CHECK(s[j] == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("likelihood subtracts a nonzero mean") {
    Family fam(64, 2, 3);
    Eigen::VectorXd t(2);
    t << 1.0, 1.0;
    HodlrMatrix h = HodlrMatrix::from_dense(fam.tree, fam.k(t), true);
    HodlrFactorization f = factorize(h, Orientation::Left);
    Eigen::VectorXd y = Eigen::VectorXd::Random(64);
    Eigen::VectorXd mu = Eigen::VectorXd::Constant(64, 0.37);
    CHECK(log_likelihood(f, y, mu) ==
          doctest::Approx(fam.dense_loglik(t, y - mu)).epsilon(1e-10));
}

TEST_CASE("stochastic trace estimator brackets the exact trace") {
    ClusterTree tree(256, 3);
    HodlrMatrix ha = HodlrMatrix::random_spd(tree, 4, 5);
    HodlrMatrix hb = HodlrMatrix::random_spd(tree, 4, 6);
    HodlrFactorization f = factorize(ha, Orientation::Left);
    double exact = trace_solve(f, hb);
    HutchinsonResult hr = hutchinson_trace(f, hb, 400, 17);
    CHECK(hr.std_error > 0.0);
    CHECK(std::abs(hr.estimate - exact) <= 4.0 * hr.std_error);
    HutchinsonResult hr4 = hutchinson_trace(f, hb, 1600, 17);
    CHECK(hr4.std_error <= 0.6 * hr.std_error);
    // Deterministic given the seed.
    HutchinsonResult again = hutchinson_trace(f, hb, 400, 17);
    CHECK(again.estimate == hr.estimate);
}

TEST_CASE("confidence intervals from a diagonal Fisher matrix") {
    Eigen::VectorXd th(2);
    th << 1.0, -2.0;
    Eigen::MatrixXd fi = Eigen::MatrixXd::Zero(2, 2);
    fi(0, 0) = 4.0;   // sd = 1/2
    fi(1, 1) = 0.25;  // sd = 2
    ConfidenceIntervals ci = confidence_intervals(th, fi);
    REQUIRE(ci.valid);
    CHECK(ci.bounds(0, 0) == doctest::Approx(1.0 - 1.959964 * 0.5).epsilon(1e-12));
    CHECK(ci.bounds(0, 1) == doctest::Approx(1.0 + 1.959964 * 0.5).epsilon(1e-12));
    CHECK(ci.bounds(1, 0) == doctest::Approx(-2.0 - 1.959964 * 2.0).epsilon(1e-12));

    Eigen::MatrixXd bad = fi;
    bad(1, 1) = -1.0;
    ConfidenceIntervals inv = confidence_intervals(th, bad);
    CHECK(!inv.valid);
}

TEST_CASE("dense_exact agrees with the factorized evaluation") {
    Family fam(72, 2, 4);
    Eigen::VectorXd t(2);
    t << 0.8, 1.1;
    DenseMatrixOracle oracle = fam.oracle(t);
    Eigen::VectorXd y = Eigen::VectorXd::Random(72);
    DenseExact de = dense_exact(oracle, y, Eigen::VectorXd());
    HodlrMatrix h = HodlrMatrix::from_dense(fam.tree, fam.k(t), true);
    std::vector<HodlrMatrix> deriv = {HodlrMatrix::from_dense(fam.tree, fam.d0, true),
                                      HodlrMatrix::from_dense(fam.tree, fam.d1, true)};
    HodlrFactorization f = factorize(h, Orientation::Left);
    CHECK(de.loglik ==
          doctest::Approx(log_likelihood(f, y, Eigen::VectorXd::Zero(72))).epsilon(1e-9));
    Eigen::VectorXd s = score(f, deriv, y, Eigen::VectorXd::Zero(72));
    CHECK((de.score - s).norm() <= 1e-8 * (1.0 + s.norm()));
    Eigen::MatrixXd fi = fisher_information(f, deriv);
    CHECK((de.fisher - fi).norm() <= 1e-8 * fi.norm());
}

TEST_CASE("accuracy metrics vanish for identical inputs and scale correctly") {
    Eigen::VectorXd s(2);
    s << 1.0, 2.0;
    Eigen::MatrixXd fi(2, 2);
    fi << 2.0, 0.3, 0.3, 1.0;
    AccuracyMetrics m = accuracy_metrics(-10.0, s, fi, -10.0, s, fi);
    CHECK(m.eps_L == 0.0);
    CHECK(m.eps_S == 0.0);
    CHECK(m.eps_I == 0.0);
    CHECK(m.eta_g == 0.0);
    CHECK(m.eta_I == doctest::Approx(0.0));

    AccuracyMetrics m2 = accuracy_metrics(-10.0, s, fi, -10.1, s, fi);
    CHECK(m2.eps_L == doctest::Approx(0.01).epsilon(1e-9));
}

TEST_CASE("dense-path MLE recovers parameters of the 1D model") {
    Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(151, 0.0, 10.0);
    Nonstationary1dOracle truth(x);
    Eigen::VectorXd theta_true(2);
    theta_true << 0.1, 0.6;
    truth.set_parameters(theta_true);
    Eigen::VectorXd y = sample_gaussian_dense(truth.dense(), Eigen::VectorXd(), 42);

    Nonstationary1dOracle oracle(x);
    GpProblem prob{oracle,
                   ClusterTree(151, 0),
                   0,
                   0,
                   y,
                   Eigen::VectorXd(),
                   {ParamTransform::Positive, ParamTransform::Positive}};
    FitOptions opts;
    opts.dense = true;
    Eigen::VectorXd t0(2);
    t0 << 0.3, 0.3;
    FitReport rep = fit_mle(prob, t0, opts);
    CHECK(rep.converged);
    CHECK(rep.status == "converged");
    REQUIRE(rep.ci_valid);
    // The truth lies inside (or very near) its own 95% interval on this draw.
    CHECK(rep.theta_hat[0] > 0.0);
    CHECK(rep.theta_hat[1] > 0.0);
    CHECK(rep.ci(1, 0) < 1.5 * theta_true[1]);
    CHECK(rep.ci(1, 1) > 0.5 * theta_true[1]);
    CHECK(rep.loglik_trace.size() == std::size_t(rep.iterations) + 1);
    CHECK(rep.loglik_trace.back() >= rep.loglik_trace.front());
}

TEST_CASE("sketch-based MLE matches the dense fit on an exactly low-rank family") {
    // K(theta) built from exactly HODLR-representable pieces: the sketching
    // path is lossless, so both fits optimize the same function.
    ClusterTree tree(192, 2);
    Index k = 4;
    HodlrMatrix base = HodlrMatrix::random_spd(tree, k, 8);
    HodlrMatrix bump = HodlrMatrix::random_spd(tree, k, 9);
    Eigen::MatrixXd k0 = base.densify(), d0 = bump.densify();

    struct OneParam : CovarianceOracle {
        Eigen::MatrixXd k0, d0;
        Eigen::VectorXd th = Eigen::VectorXd::Ones(1);
        Index dim() const override { return k0.rows(); }
        Index num_params() const override { return 1; }
        Eigen::VectorXd parameters() const override { return th; }
        void set_parameters(const Eigen::VectorXd& t) override { th = t; }
        Eigen::MatrixXd do_apply(const Eigen::Ref<const Eigen::MatrixXd>& v) const override {
            return k0 * v + th[0] * (d0 * v);
        }
        Eigen::MatrixXd do_apply_derivative(
            int, const Eigen::Ref<const Eigen::MatrixXd>& v) const override {
            return d0 * v;
        }
    } oracle;
    oracle.k0 = k0;
    oracle.d0 = d0;

    Eigen::VectorXd theta_true(1);
    theta_true << 0.8;
    Eigen::VectorXd y = sample_gaussian_dense(k0 + theta_true[0] * d0, Eigen::VectorXd(), 4);

    Eigen::VectorXd t0(1);
    t0 << 0.3;
    GpProblem hp{oracle, tree, 2 * k, 1234, y, Eigen::VectorXd(), {ParamTransform::Positive}};
    FitReport hodlr_fit = fit_mle(hp, t0);
    CHECK(hodlr_fit.converged);

    GpProblem dp{oracle, tree, 2 * k, 1234, y, Eigen::VectorXd(), {ParamTransform::Positive}};
    FitOptions dopts;
    dopts.dense = true;
    FitReport dense_fit = fit_mle(dp, t0, dopts);
    CHECK(dense_fit.converged);
    CHECK(hodlr_fit.theta_hat[0] ==
          doctest::Approx(dense_fit.theta_hat[0]).epsilon(1e-4));
    CHECK(hodlr_fit.apply_columns > 0);
    CHECK(hodlr_fit.derivative_columns > 0);
}

TEST_SUITE_END();
