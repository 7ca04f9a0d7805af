#pragma once

#include "hodlrgp/oracle.hpp"

namespace hodlrgp {

/// Nonstationary 1D squared-exponential kernel with linearly varying length
/// scale l(x) = a + b x: K(xi, xj) = sigma * exp(-(xi - xj)^2 / (2 li lj)).
double nonstationary_1d_cov(double a, double b, double sigma, double xi, double xj);

/// Dense oracle for the 1D demo (n <= 10^3); theta = (a, b), sigma known.
/// The bare kernel is indefinite once b l' grows (min eigenvalue ~ -0.02 at
/// b = 0.6 on [0,10]); the nugget acts as a known noise variance that keeps
/// the matrix SPD over the parameter region the optimizer visits.
class Nonstationary1dOracle : public CovarianceOracle {
public:
    explicit Nonstationary1dOracle(Eigen::VectorXd x, double sigma = 1.0,
                                   double nugget = 0.05);

    Index dim() const override { return x_.size(); }
    Index num_params() const override { return 2; }
    Eigen::VectorXd parameters() const override { return theta_; }
    void set_parameters(const Eigen::VectorXd& theta) override;

    const Eigen::MatrixXd& dense() const { return k_; }
    const Eigen::VectorXd& points() const { return x_; }

protected:
    Eigen::MatrixXd do_apply(const Eigen::Ref<const Eigen::MatrixXd>& v) const override;
    Eigen::MatrixXd do_apply_derivative(int j,
                                        const Eigen::Ref<const Eigen::MatrixXd>& v) const override;

private:
    void rebuild();

    Eigen::VectorXd x_;
    double sigma_;
    double nugget_;
    Eigen::VectorXd theta_;
    Eigen::MatrixXd k_, dka_, dkb_;
};

}  // namespace hodlrgp
