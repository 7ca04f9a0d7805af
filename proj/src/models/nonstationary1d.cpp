#include "hodlrgp/models/nonstationary1d.hpp"

#include "hodlrgp/factorization.hpp"

#include <cmath>
#include <stdexcept>

namespace hodlrgp {

double nonstationary_1d_cov(double a, double b, double sigma, double xi, double xj) {
    double li = a + b * xi, lj = a + b * xj;
    if (li <= 0 || lj <= 0)
        throw std::invalid_argument("nonstationary_1d_cov: length scale must stay positive");
    double d = xi - xj;
    return sigma * std::exp(-d * d / (2.0 * li * lj));
}

Nonstationary1dOracle::Nonstationary1dOracle(Eigen::VectorXd x, double sigma, double nugget)
    : x_(std::move(x)), sigma_(sigma), nugget_(nugget) {
    theta_.resize(2);
    theta_ << 0.1, 0.6;
    rebuild();
}

void Nonstationary1dOracle::set_parameters(const Eigen::VectorXd& theta) {
    if (theta.size() != 2) throw std::invalid_argument("Nonstationary1dOracle: need 2 params");
    theta_ = theta;
    rebuild();
}

void Nonstationary1dOracle::rebuild() {
    const Index n = x_.size();
    const double a = theta_[0], b = theta_[1];
    k_.resize(n, n);
    dka_.resize(n, n);
    dkb_.resize(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j <= i; ++j) {
            double li = a + b * x_[i], lj = a + b * x_[j];
            if (li <= 0 || lj <= 0)
                throw NotPositiveDefinite("Nonstationary1dOracle: nonpositive length scale");
            double d = x_[i] - x_[j];
            double v = sigma_ * std::exp(-d * d / (2.0 * li * lj));
            // d/dtheta of -d^2/(2 li lj): the product rule on (li lj)^{-1}.
            double common = v * d * d / (2.0 * li * li * lj * lj);
            double da = common * (li + lj);
            double db = common * (x_[i] * lj + x_[j] * li);
            k_(i, j) = k_(j, i) = v;
            dka_(i, j) = dka_(j, i) = da;
            dkb_(i, j) = dkb_(j, i) = db;
        }
    k_.diagonal().array() += nugget_;
}

Eigen::MatrixXd Nonstationary1dOracle::do_apply(const Eigen::Ref<const Eigen::MatrixXd>& v) const {
    return k_ * v;
}

Eigen::MatrixXd Nonstationary1dOracle::do_apply_derivative(
    int j, const Eigen::Ref<const Eigen::MatrixXd>& v) const {
    if (j == 0) return dka_ * v;
    if (j == 1) return dkb_ * v;
    throw std::invalid_argument("Nonstationary1dOracle: parameter index out of range");
}

}  // namespace hodlrgp
