#include "hodlrgp/models/wind.hpp"

#include <cmath>
#include <stdexcept>

namespace hodlrgp {

WindOracle::WindOracle(std::shared_ptr<const FemDiscretization> fem, Eigen::MatrixXd obs,
                       double sigma_n)
    : fem_(std::move(fem)),
      matern_(*fem_),
      obs_(std::move(obs)),
      sigma_n_(sigma_n) {
    if (obs_.cols() != 2) throw std::invalid_argument("WindOracle: observations must be 2D");
    phi_ = fem_->interpolation(obs_);
    l1_ = grid_diff_x(*fem_);
    l2_ = grid_diff_y(*fem_);
    theta_.resize(4);
    theta_ << 0.5, 1.0, 1.0, 0.5;  // (rho, sigma_phi, sigma_chi, l)
}

void WindOracle::set_parameters(const Eigen::VectorXd& theta) {
    if (theta.size() != 4) throw std::invalid_argument("WindOracle: need 4 parameters");
    if (std::abs(theta[0]) >= 1.0) throw std::invalid_argument("WindOracle: |rho| < 1 required");
    if (theta[1] <= 0 || theta[2] <= 0 || theta[3] <= 0)
        throw std::invalid_argument("WindOracle: sigma_phi, sigma_chi, l must be positive");
    theta_ = theta;
}

Eigen::MatrixXd WindOracle::apply_core(const Eigen::Ref<const Eigen::MatrixXd>& v,
                                       Mode mode) const {
    const Index n = obs_.rows();
    if (v.rows() != 2 * n) throw std::invalid_argument("WindOracle: expected 2n rows");
    const double rho = theta_[0], sp = theta_[1], sc = theta_[2], l = theta_[3];

    // 2x2 cross-covariance (or its parameter derivative).
    double s11 = 0, s12 = 0, s22 = 0;
    switch (mode) {
        case Mode::Value:
        case Mode::DLength: s11 = sp * sp; s12 = rho * sp * sc; s22 = sc * sc; break;
        case Mode::DRho: s11 = 0; s12 = sp * sc; s22 = 0; break;
        case Mode::DSigmaPhi: s11 = 2 * sp; s12 = rho * sc; s22 = 0; break;
        case Mode::DSigmaChi: s11 = 0; s12 = rho * sp; s22 = 2 * sc; break;
    }

    Eigen::MatrixXd x1 = phi_.transpose() * v.topRows(n);
    Eigen::MatrixXd x2 = phi_.transpose() * v.bottomRows(n);
    // L^T = [[-L2^T, L1^T], [L1^T, L2^T]]
    Eigen::MatrixXd y1 = -(l2_.transpose() * x1) + l1_.transpose() * x2;
    Eigen::MatrixXd y2 = l1_.transpose() * x1 + l2_.transpose() * x2;

    Eigen::MatrixXd w1, w2;
    if (mode == Mode::DLength) {
        w1 = matern_.apply_dl(l, y1);
        w2 = matern_.apply_dl(l, y2);
    } else {
        w1 = matern_.apply(l, y1);
        w2 = matern_.apply(l, y2);
    }
    Eigen::MatrixXd z1 = s11 * w1 + s12 * w2;
    Eigen::MatrixXd z2 = s12 * w1 + s22 * w2;

    Eigen::MatrixXd u1 = -(l2_ * z1) + l1_ * z2;
    Eigen::MatrixXd u2 = l1_ * z1 + l2_ * z2;

    Eigen::MatrixXd out(2 * n, v.cols());
    out.topRows(n) = phi_ * u1;
    out.bottomRows(n) = phi_ * u2;
    if (mode == Mode::Value) out += sigma_n_ * v;
    return out;
}

Eigen::MatrixXd WindOracle::do_apply(const Eigen::Ref<const Eigen::MatrixXd>& v) const {
    return apply_core(v, Mode::Value);
}

Eigen::MatrixXd WindOracle::do_apply_derivative(int j,
                                                const Eigen::Ref<const Eigen::MatrixXd>& v) const {
    switch (j) {
        case 0: return apply_core(v, Mode::DRho);
        case 1: return apply_core(v, Mode::DSigmaPhi);
        case 2: return apply_core(v, Mode::DSigmaChi);
        case 3: return apply_core(v, Mode::DLength);
        default: throw std::invalid_argument("WindOracle: parameter index out of range");
    }
}

Eigen::VectorXd WindOracle::sample(const Eigen::VectorXd& theta, std::mt19937_64& rng) const {
    const double rho = theta[0], sp = theta[1], sc = theta[2], l = theta[3];
    const Index nb = fem_->n_basis;
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd z(nb, 2);
    for (Index i = 0; i < nb; ++i) {
        z(i, 0) = gauss(rng);
        z(i, 1) = gauss(rng);
    }
    Eigen::MatrixXd w = matern_.sample_sqrt(l, z);  // two unit-variance latent fields
    // [phi; chi] = (chol(Sigma) kron I) [w1; w2]
    Eigen::VectorXd phi_field = sp * w.col(0);
    Eigen::VectorXd chi_field = rho * sc * w.col(0) + sc * std::sqrt(1.0 - rho * rho) * w.col(1);

    Eigen::VectorXd u_nodes = -(l2_ * phi_field) + l1_ * chi_field;
    Eigen::VectorXd v_nodes = l1_ * phi_field + l2_ * chi_field;

    const Index n = obs_.rows();
    Eigen::VectorXd out(2 * n);
    out.head(n) = phi_ * u_nodes;
    out.tail(n) = phi_ * v_nodes;
    return out;
}

}  // namespace hodlrgp
