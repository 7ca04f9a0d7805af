#include "hodlrgp/models/adr.hpp"

#include <cmath>
#include <stdexcept>

namespace hodlrgp {

namespace {

Eigen::Vector2d adr_velocity(double x, double y) { return {x + 5.0, y + 5.0}; }

constexpr double kKappa = 0.001;
constexpr double kReact = 0.5;

}  // namespace

AdrOracle::AdrOracle(std::shared_ptr<const FemDiscretization> matern_fem,
                     std::shared_ptr<const FemDiscretization> adr_fem, Eigen::MatrixXd obs,
                     double sigma_n)
    : matern_fem_(std::move(matern_fem)),
      adr_fem_(std::move(adr_fem)),
      matern_(*matern_fem_),
      obs_(std::move(obs)),
      sigma_n_(sigma_n) {
    if (obs_.cols() != 2) throw std::invalid_argument("AdrOracle: observations must be 2D");
    phi_a_ = adr_fem_->interpolation(obs_);
    p_m_ = matern_fem_->interpolation(adr_fem_->nodes);

    Eigen::SparseMatrix<double> lhat =
        assemble_adr_operator(*adr_fem_, kKappa, kReact, adr_velocity);
    lu_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
    lu_->compute(lhat);
    if (lu_->info() != Eigen::Success)
        throw std::runtime_error("AdrOracle: operator factorization failed");
    Eigen::SparseMatrix<double> lhat_t = lhat.transpose();
    lu_t_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
    lu_t_->compute(lhat_t);
    if (lu_t_->info() != Eigen::Success)
        throw std::runtime_error("AdrOracle: transposed operator factorization failed");

    double vmax = std::sqrt(2.0) * 10.0;  // |vel| peaks at the (5,5) corner
    peclet_ = vmax * std::max(adr_fem_->hx, adr_fem_->hy) / (2.0 * kKappa);

    // Deterministic source mean pushed through the solve.
    Eigen::VectorXd m_phi(matern_fem_->n_basis);
    for (Index i = 0; i < matern_fem_->n_basis; ++i) {
        double x = matern_fem_->nodes(i, 0), y = matern_fem_->nodes(i, 1);
        m_phi[i] = 20.0 * std::exp(-(x * x + y * y) / 8.0);
    }
    mean_ = g_apply(m_phi);

    theta_.resize(2);
    theta_ << 1.0, 1.0;  // (sigma_phi, l)
}

void AdrOracle::set_parameters(const Eigen::VectorXd& theta) {
    if (theta.size() != 2) throw std::invalid_argument("AdrOracle: need 2 parameters");
    if (theta[0] <= 0 || theta[1] <= 0)
        throw std::invalid_argument("AdrOracle: sigma_phi, l must be positive");
    theta_ = theta;
}

Eigen::MatrixXd AdrOracle::g_apply(const Eigen::Ref<const Eigen::MatrixXd>& x) const {
    Eigen::MatrixXd u = p_m_ * x;
    u = adr_fem_->c * u;
    u = lu_->solve(u);
    return phi_a_ * u;
}

Eigen::MatrixXd AdrOracle::gt_apply(const Eigen::Ref<const Eigen::MatrixXd>& v) const {
    Eigen::MatrixXd u = phi_a_.transpose() * v;
    u = lu_t_->solve(u);
    u = adr_fem_->c.transpose() * u;
    return p_m_.transpose() * u;
}

Eigen::MatrixXd AdrOracle::do_apply(const Eigen::Ref<const Eigen::MatrixXd>& v) const {
    const double sp = theta_[0], l = theta_[1];
    Eigen::MatrixXd x = gt_apply(v);
    Eigen::MatrixXd w = (sp * sp) * matern_.apply(l, x);
    return g_apply(w) + sigma_n_ * v;
}

Eigen::MatrixXd AdrOracle::do_apply_derivative(int j,
                                               const Eigen::Ref<const Eigen::MatrixXd>& v) const {
    const double sp = theta_[0], l = theta_[1];
    Eigen::MatrixXd x = gt_apply(v);
    Eigen::MatrixXd w;
    if (j == 0)
        w = (2.0 * sp) * matern_.apply(l, x);
    else if (j == 1)
        w = (sp * sp) * matern_.apply_dl(l, x);
    else
        throw std::invalid_argument("AdrOracle: parameter index out of range");
    return g_apply(w);
}

Eigen::VectorXd AdrOracle::sample(const Eigen::VectorXd& theta, std::mt19937_64& rng) const {
    const double sp = theta[0], l = theta[1];
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd z(matern_fem_->n_basis);
    for (Index i = 0; i < z.size(); ++i) z[i] = gauss(rng);
    Eigen::VectorXd field = sp * matern_.sample_sqrt(l, z);
    return mean_ + g_apply(field).col(0);
}

}  // namespace hodlrgp
