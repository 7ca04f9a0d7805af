#pragma once

#include <memory>
#include <random>

#include "hodlrgp/models/matern.hpp"
#include "hodlrgp/oracle.hpp"

namespace hodlrgp {

/// Bivariate wind-velocity covariance built from a streamfunction/potential
/// pair with a shared SPDE Matern latent field:
///   K_U = sigma_n I + Phat L (Sigma kron K_w(l)) L^T Phat^T,
///   L = [[-L2, L1], [L1, L2]],  Sigma = [[sp^2, r sp sc], [r sp sc, sc^2]].
/// theta = (rho, sigma_phi, sigma_chi, l); sigma_n is fixed and known.
/// Observation rows: the first n entries are u components, the next n are v,
/// both at the same n spatial points.
class WindOracle : public CovarianceOracle {
public:
    WindOracle(std::shared_ptr<const FemDiscretization> fem, Eigen::MatrixXd obs,
               double sigma_n);

    Index dim() const override { return 2 * obs_.rows(); }
    Index num_params() const override { return 4; }
    Eigen::VectorXd parameters() const override { return theta_; }
    void set_parameters(const Eigen::VectorXd& theta) override;

    double sigma_n() const { return sigma_n_; }
    void set_sigma_n(double s) { sigma_n_ = s; }
    const Eigen::MatrixXd& observations() const { return obs_; }

    /// Exact noiseless sample of the 2n velocity field at the given theta:
    /// latent fields drawn through the sparse SPDE square root, no dense
    /// covariance ever formed.
    Eigen::VectorXd sample(const Eigen::VectorXd& theta, std::mt19937_64& rng) const;

protected:
    Eigen::MatrixXd do_apply(const Eigen::Ref<const Eigen::MatrixXd>& v) const override;
    Eigen::MatrixXd do_apply_derivative(int j,
                                        const Eigen::Ref<const Eigen::MatrixXd>& v) const override;

private:
    enum class Mode { Value, DRho, DSigmaPhi, DSigmaChi, DLength };
    Eigen::MatrixXd apply_core(const Eigen::Ref<const Eigen::MatrixXd>& v, Mode mode) const;

    std::shared_ptr<const FemDiscretization> fem_;
    MaternOperator matern_;
    Eigen::MatrixXd obs_;                 // n x 2
    Eigen::SparseMatrix<double> phi_;     // n x n_basis
    Eigen::SparseMatrix<double> l1_, l2_; // d/dx, d/dy on the latent grid
    Eigen::VectorXd theta_;
    double sigma_n_ = 0;
};

}  // namespace hodlrgp
