#pragma once

#include <Eigen/SparseLU>
#include <memory>
#include <random>

#include "hodlrgp/models/matern.hpp"
#include "hodlrgp/oracle.hpp"

namespace hodlrgp {

/// Advection-diffusion-reaction covariance: the observed field solves
///   -div(kappa grad u) + vel . grad u + c u = phi
/// with a Matern source phi, so
///   K_u = sigma_n I + G (sp^2 K_w(l)) G^T,  G = Phi_a Lhat^{-1} C_a P_m,
/// where Lhat is the ADR Galerkin operator, C_a the ADR mass matrix and P_m
/// interpolates the Matern mesh onto the ADR nodes. theta = (sigma_phi, l);
/// kappa = 0.001, c = 0.5, vel(x) = (x1 + 5, x2 + 5) fixed. sigma_n known.
class AdrOracle : public CovarianceOracle {
public:
    AdrOracle(std::shared_ptr<const FemDiscretization> matern_fem,
              std::shared_ptr<const FemDiscretization> adr_fem, Eigen::MatrixXd obs,
              double sigma_n);

    Index dim() const override { return obs_.rows(); }
    Index num_params() const override { return 2; }
    Eigen::VectorXd parameters() const override { return theta_; }
    void set_parameters(const Eigen::VectorXd& theta) override;

    double sigma_n() const { return sigma_n_; }
    void set_sigma_n(double s) { sigma_n_ = s; }
    const Eigen::MatrixXd& observations() const { return obs_; }
    /// Cell Peclet number |vel| h / (2 kappa); advection-dominated meshes
    /// are flagged, not rejected (the covariance stays SPD regardless).
    double peclet() const { return peclet_; }

    /// Mean response: the deterministic source 20 exp(-|x|^2 / 8) pushed
    /// through the PDE solve and observation map.
    const Eigen::VectorXd& mean() const { return mean_; }

    /// Exact noiseless sample (mean included) at the given theta.
    Eigen::VectorXd sample(const Eigen::VectorXd& theta, std::mt19937_64& rng) const;

protected:
    Eigen::MatrixXd do_apply(const Eigen::Ref<const Eigen::MatrixXd>& v) const override;
    Eigen::MatrixXd do_apply_derivative(int j,
                                        const Eigen::Ref<const Eigen::MatrixXd>& v) const override;

private:
    Eigen::MatrixXd g_apply(const Eigen::Ref<const Eigen::MatrixXd>& x) const;    // G x
    Eigen::MatrixXd gt_apply(const Eigen::Ref<const Eigen::MatrixXd>& v) const;   // G^T v

    std::shared_ptr<const FemDiscretization> matern_fem_;
    std::shared_ptr<const FemDiscretization> adr_fem_;
    MaternOperator matern_;
    Eigen::MatrixXd obs_;
    Eigen::SparseMatrix<double> phi_a_;   // n x n_adr
    Eigen::SparseMatrix<double> p_m_;     // n_adr x n_matern
    std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_, lu_t_;
    Eigen::VectorXd mean_;
    Eigen::VectorXd theta_;
    double sigma_n_ = 0;
    double peclet_ = 0;
};

}  // namespace hodlrgp
