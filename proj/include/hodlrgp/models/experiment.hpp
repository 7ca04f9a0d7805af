#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hodlrgp/mle.hpp"
#include "hodlrgp/models/adr.hpp"
#include "hodlrgp/models/wind.hpp"

namespace hodlrgp {

/// KD-based index layout for the HODLR builder: to_base maps reordered
/// positions to the oracle's natural layout.
struct ExperimentOrdering {
    std::vector<Index> to_base;
    ClusterTree tree;
};

struct SimulatedData {
    Eigen::VectorXd y;  // oracle layout, observation noise included
    double sigma_n = 0;
};

/// Wind experiment: n observation points on [-5,5]^2, latent Matern mesh on
/// the padded box [-5.5,5.5]^2. Covariance dimension is 2n (u then v).
class WindExperiment {
public:
    WindExperiment(Index n, int mesh_n, std::uint64_t point_seed);
    WindExperiment(Eigen::MatrixXd obs, int mesh_n);

    WindOracle& oracle() { return *oracle_; }
    const WindOracle& oracle() const { return *oracle_; }
    const Eigen::MatrixXd& obs() const { return oracle_->observations(); }
    Index dim() const { return oracle_->dim(); }

    /// Noisy sample at theta. sigma_n = (noise_fraction * sd(sample))^2 is
    /// also installed on the oracle.
    SimulatedData simulate(const Eigen::VectorXd& theta, double noise_fraction,
                           std::uint64_t seed);

    /// KD ordering of the points with the u/v components of each point kept
    /// adjacent (interleaved), plus the matching uniform cluster tree.
    ExperimentOrdering ordering(Index leaf_min, Index leaf_max) const;

    static std::vector<ParamTransform> transforms();
    static std::vector<std::string> param_names();

private:
    std::shared_ptr<const FemDiscretization> fem_;
    std::unique_ptr<WindOracle> oracle_;
};

/// Advection-diffusion-reaction experiment: n observation points on [-5,5]^2,
/// ADR mesh on [-5,5]^2, Matern source mesh on the padded box [-7.5,7.5]^2.
class AdrExperiment {
public:
    AdrExperiment(Index n, int matern_mesh_n, int adr_mesh_n, std::uint64_t point_seed);
    AdrExperiment(Eigen::MatrixXd obs, int matern_mesh_n, int adr_mesh_n);

    AdrOracle& oracle() { return *oracle_; }
    const AdrOracle& oracle() const { return *oracle_; }
    const Eigen::MatrixXd& obs() const { return oracle_->observations(); }
    Index dim() const { return oracle_->dim(); }
    const Eigen::VectorXd& mean() const { return oracle_->mean(); }

    /// Noisy sample at theta (mean included); the noise scale is set from the
    /// mean-centered sample: sigma_n = (noise_fraction * sd(sample - mean))^2.
    SimulatedData simulate(const Eigen::VectorXd& theta, double noise_fraction,
                           std::uint64_t seed);

    ExperimentOrdering ordering(Index leaf_min, Index leaf_max) const;

    static std::vector<ParamTransform> transforms();
    static std::vector<std::string> param_names();

private:
    std::shared_ptr<const FemDiscretization> matern_fem_;
    std::shared_ptr<const FemDiscretization> adr_fem_;
    std::unique_ptr<AdrOracle> oracle_;
};

/// y + sqrt(sigma_n) z with z standard normal from rng.
Eigen::VectorXd add_noise(const Eigen::VectorXd& y, double sigma_n, std::mt19937_64& rng);

}  // namespace hodlrgp
