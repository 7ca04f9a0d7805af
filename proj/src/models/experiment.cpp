#include "hodlrgp/models/experiment.hpp"

#include <cmath>

#include "hodlrgp/models/simulate.hpp"

namespace hodlrgp {

Eigen::VectorXd add_noise(const Eigen::VectorXd& y, double sigma_n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd out = y;
    const double sd = std::sqrt(sigma_n);
    for (Index i = 0; i < out.size(); ++i) out[i] += sd * gauss(rng);
    return out;
}

namespace {

double sample_sd(const Eigen::VectorXd& v) {
    const double m = v.mean();
    return std::sqrt((v.array() - m).square().sum() / double(v.size() - 1));
}

ExperimentOrdering point_ordering(const Eigen::MatrixXd& obs, Index stride, Index leaf_min,
                                  Index leaf_max) {
    PointSet pts{obs};
    // KD with small leaves just fixes a spatially local ordering; the uniform
    // tree below sets the actual block structure.
    KdOrdering kd = build_kd_ordering(pts, 1, 2);
    const Index n = obs.rows();
    ExperimentOrdering out;
    out.to_base.resize(static_cast<std::size_t>(stride * n));
    for (Index i = 0; i < n; ++i)
        for (Index c = 0; c < stride; ++c)
            out.to_base[static_cast<std::size_t>(stride * i + c)] =
                kd.inv[static_cast<std::size_t>(i)] + c * n;
    out.tree = ClusterTree(stride * n, tree_depth(stride * n, leaf_min, leaf_max));
    return out;
}

}  // namespace

WindExperiment::WindExperiment(Index n, int mesh_n, std::uint64_t point_seed)
    : WindExperiment(observation_points(n, -5.0, 5.0, point_seed), mesh_n) {}

WindExperiment::WindExperiment(Eigen::MatrixXd obs, int mesh_n) {
    fem_ = std::make_shared<const FemDiscretization>(
        assemble_fem(-5.5, 5.5, -5.5, 5.5, mesh_n));
    oracle_ = std::make_unique<WindOracle>(fem_, std::move(obs), 0.0);
}

SimulatedData WindExperiment::simulate(const Eigen::VectorXd& theta, double noise_fraction,
                                       std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Eigen::VectorXd clean = oracle_->sample(theta, rng);
    SimulatedData out;
    out.sigma_n = std::pow(noise_fraction * sample_sd(clean), 2);
    oracle_->set_sigma_n(out.sigma_n);
    out.y = add_noise(clean, out.sigma_n, rng);
    return out;
}

ExperimentOrdering WindExperiment::ordering(Index leaf_min, Index leaf_max) const {
    return point_ordering(oracle_->observations(), 2, leaf_min, leaf_max);
}

std::vector<ParamTransform> WindExperiment::transforms() {
    return {ParamTransform::Correlation, ParamTransform::Positive, ParamTransform::Positive,
            ParamTransform::Positive};
}

std::vector<std::string> WindExperiment::param_names() {
    return {"rho", "sigma_phi", "sigma_chi", "l"};
}

AdrExperiment::AdrExperiment(Index n, int matern_mesh_n, int adr_mesh_n,
                             std::uint64_t point_seed)
    : AdrExperiment(observation_points(n, -5.0, 5.0, point_seed), matern_mesh_n, adr_mesh_n) {}

AdrExperiment::AdrExperiment(Eigen::MatrixXd obs, int matern_mesh_n, int adr_mesh_n) {
    matern_fem_ = std::make_shared<const FemDiscretization>(
        assemble_fem(-7.5, 7.5, -7.5, 7.5, matern_mesh_n));
    adr_fem_ = std::make_shared<const FemDiscretization>(
        assemble_fem(-5.0, 5.0, -5.0, 5.0, adr_mesh_n));
    oracle_ = std::make_unique<AdrOracle>(matern_fem_, adr_fem_, std::move(obs), 0.0);
}

SimulatedData AdrExperiment::simulate(const Eigen::VectorXd& theta, double noise_fraction,
                                      std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Eigen::VectorXd clean = oracle_->sample(theta, rng);
    SimulatedData out;
    out.sigma_n = std::pow(noise_fraction * sample_sd(clean - oracle_->mean()), 2);
    oracle_->set_sigma_n(out.sigma_n);
    out.y = add_noise(clean, out.sigma_n, rng);
    return out;
}

ExperimentOrdering AdrExperiment::ordering(Index leaf_min, Index leaf_max) const {
    return point_ordering(oracle_->observations(), 1, leaf_min, leaf_max);
}

std::vector<ParamTransform> AdrExperiment::transforms() {
    return {ParamTransform::Positive, ParamTransform::Positive};
}

std::vector<std::string> AdrExperiment::param_names() { return {"sigma_phi", "l"}; }

}  // namespace hodlrgp
