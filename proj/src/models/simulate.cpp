#include "hodlrgp/models/simulate.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <stdexcept>

namespace hodlrgp {

Eigen::VectorXd sample_gaussian_dense(const Eigen::MatrixXd& k, const Eigen::VectorXd& mean,
                                      std::uint64_t seed) {
    const Index n = k.rows();
    if (n > (Index{1} << 14)) throw std::length_error("sample_gaussian_dense: size guard");
    if (k.cols() != n || (mean.size() != 0 && mean.size() != n))
        throw std::invalid_argument("sample_gaussian_dense: shape mismatch");

    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success) {
        Eigen::MatrixXd kj = k;
        kj.diagonal().array() += 1e-10 * k.trace() / double(n);
        llt.compute(kj);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("sample_gaussian_dense: covariance not positive definite");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd z(n);
    for (Index i = 0; i < n; ++i) z[i] = gauss(rng);
    Eigen::VectorXd y = llt.matrixL() * z;
    if (mean.size() != 0) y += mean;
    return y;
}

Eigen::MatrixXd regular_grid(Index g, double lo, double hi) {
    if (g < 1) throw std::invalid_argument("regular_grid: g >= 1");
    const double h = (hi - lo) / double(g);
    Eigen::MatrixXd pts(g * g, 2);
    Index r = 0;
    for (Index j = 1; j <= g; ++j)
        for (Index i = 1; i <= g; ++i) {
            pts(r, 0) = lo + double(i) * h;
            pts(r, 1) = lo + double(j) * h;
            ++r;
        }
    return pts;
}

Eigen::MatrixXd thin_points(const Eigen::MatrixXd& pts, Index n, std::uint64_t seed) {
    if (n > pts.rows()) throw std::invalid_argument("thin_points: n exceeds point count");
    std::vector<Index> idx(static_cast<std::size_t>(pts.rows()));
    std::iota(idx.begin(), idx.end(), Index{0});
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<std::size_t>(n));
    std::sort(idx.begin(), idx.end());
    Eigen::MatrixXd out(n, pts.cols());
    for (Index i = 0; i < n; ++i) out.row(i) = pts.row(idx[static_cast<std::size_t>(i)]);
    return out;
}

Eigen::MatrixXd observation_points(Index n, double lo, double hi, std::uint64_t seed) {
    Index g = 1;
    while (g * g < n) g *= 2;
    Eigen::MatrixXd pts = regular_grid(g, lo, hi);
    if (pts.rows() == n) return pts;
    return thin_points(pts, n, seed);
}

}  // namespace hodlrgp
