#include "hodlrgp/models/matern.hpp"

#include <cmath>
#include <stdexcept>

namespace hodlrgp {

double matern_exact_cov(double r, double l) {
    if (r < 0 || l <= 0) throw std::invalid_argument("matern_exact_cov: need r >= 0, l > 0");
    if (r == 0) return 1.0;
    double x = r / l;
    return x * std::cyl_bessel_k(1.0, x);
}

std::shared_ptr<const MaternOperator::Solver> MaternOperator::factor(double l) const {
    if (!(l > 0)) throw std::invalid_argument("MaternOperator: l > 0 required");
    std::lock_guard<std::mutex> lock(mutex_);
    for (auto it = cache_.begin(); it != cache_.end(); ++it) {
        if (it->first == l) {
            auto entry = *it;
            cache_.erase(it);
            cache_.push_front(entry);
            return entry.second;
        }
    }
    Eigen::SparseMatrix<double> a = fem_.c / (l * l) + fem_.s;
    auto solver = std::make_shared<Solver>();
    solver->compute(a);
    if (solver->info() != Eigen::Success)
        throw std::runtime_error("MaternOperator: sparse factorization failed");
    cache_.emplace_front(l, solver);
    while (cache_.size() > 4) cache_.pop_back();
    return cache_.front().second;
}

Eigen::MatrixXd MaternOperator::apply(double l, const Eigen::Ref<const Eigen::MatrixXd>& v) const {
    auto slv = factor(l);
    const double gm2 = 4.0 * M_PI / (l * l);  // gamma^{-2} at unit marginal variance
    Eigen::MatrixXd u = slv->solve(v);
    u = fem_.c_lumped.asDiagonal() * u;
    return gm2 * slv->solve(u);
}

Eigen::MatrixXd MaternOperator::apply_dl(double l,
                                         const Eigen::Ref<const Eigen::MatrixXd>& v) const {
    auto slv = factor(l);
    const double gm2 = 4.0 * M_PI / (l * l);
    Eigen::MatrixXd u1 = slv->solve(v);                                   // A^{-1} v
    Eigen::MatrixXd u3 = slv->solve((fem_.c_lumped.asDiagonal() * u1).eval());  // A^{-1}Ct A^{-1}v
    // dA/dl = -2 l^{-3} C and d(gamma^{-2})/dl = -2 gamma^{-2} / l.
    Eigen::MatrixXd t1 = slv->solve((fem_.c * u3).eval());
    Eigen::MatrixXd s2 = slv->solve((fem_.c * u1).eval());
    Eigen::MatrixXd t2 = slv->solve((fem_.c_lumped.asDiagonal() * s2).eval());
    return gm2 * ((-2.0 / l) * u3 + (2.0 / (l * l * l)) * (t1 + t2));
}

Eigen::MatrixXd MaternOperator::sample_sqrt(double l,
                                            const Eigen::Ref<const Eigen::MatrixXd>& z) const {
    auto slv = factor(l);
    const double ginv = std::sqrt(4.0 * M_PI) / l;  // gamma^{-1}
    Eigen::MatrixXd u = fem_.c_lumped.cwiseSqrt().asDiagonal() * z;
    return ginv * slv->solve(u);
}

}  // namespace hodlrgp
