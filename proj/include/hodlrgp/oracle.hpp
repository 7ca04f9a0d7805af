#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cstdint>
#include <vector>

#include "hodlrgp/cluster_tree.hpp"

namespace hodlrgp {

/// Black-box symmetric covariance operator K(theta) with analytic parameter
/// derivatives. apply / apply_derivative count consumed columns so tests and
/// the bench command can assert oracle budgets.
class CovarianceOracle {
public:
    virtual ~CovarianceOracle() = default;

    virtual Index dim() const = 0;
    virtual Index num_params() const = 0;
    virtual Eigen::VectorXd parameters() const = 0;
    virtual void set_parameters(const Eigen::VectorXd& theta) = 0;

    /// K(theta) V.
    Eigen::MatrixXd apply(const Eigen::Ref<const Eigen::MatrixXd>& v) const {
        apply_columns_.fetch_add(static_cast<std::uint64_t>(v.cols()),
                                 std::memory_order_relaxed);
        return do_apply(v);
    }
    /// (dK/dtheta_j) V.
    Eigen::MatrixXd apply_derivative(int j, const Eigen::Ref<const Eigen::MatrixXd>& v) const {
        derivative_columns_.fetch_add(static_cast<std::uint64_t>(v.cols()),
                                      std::memory_order_relaxed);
        return do_apply_derivative(j, v);
    }

    std::uint64_t apply_columns() const { return apply_columns_.load(); }
    std::uint64_t derivative_columns() const { return derivative_columns_.load(); }
    void reset_counters() const {
        apply_columns_.store(0);
        derivative_columns_.store(0);
    }

protected:
    virtual Eigen::MatrixXd do_apply(const Eigen::Ref<const Eigen::MatrixXd>& v) const = 0;
    virtual Eigen::MatrixXd do_apply_derivative(int j,
                                                const Eigen::Ref<const Eigen::MatrixXd>& v) const = 0;

private:
    mutable std::atomic<std::uint64_t> apply_columns_{0};
    mutable std::atomic<std::uint64_t> derivative_columns_{0};
};

/// View of a base oracle under an index reordering: K'(i, j) = K(p_i, p_j)
/// with p mapping reordered positions to base indices. Used to expose a
/// KD-ordered covariance to the HODLR builder while the model keeps its
/// natural index layout.
class PermutedOracle : public CovarianceOracle {
public:
    PermutedOracle(const CovarianceOracle& base, std::vector<Index> to_base)
        : base_(base), p_(std::move(to_base)) {
        if (static_cast<Index>(p_.size()) != base.dim())
            throw std::invalid_argument("PermutedOracle: permutation size mismatch");
    }

    Index dim() const override { return base_.dim(); }
    Index num_params() const override { return base_.num_params(); }
    Eigen::VectorXd parameters() const override { return base_.parameters(); }
    void set_parameters(const Eigen::VectorXd& theta) override {
        const_cast<CovarianceOracle&>(base_).set_parameters(theta);
    }

    /// x in reordered layout -> base layout.
    Eigen::VectorXd scatter(const Eigen::VectorXd& x) const {
        Eigen::VectorXd out(x.size());
        for (Index i = 0; i < x.size(); ++i) out[p_[static_cast<std::size_t>(i)]] = x[i];
        return out;
    }
    /// x in base layout -> reordered layout.
    Eigen::VectorXd gather(const Eigen::VectorXd& x) const {
        Eigen::VectorXd out(x.size());
        for (Index i = 0; i < x.size(); ++i) out[i] = x[p_[static_cast<std::size_t>(i)]];
        return out;
    }

protected:
    Eigen::MatrixXd do_apply(const Eigen::Ref<const Eigen::MatrixXd>& v) const override {
        Eigen::MatrixXd w = base_.apply(scatter_cols(v));
        return gather_cols(w);
    }
    Eigen::MatrixXd do_apply_derivative(int j,
                                        const Eigen::Ref<const Eigen::MatrixXd>& v) const override {
        Eigen::MatrixXd w = base_.apply_derivative(j, scatter_cols(v));
        return gather_cols(w);
    }

private:
    Eigen::MatrixXd scatter_cols(const Eigen::Ref<const Eigen::MatrixXd>& v) const {
        Eigen::MatrixXd out(v.rows(), v.cols());
        for (Index i = 0; i < v.rows(); ++i) out.row(p_[static_cast<std::size_t>(i)]) = v.row(i);
        return out;
    }
    Eigen::MatrixXd gather_cols(const Eigen::Ref<const Eigen::MatrixXd>& v) const {
        Eigen::MatrixXd out(v.rows(), v.cols());
        for (Index i = 0; i < v.rows(); ++i) out.row(i) = v.row(p_[static_cast<std::size_t>(i)]);
        return out;
    }

    const CovarianceOracle& base_;
    std::vector<Index> p_;
};

/// Fixed dense matrix with fixed dense derivative matrices (test support and
/// dense cross-check paths).
class DenseMatrixOracle : public CovarianceOracle {
public:
    DenseMatrixOracle(Eigen::MatrixXd k, std::vector<Eigen::MatrixXd> dk = {},
                      Eigen::VectorXd theta = Eigen::VectorXd())
        : k_(std::move(k)), dk_(std::move(dk)), theta_(std::move(theta)) {}

    Index dim() const override { return k_.rows(); }
    Index num_params() const override { return static_cast<Index>(dk_.size()); }
    Eigen::VectorXd parameters() const override { return theta_; }
    void set_parameters(const Eigen::VectorXd& theta) override { theta_ = theta; }

    const Eigen::MatrixXd& dense() const { return k_; }
    const Eigen::MatrixXd& dense_derivative(int j) const { return dk_[j]; }

protected:
    Eigen::MatrixXd do_apply(const Eigen::Ref<const Eigen::MatrixXd>& v) const override {
        return k_ * v;
    }
    Eigen::MatrixXd do_apply_derivative(int j,
                                        const Eigen::Ref<const Eigen::MatrixXd>& v) const override {
        if (dk_.empty()) return Eigen::MatrixXd::Zero(v.rows(), v.cols());
        return dk_[static_cast<std::size_t>(j)] * v;
    }

private:
    Eigen::MatrixXd k_;
    std::vector<Eigen::MatrixXd> dk_;
    Eigen::VectorXd theta_;
};

}  // namespace hodlrgp
