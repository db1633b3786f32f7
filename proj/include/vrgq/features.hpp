#pragma once

#include "vrgq/mdp.hpp"
#include "vrgq/rng.hpp"
#include "vrgq/types.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <random>
#include <string>

namespace vrgq {

/**
 * Linear features, one d-dimensional row per state-action pair (row index
 * Mdp::sa(s, a)). Every row has Euclidean norm at most one; the constructor
 * rejects anything else.
 */
template <typename Scalar = double>
class FeatureMap {
public:
    FeatureMap() = default;

    FeatureMap(Matrix<Scalar> phi, Index n_states, Index n_actions)
        : phi_(std::move(phi)), n_states_(n_states), n_actions_(n_actions) {
        if (n_states < 1 || n_actions < 1 || phi_.cols() < 1)
            throw ParameterError("FeatureMap: sizes must be positive");
        if (phi_.rows() != n_states * n_actions)
            throw ParameterError("FeatureMap: expected one row per state-action pair");
        const Scalar slack = Scalar(64) * std::max<Scalar>(Eigen::NumTraits<Scalar>::epsilon(), Scalar(DBL_EPSILON));
        for (Index i = 0; i < phi_.rows(); ++i)
            if (!(phi_.row(i).norm() <= Scalar(1) + slack))
                throw ParameterError("FeatureMap: row " + std::to_string(i) + " has norm > 1");
    }

    Index dim() const noexcept { return phi_.cols(); }
    Index n_states() const noexcept { return n_states_; }
    Index n_actions() const noexcept { return n_actions_; }
    Index sa(Index s, Index a) const noexcept { return s * n_actions_ + a; }

    /// phi_{s,a} as a column expression.
    auto operator()(Index s, Index a) const { return phi_.row(sa(s, a)).transpose(); }
    const Matrix<Scalar>& matrix() const noexcept { return phi_; }

    template <typename NewScalar>
    FeatureMap<NewScalar> cast() const {
        return FeatureMap<NewScalar>(phi_.template cast<NewScalar>(), n_states_, n_actions_);
    }

private:
    Matrix<Scalar> phi_;
    Index n_states_ = 0;
    Index n_actions_ = 0;
};

enum class FeatureDistribution { Uniform, Gaussian };

/// Rows drawn i.i.d. (Uniform[0,1] or standard normal entries) then scaled to unit norm.
inline FeatureMap<double> generate_features(Index n_states, Index n_actions, Index d, FeatureDistribution dist,
                                            std::uint64_t seed) {
    if (d < 1) throw ParameterError("generate_features: d must be >= 1");
    if (n_states < 1 || n_actions < 1) throw ParameterError("generate_features: sizes must be positive");
    const Index rows = n_states * n_actions;
    MatrixXd phi(rows, d);
    const CounterRng base(seed);
    for (Index i = 0; i < rows; ++i) {
        for (std::uint64_t attempt = 0;; ++attempt) {
            CounterRng rng = base.substream(static_cast<std::uint64_t>(i) * 1024 + attempt);
            if (dist == FeatureDistribution::Uniform) {
                for (Index j = 0; j < d; ++j) phi(i, j) = rng.uniform01();
            } else {
                std::normal_distribution<double> normal;
                for (Index j = 0; j < d; ++j) phi(i, j) = normal(rng);
            }
            const double norm = phi.row(i).norm();
            if (norm > 0.0) {
                phi.row(i) /= norm;
                break;
            }
        }
    }
    return FeatureMap<double>(std::move(phi), n_states, n_actions);
}

/// Softmax improvement operator pi(a|s) proportional to exp(sigma * phi_{s,a}^T theta).
template <typename Scalar = double>
struct SoftmaxOperator {
    Scalar sigma = Scalar(1);

    explicit SoftmaxOperator(Scalar temperature = Scalar(1)) : sigma(temperature) {
        if (!(sigma > Scalar(0)) || !std::isfinite(static_cast<double>(sigma)))
            throw ParameterError("SoftmaxOperator: temperature must be positive and finite");
    }
};

/// Action logits phi_{s,a}^T theta for one state.
template <typename Scalar, typename Derived>
Vector<Scalar> action_values(const Eigen::MatrixBase<Derived>& theta, Index s, const FeatureMap<Scalar>& features) {
    return features.matrix().middleRows(features.sa(s, 0), features.n_actions()) * theta;
}

template <typename Scalar>
Vector<Scalar> softmax_from_values(const Vector<Scalar>& q, const SoftmaxOperator<Scalar>& op) {
    Vector<Scalar> p = (op.sigma * (q.array() - q.maxCoeff())).exp().matrix();
    p /= p.sum();
    return p;
}

/// pi_theta(.|s).
template <typename Scalar, typename Derived>
Vector<Scalar> policy_row(const Eigen::MatrixBase<Derived>& theta, Index s, const FeatureMap<Scalar>& features,
                          const SoftmaxOperator<Scalar>& op) {
    return softmax_from_values(action_values(theta, s, features), op);
}

/// Full table pi_theta(a|s), rows indexed by state.
template <typename Scalar, typename Derived>
Matrix<Scalar> policy_matrix(const Eigen::MatrixBase<Derived>& theta, const FeatureMap<Scalar>& features,
                             const SoftmaxOperator<Scalar>& op) {
    Matrix<Scalar> probs(features.n_states(), features.n_actions());
    for (Index s = 0; s < features.n_states(); ++s) probs.row(s) = policy_row(theta, s, features, op).transpose();
    return probs;
}

inline PolicyTable improve_policy(const VectorXd& theta, const FeatureMap<double>& features,
                                  const SoftmaxOperator<double>& op) {
    return {policy_matrix(theta, features, op)};
}

/// V-bar and its gradient at one state, sharing the softmax evaluation.
template <typename Scalar>
struct StateValue {
    Scalar v_bar;
    Vector<Scalar> phi_hat;
};

template <typename Scalar, typename Derived>
StateValue<Scalar> evaluate_state(const Eigen::MatrixBase<Derived>& theta, Index s, const FeatureMap<Scalar>& features,
                                  const SoftmaxOperator<Scalar>& op) {
    const auto block = features.matrix().middleRows(features.sa(s, 0), features.n_actions());
    const Vector<Scalar> q = block * theta;
    const Vector<Scalar> pi = softmax_from_values(q, op);
    const Scalar v = pi.dot(q);
    const Vector<Scalar> mean_phi = block.transpose() * pi;
    // grad pi_a = sigma * pi_a * (phi_a - mean_phi)
    const Vector<Scalar> weighted = block.transpose() * pi.cwiseProduct(q);
    return {v, mean_phi + op.sigma * (weighted - v * mean_phi)};
}

template <typename Scalar, typename Derived>
Scalar v_bar(const Eigen::MatrixBase<Derived>& theta, Index s, const FeatureMap<Scalar>& features,
             const SoftmaxOperator<Scalar>& op) {
    const Vector<Scalar> q = action_values(theta, s, features);
    return softmax_from_values(q, op).dot(q);
}

template <typename Scalar, typename Derived>
Vector<Scalar> phi_hat(const Eigen::MatrixBase<Derived>& theta, Index s, const FeatureMap<Scalar>& features,
                       const SoftmaxOperator<Scalar>& op) {
    return evaluate_state(theta, s, features, op).phi_hat;
}

/// delta = r + gamma * V-bar_{s'}(theta) - phi_{s,a}^T theta.
template <typename Scalar, typename Derived>
Scalar td_delta(const Eigen::MatrixBase<Derived>& theta, const Transition& t, const FeatureMap<Scalar>& features,
                const SoftmaxOperator<Scalar>& op, Scalar gamma) {
    return Scalar(t.r) + gamma * v_bar(theta, t.s_next, features, op) - features(t.s, t.a).dot(theta);
}

} // namespace vrgq
