#pragma once

#include "vrgq/features.hpp"
#include "vrgq/mdp.hpp"
#include "vrgq/objective.hpp"
#include "vrgq/types.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace vrgq {

// ---------------------------------------------------------------------------
// Per-sample update maps
// ---------------------------------------------------------------------------

template <typename Scalar>
struct UpdatePair {
    Vector<Scalar> g;
    Vector<Scalar> h;
};

/// G_x(theta, omega) and H_x(theta, omega) sharing one softmax evaluation at s'.
template <typename Scalar, typename D1, typename D2>
UpdatePair<Scalar> sample_updates(const Transition& x, const Eigen::MatrixBase<D1>& theta,
                                  const Eigen::MatrixBase<D2>& omega, const FeatureMap<Scalar>& features,
                                  const SoftmaxOperator<Scalar>& op, Scalar gamma) {
    const auto phi = features(x.s, x.a);
    const auto next = evaluate_state(theta, x.s_next, features, op);
    const Scalar delta = Scalar(x.r) + gamma * next.v_bar - phi.dot(theta);
    const Scalar phi_omega = phi.dot(omega);
    return {(-delta) * phi + (gamma * phi_omega) * next.phi_hat, (phi_omega - delta) * phi};
}

/// G_x = -delta phi + gamma (omega^T phi) phi_hat_{s'}.
template <typename Scalar, typename D1, typename D2>
Vector<Scalar> g_update(const Transition& x, const Eigen::MatrixBase<D1>& theta, const Eigen::MatrixBase<D2>& omega,
                        const FeatureMap<Scalar>& features, const SoftmaxOperator<Scalar>& op, Scalar gamma) {
    return sample_updates(x, theta, omega, features, op, gamma).g;
}

/// H_x = (phi^T omega - delta) phi.
template <typename Scalar, typename D1, typename D2>
Vector<Scalar> h_update(const Transition& x, const Eigen::MatrixBase<D1>& theta, const Eigen::MatrixBase<D2>& omega,
                        const FeatureMap<Scalar>& features, const SoftmaxOperator<Scalar>& op, Scalar gamma) {
    const auto phi = features(x.s, x.a);
    const Scalar delta = td_delta(theta, x, features, op, gamma);
    return (phi.dot(omega) - delta) * phi;
}

/// Euclidean projection onto the ball of radius R.
template <typename Derived>
Vector<typename Derived::Scalar> project_ball(const Eigen::MatrixBase<Derived>& v, typename Derived::Scalar radius) {
    using Scalar = typename Derived::Scalar;
    if (!(radius > Scalar(0))) throw ParameterError("project_ball: radius must be positive");
    const Scalar norm = v.norm();
    if (norm <= radius) return v;
    Vector<Scalar> out = v * (radius / norm);
    // guard against rounding past R
    while (out.norm() > radius) out *= Scalar(1) - Eigen::NumTraits<Scalar>::epsilon();
    return out;
}

/// Batch means of G and H at the reference point.
template <typename Scalar>
struct ReferenceUpdates {
    Vector<Scalar> g_ref;
    Vector<Scalar> h_ref;
};

template <typename Scalar, typename D1, typename D2>
ReferenceUpdates<Scalar> reference_batch_updates(std::span<const Transition> batch,
                                                 const Eigen::MatrixBase<D1>& theta_ref,
                                                 const Eigen::MatrixBase<D2>& omega_ref,
                                                 const FeatureMap<Scalar>& features,
                                                 const SoftmaxOperator<Scalar>& op, Scalar gamma) {
    if (batch.empty()) throw ParameterError("reference_batch_updates: empty batch");
    ReferenceUpdates<Scalar> out{Vector<Scalar>::Zero(features.dim()), Vector<Scalar>::Zero(features.dim())};
    for (const auto& x : batch) {
        auto u = sample_updates(x, theta_ref, omega_ref, features, op, gamma);
        out.g_ref += u.g;
        out.h_ref += u.h;
    }
    const Scalar inv = Scalar(1) / static_cast<Scalar>(batch.size());
    out.g_ref *= inv;
    out.h_ref *= inv;
    return out;
}

// ---------------------------------------------------------------------------
// Runs
// ---------------------------------------------------------------------------

enum class Algorithm { GreedyGQ, VRGreedyGQ, ActorCritic, OffPolicyPG };

std::string to_string(Algorithm algo);
Algorithm parse_algorithm(const std::string& name);

struct RunConfig {
    double eta_theta = 0.02;
    double eta_omega = 0.01;
    /// VR-Greedy-GQ batch size M.
    Index batch_size = 3000;
    /// VR-Greedy-GQ epochs T.
    Index epochs = 1;
    /// Updates for Greedy-GQ / actor-critic / policy-gradient.
    Index iterations = 10000;
    double radius = 100.0;
    std::uint64_t seed = 0;
    /// Empty means the zero vector.
    VectorXd theta0;
    VectorXd omega0;

    /// Keep every theta_t^{(m)} for output selection (VR only).
    bool keep_snapshots = false;
    /// Store theta every k records (0 disables).
    Index snapshot_cadence = 0;
    /// Evaluate ||grad J||^2 and J through the oracle every step.
    bool log_oracle = true;
    /// Check ||theta||, ||omega|| <= R after every update; throws StateError on violation.
    bool debug_checks = false;

    /// Policy-gradient baseline sampling budget per update.
    Index pg_trajectories = 30;
    Index pg_horizon = 60;

    void validate(Index dim) const;
};

struct StepRecord {
    Index global_step = 0; ///< 1-based update counter
    Index epoch = 0;       ///< 1-based for VR, 0 otherwise
    Index inner_t = 0;
    std::int64_t g_eval_count = 0;
    double grad_norm_sq = std::numeric_limits<double>::quiet_NaN();
    double mspbe = std::numeric_limits<double>::quiet_NaN();
    double var_estimate = std::numeric_limits<double>::quiet_NaN();
    double reward_estimate = std::numeric_limits<double>::quiet_NaN();
};

struct RunLog {
    Algorithm algorithm = Algorithm::GreedyGQ;
    std::vector<StepRecord> records;
    /// theta_t^{(m)} for m = 1..T, t = 0..M-1, epoch-major (VR with keep_snapshots).
    std::vector<VectorXd> snapshots;
    /// (global_step, theta) at snapshot_cadence.
    std::vector<std::pair<Index, VectorXd>> theta_trace;
    Index epochs = 0;
    Index batch_size = 0;
    std::uint64_t samples_consumed = 0;
    VectorXd final_theta;
    VectorXd final_omega;
};

/// VR epoch reference state, exposed to observers.
struct ReferenceState {
    const VectorXd* theta_ref = nullptr;
    const VectorXd* omega_ref = nullptr;
    const VectorXd* g_ref = nullptr;
    const VectorXd* h_ref = nullptr;
    std::span<const Transition> batch;
    /// Batch index and directions of the update just applied.
    Index xi = -1;
    const VectorXd* g_step = nullptr;
    const VectorXd* h_step = nullptr;
};

/// What an observer sees after each update. `reference` is set for VR runs only.
struct StepView {
    const ObjectiveContext& ctx;
    const VectorXd& theta;
    const VectorXd& omega;
    const ReferenceState* reference = nullptr;
};

/// Called after every update; may fill the probe fields of the record.
using StepObserver = std::function<void(const StepView&, StepRecord&)>;

RunLog run_greedy_gq(const ObjectiveContext& ctx, const RunConfig& cfg, const StepObserver& observer = {});
RunLog run_vr_greedy_gq(const ObjectiveContext& ctx, const RunConfig& cfg, const StepObserver& observer = {});
RunLog run_actor_critic(const ObjectiveContext& ctx, const RunConfig& cfg, const StepObserver& observer = {});
RunLog run_off_policy_pg(const ObjectiveContext& ctx, const RunConfig& cfg, const StepObserver& observer = {});

RunLog run_algorithm(Algorithm algo, const ObjectiveContext& ctx, const RunConfig& cfg,
                     const StepObserver& observer = {});

/// Uniform draw over the T*M stored iterates theta_xi^{(zeta)}.
VectorXd select_output(const RunLog& log, std::uint64_t seed);

/// Sample accounting for one algorithm: the g_evals convention written to output metadata.
std::string counting_convention();

} // namespace vrgq
