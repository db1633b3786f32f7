#pragma once

#include "vrgq/features.hpp"
#include "vrgq/mdp.hpp"
#include "vrgq/types.hpp"

namespace vrgq {

/**
 * Everything needed to evaluate the MSPBE and its gradient exactly:
 * the environment, features, improvement operator, behavior policy and
 * its stationary distribution, plus the feature covariance
 * C = sum_{s,a} mu(s,a) phi_{s,a} phi_{s,a}^T.
 *
 * Immutable after build_context(); safe to share across threads.
 */
struct ObjectiveContext {
    Mdp mdp;
    FeatureMap<double> features;
    SoftmaxOperator<double> op;
    PolicyTable behavior;
    StationaryDistribution mu;
    MatrixXd C;
    MatrixXd C_inv;
    double lambda_C = 0.0;

    Eigen::LLT<MatrixXd> C_llt;
    /// E[r | s, a], indexed by Mdp::sa.
    VectorXd expected_reward;
};

/// Smallest admissible eigenvalue of C; below it build_context throws SolvabilityError.
inline constexpr double kMinLambdaC = 1e-8;

ObjectiveContext build_context(Mdp mdp, FeatureMap<double> features, SoftmaxOperator<double> op,
                               PolicyTable behavior);

/// Every oracle quantity at one theta; cheaper than calling the pieces separately.
struct ObjectiveEval {
    VectorXd expected_delta_phi; ///< E[delta(theta) phi]
    VectorXd omega_star;
    VectorXd grad;
    double mspbe = 0.0;
};

ObjectiveEval evaluate_objective(const ObjectiveContext& ctx, const VectorXd& theta);

VectorXd expected_delta_phi(const ObjectiveContext& ctx, const VectorXd& theta);
VectorXd omega_star(const ObjectiveContext& ctx, const VectorXd& theta);
VectorXd grad_J(const ObjectiveContext& ctx, const VectorXd& theta);
double mspbe(const ObjectiveContext& ctx, const VectorXd& theta);

/// Coordinate-wise central difference of mspbe.
VectorXd finite_diff_grad(const ObjectiveContext& ctx, const VectorXd& theta, double h);

} // namespace vrgq
