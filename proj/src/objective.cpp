#include "vrgq/objective.hpp"

#include "vrgq/numfmt.hpp"

#include <Eigen/Eigenvalues>

namespace vrgq {

ObjectiveContext build_context(Mdp mdp, FeatureMap<double> features, SoftmaxOperator<double> op,
                               PolicyTable behavior) {
    mdp.validate();
    behavior.validate();
    if (features.n_states() != mdp.n_states || features.n_actions() != mdp.n_actions)
        throw ParameterError("build_context: feature map does not match the MDP");

    ObjectiveContext ctx{std::move(mdp), std::move(features), op, std::move(behavior), {}, {}, {}, 0.0, {}, {}};
    ctx.mu = stationary_distribution(ctx.mdp, ctx.behavior);

    const MatrixXd& phi = ctx.features.matrix();
    ctx.C = phi.transpose() * ctx.mu.state_action_dist.asDiagonal() * phi;
    ctx.C = 0.5 * (ctx.C + ctx.C.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(ctx.C, Eigen::EigenvaluesOnly);
    ctx.lambda_C = eig.eigenvalues().minCoeff();
    if (!(ctx.lambda_C > kMinLambdaC))
        throw SolvabilityError("feature covariance is singular: min eigenvalue " + format_double(ctx.lambda_C),
                               ctx.lambda_C);

    ctx.C_llt.compute(ctx.C);
    ctx.C_inv = ctx.C_llt.solve(MatrixXd::Identity(ctx.C.rows(), ctx.C.cols()));
    ctx.expected_reward = ctx.mdp.kernel.cwiseProduct(ctx.mdp.reward).rowwise().sum();
    return ctx;
}

namespace {

struct NextStateTerms {
    VectorXd v_bar;   ///< per state
    MatrixXd phi_hat; ///< n_states x d
};

NextStateTerms next_state_terms(const ObjectiveContext& ctx, const VectorXd& theta) {
    NextStateTerms out{VectorXd(ctx.mdp.n_states), MatrixXd(ctx.mdp.n_states, ctx.features.dim())};
    for (Index s = 0; s < ctx.mdp.n_states; ++s) {
        auto sv = evaluate_state(theta, s, ctx.features, ctx.op);
        out.v_bar(s) = sv.v_bar;
        out.phi_hat.row(s) = sv.phi_hat.transpose();
    }
    return out;
}

// E[delta phi] = Phi^T (mu .* (rbar + gamma P vbar - Phi theta))
VectorXd delta_phi_from(const ObjectiveContext& ctx, const VectorXd& theta, const VectorXd& v_bar) {
    const MatrixXd& phi = ctx.features.matrix();
    const VectorXd td = ctx.expected_reward + ctx.mdp.gamma * (ctx.mdp.kernel * v_bar) - phi * theta;
    return phi.transpose() * ctx.mu.state_action_dist.cwiseProduct(td);
}

} // namespace

ObjectiveEval evaluate_objective(const ObjectiveContext& ctx, const VectorXd& theta) {
    const auto next = next_state_terms(ctx, theta);
    ObjectiveEval out;
    out.expected_delta_phi = delta_phi_from(ctx, theta, next.v_bar);
    out.omega_star = ctx.C_llt.solve(out.expected_delta_phi);
    // gamma E[phi_hat_{s'} phi^T] omega = gamma PhiHat^T P^T (mu .* Phi omega)
    const VectorXd weighted = ctx.mu.state_action_dist.cwiseProduct(ctx.features.matrix() * out.omega_star);
    out.grad = -out.expected_delta_phi +
               ctx.mdp.gamma * (next.phi_hat.transpose() * (ctx.mdp.kernel.transpose() * weighted));
    out.mspbe = 0.5 * out.expected_delta_phi.dot(out.omega_star);
    return out;
}

VectorXd expected_delta_phi(const ObjectiveContext& ctx, const VectorXd& theta) {
    return delta_phi_from(ctx, theta, next_state_terms(ctx, theta).v_bar);
}

VectorXd omega_star(const ObjectiveContext& ctx, const VectorXd& theta) {
    return ctx.C_llt.solve(expected_delta_phi(ctx, theta));
}

VectorXd grad_J(const ObjectiveContext& ctx, const VectorXd& theta) { return evaluate_objective(ctx, theta).grad; }

double mspbe(const ObjectiveContext& ctx, const VectorXd& theta) {
    const VectorXd b = expected_delta_phi(ctx, theta);
    return 0.5 * b.dot(ctx.C_llt.solve(b));
}

VectorXd finite_diff_grad(const ObjectiveContext& ctx, const VectorXd& theta, double h) {
    if (!(h > 0.0)) throw ParameterError("finite_diff_grad: h must be positive");
    VectorXd g(theta.size());
    VectorXd probe = theta;
    for (Index i = 0; i < theta.size(); ++i) {
        probe(i) = theta(i) + h;
        const double up = mspbe(ctx, probe);
        probe(i) = theta(i) - h;
        const double down = mspbe(ctx, probe);
        probe(i) = theta(i);
        g(i) = (up - down) / (2.0 * h);
    }
    return g;
}

} // namespace vrgq
