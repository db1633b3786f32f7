#include "vrgq/algorithms.hpp"

#include "vrgq/numfmt.hpp"
#include "vrgq/rng.hpp"

#include <cmath>
#include <random>

namespace vrgq {

std::string to_string(Algorithm algo) {
    switch (algo) {
    case Algorithm::GreedyGQ: return "greedy_gq";
    case Algorithm::VRGreedyGQ: return "vr_greedy_gq";
    case Algorithm::ActorCritic: return "actor_critic";
    case Algorithm::OffPolicyPG: return "off_policy_pg";
    }
    return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
    if (name == "greedy_gq") return Algorithm::GreedyGQ;
    if (name == "vr_greedy_gq") return Algorithm::VRGreedyGQ;
    if (name == "actor_critic") return Algorithm::ActorCritic;
    if (name == "off_policy_pg") return Algorithm::OffPolicyPG;
    throw ParameterError("unknown algorithm '" + name + "'");
}

std::string counting_convention() {
    return "greedy_gq: 1 G-evaluation per step; vr_greedy_gq: M per epoch (reference batch) + 2 per inner "
           "step; actor_critic: 1 per step; off_policy_pg: samples consumed (trajectories x horizon per "
           "update). H-evaluations are not counted.";
}

void RunConfig::validate(Index dim) const {
    if (!(eta_theta >= 0.0) || !(eta_omega >= 0.0)) throw ParameterError("learning rates must be nonnegative");
    if (batch_size < 1) throw ParameterError("batch_size must be >= 1");
    if (epochs < 1) throw ParameterError("epochs must be >= 1");
    if (iterations < 1) throw ParameterError("iterations must be >= 1");
    if (!(radius > 0.0)) throw ParameterError("radius must be positive");
    if (pg_trajectories < 1 || pg_horizon < 1) throw ParameterError("policy-gradient budget must be positive");
    for (const VectorXd* v : {&theta0, &omega0}) {
        if (v->size() != 0 && v->size() != dim) throw ParameterError("initial vector has wrong dimension");
        if (v->size() != 0 && v->norm() > radius) throw ParameterError("initial vector lies outside the R-ball");
    }
}

namespace {

// Stream ids carved from the run seed.
enum Stream : std::uint64_t { kTrajectory = 1, kBatchIndex = 2, kPolicySampling = 3 };

std::uint64_t stream_seed(std::uint64_t seed, Stream id) { return CounterRng(seed).substream(id)(); }

VectorXd initial_or_zero(const VectorXd& v, Index dim) { return v.size() == 0 ? VectorXd::Zero(dim) : v; }

void check_ball(const VectorXd& theta, const VectorXd& omega, double radius, Index step) {
    if (theta.norm() > radius || omega.norm() > radius)
        throw StateError("projection invariant violated at step " + std::to_string(step));
}

void log_step(RunLog& log, const ObjectiveContext& ctx, const RunConfig& cfg, StepRecord rec,
              const VectorXd& theta, const VectorXd& omega, const ReferenceState* ref, const StepObserver& observer) {
    if (cfg.debug_checks) check_ball(theta, omega, cfg.radius, rec.global_step);
    if (cfg.log_oracle) {
        const auto eval = evaluate_objective(ctx, theta);
        rec.grad_norm_sq = eval.grad.squaredNorm();
        rec.mspbe = eval.mspbe;
    }
    if (observer) observer(StepView{ctx, theta, omega, ref}, rec);
    if (cfg.snapshot_cadence > 0 && rec.global_step % cfg.snapshot_cadence == 0)
        log.theta_trace.emplace_back(rec.global_step, theta);
    log.records.push_back(rec);
}

} // namespace

RunLog run_greedy_gq(const ObjectiveContext& ctx, const RunConfig& cfg, const StepObserver& observer) {
    const Index d = ctx.features.dim();
    cfg.validate(d);
    const double gamma = ctx.mdp.gamma;

    RunLog log;
    log.algorithm = Algorithm::GreedyGQ;
    log.records.reserve(static_cast<std::size_t>(cfg.iterations));

    VectorXd theta = initial_or_zero(cfg.theta0, d);
    VectorXd omega = initial_or_zero(cfg.omega0, d);
    TrajectorySampler sampler(ctx.mdp, ctx.behavior, stream_seed(cfg.seed, kTrajectory), Start::stationary());

    std::int64_t g_evals = 0;
    for (Index k = 0; k < cfg.iterations; ++k) {
        const Transition x = sampler.next();
        const auto u = sample_updates(x, theta, omega, ctx.features, ctx.op, gamma);
        theta = project_ball(theta - cfg.eta_theta * u.g, cfg.radius);
        omega = project_ball(omega - cfg.eta_omega * u.h, cfg.radius);
        g_evals += 1;

        StepRecord rec;
        rec.global_step = k + 1;
        rec.inner_t = k;
        rec.g_eval_count = g_evals;
        log_step(log, ctx, cfg, rec, theta, omega, nullptr, observer);
    }
    log.samples_consumed = sampler.consumed();
    log.final_theta = theta;
    log.final_omega = omega;
    return log;
}

RunLog run_vr_greedy_gq(const ObjectiveContext& ctx, const RunConfig& cfg, const StepObserver& observer) {
    const Index d = ctx.features.dim();
    cfg.validate(d);
    const double gamma = ctx.mdp.gamma;
    const Index M = cfg.batch_size;

    RunLog log;
    log.algorithm = Algorithm::VRGreedyGQ;
    log.epochs = cfg.epochs;
    log.batch_size = M;
    log.records.reserve(static_cast<std::size_t>(cfg.epochs * M));
    if (cfg.keep_snapshots) log.snapshots.reserve(static_cast<std::size_t>(cfg.epochs * M));

    VectorXd theta_ref = initial_or_zero(cfg.theta0, d);
    VectorXd omega_ref = initial_or_zero(cfg.omega0, d);
    VectorXd theta = theta_ref;
    VectorXd omega = omega_ref;

    TrajectorySampler sampler(ctx.mdp, ctx.behavior, stream_seed(cfg.seed, kTrajectory), Start::stationary());
    CounterRng index_rng(stream_seed(cfg.seed, kBatchIndex));
    std::uniform_int_distribution<Index> pick(0, M - 1);

    std::vector<Transition> batch(static_cast<std::size_t>(M));
    // G_x(theta_ref, omega_ref), H_x(...) per batch element; reused by the inner loop.
    MatrixXd g_at_ref(d, M);
    MatrixXd h_at_ref(d, M);
    VectorXd g_ref(d);
    VectorXd h_ref(d);
    VectorXd g(d);
    VectorXd h(d);
    ReferenceState ref{&theta_ref, &omega_ref, &g_ref, &h_ref, batch, -1, &g, &h};

    std::int64_t g_evals = 0;
    Index step = 0;
    for (Index m = 1; m <= cfg.epochs; ++m) {
        for (auto& x : batch) x = sampler.next();

        theta = theta_ref;
        omega = omega_ref;
        g_ref.setZero();
        h_ref.setZero();
        for (Index k = 0; k < M; ++k) {
            auto u = sample_updates(batch[static_cast<std::size_t>(k)], theta_ref, omega_ref, ctx.features, ctx.op,
                                    gamma);
            g_at_ref.col(k) = u.g;
            h_at_ref.col(k) = u.h;
            g_ref += u.g;
            h_ref += u.h;
        }
        g_ref /= static_cast<double>(M);
        h_ref /= static_cast<double>(M);
        g_evals += M;

        for (Index t = 0; t < M; ++t) {
            if (cfg.keep_snapshots) log.snapshots.push_back(theta);
            const Index xi = pick(index_rng);
            const auto u = sample_updates(batch[static_cast<std::size_t>(xi)], theta, omega, ctx.features, ctx.op,
                                          gamma);
            g = u.g - g_at_ref.col(xi) + g_ref;
            h = u.h - h_at_ref.col(xi) + h_ref;
            ref.xi = xi;
            theta = project_ball(theta - cfg.eta_theta * g, cfg.radius);
            omega = project_ball(omega - cfg.eta_omega * h, cfg.radius);
            g_evals += 2;

            StepRecord rec;
            rec.global_step = ++step;
            rec.epoch = m;
            rec.inner_t = t;
            rec.g_eval_count = g_evals;
            log_step(log, ctx, cfg, rec, theta, omega, &ref, observer);
        }
        theta_ref = theta;
        omega_ref = omega;
    }
    log.samples_consumed = sampler.consumed();
    log.final_theta = theta;
    log.final_omega = omega;
    return log;
}

RunLog run_actor_critic(const ObjectiveContext& ctx, const RunConfig& cfg, const StepObserver& observer) {
    const Index d = ctx.features.dim();
    cfg.validate(d);
    const double gamma = ctx.mdp.gamma;
    const double n_actions = static_cast<double>(ctx.mdp.n_actions);
    const auto& features = ctx.features;

    RunLog log;
    log.algorithm = Algorithm::ActorCritic;
    log.records.reserve(static_cast<std::size_t>(cfg.iterations));

    VectorXd theta = initial_or_zero(cfg.theta0, d);
    VectorXd w = initial_or_zero(cfg.omega0, d);
    TrajectorySampler sampler(ctx.mdp, ctx.behavior, stream_seed(cfg.seed, kTrajectory), Start::stationary());

    // Critic v(s) = mean_a phi_{s,a}^T w, so grad_w v(s) = mean_a phi_{s,a}.
    MatrixXd state_features(ctx.mdp.n_states, d);
    for (Index s = 0; s < ctx.mdp.n_states; ++s)
        state_features.row(s) = features.matrix().middleRows(features.sa(s, 0), ctx.mdp.n_actions).colwise().sum() /
                                n_actions;

    std::int64_t g_evals = 0;
    for (Index k = 0; k < cfg.iterations; ++k) {
        const Transition x = sampler.next();
        const double v_s = state_features.row(x.s).dot(w);
        const double v_next = state_features.row(x.s_next).dot(w);
        const double delta = x.r + gamma * v_next - v_s;

        const VectorXd pi = policy_row(theta, x.s, features, ctx.op);
        const double ratio = pi(x.a) / ctx.behavior.probs(x.s, x.a);
        const VectorXd mean_phi =
            features.matrix().middleRows(features.sa(x.s, 0), ctx.mdp.n_actions).transpose() * pi;
        const VectorXd grad_log = ctx.op.sigma * (features(x.s, x.a) - mean_phi);

        w = project_ball(w + cfg.eta_omega * delta * state_features.row(x.s).transpose(), cfg.radius);
        theta = project_ball(theta + cfg.eta_theta * ratio * delta * grad_log, cfg.radius);
        g_evals += 1;

        StepRecord rec;
        rec.global_step = k + 1;
        rec.inner_t = k;
        rec.g_eval_count = g_evals;
        log_step(log, ctx, cfg, rec, theta, w, nullptr, observer);
    }
    log.samples_consumed = sampler.consumed();
    log.final_theta = theta;
    log.final_omega = w;
    return log;
}

RunLog run_off_policy_pg(const ObjectiveContext& ctx, const RunConfig& cfg, const StepObserver& observer) {
    const Index d = ctx.features.dim();
    cfg.validate(d);
    const double gamma = ctx.mdp.gamma;
    const auto& features = ctx.features;
    const auto n_traj = static_cast<std::size_t>(cfg.pg_trajectories);
    const auto horizon = static_cast<std::size_t>(cfg.pg_horizon);

    RunLog log;
    log.algorithm = Algorithm::OffPolicyPG;
    log.records.reserve(static_cast<std::size_t>(cfg.iterations));

    VectorXd theta = initial_or_zero(cfg.theta0, d);
    const VectorXd omega = VectorXd::Zero(d);
    const CounterRng base(stream_seed(cfg.seed, kPolicySampling));

    std::vector<Transition> episode(horizon);
    std::vector<double> returns(horizon);
    std::uint64_t samples = 0;
    for (Index k = 0; k < cfg.iterations; ++k) {
        const PolicyTable pi = improve_policy(theta, features, ctx.op);
        VectorXd grad = VectorXd::Zero(d);
        for (std::size_t j = 0; j < n_traj; ++j) {
            const auto seed = base.substream(static_cast<std::uint64_t>(k) * n_traj + j)();
            TrajectorySampler sampler(ctx.mdp, pi, seed, Start::initial());
            for (auto& x : episode) x = sampler.next();
            samples += horizon;

            double ret = 0.0;
            for (std::size_t t = horizon; t-- > 0;) {
                ret = episode[t].r + gamma * ret;
                returns[t] = ret;
            }
            double discount = 1.0;
            for (std::size_t t = 0; t < horizon; ++t) {
                const auto& x = episode[t];
                if (returns[t] != 0.0) {
                    const VectorXd p = pi.probs.row(x.s).transpose();
                    const VectorXd mean_phi =
                        features.matrix().middleRows(features.sa(x.s, 0), ctx.mdp.n_actions).transpose() * p;
                    grad += (discount * returns[t] * ctx.op.sigma) * (features(x.s, x.a) - mean_phi);
                }
                discount *= gamma;
            }
        }
        grad /= static_cast<double>(n_traj);
        theta = project_ball(theta + cfg.eta_theta * grad, cfg.radius);

        StepRecord rec;
        rec.global_step = k + 1;
        rec.inner_t = k;
        rec.g_eval_count = static_cast<std::int64_t>(samples);
        log_step(log, ctx, cfg, rec, theta, omega, nullptr, observer);
    }
    log.samples_consumed = samples;
    log.final_theta = theta;
    log.final_omega = omega;
    return log;
}

RunLog run_algorithm(Algorithm algo, const ObjectiveContext& ctx, const RunConfig& cfg, const StepObserver& observer) {
    switch (algo) {
    case Algorithm::GreedyGQ: return run_greedy_gq(ctx, cfg, observer);
    case Algorithm::VRGreedyGQ: return run_vr_greedy_gq(ctx, cfg, observer);
    case Algorithm::ActorCritic: return run_actor_critic(ctx, cfg, observer);
    case Algorithm::OffPolicyPG: return run_off_policy_pg(ctx, cfg, observer);
    }
    throw ParameterError("unknown algorithm");
}

VectorXd select_output(const RunLog& log, std::uint64_t seed) {
    const auto expected = static_cast<std::size_t>(log.epochs * log.batch_size);
    if (log.snapshots.empty() || log.snapshots.size() != expected)
        throw StateError("select_output: run was not recorded with keep_snapshots");
    CounterRng rng(seed);
    std::uniform_int_distribution<Index> epoch(1, log.epochs);
    std::uniform_int_distribution<Index> inner(0, log.batch_size - 1);
    const Index zeta = epoch(rng);
    const Index xi = inner(rng);
    return log.snapshots[static_cast<std::size_t>((zeta - 1) * log.batch_size + xi)];
}

} // namespace vrgq
