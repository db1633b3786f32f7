#include "support.hpp"

#include "vrgq/algorithms.hpp"

#include <doctest.h>

#include <map>

using namespace vrgq;
using testsupport::garnet_context;

namespace {

RunConfig small_run(std::uint64_t seed = 1) {
    RunConfig c;
    c.seed = seed;
    c.iterations = 200;
    c.batch_size = 40;
    c.epochs = 3;
    return c;
}

} // namespace

TEST_CASE("G and H against the written-out formulas") {
    const auto ctx = garnet_context(2);
    const auto& f = ctx.features;
    VectorXd theta(4), omega(4);
    theta << 0.4, -1.0, 2.0, 0.3;
    omega << -0.2, 0.1, 0.05, 0.7;
    const Transition x{3, 1, 0.25, 0};
    const double gamma = ctx.mdp.gamma;

    const VectorXd phi = f(3, 1);
    const VectorXd q = action_values(theta, 0, f);
    const VectorXd pi = softmax_from_values(q, ctx.op);
    double v = 0;
    VectorXd mean_phi = VectorXd::Zero(4), weighted = VectorXd::Zero(4);
    for (Index a = 0; a < 3; ++a) {
        v += pi(a) * q(a);
        mean_phi += pi(a) * f(0, a);
        weighted += pi(a) * q(a) * f(0, a);
    }
    const VectorXd hat = mean_phi + ctx.op.sigma * (weighted - v * mean_phi);
    const double delta = 0.25 + gamma * v - phi.dot(theta);

    const VectorXd g = -delta * phi + gamma * omega.dot(phi) * hat;
    const VectorXd h = (phi.dot(omega) - delta) * phi;
    CHECK((g_update(x, theta, omega, f, ctx.op, gamma) - g).norm() < 1e-14);
    CHECK((h_update(x, theta, omega, f, ctx.op, gamma) - h).norm() < 1e-14);
    const auto both = sample_updates(x, theta, omega, f, ctx.op, gamma);
    CHECK((both.g - g).norm() < 1e-14);
    CHECK((both.h - h).norm() < 1e-14);
}

TEST_CASE("projection onto the ball") {
    Eigen::Vector2d v(3, 4);
    const VectorXd p = project_ball(v, 1.0);
    CHECK(p(0) == doctest::Approx(0.6).epsilon(1e-16));
    CHECK(p(1) == doctest::Approx(0.8).epsilon(1e-16));
    CHECK(p.norm() <= 1.0);
    const Eigen::Vector2d inside(0.1, -0.2);
    CHECK(project_ball(inside, 1.0) == inside);
    CHECK_THROWS_AS(project_ball(inside, 0.0), ParameterError);
    CHECK_THROWS_AS(project_ball(inside, -1.0), ParameterError);
}

TEST_CASE("reference updates are batch means") {
    const auto ctx = garnet_context(3);
    const auto batch = sample_trajectory(ctx.mdp, ctx.behavior, 25, 4, Start::stationary());
    VectorXd theta = VectorXd::LinSpaced(4, -1, 1), omega = VectorXd::Constant(4, 0.3);
    const auto ref = reference_batch_updates(std::span<const Transition>(batch), theta, omega, ctx.features, ctx.op,
                                             ctx.mdp.gamma);
    VectorXd g = VectorXd::Zero(4), h = VectorXd::Zero(4);
    for (const auto& x : batch) {
        g += g_update(x, theta, omega, ctx.features, ctx.op, ctx.mdp.gamma);
        h += h_update(x, theta, omega, ctx.features, ctx.op, ctx.mdp.gamma);
    }
    CHECK((ref.g_ref - g / 25.0).norm() < 1e-14);
    CHECK((ref.h_ref - h / 25.0).norm() < 1e-14);
    CHECK_THROWS_AS(reference_batch_updates(std::span<const Transition>(), theta, omega, ctx.features, ctx.op, 0.9),
                    ParameterError);
}

TEST_CASE("zero learning rates freeze the iterates") {
    const auto ctx = garnet_context(4);
    auto cfg = small_run();
    cfg.eta_theta = cfg.eta_omega = 0.0;
    cfg.theta0 = VectorXd::Constant(4, 0.5);
    for (auto algo : {Algorithm::GreedyGQ, Algorithm::VRGreedyGQ}) {
        const auto log = run_algorithm(algo, ctx, cfg);
        CHECK(log.final_theta == cfg.theta0);
        for (const auto& r : log.records) CHECK(r.grad_norm_sq == log.records.front().grad_norm_sq);
    }
}

TEST_CASE("greedy-gq step accounting") {
    const auto ctx = garnet_context(5);
    const auto cfg = small_run();
    const auto log = run_greedy_gq(ctx, cfg);
    REQUIRE(log.records.size() == 200);
    CHECK(log.samples_consumed == 200);
    for (std::size_t i = 0; i < log.records.size(); ++i) {
        CHECK(log.records[i].global_step == static_cast<Index>(i + 1));
        CHECK(log.records[i].g_eval_count == static_cast<std::int64_t>(i + 1));
    }
}

TEST_CASE("vr-greedy-gq step accounting") {
    const auto ctx = garnet_context(6);
    const auto cfg = small_run();
    const auto log = run_vr_greedy_gq(ctx, cfg);
    const Index M = cfg.batch_size;
    REQUIRE(log.records.size() == static_cast<std::size_t>(cfg.epochs * M));
    CHECK(log.samples_consumed == static_cast<std::uint64_t>(cfg.epochs * M));
    for (const auto& r : log.records) {
        CHECK(r.g_eval_count == (r.epoch - 1) * 3 * M + M + 2 * (r.inner_t + 1));
        CHECK(r.global_step == (r.epoch - 1) * M + r.inner_t + 1);
    }
}

TEST_CASE("runs are reproducible from the seed") {
    const auto ctx = garnet_context(7);
    for (auto algo : {Algorithm::GreedyGQ, Algorithm::VRGreedyGQ, Algorithm::ActorCritic}) {
        const auto a = run_algorithm(algo, ctx, small_run(3));
        const auto b = run_algorithm(algo, ctx, small_run(3));
        const auto c = run_algorithm(algo, ctx, small_run(4));
        CHECK(a.final_theta == b.final_theta);
        CHECK(a.final_theta != c.final_theta);
    }
}

TEST_CASE("epoch starts from the previous epoch's last iterate") {
    const auto ctx = garnet_context(8);
    auto cfg = small_run();
    cfg.keep_snapshots = true;
    std::vector<VectorXd> after;
    const auto log = run_vr_greedy_gq(ctx, cfg, [&](const StepView& v, StepRecord&) { after.push_back(v.theta); });
    const Index M = cfg.batch_size;
    REQUIRE(log.snapshots.size() == after.size());
    CHECK(log.snapshots.front() == VectorXd::Zero(4));
    for (Index m = 1; m < cfg.epochs; ++m)
        CHECK(log.snapshots[static_cast<std::size_t>(m * M)] == after[static_cast<std::size_t>(m * M - 1)]);
    for (std::size_t i = 1; i < after.size(); ++i) CHECK(log.snapshots[i] == after[i - 1]);
}

TEST_CASE("first inner direction equals the reference batch mean") {
    const auto ctx = garnet_context(9);
    auto cfg = small_run();
    cfg.epochs = 4;
    int checked = 0;
    run_vr_greedy_gq(ctx, cfg, [&](const StepView& v, StepRecord& r) {
        REQUIRE(v.reference != nullptr);
        if (r.inner_t != 0) return;
        CHECK((*v.reference->g_step - *v.reference->g_ref).norm() == 0.0);
        CHECK((*v.reference->h_step - *v.reference->h_ref).norm() == 0.0);
        ++checked;
    });
    CHECK(checked == 4);
}

TEST_CASE("output selection is uniform over stored iterates") {
    const auto ctx = garnet_context(10);
    auto cfg = small_run();
    cfg.epochs = 2;
    cfg.batch_size = 3;
    cfg.keep_snapshots = true;
    const auto log = run_vr_greedy_gq(ctx, cfg);
    REQUIRE(log.snapshots.size() == 6);
    std::map<std::size_t, int> counts;
    const int draws = 60000;
    for (int s = 0; s < draws; ++s) {
        const VectorXd out = select_output(log, static_cast<std::uint64_t>(s));
        for (std::size_t k = 0; k < 6; ++k)
            if (log.snapshots[k] == out) {
                ++counts[k];
                break;
            }
    }
    // Chi-square with 5 dof; 20.5 is the 0.999 quantile. Snapshots are distinct here.
    double chi2 = 0;
    for (std::size_t k = 0; k < 6; ++k) {
        const double e = draws / 6.0;
        chi2 += (counts[k] - e) * (counts[k] - e) / e;
    }
    CHECK(chi2 < 20.5);
}

TEST_CASE("select_output needs recorded snapshots") {
    const auto ctx = garnet_context(11);
    const auto log = run_vr_greedy_gq(ctx, small_run());
    CHECK_THROWS_AS(select_output(log, 0), StateError);
}

TEST_CASE("debug checks keep both iterates in the ball") {
    const auto ctx = garnet_context(12);
    auto cfg = small_run();
    cfg.radius = 0.05;
    cfg.eta_theta = 0.5;
    cfg.eta_omega = 0.5;
    cfg.debug_checks = true;
    for (auto algo : {Algorithm::GreedyGQ, Algorithm::VRGreedyGQ, Algorithm::ActorCritic, Algorithm::OffPolicyPG}) {
        auto c = cfg;
        if (algo == Algorithm::OffPolicyPG) c.iterations = 5;
        double worst = 0;
        CHECK_NOTHROW(run_algorithm(algo, ctx, c, [&](const StepView& v, StepRecord&) {
            worst = std::max({worst, v.theta.norm(), v.omega.norm()});
        }));
        CHECK(worst <= c.radius);
    }
}

TEST_CASE("baselines produce finite oracle logs") {
    const auto ctx = garnet_context(13);
    auto cfg = small_run();
    cfg.iterations = 20;
    const auto ac = run_actor_critic(ctx, cfg);
    CHECK(ac.records.size() == 20);
    cfg.pg_trajectories = 3;
    cfg.pg_horizon = 10;
    const auto pg = run_off_policy_pg(ctx, cfg);
    REQUIRE(pg.records.size() == 20);
    CHECK(pg.records.back().g_eval_count == 20 * 3 * 10);
    for (const auto& r : pg.records) CHECK(std::isfinite(r.grad_norm_sq));
}

TEST_CASE("algorithm names round-trip") {
    for (auto a : {Algorithm::GreedyGQ, Algorithm::VRGreedyGQ, Algorithm::ActorCritic, Algorithm::OffPolicyPG})
        CHECK(parse_algorithm(to_string(a)) == a);
    CHECK_THROWS_AS(parse_algorithm("sarsa"), ParameterError);
}

TEST_CASE("run config validation") {
    RunConfig c;
    CHECK_NOTHROW(c.validate(4));
    c.eta_theta = -1;
    CHECK_THROWS_AS(c.validate(4), ParameterError);
    c = RunConfig{};
    c.theta0 = VectorXd::Zero(3);
    CHECK_THROWS_AS(c.validate(4), ParameterError);
    c = RunConfig{};
    c.radius = 1.0;
    c.omega0 = VectorXd::Constant(4, 1.0);
    CHECK_THROWS_AS(c.validate(4), ParameterError);
    c = RunConfig{};
    c.batch_size = 0;
    CHECK_THROWS_AS(c.validate(4), ParameterError);
}
