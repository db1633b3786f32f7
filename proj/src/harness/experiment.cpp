#include "vrgq/harness/experiment.hpp"

#include "vrgq/numfmt.hpp"
#include "vrgq/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace vrgq::harness {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Fixed stream ids so probes never share randomness with the algorithms.
enum ProbeStream : std::uint64_t { kFeatureStream = 11, kVarianceStream = 12, kRewardStream = 13, kBallStream = 14 };

std::uint64_t derive(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
    return CounterRng(seed).substream(stream).substream(index)();
}

std::string env_label(const EnvironmentConfig& env, std::uint64_t seed) {
    return (env.type == EnvironmentType::Garnet ? std::string("garnet") : std::string("frozen_lake")) + " seed " +
           std::to_string(seed);
}

std::vector<double> row_weights(const auto& v) {
    std::vector<double> w(static_cast<std::size_t>(v.size()));
    for (Index i = 0; i < v.size(); ++i) w[static_cast<std::size_t>(i)] = v(i);
    return w;
}

} // namespace

ObjectiveContext build_environment(const EnvironmentConfig& env, double sigma, std::uint64_t env_seed) {
    try {
        Mdp mdp;
        if (env.type == EnvironmentType::Garnet) {
            GarnetSpec spec = env.garnet;
            spec.gamma = env.gamma;
            spec.feature_dim = env.feature_dim;
            spec.seed = env_seed;
            mdp = generate_garnet(spec);
        } else {
            mdp = build_frozen_lake(env.slippery, env.gamma);
        }
        auto features = generate_features(mdp.n_states, mdp.n_actions, env.feature_dim, env.features,
                                          derive(env_seed, kFeatureStream));
        auto behavior = PolicyTable::uniform(mdp.n_states, mdp.n_actions);
        return build_context(std::move(mdp), std::move(features), SoftmaxOperator<double>(sigma), std::move(behavior));
    } catch (const SolvabilityError& e) {
        throw SolvabilityError(env_label(env, env_seed) + ": " + e.what(), e.eigenvalue());
    } catch (const ErgodicityError& e) {
        throw ErgodicityError(env_label(env, env_seed) + ": " + e.what());
    }
}

double variance_probe(const ObjectiveContext& ctx, const VectorXd& theta, const VectorXd& omega, Index n_mc,
                      std::uint64_t seed, const ReferenceState* reference) {
    if (n_mc < 1) throw ParameterError("variance_probe: n_mc must be >= 1");
    const VectorXd grad = grad_J(ctx, theta);
    const double gamma = ctx.mdp.gamma;

    CounterRng rng(seed);
    const auto w = row_weights(ctx.mu.state_action_dist);
    std::discrete_distribution<Index> pair_dist(w.begin(), w.end());

    double total = 0.0;
    for (Index k = 0; k < n_mc; ++k) {
        const Index sa = pair_dist(rng);
        const auto pw = row_weights(ctx.mdp.kernel.row(sa));
        std::discrete_distribution<Index> next_dist(pw.begin(), pw.end());
        Transition x;
        x.s = sa / ctx.mdp.n_actions;
        x.a = sa % ctx.mdp.n_actions;
        x.s_next = next_dist(rng);
        x.r = ctx.mdp.reward(sa, x.s_next);

        VectorXd g = sample_updates(x, theta, omega, ctx.features, ctx.op, gamma).g;
        if (reference != nullptr) {
            g -= sample_updates(x, *reference->theta_ref, *reference->omega_ref, ctx.features, ctx.op, gamma).g;
            g += *reference->g_ref;
        }
        total += (g - grad).squaredNorm();
    }
    return total / static_cast<double>(n_mc);
}

double reward_probe(const Mdp& mdp, const FeatureMap<double>& features, const SoftmaxOperator<double>& op,
                    const VectorXd& theta, Index horizon, std::uint64_t seed) {
    if (horizon < 1) throw ParameterError("reward_probe: horizon must be >= 1");
    const PolicyTable pi = improve_policy(theta, features, op);
    Start start = Start::initial();
    CounterRng rng(seed);
    try {
        const VectorXd mu = stationary_of_chain(induced_chain(mdp, pi));
        const auto w = row_weights(mu);
        std::discrete_distribution<Index> d(w.begin(), w.end());
        start = Start::at(d(rng));
    } catch (const ErgodicityError&) {
    }
    TrajectorySampler sampler(mdp, pi, rng(), start);
    double total = 0.0;
    for (Index i = 0; i < horizon; ++i) total += sampler.next().r;
    return total / static_cast<double>(horizon);
}

namespace {

struct SeedOutput {
    MetricsTable rows;
    std::vector<RunSummary> summaries;
};

SeedOutput run_one_seed(const ExperimentConfig& cfg, const ObjectiveContext& ctx, std::uint64_t run_seed) {
    SeedOutput out;
    const auto& m = cfg.metrics;
    for (const Algorithm algo : cfg.algorithm.algorithms) {
        RunConfig rc = cfg.algorithm.run;
        rc.seed = run_seed;
        rc.epochs = cfg.vr_epochs();
        rc.snapshot_cadence = m.snapshot_cadence;
        rc.log_oracle = true;

        const StepObserver observer = [&](const StepView& view, StepRecord& rec) {
            const Index step = rec.global_step;
            if (m.variance_probe_every > 0 && step >= m.variance_probe_start && step % m.variance_probe_every == 0)
                rec.var_estimate = variance_probe(view.ctx, view.theta, view.omega, m.variance_mc_samples,
                                                  derive(run_seed, kVarianceStream, static_cast<std::uint64_t>(step)),
                                                  view.reference);
            if (m.reward_probe_every > 0 && step % m.reward_probe_every == 0)
                rec.reward_estimate =
                    reward_probe(view.ctx.mdp, view.ctx.features, view.ctx.op, view.theta, m.reward_horizon,
                                 derive(run_seed, kRewardStream, static_cast<std::uint64_t>(step)));
        };
        const RunLog log = run_algorithm(algo, ctx, rc, observer);

        const std::string name = to_string(algo);
        RunSummary summary;
        summary.algo = name;
        summary.seed = run_seed;
        double running_min = HUGE_VAL;
        double var_sum = 0.0;
        std::size_t var_count = 0;
        double reward_max = -HUGE_VAL;
        const std::size_t first = out.rows.size();
        for (const auto& rec : log.records) {
            MetricsRow row;
            row.algo = name;
            row.seed = run_seed;
            row.epoch = rec.epoch;
            row.iter = rec.global_step;
            row.g_evals = rec.g_eval_count;
            row.grad_norm_sq = rec.grad_norm_sq;
            running_min = std::min(running_min, rec.grad_norm_sq);
            row.min_grad_norm_sq = running_min;
            row.mspbe = rec.mspbe;
            if (!std::isnan(rec.var_estimate)) {
                row.var_estimate = rec.var_estimate;
                var_sum += rec.var_estimate;
                ++var_count;
            }
            if (!std::isnan(rec.reward_estimate)) {
                row.reward_estimate = rec.reward_estimate;
                reward_max = std::max(reward_max, rec.reward_estimate);
            }
            out.rows.push_back(std::move(row));
        }
        summary.final_min_grad_norm_sq = running_min;
        const auto tail = static_cast<std::size_t>(m.asymptotic_tail);
        const std::size_t n_rows = out.rows.size() - first;
        summary.asymptotic_error =
            n_rows >= tail ? asymptotic_error(MetricsTable(out.rows.begin() + static_cast<std::ptrdiff_t>(first),
                                                           out.rows.end()),
                                              tail)
                           : kNaN;
        summary.mean_var_estimate = var_count ? var_sum / static_cast<double>(var_count) : kNaN;
        summary.max_reward_estimate = reward_max > -HUGE_VAL ? reward_max : kNaN;
        out.summaries.push_back(summary);
    }
    return out;
}

} // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto n = static_cast<std::size_t>(cfg.run.n_seeds);
    const auto& env = cfg.environment;

    std::optional<ObjectiveContext> shared;
    if (!env.resample_per_seed) shared = build_environment(env, cfg.algorithm.sigma, env.seed);

    std::vector<SeedOutput> outputs(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                const std::uint64_t run_seed = cfg.run.base_seed ^ static_cast<std::uint64_t>(i);
                if (shared) {
                    outputs[i] = run_one_seed(cfg, *shared, run_seed);
                } else {
                    const auto ctx = build_environment(env, cfg.algorithm.sigma, env.seed + i);
                    outputs[i] = run_one_seed(cfg, ctx, run_seed);
                }
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::size_t threads = cfg.run.threads > 0 ? static_cast<std::size_t>(cfg.run.threads)
                                              : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, n);
    {
        std::vector<std::jthread> pool;
        for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
        worker();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    ExperimentResult result;
    result.lambda_C = shared ? shared->lambda_C : kNaN;
    for (auto& o : outputs) {
        result.table.insert(result.table.end(), std::make_move_iterator(o.rows.begin()),
                            std::make_move_iterator(o.rows.end()));
        result.summaries.insert(result.summaries.end(), o.summaries.begin(), o.summaries.end());
    }
    for (const Algorithm algo : cfg.algorithm.algorithms) {
        const std::string name = to_string(algo);
        std::vector<Curve> curves;
        for (std::size_t i = 0; i < n; ++i) {
            Curve c;
            for (const auto& r : outputs.empty() ? MetricsTable{} : result.table) {
                if (r.algo != name || r.seed != (cfg.run.base_seed ^ static_cast<std::uint64_t>(i))) continue;
                c.x.push_back(static_cast<double>(r.g_evals));
                c.y.push_back(r.min_grad_norm_sq);
            }
            if (!c.x.empty()) curves.push_back(std::move(c));
        }
        if (!curves.empty()) result.envelopes[name] = envelope_stats(curves);
    }
    return result;
}

void write_outputs(const std::string& dir, const ExperimentConfig& cfg, const ExperimentResult& result) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory '" + dir + "': " + ec.message());

    const auto open = [&dir](const std::string& name) {
        std::ofstream f(fs::path(dir) / name, std::ios::binary);
        if (!f) throw Error("cannot write '" + (fs::path(dir) / name).string() + "'");
        return f;
    };

    for (Index i = 0; i < cfg.run.n_seeds; ++i) {
        const std::uint64_t run_seed = cfg.run.base_seed ^ static_cast<std::uint64_t>(i);
        MetricsTable rows;
        std::copy_if(result.table.begin(), result.table.end(), std::back_inserter(rows),
                     [&](const MetricsRow& r) { return r.seed == run_seed; });
        std::ostringstream name;
        name << "seed_" << std::setw(3) << std::setfill('0') << i << ".csv";
        auto f = open(name.str());
        write_csv(f, rows);
    }

    {
        auto f = open("aggregate.csv");
        f << "algo,g_evals,p05,p50,p95\n";
        for (const auto& [algo, rows] : result.envelopes)
            for (const auto& r : rows)
                f << algo << ',' << format_double(r.x) << ',' << format_double(r.p05) << ',' << format_double(r.p50)
                  << ',' << format_double(r.p95) << '\n';
    }
    {
        auto f = open("summary.csv");
        f << "algo,seed,final_min_grad_norm_sq,asymptotic_error,mean_var_estimate,max_reward_estimate\n";
        for (const auto& s : result.summaries)
            f << s.algo << ',' << s.seed << ',' << format_double(s.final_min_grad_norm_sq) << ','
              << format_double(s.asymptotic_error) << ',' << format_double(s.mean_var_estimate) << ','
              << format_double(s.max_reward_estimate) << '\n';
    }
    {
        nlohmann::ordered_json meta;
        meta["format_version"] = 1;
        meta["rng"] = CounterRng::name;
        meta["counting_convention"] = counting_convention();
        meta["config"] = describe(cfg);
        meta["lambda_C"] = result.lambda_C;
        meta["csv_header"] = kMetricsHeader;
        nlohmann::ordered_json baselines = nlohmann::ordered_json::array();
        for (const Algorithm a : cfg.algorithm.algorithms)
            if (a == Algorithm::ActorCritic || a == Algorithm::OffPolicyPG)
                baselines.push_back(to_string(a) + ": baseline, paper-under-specified");
        meta["baselines"] = baselines;
        meta["aggregate"] = "nearest-rank 5/50/95 percentiles of min_grad_norm_sq across seeds on the g_evals axis";
        auto f = open("metadata.json");
        f << meta.dump(2) << '\n';
    }
}

std::vector<SweepPoint> run_sweep(const ExperimentConfig& cfg, const std::string& param,
                                  const std::vector<std::string>& values, const std::string& out_dir) {
    if (values.empty()) throw ConfigError("sweep: no values given");
    std::vector<SweepPoint> points;
    for (const auto& v : values) {
        ExperimentConfig c = cfg;
        set_parameter(c, param, v);
        const auto result = run_experiment(c);
        if (!out_dir.empty()) write_outputs((fs::path(out_dir) / (param + "=" + v)).string(), c, result);
        points.push_back({v, result.summaries});
    }
    if (!out_dir.empty()) {
        std::ofstream f(fs::path(out_dir) / "sweep.csv", std::ios::binary);
        if (!f) throw Error("cannot write sweep.csv");
        f << "param,value,algo,seed,asymptotic_error,final_min_grad_norm_sq\n";
        for (const auto& p : points)
            for (const auto& s : p.summaries)
                f << param << ',' << p.value << ',' << s.algo << ',' << s.seed << ','
                  << format_double(s.asymptotic_error) << ',' << format_double(s.final_min_grad_norm_sq) << '\n';
    }
    return points;
}

double estimate_gradient_bound(const ObjectiveContext& ctx, double radius, Index n, std::uint64_t seed) {
    if (n < 1) throw ParameterError("estimate_gradient_bound: n must be >= 1");
    const Index d = ctx.features.dim();
    CounterRng rng(derive(seed, kBallStream));
    std::normal_distribution<double> normal;
    double best = 0.0;
    VectorXd theta(d);
    for (Index k = 0; k < n; ++k) {
        for (Index j = 0; j < d; ++j) theta(j) = normal(rng);
        const double norm = theta.norm();
        if (norm == 0.0) continue;
        theta *= radius * std::pow(rng.uniform01(), 1.0 / static_cast<double>(d)) / norm;
        best = std::max(best, grad_J(ctx, theta).norm());
    }
    return best;
}

RateValidation validate_rates(const ExperimentConfig& cfg) {
    const auto ctx = build_environment(cfg.environment, cfg.algorithm.sigma, cfg.environment.seed);
    RateValidation out;
    out.mixing = estimate_mixing(ctx.mdp, ctx.behavior, cfg.theory.mixing_horizon);

    theory::ConstantInputs in;
    in.R = cfg.theory.radius > 0.0 ? cfg.theory.radius : cfg.algorithm.run.radius;
    in.gamma = ctx.mdp.gamma;
    in.r_max = ctx.mdp.r_max;
    in.n_actions = static_cast<double>(ctx.mdp.n_actions);
    in.k1 = cfg.theory.k1 >= 0.0 ? cfg.theory.k1 : cfg.algorithm.sigma * in.n_actions;
    in.L1 = cfg.theory.L1;
    in.L2 = cfg.theory.L2;
    in.L3 = cfg.theory.L3;
    in.L_smooth = cfg.theory.L_smooth;
    in.lambda_C = ctx.lambda_C;
    in.Lambda = out.mixing.lambda_hat;
    in.rho = out.mixing.rho_hat;
    in.C_gradJ = estimate_gradient_bound(ctx, in.R, cfg.theory.gradJ_samples, cfg.environment.seed);
    out.constants = theory::compute_constants(in);
    out.report = theory::check_learning_rates(out.constants, cfg.algorithm.run.eta_theta, cfg.algorithm.run.eta_omega,
                                              static_cast<long>(cfg.algorithm.run.batch_size));
    return out;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2) throw ParameterError("spearman: need two equal-length samples");
    const auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < idx.size();) {
            std::size_t j = i;
            while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
            const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
            for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    const auto ra = ranks(a);
    const auto rb = ranks(b);
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double num = 0, da = 0, db = 0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        num += (ra[i] - ma) * (rb[i] - mb);
        da += (ra[i] - ma) * (ra[i] - ma);
        db += (rb[i] - mb) * (rb[i] - mb);
    }
    return num / std::sqrt(da * db);
}

} // namespace vrgq::harness
