#include "vrgq/harness/config.hpp"
#include "vrgq/harness/experiment.hpp"
#include "vrgq/harness/metrics.hpp"

#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace vrgq;
using namespace vrgq::harness;
namespace fs = std::filesystem;

namespace {

ExperimentConfig parse(const std::string& text) {
    std::istringstream is(text);
    return parse_config(is);
}

const char* kTiny = R"(
[environment]
type = garnet
seed = 3
[algorithm]
name = greedy_gq,vr_greedy_gq
batch_size = 20
iterations = 60
[metrics]
variance_probe_every = 10
variance_mc_samples = 20
asymptotic_tail = 10
[run]
n_seeds = 3
base_seed = 5
)";

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("vrgq_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int cli(const std::string& args) {
    const int rc = std::system((std::string(VRGQ_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

} // namespace

TEST_CASE("config parsing") {
    const auto c = parse(kTiny);
    CHECK(c.algorithm.algorithms.size() == 2);
    CHECK(c.algorithm.run.batch_size == 20);
    CHECK(c.run.base_seed == 5);
    CHECK(c.vr_epochs() == 3);
    CHECK(c.environment.garnet.seed == 3);

    const auto lake = parse("[environment]\ntype = frozen_lake\n");
    CHECK(lake.environment.feature_dim == 8);
    CHECK(lake.environment.features == FeatureDistribution::Gaussian);
}

TEST_CASE("config errors") {
    CHECK_THROWS_AS(parse("[environment]\ncolour = red\n"), ConfigError);
    CHECK_THROWS_AS(parse("[nonsense]\nx = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse("[algorithm]\neta_theta = fast\n"), ConfigError);
    CHECK_THROWS_AS(parse("[algorithm]\nname = sarsa\n"), ConfigError);
    CHECK_THROWS_AS(parse("[environment]\ngamma = 1.0\n"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.ini"), ConfigError);
}

TEST_CASE("base seed environment override") {
    auto c = parse(kTiny);
    setenv(kBaseSeedEnv, "77", 1);
    apply_environment_overrides(c);
    CHECK(c.run.base_seed == 77);
    setenv(kBaseSeedEnv, "x", 1);
    CHECK_THROWS_AS(apply_environment_overrides(c), ConfigError);
    unsetenv(kBaseSeedEnv);
}

TEST_CASE("set_parameter") {
    auto c = parse(kTiny);
    set_parameter(c, "batch_size", "10");
    CHECK(c.algorithm.run.batch_size == 10);
    CHECK(c.vr_epochs() == 6);
    CHECK_THROWS_AS(set_parameter(c, "gamma", "0.5"), ConfigError);
    CHECK_THROWS_AS(set_parameter(c, "batch_size", "0"), ConfigError);
}

TEST_CASE("csv round trip is exact") {
    MetricsTable t;
    MetricsRow r;
    r.algo = "greedy_gq";
    r.seed = 9;
    r.iter = 1;
    r.g_evals = 1;
    r.grad_norm_sq = 0.1 + 0.2;
    r.min_grad_norm_sq = r.grad_norm_sq;
    r.mspbe = 1.0 / 3.0;
    r.var_estimate = 5e-300;
    t.push_back(r);
    r.iter = 2;
    r.g_evals = 2;
    r.grad_norm_sq = 7.0;
    r.var_estimate.reset();
    r.reward_estimate = 0.25;
    t.push_back(r);
    std::stringstream ss;
    write_csv(ss, t);
    CHECK(read_csv(ss) == t);
}

TEST_CASE("csv schema errors name the problem") {
    std::istringstream wrong("algo,seed,epoch\n");
    try {
        read_csv(wrong);
        FAIL("expected error");
    } catch (const ParameterError& e) {
        CHECK(std::string(e.what()).find("iter") != std::string::npos);
    }
    std::istringstream short_row(std::string(kMetricsHeader) + "\ngreedy_gq,1,0,1\n");
    try {
        read_csv(short_row);
        FAIL("expected error");
    } catch (const ParameterError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("invariant checker") {
    MetricsTable t(3);
    for (int i = 0; i < 3; ++i) {
        t[i].algo = "a";
        t[i].g_evals = i + 1;
    }
    t[0].grad_norm_sq = t[0].min_grad_norm_sq = 3;
    t[1].grad_norm_sq = 1;
    t[1].min_grad_norm_sq = 1;
    t[2].grad_norm_sq = 2;
    t[2].min_grad_norm_sq = 1;
    CHECK(check_invariants(t).empty());
    t[2].min_grad_norm_sq = 2;
    CHECK_FALSE(check_invariants(t).empty());
    t[2].min_grad_norm_sq = 1;
    t[2].g_evals = 2;
    CHECK_FALSE(check_invariants(t).empty());
}

TEST_CASE("nearest-rank percentiles") {
    std::vector<double> v;
    for (int i = 1; i <= 40; ++i) v.push_back(41 - i);
    // ceil(p/100 * 40): 5% -> 2nd, 50% -> 20th, 95% -> 38th smallest.
    CHECK(nearest_rank(v, 5) == 2);
    CHECK(nearest_rank(v, 50) == 20);
    CHECK(nearest_rank(v, 95) == 38);
    CHECK(nearest_rank({4.0}, 50) == 4.0);
    CHECK_THROWS_AS(nearest_rank({}, 50), ParameterError);
}

TEST_CASE("envelope over identical curves is the curve") {
    Curve c{{1, 2, 3}, {5, 4, 3}};
    const auto env = envelope_stats({c, c, c});
    REQUIRE(env.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(env[i].p05 == c.y[i]);
        CHECK(env[i].p95 == c.y[i]);
    }
    Curve shifted{{1.5, 2.5, 3.5}, {4, 3, 2}};
    const auto clipped = envelope_stats({c, shifted});
    REQUIRE(clipped.size() == 2); // common range [1.5, 3]
    CHECK(clipped[0].x == 2);
    CHECK(clipped[0].p95 == 4);
    CHECK(clipped[0].p05 == doctest::Approx(3.5));
}

TEST_CASE("spearman") {
    CHECK(spearman({1, 2, 3, 4}, {8, 6, 4, 1}) == doctest::Approx(-1.0));
    CHECK(spearman({1, 2, 3, 4}, {1, 3, 2, 4}) == doctest::Approx(0.8));
    CHECK(spearman({1, 2, 2, 3}, {1, 2, 2, 3}) == doctest::Approx(1.0));
    CHECK_THROWS_AS(spearman({1}, {1}), ParameterError);
}

TEST_CASE("one seed, ten iterations, ten rows") {
    auto c = parse("[algorithm]\nname = greedy_gq\niterations = 10\n[metrics]\nasymptotic_tail = 5\n");
    const auto res = run_experiment(c);
    CHECK(res.table.size() == 10);
    CHECK(check_invariants(res.table).empty());
}

TEST_CASE("experiment output does not depend on the thread count") {
    auto c = parse(kTiny);
    c.run.threads = 1;
    const auto a = run_experiment(c);
    c.run.threads = 3;
    const auto b = run_experiment(c);
    CHECK(a.table == b.table);
    CHECK(check_invariants(a.table).empty());
    CHECK(a.summaries.size() == 6);
    CHECK(a.envelopes.size() == 2);
}

TEST_CASE("variance probes fire on schedule") {
    auto c = parse(kTiny);
    c.metrics.variance_probe_start = 20;
    const auto res = run_experiment(c);
    for (const auto& r : res.table) CHECK(r.var_estimate.has_value() == (r.iter >= 20 && r.iter % 10 == 0));
}

TEST_CASE("variance probe of a zero-noise direction") {
    // With the reference at the current point the direction is G_ref, a constant.
    const auto ctx = build_environment(EnvironmentConfig{}, 1.0, 2);
    const VectorXd theta = VectorXd::Constant(4, 0.3), omega = VectorXd::Constant(4, -0.1);
    const VectorXd g = grad_J(ctx, theta);
    const ReferenceState ref{&theta, &omega, &g, &g};
    CHECK(variance_probe(ctx, theta, omega, 50, 1, &ref) == doctest::Approx(0.0).epsilon(1e-20));
    CHECK(variance_probe(ctx, theta, omega, 50, 1) > 0.0);
}

TEST_CASE("write_outputs lays out the result tree") {
    auto c = parse(kTiny);
    const auto res = run_experiment(c);
    const auto dir = scratch("outputs");
    write_outputs(dir.string(), c, res);
    for (const char* f : {"seed_000.csv", "seed_001.csv", "seed_002.csv", "aggregate.csv", "summary.csv",
                          "metadata.json"})
        CHECK(fs::exists(dir / f));
    std::ifstream in(dir / "seed_001.csv");
    const auto rows = read_csv(in);
    CHECK(rows.size() == 120);
    CHECK(std::all_of(rows.begin(), rows.end(), [](const MetricsRow& r) { return r.seed == (5u ^ 1u); }));
    CHECK(slurp(dir / "metadata.json").find("splitmix64-counter") != std::string::npos);
}

TEST_CASE("cli exit codes") {
    const auto dir = scratch("cli");
    CHECK(cli("run --config /nonexistent.ini --out " + dir.string()) == 2);
    {
        std::ofstream f(dir / "bad.ini");
        f << "[algorithm]\nwhatever = 1\n";
    }
    CHECK(cli("run --config " + (dir / "bad.ini").string() + " --out " + dir.string()) == 2);
    {
        std::ofstream f(dir / "singular.ini");
        f << "[environment]\nfeature_dim = 20\n";
    }
    CHECK(cli("mixing --config " + (dir / "singular.ini").string()) == 3);
    CHECK(cli("frobnicate") == 2);
    {
        std::ofstream f(dir / "ok.ini");
        f << kTiny;
    }
    CHECK(cli("mixing --config " + (dir / "ok.ini").string()) == 0);
    CHECK(cli("validate-rates --config " + (dir / "ok.ini").string()) == 0);
    CHECK(cli("run --config " + (dir / "ok.ini").string() + " --out " + (dir / "run").string()) == 0);
    CHECK(fs::exists(dir / "run" / "summary.csv"));
}

TEST_CASE("cli base seed override changes the run") {
    const auto dir = scratch("cli_seed");
    {
        std::ofstream f(dir / "ok.ini");
        f << kTiny;
    }
    const std::string cfg = (dir / "ok.ini").string();
    CHECK(cli("run --config " + cfg + " --out " + (dir / "a").string()) == 0);
    CHECK(cli("run --config " + cfg + " --out " + (dir / "b").string()) == 0);
    setenv(kBaseSeedEnv, "1234", 1);
    CHECK(cli("run --config " + cfg + " --out " + (dir / "c").string()) == 0);
    unsetenv(kBaseSeedEnv);
    CHECK(slurp(dir / "a" / "seed_000.csv") == slurp(dir / "b" / "seed_000.csv"));
    CHECK(slurp(dir / "a" / "seed_000.csv") != slurp(dir / "c" / "seed_000.csv"));
}

TEST_CASE("sweep writes one directory per value") {
    auto c = parse(kTiny);
    c.run.n_seeds = 1;
    const auto dir = scratch("sweep");
    const auto pts = run_sweep(c, "batch_size", {"10", "20"}, dir.string());
    CHECK(pts.size() == 2);
    CHECK(fs::exists(dir / "batch_size=10" / "seed_000.csv"));
    CHECK(fs::exists(dir / "batch_size=20" / "summary.csv"));
    CHECK(fs::exists(dir / "sweep.csv"));
}
