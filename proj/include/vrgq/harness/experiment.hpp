#pragma once

#include "vrgq/algorithms.hpp"
#include "vrgq/harness/config.hpp"
#include "vrgq/harness/metrics.hpp"
#include "vrgq/objective.hpp"
#include "vrgq/theory.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace vrgq::harness {

/// Environment + features + uniform behavior + oracle context for one environment seed.
ObjectiveContext build_environment(const EnvironmentConfig& env, double sigma, std::uint64_t env_seed);

/**
 * Mean of ||G_x(theta, omega) - grad J(theta)||^2 over n_mc transitions with
 * (s,a) ~ mu_{s,a} and s' ~ P(.|s,a). With a reference state, G_x is replaced
 * by the variance-reduced direction G_x(theta, omega) - G_x(theta_ref, omega_ref) + G_ref.
 */
double variance_probe(const ObjectiveContext& ctx, const VectorXd& theta, const VectorXd& omega, Index n_mc,
                      std::uint64_t seed, const ReferenceState* reference = nullptr);

/// Average reward over one length-N trajectory under pi_theta, started from the
/// pi_theta stationary law when it can be computed, else from the initial distribution.
double reward_probe(const Mdp& mdp, const FeatureMap<double>& features, const SoftmaxOperator<double>& op,
                    const VectorXd& theta, Index horizon, std::uint64_t seed);

struct RunSummary {
    std::string algo;
    std::uint64_t seed = 0;
    double final_min_grad_norm_sq = 0.0;
    /// NaN if the run is shorter than the tail.
    double asymptotic_error = 0.0;
    /// NaN when no probe fired.
    double mean_var_estimate = 0.0;
    double max_reward_estimate = 0.0;
};

struct ExperimentResult {
    MetricsTable table;
    std::vector<RunSummary> summaries;
    /// Envelope of min_grad_norm_sq over seeds, per algorithm, on the g_evals axis.
    std::map<std::string, std::vector<EnvelopeRow>> envelopes;
    double lambda_C = 0.0;
};

/// Runs every configured algorithm for every seed; writes CSVs when output_dir is non-empty.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Writes seed_XXX.csv, aggregate.csv, summary.csv and metadata.json under dir.
void write_outputs(const std::string& dir, const ExperimentConfig& cfg, const ExperimentResult& result);

struct SweepPoint {
    std::string value;
    std::vector<RunSummary> summaries;
};

/// One experiment per value; writes <out>/<param>=<value>/ and <out>/sweep.csv.
std::vector<SweepPoint> run_sweep(const ExperimentConfig& cfg, const std::string& param,
                                  const std::vector<std::string>& values, const std::string& out_dir);

struct RateValidation {
    theory::TheoryConstants constants;
    theory::FeasibilityReport report;
    MixingEstimate mixing;
};

/// Max ||grad J|| over n uniform draws from the R-ball.
double estimate_gradient_bound(const ObjectiveContext& ctx, double radius, Index n, std::uint64_t seed);

/// Environment-derived constants (lambda_C, mixing, C_gradJ) plus the configured rates.
RateValidation validate_rates(const ExperimentConfig& cfg);

/// Spearman rank correlation (average ranks for ties).
double spearman(const std::vector<double>& a, const std::vector<double>& b);

} // namespace vrgq::harness
