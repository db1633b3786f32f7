#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace vrgq::harness {

struct MetricsRow {
    std::string algo;
    std::uint64_t seed = 0;
    std::int64_t epoch = 0;
    std::int64_t iter = 0;
    std::int64_t g_evals = 0;
    double grad_norm_sq = 0.0;
    double min_grad_norm_sq = 0.0;
    double mspbe = 0.0;
    std::optional<double> var_estimate;
    std::optional<double> reward_estimate;

    friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

using MetricsTable = std::vector<MetricsRow>;

inline constexpr const char* kMetricsHeader =
    "algo,seed,epoch,iter,g_evals,grad_norm_sq,min_grad_norm_sq,mspbe,var_estimate,reward_estimate";

void write_csv(std::ostream& os, const MetricsTable& table);
/// Throws ParameterError naming the offending line or column on schema mismatch.
MetricsTable read_csv(std::istream& is);

/// Rows belonging to one (algo, seed) group, in table order.
MetricsTable select_run(const MetricsTable& table, const std::string& algo, std::uint64_t seed);

/// Checks the per-group invariants: running minimum and strictly increasing g_evals.
/// Returns an empty string when valid, else a description of the first violation.
std::string check_invariants(const MetricsTable& table);

/// Mean of grad_norm_sq over the last `tail` rows of a single run.
double asymptotic_error(const MetricsTable& run, std::size_t tail);

struct Curve {
    std::vector<double> x;
    std::vector<double> y;
};

struct EnvelopeRow {
    double x = 0.0;
    double p05 = 0.0;
    double p50 = 0.0;
    double p95 = 0.0;
};

/// Nearest-rank percentile (p in (0, 100]) of an unsorted sample.
double nearest_rank(std::vector<double> values, double p);

/// Interpolates every curve onto the first curve's x-grid (clipped to the common
/// range) and returns 5th/50th/95th nearest-rank percentiles per grid point.
std::vector<EnvelopeRow> envelope_stats(const std::vector<Curve>& curves);

} // namespace vrgq::harness
