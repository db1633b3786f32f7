#pragma once

#include "vrgq/algorithms.hpp"
#include "vrgq/features.hpp"
#include "vrgq/mdp.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace vrgq::harness {

enum class EnvironmentType { Garnet, FrozenLake };

struct EnvironmentConfig {
    EnvironmentType type = EnvironmentType::Garnet;
    GarnetSpec garnet;
    bool slippery = true;
    double gamma = 0.95;
    Index feature_dim = 4;
    FeatureDistribution features = FeatureDistribution::Uniform;
    /// Seeds the environment and its features.
    std::uint64_t seed = 0;
    /// Draw a fresh environment for every run seed (seed + index) instead of sharing one.
    bool resample_per_seed = false;
};

struct AlgorithmConfig {
    std::vector<Algorithm> algorithms{Algorithm::VRGreedyGQ};
    RunConfig run;
    double sigma = 1.0;
    /// 0 means derive epochs from iterations / batch_size for VR runs.
    Index epochs = 0;
};

struct MetricsConfig {
    Index variance_probe_every = 0;
    /// First global step eligible for a variance probe.
    Index variance_probe_start = 0;
    Index variance_mc_samples = 500;
    Index reward_probe_every = 0;
    Index reward_horizon = 100;
    Index asymptotic_tail = 10000;
    Index snapshot_cadence = 0;
};

struct RunSection {
    Index n_seeds = 1;
    std::uint64_t base_seed = 0;
    std::string output_dir;
    /// 0 = hardware concurrency.
    Index threads = 0;
};

struct TheorySection {
    double L1 = 1.0;
    double L2 = 1.0;
    double L3 = 1.0;
    double L_smooth = 1.0;
    /// Negative means sigma * |A|.
    double k1 = -1.0;
    /// Overrides the run radius for the validator when positive.
    double radius = -1.0;
    Index mixing_horizon = 200;
    Index gradJ_samples = 10000;
    /// eta_theta = kappa / M in the batch-size threshold search; negative means 1 / (3 + 16 L1).
    double kappa = -1.0;
};

struct ExperimentConfig {
    EnvironmentConfig environment;
    AlgorithmConfig algorithm;
    MetricsConfig metrics;
    RunSection run;
    TheorySection theory;

    /// Epoch count actually used by a VR run.
    Index vr_epochs() const;
    void validate() const;
};

/// Environment variable that overrides [run] base_seed.
inline constexpr const char* kBaseSeedEnv = "VRGQ_BASE_SEED";

ExperimentConfig parse_config(std::istream& is);
ExperimentConfig load_config(const std::string& path);
/// Applies VRGQ_BASE_SEED if set.
void apply_environment_overrides(ExperimentConfig& cfg);

/// Override one named parameter (used by `sweep`): batch_size, eta_theta, eta_omega, sigma, radius, iterations.
void set_parameter(ExperimentConfig& cfg, const std::string& name, const std::string& value);

/// Canonical key=value dump of every field; used in metadata.
std::string describe(const ExperimentConfig& cfg);

} // namespace vrgq::harness
