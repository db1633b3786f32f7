#pragma once

#include "vrgq/rng.hpp"
#include "vrgq/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

namespace vrgq {

/**
 * Finite MDP with transition kernel and reward tensor stored as dense
 * (n_states * n_actions) x n_states matrices. Row `sa(s, a)` holds
 * P(.|s,a) and r(s,a,.).
 */
struct Mdp {
    Index n_states = 0;
    Index n_actions = 0;
    MatrixXd kernel;
    MatrixXd reward;
    double gamma = 0.0;
    double r_max = 0.0;
    /// Start-state distribution used for episodic restarts (PG baseline, reward probe fallback).
    VectorXd initial;

    Index sa(Index s, Index a) const noexcept { return s * n_actions + a; }
    Index n_pairs() const noexcept { return n_states * n_actions; }

    /// Throws ParameterError if any structural invariant is violated.
    void validate() const;
};

/// pi[s][a]; rows are distributions over actions.
struct PolicyTable {
    MatrixXd probs;

    static PolicyTable uniform(Index n_states, Index n_actions);
    void validate(double tol = 1e-12) const;
};

struct Transition {
    Index s = 0;
    Index a = 0;
    double r = 0.0;
    Index s_next = 0;

    friend bool operator==(const Transition&, const Transition&) = default;
};

struct StationaryDistribution {
    VectorXd state_dist;
    /// Indexed by Mdp::sa(s, a).
    VectorXd state_action_dist;
};

struct GarnetSpec {
    Index n_states = 5;
    Index n_actions = 3;
    Index branching = 2;
    Index feature_dim = 4;
    double gamma = 0.95;
    std::uint64_t seed = 0;
};

Mdp generate_garnet(const GarnetSpec& spec);

/// Standard 4x4 lake (S at 0, holes at 5, 7, 11, 12, goal at 15).
/// Actions: 0 left, 1 down, 2 right, 3 up. Holes and goal restart at S.
Mdp build_frozen_lake(bool slippery, double gamma);

namespace frozen_lake {
inline constexpr Index kStart = 0;
inline constexpr Index kGoal = 15;
bool is_hole(Index s) noexcept;
bool is_terminal(Index s) noexcept;
} // namespace frozen_lake

/// State chain P_pi(s'|s) = sum_a pi(a|s) P(s'|s,a).
MatrixXd induced_chain(const Mdp& mdp, const PolicyTable& policy);

StationaryDistribution stationary_distribution(const Mdp& mdp, const PolicyTable& behavior);

/// Stationary distribution of an arbitrary row-stochastic matrix by power iteration.
VectorXd stationary_of_chain(const MatrixXd& chain);

struct Start {
    enum class Kind { State, Stationary, Initial };
    Kind kind = Kind::Initial;
    Index state = 0;

    static Start at(Index s) { return {Kind::State, s}; }
    static Start stationary() { return {Kind::Stationary, 0}; }
    static Start initial() { return {Kind::Initial, 0}; }
};

/**
 * Streaming Markovian sampler. Holds references to the MDP and policy;
 * both must outlive the sampler.
 */
class TrajectorySampler {
public:
    TrajectorySampler(const Mdp& mdp, const PolicyTable& behavior, std::uint64_t seed, Start start);

    Transition next();
    Index state() const noexcept { return state_; }
    std::uint64_t consumed() const noexcept { return consumed_; }

    /// Jump to a state drawn from the MDP's initial distribution.
    void restart();

private:
    const Mdp* mdp_;
    CounterRng rng_;
    std::vector<std::discrete_distribution<Index>> action_dists_;
    std::vector<std::discrete_distribution<Index>> next_dists_;
    std::discrete_distribution<Index> initial_dist_;
    Index state_ = 0;
    std::uint64_t consumed_ = 0;
};

std::vector<Transition> sample_trajectory(const Mdp& mdp, const PolicyTable& behavior, Index length,
                                          std::uint64_t seed, Start start);

struct MixingEstimate {
    double lambda_hat = 0.0;
    double rho_hat = 0.0;
    /// D(t) for t = 1..horizon.
    std::vector<double> distances;
};

MixingEstimate estimate_mixing(const Mdp& mdp, const PolicyTable& behavior, Index horizon = 200);

/// Versioned text dump; values use shortest round-trip decimal, so read(write(m)) == m bit-for-bit.
void write_mdp(std::ostream& os, const Mdp& mdp);
Mdp read_mdp(std::istream& is);

} // namespace vrgq
