#pragma once

#include "vrgq/features.hpp"
#include "vrgq/mdp.hpp"
#include "vrgq/objective.hpp"

namespace testsupport {

using namespace vrgq;

/// One-action MDP whose state chain is [[1-p, p], [q, 1-q]].
inline Mdp two_state_chain(double p, double q, double gamma = 0.9) {
    Mdp m;
    m.n_states = 2;
    m.n_actions = 1;
    m.kernel.resize(2, 2);
    m.kernel << 1 - p, p, q, 1 - q;
    m.reward = MatrixXd::Zero(2, 2);
    m.reward(0, 1) = 1.0;
    m.gamma = gamma;
    m.r_max = 1.0;
    m.initial = VectorXd::Constant(2, 0.5);
    return m;
}

inline ObjectiveContext garnet_context(std::uint64_t seed = 7, double sigma = 1.0) {
    GarnetSpec spec;
    spec.seed = seed;
    auto mdp = generate_garnet(spec);
    auto features = generate_features(mdp.n_states, mdp.n_actions, spec.feature_dim, FeatureDistribution::Uniform,
                                      seed + 1000);
    auto behavior = PolicyTable::uniform(mdp.n_states, mdp.n_actions);
    return build_context(std::move(mdp), std::move(features), SoftmaxOperator<double>(sigma), std::move(behavior));
}

/// Uniform draw from the ball of the given radius.
inline VectorXd random_in_ball(Index d, double radius, CounterRng& rng) {
    std::normal_distribution<double> n;
    VectorXd v(d);
    for (Index i = 0; i < d; ++i) v(i) = n(rng);
    return v * (radius * std::pow(rng.uniform01(), 1.0 / static_cast<double>(d)) / v.norm());
}

} // namespace testsupport
