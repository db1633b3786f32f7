#include "vrgq/mdp.hpp"

#include "vrgq/numfmt.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

namespace vrgq {

namespace {

constexpr double kRowTol = 1e-12;

std::vector<double> row_weights(const auto& row) {
    std::vector<double> w(static_cast<std::size_t>(row.size()));
    for (Index i = 0; i < row.size(); ++i) w[static_cast<std::size_t>(i)] = row(i);
    return w;
}

} // namespace

void Mdp::validate() const {
    if (n_states < 1 || n_actions < 1) throw ParameterError("Mdp: n_states and n_actions must be positive");
    if (kernel.rows() != n_pairs() || kernel.cols() != n_states)
        throw ParameterError("Mdp: kernel has wrong shape");
    if (reward.rows() != n_pairs() || reward.cols() != n_states)
        throw ParameterError("Mdp: reward has wrong shape");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ParameterError("Mdp: gamma must lie in (0, 1)");
    if (!(r_max >= 0.0)) throw ParameterError("Mdp: r_max must be nonnegative");
    if (kernel.minCoeff() < 0.0) throw ParameterError("Mdp: negative transition probability");
    for (Index i = 0; i < n_pairs(); ++i) {
        if (std::abs(kernel.row(i).sum() - 1.0) > kRowTol)
            throw ParameterError("Mdp: kernel row " + std::to_string(i) + " does not sum to 1");
    }
    if (reward.cwiseAbs().maxCoeff() > r_max) throw ParameterError("Mdp: |reward| exceeds r_max");
    if (initial.size() != n_states || initial.minCoeff() < 0.0 || std::abs(initial.sum() - 1.0) > kRowTol)
        throw ParameterError("Mdp: initial distribution invalid");
}

PolicyTable PolicyTable::uniform(Index n_states, Index n_actions) {
    return {MatrixXd::Constant(n_states, n_actions, 1.0 / static_cast<double>(n_actions))};
}

void PolicyTable::validate(double tol) const {
    if (probs.size() == 0) throw ParameterError("PolicyTable: empty");
    if (probs.minCoeff() < 0.0) throw ParameterError("PolicyTable: negative probability");
    for (Index s = 0; s < probs.rows(); ++s)
        if (std::abs(probs.row(s).sum() - 1.0) > tol)
            throw ParameterError("PolicyTable: row " + std::to_string(s) + " does not sum to 1");
}

Mdp generate_garnet(const GarnetSpec& spec) {
    if (spec.n_states < 1 || spec.n_actions < 1 || spec.feature_dim < 1)
        throw ParameterError("garnet: sizes must be positive");
    if (spec.branching < 1 || spec.branching > spec.n_states)
        throw ParameterError("garnet: branching must lie in [1, n_states]");

    Mdp mdp;
    mdp.n_states = spec.n_states;
    mdp.n_actions = spec.n_actions;
    mdp.gamma = spec.gamma;
    mdp.r_max = 1.0;
    mdp.kernel = MatrixXd::Zero(mdp.n_pairs(), spec.n_states);
    mdp.reward = MatrixXd::Zero(mdp.n_pairs(), spec.n_states);
    mdp.initial = VectorXd::Constant(spec.n_states, 1.0 / static_cast<double>(spec.n_states));

    CounterRng rng(spec.seed);
    std::vector<Index> states(static_cast<std::size_t>(spec.n_states));
    std::vector<double> cuts(static_cast<std::size_t>(spec.branching + 1));
    const auto b = static_cast<std::size_t>(spec.branching);

    for (Index row = 0; row < mdp.n_pairs(); ++row) {
        // Partial Fisher-Yates: first b entries are the successor set.
        std::iota(states.begin(), states.end(), Index{0});
        for (std::size_t i = 0; i < b; ++i) {
            const auto span = static_cast<std::uint64_t>(states.size() - i);
            const auto j = i + static_cast<std::size_t>(rng() % span);
            std::swap(states[i], states[j]);
        }
        // Sorted-uniform stick breaking; redraw on a (measure-zero) empty piece.
        for (;;) {
            cuts.front() = 0.0;
            cuts.back() = 1.0;
            for (std::size_t i = 1; i < b; ++i) cuts[i] = rng.uniform01();
            std::sort(cuts.begin() + 1, cuts.end() - 1);
            bool ok = true;
            for (std::size_t i = 0; i < b; ++i) ok = ok && cuts[i + 1] > cuts[i];
            if (ok) break;
        }
        for (std::size_t i = 0; i < b; ++i) mdp.kernel(row, states[i]) = cuts[i + 1] - cuts[i];
        // Pieces sum to 1 up to rounding; absorb the residue in the largest entry.
        Index argmax = 0;
        mdp.kernel.row(row).maxCoeff(&argmax);
        mdp.kernel(row, argmax) += 1.0 - mdp.kernel.row(row).sum();

        for (Index s2 = 0; s2 < spec.n_states; ++s2) mdp.reward(row, s2) = rng.uniform01();
    }
    mdp.validate();
    return mdp;
}

namespace frozen_lake {

bool is_hole(Index s) noexcept { return s == 5 || s == 7 || s == 11 || s == 12; }
bool is_terminal(Index s) noexcept { return is_hole(s) || s == kGoal; }

} // namespace frozen_lake

Mdp build_frozen_lake(bool slippery, double gamma) {
    constexpr Index side = 4;
    Mdp mdp;
    mdp.n_states = side * side;
    mdp.n_actions = 4;
    mdp.gamma = gamma;
    mdp.r_max = 1.0;
    mdp.kernel = MatrixXd::Zero(mdp.n_pairs(), mdp.n_states);
    mdp.reward = MatrixXd::Zero(mdp.n_pairs(), mdp.n_states);
    mdp.initial = VectorXd::Zero(mdp.n_states);
    mdp.initial(frozen_lake::kStart) = 1.0;

    const auto move = [](Index s, Index a) {
        Index r = s / side;
        Index c = s % side;
        switch (a) {
        case 0: c = std::max<Index>(c - 1, 0); break;
        case 1: r = std::min<Index>(r + 1, side - 1); break;
        case 2: c = std::min<Index>(c + 1, side - 1); break;
        default: r = std::max<Index>(r - 1, 0); break;
        }
        return r * side + c;
    };

    for (Index s = 0; s < mdp.n_states; ++s) {
        for (Index a = 0; a < mdp.n_actions; ++a) {
            const Index row = mdp.sa(s, a);
            if (frozen_lake::is_terminal(s)) {
                mdp.kernel(row, frozen_lake::kStart) = 1.0;
                continue;
            }
            if (slippery) {
                for (Index da : {Index{3}, Index{0}, Index{1}})
                    mdp.kernel(row, move(s, (a + da) % 4)) += 1.0 / 3.0;
            } else {
                mdp.kernel(row, move(s, a)) = 1.0;
            }
            mdp.reward(row, frozen_lake::kGoal) = 1.0;
        }
    }
    mdp.validate();
    return mdp;
}

MatrixXd induced_chain(const Mdp& mdp, const PolicyTable& policy) {
    if (policy.probs.rows() != mdp.n_states || policy.probs.cols() != mdp.n_actions)
        throw ParameterError("policy shape does not match the MDP");
    MatrixXd chain = MatrixXd::Zero(mdp.n_states, mdp.n_states);
    for (Index s = 0; s < mdp.n_states; ++s)
        for (Index a = 0; a < mdp.n_actions; ++a)
            chain.row(s) += policy.probs(s, a) * mdp.kernel.row(mdp.sa(s, a));
    return chain;
}

VectorXd stationary_of_chain(const MatrixXd& chain) {
    constexpr double step_tol = 1e-12;
    constexpr double residual_tol = 1e-10;
    constexpr long max_iter = 1'000'000;

    const Index n = chain.rows();
    Eigen::RowVectorXd mu = Eigen::RowVectorXd::LinSpaced(n, 1.0, static_cast<double>(n));
    mu /= mu.sum();
    Eigen::RowVectorXd next(n);
    bool converged = false;
    double diff = 0.0;
    for (long k = 0; k < max_iter; ++k) {
        next.noalias() = mu * chain;
        diff = (next - mu).lpNorm<1>();
        mu.swap(next);
        if (diff < step_tol) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw ErgodicityError("stationary distribution: power iteration did not converge (chain may be periodic or reducible)");

    // polish to rounding level
    for (int k = 0; k < 100'000; ++k) {
        next.noalias() = mu * chain;
        const double d = (next - mu).lpNorm<1>();
        mu.swap(next);
        if (d <= 1e-17 || d >= diff) break;
        diff = d;
    }
    mu /= mu.sum();

    const double residual = (mu * chain - mu).lpNorm<1>();
    if (residual >= residual_tol)
        throw ErgodicityError("stationary distribution: fixed-point residual " + format_double(residual) + " too large");
    return mu.transpose();
}

StationaryDistribution stationary_distribution(const Mdp& mdp, const PolicyTable& behavior) {
    StationaryDistribution out;
    out.state_dist = stationary_of_chain(induced_chain(mdp, behavior));
    out.state_action_dist.resize(mdp.n_pairs());
    for (Index s = 0; s < mdp.n_states; ++s)
        for (Index a = 0; a < mdp.n_actions; ++a)
            out.state_action_dist(mdp.sa(s, a)) = out.state_dist(s) * behavior.probs(s, a);
    return out;
}

TrajectorySampler::TrajectorySampler(const Mdp& mdp, const PolicyTable& behavior, std::uint64_t seed, Start start)
    : mdp_(&mdp), rng_(seed) {
    if (behavior.probs.rows() != mdp.n_states || behavior.probs.cols() != mdp.n_actions)
        throw ParameterError("sampler: policy shape does not match the MDP");
    action_dists_.reserve(static_cast<std::size_t>(mdp.n_states));
    for (Index s = 0; s < mdp.n_states; ++s) {
        const auto w = row_weights(behavior.probs.row(s));
        action_dists_.emplace_back(w.begin(), w.end());
    }
    next_dists_.reserve(static_cast<std::size_t>(mdp.n_pairs()));
    for (Index i = 0; i < mdp.n_pairs(); ++i) {
        const auto w = row_weights(mdp.kernel.row(i));
        next_dists_.emplace_back(w.begin(), w.end());
    }
    const auto w0 = row_weights(mdp.initial);
    initial_dist_ = std::discrete_distribution<Index>(w0.begin(), w0.end());

    switch (start.kind) {
    case Start::Kind::State:
        if (start.state < 0 || start.state >= mdp.n_states) throw ParameterError("sampler: start state out of range");
        state_ = start.state;
        break;
    case Start::Kind::Stationary: {
        const auto mu = stationary_distribution(mdp, behavior).state_dist;
        const auto w = row_weights(mu);
        std::discrete_distribution<Index> d(w.begin(), w.end());
        state_ = d(rng_);
        break;
    }
    case Start::Kind::Initial:
        state_ = initial_dist_(rng_);
        break;
    }
}

Transition TrajectorySampler::next() {
    Transition t;
    t.s = state_;
    t.a = action_dists_[static_cast<std::size_t>(state_)](rng_);
    const Index row = mdp_->sa(t.s, t.a);
    t.s_next = next_dists_[static_cast<std::size_t>(row)](rng_);
    t.r = mdp_->reward(row, t.s_next);
    state_ = t.s_next;
    ++consumed_;
    return t;
}

void TrajectorySampler::restart() { state_ = initial_dist_(rng_); }

std::vector<Transition> sample_trajectory(const Mdp& mdp, const PolicyTable& behavior, Index length,
                                          std::uint64_t seed, Start start) {
    if (length < 1) throw ParameterError("sample_trajectory: length must be >= 1");
    TrajectorySampler sampler(mdp, behavior, seed, start);
    std::vector<Transition> out;
    out.reserve(static_cast<std::size_t>(length));
    for (Index i = 0; i < length; ++i) out.push_back(sampler.next());
    return out;
}

MixingEstimate estimate_mixing(const Mdp& mdp, const PolicyTable& behavior, Index horizon) {
    constexpr double floor = 1e-12;
    if (horizon < 1) throw ParameterError("estimate_mixing: horizon must be >= 1");

    const MatrixXd chain = induced_chain(mdp, behavior);
    const VectorXd mu = stationary_of_chain(chain);
    const Index n = mdp.n_states;

    // propagate P^t - 1 mu^T directly
    MatrixXd dev = MatrixXd::Identity(n, n) - VectorXd::Ones(n) * mu.transpose();
    MixingEstimate est;
    est.distances.reserve(static_cast<std::size_t>(horizon));
    for (Index t = 1; t <= horizon; ++t) {
        dev = dev * chain;
        est.distances.push_back(0.5 * dev.cwiseAbs().rowwise().sum().maxCoeff());
    }

    // Least squares of log D(t) on t over the points above the floor.
    double st = 0, sy = 0, stt = 0, sty = 0;
    int count = 0;
    for (Index t = 1; t <= horizon; ++t) {
        const double d = est.distances[static_cast<std::size_t>(t - 1)];
        if (!(d > floor)) continue;
        const double y = std::log(d);
        const auto x = static_cast<double>(t);
        st += x;
        sy += y;
        stt += x * x;
        sty += x * y;
        ++count;
    }
    if (count == 0) return est; // already at stationarity after one step
    if (count == 1) {
        est.lambda_hat = 1.0;
        est.rho_hat = est.distances.front();
        return est;
    }
    const double denom = count * stt - st * st;
    const double slope = (count * sty - st * sy) / denom;
    const double intercept = (sy - slope * st) / count;
    est.rho_hat = std::exp(slope);
    est.lambda_hat = std::exp(intercept);
    if (!(est.rho_hat < 1.0))
        throw ErgodicityError("estimate_mixing: total-variation distance does not decay (rho_hat = " +
                              format_double(est.rho_hat) + ")");
    return est;
}

void write_mdp(std::ostream& os, const Mdp& mdp) {
    os << "vrgq-mdp 1\n";
    os << mdp.n_states << ' ' << mdp.n_actions << '\n';
    os << format_double(mdp.gamma) << ' ' << format_double(mdp.r_max) << '\n';
    const auto dump = [&os](const auto& m) {
        for (Index i = 0; i < m.rows(); ++i) {
            for (Index j = 0; j < m.cols(); ++j) os << (j ? " " : "") << format_double(m(i, j));
            os << '\n';
        }
    };
    dump(mdp.kernel);
    dump(mdp.reward);
    dump(mdp.initial.transpose());
}

Mdp read_mdp(std::istream& is) {
    std::string magic;
    int version = 0;
    if (!(is >> magic >> version) || magic != "vrgq-mdp" || version != 1)
        throw ParameterError("read_mdp: unrecognized header");
    Mdp mdp;
    std::string tok;
    const auto next_double = [&]() {
        if (!(is >> tok)) throw ParameterError("read_mdp: truncated input");
        return parse_double(tok);
    };
    if (!(is >> mdp.n_states >> mdp.n_actions)) throw ParameterError("read_mdp: bad sizes");
    mdp.gamma = next_double();
    mdp.r_max = next_double();
    mdp.kernel.resize(mdp.n_pairs(), mdp.n_states);
    mdp.reward.resize(mdp.n_pairs(), mdp.n_states);
    mdp.initial.resize(mdp.n_states);
    for (Index i = 0; i < mdp.kernel.size(); ++i) mdp.kernel(i / mdp.n_states, i % mdp.n_states) = next_double();
    for (Index i = 0; i < mdp.reward.size(); ++i) mdp.reward(i / mdp.n_states, i % mdp.n_states) = next_double();
    for (Index i = 0; i < mdp.n_states; ++i) mdp.initial(i) = next_double();
    mdp.validate();
    return mdp;
}

} // namespace vrgq
