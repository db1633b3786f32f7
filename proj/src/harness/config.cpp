#include "vrgq/harness/config.hpp"

#include "vrgq/numfmt.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace vrgq::harness {

namespace pt = boost::property_tree;

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    return out;
}

bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ParameterError("not a boolean: '" + v + "'");
}

Index parse_index(const std::string& v) { return static_cast<Index>(parse_int(v)); }

std::uint64_t parse_u64(const std::string& v) {
    const long long x = parse_int(v);
    if (x < 0) throw ParameterError("expected a nonnegative integer: '" + v + "'");
    return static_cast<std::uint64_t>(x);
}

VectorXd parse_vector(const std::string& v) {
    if (trim(v).empty()) return {};
    const auto parts = split(v, ',');
    VectorXd out(static_cast<Index>(parts.size()));
    for (std::size_t i = 0; i < parts.size(); ++i) out(static_cast<Index>(i)) = parse_double(parts[i]);
    return out;
}

std::string join(const VectorXd& v) {
    std::string out;
    for (Index i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_double(v(i));
    return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

const std::map<std::string, std::map<std::string, Setter>>& setters() {
    static const std::map<std::string, std::map<std::string, Setter>> table = {
        {"environment",
         {
             {"type",
              [](ExperimentConfig& c, const std::string& v) {
                  if (v == "garnet") {
                      c.environment.type = EnvironmentType::Garnet;
                  } else if (v == "frozen_lake") {
                      c.environment.type = EnvironmentType::FrozenLake;
                      c.environment.features = FeatureDistribution::Gaussian;
                      c.environment.feature_dim = 8;
                  } else {
                      throw ParameterError("unknown environment type '" + v + "'");
                  }
              }},
             {"n_states", [](ExperimentConfig& c, const std::string& v) { c.environment.garnet.n_states = parse_index(v); }},
             {"n_actions", [](ExperimentConfig& c, const std::string& v) { c.environment.garnet.n_actions = parse_index(v); }},
             {"branching", [](ExperimentConfig& c, const std::string& v) { c.environment.garnet.branching = parse_index(v); }},
             {"feature_dim", [](ExperimentConfig& c, const std::string& v) { c.environment.feature_dim = parse_index(v); }},
             {"gamma", [](ExperimentConfig& c, const std::string& v) { c.environment.gamma = parse_double(v); }},
             {"seed", [](ExperimentConfig& c, const std::string& v) { c.environment.seed = parse_u64(v); }},
             {"slippery", [](ExperimentConfig& c, const std::string& v) { c.environment.slippery = parse_bool(v); }},
             {"resample_per_seed",
              [](ExperimentConfig& c, const std::string& v) { c.environment.resample_per_seed = parse_bool(v); }},
             {"features",
              [](ExperimentConfig& c, const std::string& v) {
                  if (v == "uniform") c.environment.features = FeatureDistribution::Uniform;
                  else if (v == "gaussian") c.environment.features = FeatureDistribution::Gaussian;
                  else throw ParameterError("unknown feature distribution '" + v + "'");
              }},
         }},
        {"algorithm",
         {
             {"name",
              [](ExperimentConfig& c, const std::string& v) {
                  c.algorithm.algorithms.clear();
                  for (const auto& n : split(v, ',')) c.algorithm.algorithms.push_back(parse_algorithm(n));
              }},
             {"eta_theta", [](ExperimentConfig& c, const std::string& v) { c.algorithm.run.eta_theta = parse_double(v); }},
             {"eta_omega", [](ExperimentConfig& c, const std::string& v) { c.algorithm.run.eta_omega = parse_double(v); }},
             {"batch_size", [](ExperimentConfig& c, const std::string& v) { c.algorithm.run.batch_size = parse_index(v); }},
             {"epochs", [](ExperimentConfig& c, const std::string& v) { c.algorithm.epochs = parse_index(v); }},
             {"iterations", [](ExperimentConfig& c, const std::string& v) { c.algorithm.run.iterations = parse_index(v); }},
             {"radius", [](ExperimentConfig& c, const std::string& v) { c.algorithm.run.radius = parse_double(v); }},
             {"sigma", [](ExperimentConfig& c, const std::string& v) { c.algorithm.sigma = parse_double(v); }},
             {"theta0", [](ExperimentConfig& c, const std::string& v) { c.algorithm.run.theta0 = parse_vector(v); }},
             {"omega0", [](ExperimentConfig& c, const std::string& v) { c.algorithm.run.omega0 = parse_vector(v); }},
             {"pg_trajectories",
              [](ExperimentConfig& c, const std::string& v) { c.algorithm.run.pg_trajectories = parse_index(v); }},
             {"pg_horizon", [](ExperimentConfig& c, const std::string& v) { c.algorithm.run.pg_horizon = parse_index(v); }},
             {"debug_checks",
              [](ExperimentConfig& c, const std::string& v) { c.algorithm.run.debug_checks = parse_bool(v); }},
         }},
        {"metrics",
         {
             {"variance_probe_every",
              [](ExperimentConfig& c, const std::string& v) { c.metrics.variance_probe_every = parse_index(v); }},
             {"variance_probe_start",
              [](ExperimentConfig& c, const std::string& v) { c.metrics.variance_probe_start = parse_index(v); }},
             {"variance_mc_samples",
              [](ExperimentConfig& c, const std::string& v) { c.metrics.variance_mc_samples = parse_index(v); }},
             {"reward_probe_every",
              [](ExperimentConfig& c, const std::string& v) { c.metrics.reward_probe_every = parse_index(v); }},
             {"reward_horizon", [](ExperimentConfig& c, const std::string& v) { c.metrics.reward_horizon = parse_index(v); }},
             {"asymptotic_tail", [](ExperimentConfig& c, const std::string& v) { c.metrics.asymptotic_tail = parse_index(v); }},
             {"snapshot_cadence",
              [](ExperimentConfig& c, const std::string& v) { c.metrics.snapshot_cadence = parse_index(v); }},
         }},
        {"run",
         {
             {"n_seeds", [](ExperimentConfig& c, const std::string& v) { c.run.n_seeds = parse_index(v); }},
             {"base_seed", [](ExperimentConfig& c, const std::string& v) { c.run.base_seed = parse_u64(v); }},
             {"output_dir", [](ExperimentConfig& c, const std::string& v) { c.run.output_dir = v; }},
             {"threads", [](ExperimentConfig& c, const std::string& v) { c.run.threads = parse_index(v); }},
         }},
        {"theory",
         {
             {"L1", [](ExperimentConfig& c, const std::string& v) { c.theory.L1 = parse_double(v); }},
             {"L2", [](ExperimentConfig& c, const std::string& v) { c.theory.L2 = parse_double(v); }},
             {"L3", [](ExperimentConfig& c, const std::string& v) { c.theory.L3 = parse_double(v); }},
             {"L_smooth", [](ExperimentConfig& c, const std::string& v) { c.theory.L_smooth = parse_double(v); }},
             {"k1", [](ExperimentConfig& c, const std::string& v) { c.theory.k1 = parse_double(v); }},
             {"radius", [](ExperimentConfig& c, const std::string& v) { c.theory.radius = parse_double(v); }},
             {"mixing_horizon", [](ExperimentConfig& c, const std::string& v) { c.theory.mixing_horizon = parse_index(v); }},
             {"gradJ_samples", [](ExperimentConfig& c, const std::string& v) { c.theory.gradJ_samples = parse_index(v); }},
             {"kappa", [](ExperimentConfig& c, const std::string& v) { c.theory.kappa = parse_double(v); }},
         }},
    };
    return table;
}

} // namespace

Index ExperimentConfig::vr_epochs() const {
    if (algorithm.epochs > 0) return algorithm.epochs;
    return std::max<Index>(1, algorithm.run.iterations / algorithm.run.batch_size);
}

void ExperimentConfig::validate() const {
    if (run.n_seeds < 1) throw ConfigError("[run] n_seeds must be >= 1");
    if (run.threads < 0) throw ConfigError("[run] threads must be >= 0");
    if (metrics.variance_probe_every < 0 || metrics.variance_probe_start < 0 || metrics.reward_probe_every < 0 ||
        metrics.snapshot_cadence < 0)
        throw ConfigError("[metrics] cadences must be >= 0");
    if (metrics.variance_mc_samples < 1 || metrics.reward_horizon < 1 || metrics.asymptotic_tail < 1)
        throw ConfigError("[metrics] sample counts must be >= 1");
    if (algorithm.algorithms.empty()) throw ConfigError("[algorithm] name is empty");
    if (!(environment.gamma > 0.0 && environment.gamma < 1.0)) throw ConfigError("[environment] gamma must lie in (0, 1)");
    if (environment.feature_dim < 1) throw ConfigError("[environment] feature_dim must be >= 1");
    if (!(algorithm.sigma > 0.0)) throw ConfigError("[algorithm] sigma must be positive");
    try {
        algorithm.run.validate(environment.feature_dim);
    } catch (const ParameterError& e) {
        throw ConfigError(std::string("[algorithm] ") + e.what());
    }
}

ExperimentConfig parse_config(std::istream& is) {
    pt::ptree tree;
    try {
        pt::ini_parser::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    ExperimentConfig cfg;
    const auto& table = setters();
    for (const auto& [section, body] : tree) {
        const auto sec = table.find(section);
        if (sec == table.end()) throw ConfigError("unknown config section [" + section + "]");
        if (!body.data().empty()) throw ConfigError("key outside any section: " + section);
        for (const auto& [key, node] : body) {
            const auto it = sec->second.find(key);
            if (it == sec->second.end()) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
            try {
                it->second(cfg, trim(node.data()));
            } catch (const ParameterError& e) {
                throw ConfigError("[" + section + "] " + key + ": " + e.what());
            }
        }
    }
    if (cfg.environment.type == EnvironmentType::Garnet) {
        cfg.environment.garnet.gamma = cfg.environment.gamma;
        cfg.environment.garnet.feature_dim = cfg.environment.feature_dim;
        cfg.environment.garnet.seed = cfg.environment.seed;
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(in);
}

void apply_environment_overrides(ExperimentConfig& cfg) {
    if (const char* v = std::getenv(kBaseSeedEnv); v != nullptr && *v != '\0') {
        try {
            cfg.run.base_seed = parse_u64(v);
        } catch (const ParameterError& e) {
            throw ConfigError(std::string(kBaseSeedEnv) + ": " + e.what());
        }
    }
}

void set_parameter(ExperimentConfig& cfg, const std::string& name, const std::string& value) {
    try {
        if (name == "batch_size") cfg.algorithm.run.batch_size = parse_index(value);
        else if (name == "eta_theta") cfg.algorithm.run.eta_theta = parse_double(value);
        else if (name == "eta_omega") cfg.algorithm.run.eta_omega = parse_double(value);
        else if (name == "sigma") cfg.algorithm.sigma = parse_double(value);
        else if (name == "radius") cfg.algorithm.run.radius = parse_double(value);
        else if (name == "iterations") cfg.algorithm.run.iterations = parse_index(value);
        else throw ConfigError("cannot sweep parameter '" + name + "'");
    } catch (const ParameterError& e) {
        throw ConfigError(name + ": " + e.what());
    }
    cfg.validate();
}

std::string describe(const ExperimentConfig& cfg) {
    std::ostringstream os;
    const auto& e = cfg.environment;
    os << "[environment]\n";
    os << "type=" << (e.type == EnvironmentType::Garnet ? "garnet" : "frozen_lake") << '\n';
    if (e.type == EnvironmentType::Garnet) {
        os << "n_states=" << e.garnet.n_states << "\nn_actions=" << e.garnet.n_actions
           << "\nbranching=" << e.garnet.branching << '\n';
    } else {
        os << "slippery=" << (e.slippery ? "true" : "false") << '\n';
    }
    os << "feature_dim=" << e.feature_dim << "\nfeatures=" << (e.features == FeatureDistribution::Uniform ? "uniform" : "gaussian")
       << "\ngamma=" << format_double(e.gamma) << "\nseed=" << e.seed
       << "\nresample_per_seed=" << (e.resample_per_seed ? "true" : "false") << '\n';

    const auto& a = cfg.algorithm;
    os << "[algorithm]\nname=";
    for (std::size_t i = 0; i < a.algorithms.size(); ++i) os << (i ? "," : "") << to_string(a.algorithms[i]);
    os << "\neta_theta=" << format_double(a.run.eta_theta) << "\neta_omega=" << format_double(a.run.eta_omega)
       << "\nbatch_size=" << a.run.batch_size << "\nepochs=" << cfg.vr_epochs() << "\niterations=" << a.run.iterations
       << "\nradius=" << format_double(a.run.radius) << "\nsigma=" << format_double(a.sigma)
       << "\ntheta0=" << join(a.run.theta0) << "\nomega0=" << join(a.run.omega0)
       << "\npg_trajectories=" << a.run.pg_trajectories << "\npg_horizon=" << a.run.pg_horizon << '\n';

    const auto& m = cfg.metrics;
    os << "[metrics]\nvariance_probe_every=" << m.variance_probe_every << "\nvariance_probe_start=" << m.variance_probe_start
       << "\nvariance_mc_samples=" << m.variance_mc_samples << "\nreward_probe_every=" << m.reward_probe_every
       << "\nreward_horizon=" << m.reward_horizon << "\nasymptotic_tail=" << m.asymptotic_tail
       << "\nsnapshot_cadence=" << m.snapshot_cadence << '\n';
    os << "[run]\nn_seeds=" << cfg.run.n_seeds << "\nbase_seed=" << cfg.run.base_seed << '\n';
    return os.str();
}

} // namespace vrgq::harness
