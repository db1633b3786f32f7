#pragma once

#include "vrgq/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace vrgq::theory {

/// Inputs to the constant formulas. L1..L3 and the smoothness constant have no
/// closed form here; they default to 1.
struct ConstantInputs {
    double R = 100.0;
    double gamma = 0.95;
    double r_max = 1.0;
    double n_actions = 1.0;
    double k1 = 1.0;
    double L1 = 1.0;
    double L2 = 1.0;
    double L3 = 1.0;
    double L_smooth = 1.0;
    double lambda_C = 1.0;
    double Lambda = 1.0;
    double rho = 0.5;
    double C_gradJ = 0.0;
};

struct TheoryConstants {
    ConstantInputs in;
    double G_const = 0.0;
    double H_const = 0.0;
    double C1 = 0.0;
    double C2 = 0.0;
    double C3 = 0.0;
    double C4 = 0.0;
    double L4 = 1.0;
    double L5 = 0.0;
    double c_hat = 0.125;
    double D_const = 0.0;
    double beta_t = 1.0;
};

TheoryConstants compute_constants(const ConstantInputs& in);

/// c_0..c_M from the backward recursion with c_M = 0.
std::vector<double> c_sequence(const TheoryConstants& k, double eta_theta, double eta_omega, long M);

/// c_0 without materializing the sequence; the recursion is affine, c_t = slope c_{t+1} + offset.
struct CSequenceSummary {
    double slope = 0.0;
    double offset = 0.0;
    double c0 = 0.0;
    /// c_0 >= c_1 >= ... >= c_M = 0.
    bool nonincreasing = false;
};
CSequenceSummary summarize_c_sequence(const TheoryConstants& k, double eta_theta, double eta_omega, long M);

struct Condition {
    std::string name;
    std::string relation; ///< "<=" or ">="
    double lhs = 0.0;
    double rhs = 0.0;
    bool passed = false;
};

struct FeasibilityReport {
    double eta_theta = 0.0;
    double eta_omega = 0.0;
    long M = 0;
    std::vector<Condition> conditions;
    std::vector<std::string> notes;

    bool all_passed() const;
};

FeasibilityReport check_learning_rates(const TheoryConstants& k, double eta_theta, double eta_omega, long M);

/// Rates eta_theta = kappa / M, eta_omega = eta_theta^(2/3).
struct ScaledRates {
    double eta_theta;
    double eta_omega;
};
ScaledRates scaled_rates(long M, double kappa);

/// Smallest M (found by doubling then bisection) at which every condition passes
/// under scaled_rates(M, kappa). Throws ParameterError if none up to max_M.
long find_feasible_batch(const TheoryConstants& k, double kappa, long max_M = (1L << 50));

/// Aligned table followed by key=value lines.
void print_report(std::ostream& os, const TheoryConstants& k, const FeasibilityReport& report);

} // namespace vrgq::theory
