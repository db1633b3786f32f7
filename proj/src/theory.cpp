#include "vrgq/theory.hpp"

#include "vrgq/numfmt.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>

namespace vrgq::theory {

TheoryConstants compute_constants(const ConstantInputs& in) {
    if (!(in.rho > 0.0 && in.rho < 1.0)) throw ParameterError("compute_constants: rho must lie in (0, 1)");
    if (!(in.lambda_C > 0.0)) throw ParameterError("compute_constants: lambda_C must be positive");
    for (double v : {in.R, in.gamma, in.r_max, in.n_actions, in.k1, in.L1, in.L2, in.L3, in.L_smooth, in.Lambda,
                     in.C_gradJ})
        if (!(v >= 0.0)) throw ParameterError("compute_constants: inputs must be nonnegative");

    TheoryConstants k;
    k.in = in;
    const double mix = in.rho * in.Lambda / (1.0 - in.rho);
    k.G_const = in.r_max + (1.0 + in.gamma) * in.R + in.gamma * (in.n_actions * in.R * in.k1 + 1.0) * in.R;
    k.H_const = (2.0 + in.gamma) * in.R + in.r_max;
    k.C1 = (1.0 + 2.0 * mix) * (k.G_const + in.C_gradJ) * (k.G_const + in.C_gradJ);
    k.C2 = k.H_const * k.H_const * (1.0 + mix);
    k.C3 = (8.0 * in.R * in.R / in.lambda_C) * (1.0 + mix);
    const double h = in.R * (2.0 + in.gamma) + in.r_max;
    k.C4 = (2.0 / in.lambda_C) * h * h * (1.0 + mix);
    k.L4 = 1.0;
    k.L5 = (in.gamma * in.n_actions * in.k1 * in.R + 1.0) + 1.0 + in.L3;
    k.c_hat = 0.125;
    k.D_const = 6.0 * in.L1 * (in.L_smooth / 2.0 + k.c_hat) + in.L1 + in.L1 * k.c_hat;
    k.beta_t = 1.0;
    return k;
}

namespace {

double tracking_gain(const TheoryConstants& k) { return 9.0 / k.in.lambda_C + 2.0 * k.in.L3 * k.in.L3; }

// (4 / lambda_C) [12 L5^2 eta_omega + (9/lambda_C + 2 L3^2) 9 L2^2 eta_theta^2 / eta_omega^2]
double coupling(const TheoryConstants& k, double eta_theta, double eta_omega) {
    const double inner = 12.0 * k.L5 * k.L5 * eta_omega +
                         tracking_gain(k) * 9.0 * k.in.L2 * k.in.L2 * eta_theta * eta_theta / (eta_omega * eta_omega);
    return 4.0 / k.in.lambda_C * inner;
}

} // namespace

std::vector<double> c_sequence(const TheoryConstants& k, double eta_theta, double eta_omega, long M) {
    if (M < 1) throw ParameterError("c_sequence: M must be >= 1");
    if (!(eta_theta >= 0.0) || !(eta_omega > 0.0)) throw ParameterError("c_sequence: rates must be positive");
    const double L1 = k.in.L1;
    const double L = k.in.L_smooth;
    const double et = eta_theta;
    const double K = coupling(k, eta_theta, eta_omega);

    std::vector<double> c(static_cast<std::size_t>(M) + 1, 0.0);
    for (long t = M - 1; t >= 0; --t) {
        const double next = c[static_cast<std::size_t>(t) + 1];
        const double quad = L / 2.0 * et * et + next * et * et;
        c[static_cast<std::size_t>(t)] = next * (et * k.beta_t + 1.0 + 2.0 * et) + 9.0 * L1 * quad +
                                         (6.0 * L1 * quad + et * L1 + et * L1 * next) * K;
    }
    return c;
}

CSequenceSummary summarize_c_sequence(const TheoryConstants& k, double eta_theta, double eta_omega, long M) {
    if (M < 1) throw ParameterError("summarize_c_sequence: M must be >= 1");
    if (!(eta_theta >= 0.0) || !(eta_omega > 0.0)) throw ParameterError("summarize_c_sequence: rates must be positive");
    const double L1 = k.in.L1;
    const double L = k.in.L_smooth;
    const double et = eta_theta;
    const double K = coupling(k, eta_theta, eta_omega);

    // c_t = a c_{t+1} + b, the recursion above with the c_{t+1} terms collected
    CSequenceSummary out;
    out.slope = et * k.beta_t + 1.0 + 2.0 * et + 9.0 * L1 * et * et + 6.0 * L1 * et * et * K + et * L1 * K;
    out.offset = 9.0 * L1 * L / 2.0 * et * et + 6.0 * L1 * L / 2.0 * et * et * K + et * L1 * K;
    const double growth = out.slope - 1.0;
    const double sum = growth > 0.0 ? std::expm1(static_cast<double>(M) * std::log1p(growth)) / growth
                                    : static_cast<double>(M);
    out.c0 = out.offset * sum;
    out.nonincreasing = out.slope >= 1.0 && out.offset >= 0.0;
    return out;
}

bool FeasibilityReport::all_passed() const {
    for (const auto& c : conditions)
        if (!c.passed) return false;
    return !conditions.empty();
}

FeasibilityReport check_learning_rates(const TheoryConstants& k, double eta_theta, double eta_omega, long M) {
    if (!(eta_theta > 0.0) || !(eta_omega > 0.0)) throw ParameterError("check_learning_rates: rates must be positive");
    if (M < 1) throw ParameterError("check_learning_rates: M must be >= 1");

    const double L1 = k.in.L1;
    const double L = k.in.L_smooth;
    const double lam = k.in.lambda_C;
    const double et = eta_theta;
    const double ew = eta_omega;
    const double K = coupling(k, et, ew);

    FeasibilityReport r;
    r.eta_theta = et;
    r.eta_omega = ew;
    r.M = M;
    const auto add = [&r](std::string name, double lhs, const char* rel, double rhs) {
        const bool ok = std::string(rel) == "<=" ? lhs <= rhs : lhs >= rhs;
        r.conditions.push_back({std::move(name), rel, lhs, rhs, ok});
    };

    add("lr-1", K, "<=", 1.0);
    add("lr-2", std::max(ew, et), "<=", 1.0);
    add("lr-3", (3.0 + 16.0 * L1) * et, "<=", 1.0 / static_cast<double>(M));
    const double c0_bound = (7.5 * L1 * L * et + L1 * K) * (4.0 + 16.0 * L1) / (3.0 + 16.0 * L1) *
                            (std::numbers::e - 1.0);
    add("lr-4", c0_bound, "<=", 1.0 / 8.0);
    const double lr5 = 3.0 / 8.0 * et - 9.0 * (L / 2.0 + k.c_hat) * et * et -
                       k.D_const * tracking_gain(k) * (36.0 / lam) * et * et * et / (ew * ew);
    add("lr-5", lr5, ">=", 0.25 * et);
    const double track = 0.5 * lam * ew - tracking_gain(k) * 6.0 * L1 * L1 * et * et / ew - 12.0 * k.L4 * k.L4 * ew * ew;
    add("tracking", track, ">=", 0.25 * lam * ew);

    r.notes.push_back("L1 enters unsquared in lr-3, lr-4, lr-5 and the c_t recursion but squared (6 L1^2) in the "
                      "tracking-step condition; each is evaluated as written at its own site.");
    r.notes.push_back("L1, L2, L3 and the smoothness constant L are user inputs (default 1), not derived.");
    return r;
}

ScaledRates scaled_rates(long M, double kappa) {
    const double et = kappa / static_cast<double>(M);
    return {et, std::pow(et, 2.0 / 3.0)};
}

long find_feasible_batch(const TheoryConstants& k, double kappa, long max_M) {
    if (!(kappa > 0.0)) throw ParameterError("find_feasible_batch: kappa must be positive");
    const auto ok = [&](long M) {
        const auto rates = scaled_rates(M, kappa);
        return check_learning_rates(k, rates.eta_theta, rates.eta_omega, M).all_passed();
    };
    long hi = 1;
    while (!ok(hi)) {
        if (hi >= max_M) throw ParameterError("find_feasible_batch: no feasible batch size up to the search limit");
        hi *= 2;
    }
    long lo = hi / 2; // infeasible (or 0)
    while (hi - lo > 1) {
        const long mid = lo + (hi - lo) / 2;
        (ok(mid) ? hi : lo) = mid;
    }
    return hi;
}

void print_report(std::ostream& os, const TheoryConstants& k, const FeasibilityReport& report) {
    os << "learning-rate feasibility  eta_theta=" << format_double(report.eta_theta)
       << "  eta_omega=" << format_double(report.eta_omega) << "  M=" << report.M << "\n\n";
    os << std::left << std::setw(10) << "condition" << std::setw(26) << "lhs" << std::setw(4) << ""
       << std::setw(26) << "rhs"
       << "result\n";
    for (const auto& c : report.conditions)
        os << std::left << std::setw(10) << c.name << std::setw(26) << format_double(c.lhs) << std::setw(4)
           << c.relation << std::setw(26) << format_double(c.rhs) << (c.passed ? "pass" : "FAIL") << '\n';
    os << '\n';
    for (std::size_t i = 0; i < report.notes.size(); ++i) os << "[" << i + 1 << "] " << report.notes[i] << '\n';
    os << '\n';

    const auto kv = [&os](const char* key, double v) { os << key << '=' << format_double(v) << '\n'; };
    kv("G_const", k.G_const);
    kv("H_const", k.H_const);
    kv("C1", k.C1);
    kv("C2", k.C2);
    kv("C3", k.C3);
    kv("C4", k.C4);
    kv("L4", k.L4);
    kv("L5", k.L5);
    kv("D_const", k.D_const);
    kv("lambda_C", k.in.lambda_C);
    kv("Lambda", k.in.Lambda);
    kv("rho", k.in.rho);
    kv("C_gradJ", k.in.C_gradJ);
    kv("eta_theta", report.eta_theta);
    kv("eta_omega", report.eta_omega);
    os << "M=" << report.M << '\n';
    for (const auto& c : report.conditions) {
        os << c.name << ".lhs=" << format_double(c.lhs) << '\n';
        os << c.name << ".pass=" << (c.passed ? 1 : 0) << '\n';
    }
    os << "all_pass=" << (report.all_passed() ? 1 : 0) << '\n';
}

} // namespace vrgq::theory
