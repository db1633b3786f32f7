#include "vrgq/theory.hpp"

#include <doctest.h>

#include <sstream>

using namespace vrgq;
using namespace vrgq::theory;

namespace {

ConstantInputs simple_inputs() {
    ConstantInputs in;
    in.R = 1.0;
    in.gamma = 0.5;
    in.r_max = 1.0;
    in.n_actions = 2.0;
    in.k1 = 1.0;
    in.lambda_C = 0.5;
    in.Lambda = 2.0;
    in.rho = 0.5;
    in.C_gradJ = 1.0;
    return in;
}

// Roughly what a Garnet(5,3,2,4) run feeds the validator with R = 1.
ConstantInputs garnet_like() {
    ConstantInputs in;
    in.R = 1.0;
    in.gamma = 0.95;
    in.r_max = 1.0;
    in.n_actions = 3.0;
    in.k1 = 3.0;
    in.lambda_C = 0.02;
    in.Lambda = 1.0;
    in.rho = 0.4;
    in.C_gradJ = 0.2;
    return in;
}

} // namespace

TEST_CASE("constants on hand-computed inputs") {
    // rho Lambda / (1 - rho) = 2 for these inputs.
    const auto k = compute_constants(simple_inputs());
    CHECK(k.G_const == doctest::Approx(4.0));
    CHECK(k.H_const == doctest::Approx(3.5));
    CHECK(k.C1 == doctest::Approx(125.0));
    CHECK(k.C2 == doctest::Approx(36.75));
    CHECK(k.C3 == doctest::Approx(48.0));
    CHECK(k.C4 == doctest::Approx(147.0));
    CHECK(k.L4 == 1.0);
    CHECK(k.L5 == doctest::Approx(4.0));
    CHECK(k.c_hat == 0.125);
    CHECK(k.D_const == doctest::Approx(4.875));
}

TEST_CASE("constants reject out-of-range mixing and curvature") {
    auto in = simple_inputs();
    in.rho = 1.0;
    CHECK_THROWS_AS(compute_constants(in), ParameterError);
    in.rho = 0.0;
    CHECK_THROWS_AS(compute_constants(in), ParameterError);
    in = simple_inputs();
    in.lambda_C = 0.0;
    CHECK_THROWS_AS(compute_constants(in), ParameterError);
    in = simple_inputs();
    in.R = -1.0;
    CHECK_THROWS_AS(compute_constants(in), ParameterError);
}

TEST_CASE("c sequence ends at zero and is nonincreasing") {
    const auto k = compute_constants(garnet_like());
    for (long M : {1L, 10L, 1000L}) {
        const auto rates = scaled_rates(M, 1.0 / 19.0);
        const auto c = c_sequence(k, rates.eta_theta, rates.eta_omega, M);
        REQUIRE(c.size() == static_cast<std::size_t>(M + 1));
        CHECK(c.back() == 0.0);
        for (std::size_t t = 0; t + 1 < c.size(); ++t) CHECK(c[t] >= c[t + 1]);
    }
    CHECK_THROWS_AS(c_sequence(k, 0.1, 0.1, 0), ParameterError);
}

TEST_CASE("report lists the six conditions") {
    const auto k = compute_constants(garnet_like());
    const auto r = check_learning_rates(k, 1e-3, 1e-2, 10);
    REQUIRE(r.conditions.size() == 6);
    const char* names[] = {"lr-1", "lr-2", "lr-3", "lr-4", "lr-5", "tracking"};
    for (std::size_t i = 0; i < 6; ++i) CHECK(r.conditions[i].name == names[i]);
    CHECK_FALSE(r.notes.empty());
}

TEST_CASE("lr-3 boundary") {
    const auto k = compute_constants(garnet_like());
    const long M = 50;
    const double edge = 1.0 / (19.0 * M);
    const auto at = check_learning_rates(k, edge * (1 - 1e-12), 0.01, M);
    const auto over = check_learning_rates(k, edge * (1 + 1e-9), 0.01, M);
    CHECK(at.conditions[2].passed);
    CHECK_FALSE(over.conditions[2].passed);
}

TEST_CASE("unit-scale rate fails lr-3 for every batch size") {
    const auto k = compute_constants(garnet_like());
    for (long M : {1L, 100L, 100000L}) {
        const auto rates = scaled_rates(M, 1.0);
        CHECK_FALSE(check_learning_rates(k, rates.eta_theta, rates.eta_omega, M).conditions[2].passed);
    }
}

TEST_CASE("rates larger than one fail lr-2") {
    const auto k = compute_constants(garnet_like());
    CHECK_FALSE(check_learning_rates(k, 0.5, 1.5, 1).conditions[1].passed);
}

TEST_CASE("feasible batch search returns a threshold") {
    const auto k = compute_constants(garnet_like());
    const double kappa = 1.0 / 19.0;
    const long M = find_feasible_batch(k, kappa);
    const auto ok = [&](long m) {
        const auto r = scaled_rates(m, kappa);
        return check_learning_rates(k, r.eta_theta, r.eta_omega, m).all_passed();
    };
    CHECK(ok(M));
    CHECK_FALSE(ok(M - 1));
    CHECK_THROWS_AS(find_feasible_batch(k, 1.0, 1L << 20), ParameterError);
}

TEST_CASE("printed report ends with machine-readable lines") {
    const auto k = compute_constants(garnet_like());
    const auto r = check_learning_rates(k, 1e-3, 1e-2, 10);
    std::ostringstream os;
    print_report(os, k, r);
    const std::string s = os.str();
    CHECK(s.find("lr-3") != std::string::npos);
    CHECK(s.find("all_pass=") != std::string::npos);
}

TEST_CASE("closed-form c_0 agrees with the explicit recursion") {
    const auto k = compute_constants(garnet_like());
    for (long M : {1L, 7L, 500L, 20000L}) {
        const auto rates = scaled_rates(M, 1.0 / 19.0);
        const auto c = c_sequence(k, rates.eta_theta, rates.eta_omega, M);
        const auto s = summarize_c_sequence(k, rates.eta_theta, rates.eta_omega, M);
        CHECK(s.c0 == doctest::Approx(c.front()).epsilon(1e-10));
        CHECK(s.nonincreasing);
    }
}
