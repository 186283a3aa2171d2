#include <cmath>

#include <boost/math/tools/minima.hpp>
#include <gtest/gtest.h>

#include "gfeig/eigensolver.hpp"
#include "gfeig/oracles.hpp"
#include "gfeig/quadrature.hpp"

using namespace gfeig;

namespace {

ProblemSpec first_example() {
    ProblemSpec p;
    p.tau = RateSpec::constant(1.0);
    p.beta = RateSpec::power_law(1.0, 1.0);
    p.kernel = KernelSpec::uniform();
    return p;
}

ProblemSpec linear_tau(unsigned n) {
    ProblemSpec p;
    p.tau = RateSpec::power_law(1.0, 1.0);
    p.beta = RateSpec::power_law(1.0, n);
    p.kernel = KernelSpec::uniform();
    return p;
}

struct Solved {
    Grid grid;
    DiscreteOperator op;
    EigenTriple t;
};

Solved solve(const ProblemSpec& p, double R, std::size_t N, double eta, GridKind kind = GridKind::uniform,
             double ratio = 1.0) {
    Solved s{build_grid(R, N, kind, ratio), {}, {}};
    s.op = assemble_direct(p, s.grid, TruncationParams::standard(p, R, eta));
    s.t = solve_truncated(s.op, assemble_adjoint(s.op));
    return s;
}

}  // namespace

TEST(Eigensolver, MatchesDenseOracleOnToyOperators) {
    ProblemSpec toy = first_example();
    toy.kernel = KernelSpec::mitosis(0.3);
    toy.tau = RateSpec::affine(0.5, 0.2);
    for (const auto& p : {first_example(), toy}) {
        const auto s = solve(p, 10.0, 50, 1e-3);
        const auto d = oracles::dense_spectrum(s.op);
        EXPECT_NEAR(s.t.lambda, d.perron_value, 1e-10);
        EXPECT_LT(oracles::l1_distance(s.grid, s.t.U, d.perron_vector), 1e-8);
    }
}

TEST(Eigensolver, FirstExampleOperatorMatchesDenseOracleAtN200) {
    const auto s = solve(first_example(), 20.0, 200, 1e-6);
    const auto d = oracles::dense_spectrum(s.op);
    EXPECT_NEAR(s.t.lambda, d.perron_value, 1e-10);
    const auto dt = oracles::dense_spectrum(assemble_adjoint(s.op).dense(), s.grid.widths);
    EXPECT_NEAR(dt.perron_value, d.perron_value, 1e-10);
}

TEST(Eigensolver, FirstExampleEigenvalue) {
    const auto s = solve(first_example(), 20.0, 2000, 1e-6);
    const auto ex = oracles::example_linear_beta(1.0, 1.0);
    EXPECT_NEAR(s.t.lambda, 1.0, 1e-2);
    EXPECT_NEAR(s.t.lambda_dual, s.t.lambda, 1e-10);
    EXPECT_LT(oracles::l1_distance(s.grid, s.t.U, ex.sample_U(s.grid)), 1e-2);
    EXPECT_LT(oracles::max_relative_deviation(s.grid, s.t.phi, ex.sample_phi(s.grid), 0.0, 10.0), 2e-2);
    EXPECT_EQ(support_infimum(s.t), 0.0);
}

TEST(Eigensolver, LinearTauRowOne) {
    const auto s = solve(linear_tau(1), 20.0, 2000, 1e-3);
    const auto ex = oracles::example_linear_tau(1.0, 1.0, 1);
    EXPECT_NEAR(s.t.lambda, 1.0, 1e-2);
    EXPECT_LT(oracles::l1_distance(s.grid, s.t.U, ex.sample_U(s.grid)), 1e-2);
    EXPECT_NEAR(oracles::weighted_slope(s.grid, s.t.phi, s.t.U), 1.0, 2e-2);
    // lambda = int beta U in the limit
    double beta_u = 0.0;
    for (std::size_t j = 0; j < s.grid.size(); ++j) beta_u += s.grid.centers[j] * s.t.U[j] * s.grid.widths[j];
    const auto q = quad::integrate([](double x) { return x * std::exp(-x); }, 0.0, 50.0);
    ASSERT_TRUE(q);
    EXPECT_NEAR(q->value, 1.0, 1e-10);
    EXPECT_NEAR(s.t.lambda - beta_u, 0.0, 1e-2);
}

TEST(Eigensolver, LinearTauRowTwo) {
    const auto s = solve(linear_tau(2), 20.0, 2000, 1e-3);
    const auto ex = oracles::example_linear_tau(1.0, 1.0, 2);
    EXPECT_NEAR(s.t.lambda, 1.0, 1e-2);
    EXPECT_LT(oracles::l1_distance(s.grid, s.t.U, ex.sample_U(s.grid)), 1e-2);
    EXPECT_NEAR(oracles::weighted_slope(s.grid, s.t.phi, s.t.U) / std::sqrt(M_PI / 2.0), 1.0, 2e-2);
}

TEST(Eigensolver, InvariantsHold) {
    ProblemSpec other = first_example();
    other.kernel = KernelSpec::homogeneous(1.0);
    other.tau = RateSpec::affine(1.0, 0.2);
    other.beta = RateSpec::power_law(1.0, 2.0);
    for (const auto& p : {first_example(), linear_tau(1), other}) {
        const auto s = solve(p, 20.0, 1000, 1e-4);
        const auto b = verify_bounds(s.t, p, s.op);
        EXPECT_GT(s.t.lambda, 0.0);
        EXPECT_TRUE(b.lower_ok) << b.lower_slack;
        EXPECT_TRUE(b.upper_ok);
        EXPECT_NEAR(s.t.lambda_dual, s.t.lambda, 1e-10 * std::abs(s.t.lambda));
        for (std::size_t j = 0; j < s.grid.size(); ++j) {
            EXPECT_GE(s.t.U[j], 0.0);
            EXPECT_GE(s.t.phi[j], 0.0);
            if (s.grid.edges[j] >= s.t.support_infimum_m) {
                EXPECT_GT(s.t.U[j], 0.0);
            }
            EXPECT_GT(s.t.phi[j], 0.0);
        }
        EXPECT_NEAR(s.grid.integrate(s.t.U), 1.0, 1e-12);
        double pair = 0.0;
        for (std::size_t j = 0; j < s.grid.size(); ++j) pair += s.t.U[j] * s.t.phi[j] * s.grid.widths[j];
        EXPECT_NEAR(pair, 1.0, 1e-12);
    }
}

TEST(Eigensolver, RandomRestartsAgree) {
    const auto p = first_example();
    const Grid g = build_grid(20.0, 1000);
    const auto op = assemble_direct(p, g, TruncationParams::standard(p, 20.0, 1e-6));
    const auto adj = assemble_adjoint(op);
    const double ref = solve_truncated(op, adj).lambda;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        SolverConfig c;
        c.initial = random_start(g.size(), seed);
        EXPECT_NEAR(solve_truncated(op, adj, c).lambda, ref, 1e-10);
    }
}

TEST(Eigensolver, LowerBoundAgainstClosedFormMaximum) {
    // max of tau U for the first example by 1-D minimization of -U; the maximizer solves
    // X^2 + 2X - 2 = 0, so the maximum is 2/e at X = sqrt(3) - 1
    auto neg = [](double x) { return -2.0 * (x + 0.5 * x * x) * std::exp(-x - 0.5 * x * x); };
    const auto [xm, fm] = boost::math::tools::brent_find_minima(neg, 0.0, 5.0, 50);
    EXPECT_NEAR(-fm, 2.0 / std::exp(1.0), 1e-12);
    EXPECT_GE(1.0, -0.5 * fm);
    const auto s = solve(first_example(), 20.0, 2000, 1e-6);
    double mx = 0.0;
    for (double v : s.t.tau_u()) mx = std::max(mx, v);
    EXPECT_NEAR(mx, -fm, 1e-2);
    EXPECT_NEAR(xm, std::sqrt(3.0) - 1.0, 1e-6);
}

TEST(Eigensolver, DualGrowthLinear) {
    const auto s = solve(first_example(), 20.0, 1000, 1e-6);
    EXPECT_EQ(s.t.dual_growth.k, 1.0);
    EXPECT_TRUE(s.t.dual_growth.holds);
}

TEST(Eigensolver, SupportInfimumForMitosisWithDelayedDivision) {
    // equal mitosis, beta supported on [2, inf): nothing is born below 1 without inflow
    ProblemSpec p;
    p.tau = RateSpec::constant(1.0);
    p.beta = RateSpec::power_law(1.0, 1.0, 2.0);
    p.kernel = KernelSpec::equal_mitosis();
    const Grid g = build_grid(20.0, 1000);
    const auto op = assemble_direct(p, g, TruncationParams::with_delta(p, 20.0, 1e-3, 0.0));
    const auto t = solve_truncated(op, assemble_adjoint(op));
    EXPECT_GT(t.lambda, 0.0);
    EXPECT_LE(t.support_infimum_m, 1.0 + 1e-12);
    EXPECT_GT(t.support_infimum_m, 0.5);
    const auto t2 = solve_problem(p, g, TruncationParams::standard(p, 20.0, 1e-3));
    EXPECT_LE(t2.support_infimum_m, 1.0);
}

TEST(Eigensolver, EveryKernelGivesLambdaOneForFirstExampleRates) {
    // tau = 1, beta = x: the number and mass balances force lambda^2 = 1 for any binary kernel
    for (const auto& k : {KernelSpec::mitosis(0.1), KernelSpec::equal_mitosis(), KernelSpec::homogeneous(2.0)}) {
        ProblemSpec p = first_example();
        p.kernel = k;
        const auto s = solve(p, 20.0, 2000, 1e-6);
        EXPECT_NEAR(s.t.lambda, 1.0, 1e-3) << to_string(k.kind);
    }
}

TEST(Eigensolver, GeometricGridFirstExample) {
    const auto s = solve(first_example(), 20.0, 800, 1e-6, GridKind::geometric, 1.01);
    EXPECT_NEAR(s.t.lambda, 1.0, 1e-2);
}

TEST(Eigensolver, RejectsSwappedOperators) {
    const auto p = first_example();
    const Grid g = build_grid(5.0, 20);
    const auto op = assemble_direct(p, g, TruncationParams::standard(p, 5.0, 1e-3));
    EXPECT_THROW(solve_truncated(assemble_adjoint(op), op), DomainError);
}

TEST(Eigensolver, IterationCapReportsLastIterate) {
    const auto p = first_example();
    const Grid g = build_grid(20.0, 500);
    const auto op = assemble_direct(p, g, TruncationParams::standard(p, 20.0, 1e-6));
    SolverConfig c;
    c.max_iter = 1;
    try {
        solve_truncated(op, assemble_adjoint(op), c);
        FAIL() << "expected NonConvergence";
    } catch (const NonConvergence& e) {
        EXPECT_EQ(e.last_iterate().size(), g.size());
    }
}
