#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "gfeig/discretization.hpp"

using namespace gfeig;

namespace {

ProblemSpec first_example() {
    ProblemSpec p;
    p.tau = RateSpec::constant(1.0);
    p.beta = RateSpec::power_law(1.0, 1.0);
    p.kernel = KernelSpec::uniform();
    return p;
}

std::vector<double> random_vector(std::size_t N, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    std::vector<double> v(N);
    for (auto& x : v) x = d(rng);
    return v;
}

double inner(const Grid& g, const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) s += a[j] * b[j] * g.widths[j];
    return s;
}

}  // namespace

TEST(Truncation, LemmaChoiceKeepsInflowBelowFloor) {
    const auto p = first_example();
    const auto t = TruncationParams::standard(p, 20.0, 1e-3);
    EXPECT_DOUBLE_EQ(t.delta * t.R, 0.5 * t.mu_inf);
    EXPECT_LT(t.delta * t.R, t.mu_inf);
}

TEST(Truncation, FloorBelowEta) {
    ProblemSpec p = first_example();
    p.tau = RateSpec::power_law(1.0, 1.0);
    const auto t = TruncationParams::standard(p, 10.0, 0.1);
    EXPECT_EQ(t.tau_eta(p.tau, 0.05), 0.1);
    EXPECT_EQ(t.tau_eta(p.tau, 0.1), 0.1);
    EXPECT_EQ(t.tau_eta(p.tau, 0.3), 0.3);
    EXPECT_DOUBLE_EQ(t.mu_inf, 0.1);
}

TEST(Truncation, InflowAboveFloorRejected) {
    const auto p = first_example();
    EXPECT_THROW(TruncationParams::with_delta(p, 10.0, 1e-3, 0.2), ConfigurationError);
    EXPECT_THROW(TruncationParams::standard(p, 10.0, 0.0), ConfigurationError);
}

TEST(Assembly, EqualMitosisAtomLandsInHalfCell) {
    ProblemSpec p = first_example();
    p.kernel = KernelSpec::equal_mitosis();
    const Grid g = build_grid(10.0, 100);
    const auto op = assemble_direct(p, g, TruncationParams::standard(p, 10.0, 1e-3));
    for (std::size_t j = 0; j < g.size(); ++j) {
        const double half = 0.5 * g.centers[j];
        ASSERT_EQ(op.col_start[j + 1] - op.col_start[j], 1u);
        const std::size_t i = op.row_index[op.col_start[j]];
        EXPECT_LE(g.edges[i], half);
        EXPECT_LT(half, g.edges[i + 1]);
        EXPECT_DOUBLE_EQ(op.mass[op.col_start[j]], 1.0);
    }
}

TEST(Assembly, UniformColumnMassProportionalToWidth) {
    const auto p = first_example();
    const Grid g = build_grid(5.0, 50);
    const auto op = assemble_direct(p, g, TruncationParams::standard(p, 5.0, 1e-3));
    for (std::size_t j = 0; j < g.size(); ++j) {
        const double y = g.centers[j];
        double sum = 0.0;
        for (std::size_t k = op.col_start[j]; k < op.col_start[j + 1]; ++k) {
            const std::size_t i = op.row_index[k];
            const double expect = i < j ? g.widths[i] / y : (y - g.edges[j]) / y;
            EXPECT_NEAR(op.mass[k], expect, 1e-14);
            sum += op.mass[k];
        }
        EXPECT_NEAR(sum, 1.0, 1e-12);
    }
    EXPECT_TRUE(op.separable);
}

TEST(Assembly, ColumnsCarryFullKernelMass) {
    const KernelSpec ks[] = {KernelSpec::uniform(), KernelSpec::mitosis(0.2), KernelSpec::homogeneous(-0.5),
                             KernelSpec::mixture(0.25, 0.5), KernelSpec::beta_fragments(3.0)};
    for (const auto& k : ks) {
        ProblemSpec p = first_example();
        p.kernel = k;
        const Grid g = build_grid(10.0, 120, GridKind::geometric, 1.04);
        const auto op = assemble_direct(p, g, TruncationParams::standard(p, 10.0, 1e-3));
        for (std::size_t j = 0; j < g.size(); ++j) EXPECT_NEAR(op.column_mass(j), 1.0, 1e-12) << to_string(k.kind);
    }
}

TEST(Assembly, OffDiagonalEntriesNonnegative) {
    ProblemSpec p = first_example();
    p.kernel = KernelSpec::homogeneous(1.0);
    p.tau = RateSpec::affine(1.0, 0.5);
    const Grid g = build_grid(10.0, 80);
    const auto op = assemble_direct(p, g, TruncationParams::standard(p, 10.0, 1e-3));
    const auto M = op.dense();
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index j = 0; j < M.cols(); ++j)
            if (i != j) {
                EXPECT_GE(M(i, j), 0.0);
            }
    for (Eigen::Index i = 2; i < M.rows(); ++i)
        for (Eigen::Index j = 0; j + 1 < i; ++j) EXPECT_EQ(M(i, j), 0.0) << "not upper Hessenberg";
}

TEST(Assembly, MismatchedGridRejected) {
    const auto p = first_example();
    EXPECT_THROW(assemble_direct(p, build_grid(5.0, 10), TruncationParams::standard(p, 6.0, 1e-3)), ConfigurationError);
}

TEST(Assembly, DenseMatchesApply) {
    for (const auto& k : {KernelSpec::uniform(), KernelSpec::mitosis(0.3)}) {
        ProblemSpec p = first_example();
        p.kernel = k;
        const Grid g = build_grid(8.0, 60, GridKind::geometric, 1.05);
        const auto op = assemble_direct(p, g, TruncationParams::standard(p, 8.0, 1e-2));
        for (const auto& o : {op, assemble_adjoint(op)}) {
            const auto u = random_vector(g.size(), 3);
            const auto Gu = o.apply(u);
            const Eigen::VectorXd d = o.dense() * Eigen::Map<const Eigen::VectorXd>(u.data(), u.size());
            for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(Gu[i], d(i), 1e-10 * (1.0 + std::abs(d(i))));
        }
    }
}

TEST(Adjoint, InnerProductIdentity) {
    for (const auto& k : {KernelSpec::uniform(), KernelSpec::mitosis(0.2), KernelSpec::homogeneous(2.0)}) {
        ProblemSpec p = first_example();
        p.kernel = k;
        p.tau = RateSpec::affine(0.5, 1.0);
        const Grid g = build_grid(15.0, 300, GridKind::geometric, 1.02);
        const auto op = assemble_direct(p, g, TruncationParams::standard(p, 15.0, 1e-3));
        const auto adj = assemble_adjoint(op);
        for (unsigned s = 0; s < 5; ++s) {
            const auto u = random_vector(g.size(), 10 + s), phi = random_vector(g.size(), 20 + s);
            const double lhs = inner(g, op.apply(u), phi), rhs = inner(g, u, adj.apply(phi));
            EXPECT_NEAR(lhs, rhs, 1e-13 * std::max(1.0, std::abs(lhs)));
        }
    }
}

TEST(Adjoint, SourceRowVanishesWithoutInflow) {
    const auto p = first_example();
    const Grid g = build_grid(5.0, 20);
    const auto with = assemble_adjoint(assemble_direct(p, g, TruncationParams::standard(p, 5.0, 1e-3)));
    const auto without = assemble_adjoint(assemble_direct(p, g, TruncationParams::with_delta(p, 5.0, 1e-3, 0.0)));
    std::vector<double> e0(g.size(), 0.0);
    e0[0] = 1.0;
    const auto a = with.apply(e0), b = without.apply(e0);
    for (std::size_t j = 1; j < g.size(); ++j) {
        EXPECT_NEAR(a[j] - b[j], with.trunc.delta, 1e-15);
    }
}

TEST(Assembly, SeparableMatchesGeneralPath) {
    const auto p = first_example();
    const Grid g = build_grid(10.0, 200);
    auto fast = assemble_direct(p, g, TruncationParams::standard(p, 10.0, 1e-3));
    ASSERT_TRUE(fast.separable);
    auto slow = fast;
    slow.separable = false;
    for (bool adj : {false, true}) {
        fast.adjoint = slow.adjoint = adj;
        const auto u = random_vector(g.size(), 42);
        const auto a = fast.apply(u), b = slow.apply(u);
        for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-11 * (1.0 + std::abs(b[i])));
    }
}

TEST(Assembly, MitosisIsNotSeparable) {
    ProblemSpec p = first_example();
    p.kernel = KernelSpec::equal_mitosis();
    const Grid g = build_grid(10.0, 50);
    EXPECT_FALSE(assemble_direct(p, g, TruncationParams::standard(p, 10.0, 1e-3)).separable);
}

TEST(Export, CoordinateFormat) {
    const auto p = first_example();
    const Grid g = build_grid(2.0, 4);
    const auto op = assemble_direct(p, g, TruncationParams::standard(p, 2.0, 1e-3));
    std::ostringstream os;
    write_coordinate(os, op);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "%%MatrixMarket matrix coordinate real general");
    std::getline(in, line);
    std::size_t r, c, nnz;
    in >> r >> c >> nnz;
    EXPECT_EQ(r, 4u);
    EXPECT_EQ(c, 4u);
    EXPECT_EQ(nnz, op.entries().size());
}
