#include "test_support.hpp"

#include <absplace/gspa.hpp>

#include <gtest/gtest.h>

#include <numeric>
#include <random>

using namespace absplace;

namespace {

double sum(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0); }

double row_distance2(const std::vector<double>& z, const std::vector<double>& v)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i)
        acc += (z[i] - v[i]) * (z[i] - v[i]);
    return acc;
}

} // namespace

TEST(XColumn, SingleEntry)
{
    std::vector<double> z{5.0}, u{0.0};
    auto c = solve_x_column(z, u, 1.0, 10.0, 1.0);
    EXPECT_NEAR(c.s, 4.0, 1e-11);
    EXPECT_NEAR(c.r[0], 4.0, 1e-11);
    EXPECT_FALSE(c.backhaul_active);
}

TEST(XColumn, TwoEntriesAmpleBackhaul)
{
    std::vector<double> z{3.0, 1.0}, u{0.0, 0.0};
    auto c = solve_x_column(z, u, 1.0, 100.0, 1.0);
    EXPECT_NEAR(c.s, 2.0, 1e-11);
    EXPECT_NEAR(c.r[0], 2.0, 1e-11);
    EXPECT_NEAR(c.r[1], 1.0, 1e-11);
}

TEST(XColumn, BackhaulBranch)
{
    std::vector<double> z{3.0, 1.0}, u{0.0, 0.0};
    auto c = solve_x_column(z, u, 1.0, 1.5, 1.0);
    EXPECT_TRUE(c.backhaul_active);
    EXPECT_NEAR(sum(c.r), 1.5, 1e-10);
    // Shift by mu / rho = 0.75, then one-term water level at 1.25.
    EXPECT_NEAR(c.s, 1.25, 1e-10);
    EXPECT_NEAR(c.r[0], 1.25, 1e-10);
    EXPECT_NEAR(c.r[1], 0.25, 1e-10);
    auto ref = testsupport::column_oracle({3.0, 1.0}, 1.0, 1.0, 1.5);
    double obj = testsupport::column_objective(c.r, c.s, {3.0, 1.0}, 1.0, 1.0);
    EXPECT_NEAR(obj, ref.objective, 1e-8);
}

TEST(XColumn, ZeroWeightKeepsTarget)
{
    std::vector<double> z{3.0, -1.0}, u{0.5, 0.0};
    auto c = solve_x_column(z, u, 0.0, 100.0, 2.0);
    EXPECT_NEAR(c.r[0], 2.5, 1e-12);
    EXPECT_NEAR(c.r[1], -1.0, 1e-12);
}

TEST(XColumn, MatchesOracle)
{
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> uv(-2.0, 6.0), uw(0.0, 3.0), ur(0.2, 4.0), uc(0.0, 12.0);
    std::uniform_int_distribution<int> um(1, 7);
    for (int trial = 0; trial < 60; ++trial) {
        std::size_t m = static_cast<std::size_t>(um(rng));
        std::vector<double> z(m), u(m, 0.0);
        for (double& x : z)
            x = uv(rng);
        double w = uw(rng), rho = ur(rng), cap = uc(rng);
        auto c = solve_x_column(z, u, w, cap, rho);
        EXPECT_LE(sum(c.r), cap * (1 + 1e-9) + 1e-9);
        for (double r : c.r)
            EXPECT_LE(r, c.s + 1e-9);
        auto ref = testsupport::column_oracle(z, w, rho, cap);
        double obj = testsupport::column_objective(c.r, c.s, z, w, rho);
        EXPECT_LE(obj - ref.objective, 1e-6 * std::max(1.0, std::abs(ref.objective))) << trial;
    }
}

TEST(XColumn, BracketFunctionsMonotone)
{
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> uv(-5.0, 5.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> v(5);
        for (double& x : v)
            x = uv(rng);
        double w = 1.0 + trial % 3, rho = 0.5;
        auto f = [&](double s) {
            double acc = 0.0;
            for (double x : v)
                acc += std::max(x - s, 0.0);
            return acc;
        };
        double lo = *std::min_element(v.begin(), v.end()) - w / (5 * rho);
        double hi = *std::max_element(v.begin(), v.end()) - w / (5 * rho);
        EXPECT_GE(f(lo), w / rho - 1e-12);
        EXPECT_LE(f(hi), w / rho + 1e-12);
        double prev = f(lo);
        for (double s = lo; s <= hi; s += (hi - lo) / 50) {
            EXPECT_LE(f(s), prev + 1e-12);
            prev = f(s);
        }
    }
}

TEST(ZRow, SingleEntry)
{
    std::vector<double> r{7.0}, u{0.0}, c{10.0};
    auto z = solve_z_row(0, r, u, c, 4.0);
    EXPECT_NEAR(z[0], 4.0, 1e-11);
}

TEST(ZRow, WaterFill)
{
    std::vector<double> r{5.0, 1.0}, u{0.0, 0.0}, c{10.0, 10.0};
    auto z = solve_z_row(0, r, u, c, 4.0);
    EXPECT_NEAR(z[0], 4.0, 1e-11);
    EXPECT_NEAR(z[1], 0.0, 1e-11);
    auto ref = testsupport::row_oracle({5.0, 1.0}, c, 4.0);
    EXPECT_NEAR(row_distance2(z, {5.0, 1.0}), row_distance2(ref, {5.0, 1.0}), 1e-9);
}

TEST(ZRow, InfeasibleIdentifiesTerminal)
{
    std::vector<double> r{0.0, 0.0}, u{0.0, 0.0}, c{1.0, 2.0};
    try {
        solve_z_row(7, r, u, c, 4.0);
        FAIL() << "expected InfeasibleError";
    } catch (const InfeasibleError& e) {
        ASSERT_TRUE(e.gt_index().has_value());
        EXPECT_EQ(*e.gt_index(), 7u);
    }
}

TEST(ZRow, ExactlyTightCapacities)
{
    std::vector<double> r{9.0, -3.0, 2.0}, u{0.0, 0.0, 0.0}, c{1.0, 1.0, 1.0};
    auto z = solve_z_row(0, r, u, c, 3.0);
    EXPECT_EQ(z, c);
}

TEST(ZRow, MatchesProjectionOracle)
{
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> uv(-3.0, 8.0), uc(0.0, 4.0);
    std::uniform_int_distribution<int> ug(1, 9);
    int checked = 0;
    for (int trial = 0; trial < 80; ++trial) {
        std::size_t g = static_cast<std::size_t>(ug(rng));
        std::vector<double> v(g), zero(g, 0.0), c(g);
        for (double& x : v)
            x = uv(rng);
        for (double& x : c)
            x = uc(rng);
        double total = 0.8 * sum(c);
        auto z = solve_z_row(0, v, zero, c, total);
        EXPECT_NEAR(sum(z), total, 1e-9 * std::max(1.0, total));
        for (std::size_t i = 0; i < g; ++i) {
            EXPECT_GE(z[i], 0.0);
            EXPECT_LE(z[i], c[i]);
        }
        auto ref = testsupport::row_oracle(v, c, total);
        double d = row_distance2(z, v), dref = row_distance2(ref, v);
        EXPECT_LE(d - dref, 1e-6 * std::max(1.0, dref)) << trial;
        ++checked;
    }
    EXPECT_EQ(checked, 80);
}

TEST(Dual, Updates)
{
    Matrix u(2, 2, 1.0), r(2, 2, 3.0), z(2, 2, 3.0);
    update_dual(u, r, z);
    EXPECT_EQ(u, Matrix(2, 2, 1.0));
    Matrix u0(2, 2, 0.0), e(2, 2, 0.0);
    e(0, 1) = 2.5;
    update_dual(u0, e, Matrix(2, 2, 0.0));
    EXPECT_EQ(u0, e);
    update_dual(u0, e, Matrix(2, 2, 0.0));
    EXPECT_EQ(u0(0, 1), 5.0);
}

TEST(Convergence, ResidualsAndThresholds)
{
    AdmmState st{Matrix(2, 3, 1.0), Matrix(2, 3, 1.0), Matrix(2, 3, 0.0), {}, 0};
    auto res = check_convergence(st, st.z, 1.0, 1e-4, 1e-4);
    EXPECT_EQ(res.primal, 0.0);
    EXPECT_EQ(res.dual, 0.0);
    EXPECT_TRUE(res.converged);
    EXPECT_NEAR(res.eps_pri, std::sqrt(6.0) * 1e-4 + 1e-4 * std::sqrt(6.0), 1e-15);

    st.r(0, 0) = 2.0;
    auto strict = check_convergence(st, st.z, 1.0, 0.0, 0.0);
    EXPECT_FALSE(strict.converged);

    AdmmState big{Matrix(4, 6, 0.0), Matrix(4, 6, 0.0), Matrix(4, 6, 0.0), {}, 0};
    auto scaled = check_convergence(big, big.z, 1.0, 1e-4, 0.0);
    EXPECT_NEAR(scaled.eps_pri, std::sqrt(24.0) * 1e-4, 1e-15);
    EXPECT_NEAR(scaled.eps_dual, std::sqrt(24.0) * 1e-4, 1e-15);
}

TEST(Reweight, Basics)
{
    auto w = reweight(Matrix(3, 4, 0.0), 0.1);
    for (double x : w)
        EXPECT_DOUBLE_EQ(x, 1.0);
    Matrix r(2, 3, 0.0);
    r(1, 2) = 100.0;
    w = reweight(r, 0.01);
    EXPECT_DOUBLE_EQ(w[0], 1.0);
    EXPECT_NEAR(w[2], 0.01 / 100.01, 1e-15);
    for (double x : w)
        EXPECT_GT(x, 0.0);
    EXPECT_THROW(reweight(r, 0.0), DomainError);
}

TEST(Iterate, SingleCellConverges)
{
    PlacementProblem p(Matrix(1, 1, 10.0), {10.0}, 4.0);
    AdmmConfig cfg;
    cfg.rho = 1.0;
    auto st = initial_state(p);
    auto res = admm_run(p, st, cfg);
    EXPECT_TRUE(res.converged);
    EXPECT_NEAR(st.r(0, 0), 4.0, 1e-6);
    EXPECT_NEAR(st.z(0, 0), 4.0, 1e-6);
}

TEST(Iterate, FixedPointIsStable)
{
    PlacementProblem p(Matrix(1, 1, 10.0), {10.0}, 4.0);
    AdmmConfig cfg;
    cfg.rho = 1.0;
    cfg.eps_abs = cfg.eps_rel = 0.0;
    cfg.max_iters = 500;
    auto st = initial_state(p);
    admm_run(p, st, cfg);
    AdmmState before = st;
    gspa_iterate(p, st, cfg);
    EXPECT_NEAR(st.r(0, 0), before.r(0, 0), 1e-9);
    EXPECT_NEAR(st.z(0, 0), before.z(0, 0), 1e-9);
    EXPECT_NEAR(st.u(0, 0), before.u(0, 0), 1e-9);
}

TEST(Iterate, ThreadedSweepIsBitwiseIdentical)
{
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 6e7);
    Matrix c(5, 9);
    for (double& v : c.data())
        v = u(rng);
    PlacementProblem p(c, std::vector<double>(9, 5e7), 2e7);
    AdmmConfig a, b;
    b.threads = 3;
    auto sa = initial_state(p), sb = initial_state(p);
    for (int k = 0; k < 25; ++k) {
        gspa_iterate(p, sa, a);
        gspa_iterate(p, sb, b);
    }
    EXPECT_EQ(sa.r, sb.r);
    EXPECT_EQ(sa.z, sb.z);
    EXPECT_EQ(sa.u, sb.u);
}

TEST(Iterate, ConsensusAtConvergenceAtRateScale)
{
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 6e7);
    for (int trial = 0; trial < 10; ++trial) {
        Matrix c(4, 7);
        for (double& v : c.data())
            v = u(rng);
        PlacementProblem p(c, std::vector<double>(7, 6e7), 2e7);
        if (!allocation_feasible(p))
            continue;
        auto st = initial_state(p);
        auto res = admm_run(p, st, AdmmConfig{});
        ASSERT_TRUE(res.converged);
        EXPECT_LE(res.primal, res.eps_pri);
    }
}

TEST(Solve, SingleCell)
{
    PlacementProblem p(Matrix(1, 1, 1e8), {1e8}, 2e7);
    auto sol = gspa_solve(p);
    ASSERT_EQ(sol.active_columns, std::vector<std::size_t>{0});
    EXPECT_NEAR(sol.rates(0, 0), 2e7, 1e-3);
    EXPECT_TRUE(sol.feasible);
}

TEST(Solve, BlockDiagonalForcesSupport)
{
    Matrix c(2, 4, 0.0);
    c(0, 1) = 1e8;
    c(1, 3) = 1e8;
    PlacementProblem p(c, std::vector<double>(4, 1e8), 2e7);
    auto sol = gspa_solve(p);
    EXPECT_EQ(sol.active_columns, (std::vector<std::size_t>{1, 3}));
    EXPECT_TRUE(sol.feasible);
}

TEST(Solve, ZeroRateNeedsNothing)
{
    PlacementProblem p(Matrix(3, 2, 1.0), {1.0, 1.0}, 0.0);
    auto sol = gspa_solve(p);
    EXPECT_EQ(sol.count(), 0u);
    EXPECT_TRUE(sol.feasible);
}

TEST(Solve, UpfrontInfeasibility)
{
    Matrix c(2, 2, 1e7);
    PlacementProblem p(c, {1e8, 1e8}, 3e7);
    try {
        gspa_solve(p);
        FAIL() << "expected InfeasibleError";
    } catch (const InfeasibleError& e) {
        ASSERT_TRUE(e.gt_index().has_value());
        EXPECT_EQ(*e.gt_index(), 0u);
    }
    PlacementProblem q(Matrix(4, 2, 1e9), {1e7, 1e7}, 2e7);
    EXPECT_THROW(gspa_solve(q), InfeasibleError);
    PlacementProblem zero_bh(Matrix(1, 2, 1e9), {0.0, 0.0}, 2e7);
    EXPECT_THROW(gspa_solve(zero_bh), InfeasibleError);
}

TEST(Solve, NonConvergenceIsReported)
{
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 6e7);
    Matrix c(5, 8);
    for (double& v : c.data())
        v = u(rng);
    PlacementProblem p(c, std::vector<double>(8, 5e7), 2e7);
    AdmmConfig cfg;
    cfg.max_iters = 1;
    cfg.eps_abs = cfg.eps_rel = 0.0;
    auto sol = gspa_solve(p, cfg);
    EXPECT_FALSE(sol.converged);
    EXPECT_TRUE(sol.feasible);
}

TEST(Solve, CountAtLeastLowerBound)
{
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 15; ++trial) {
        Matrix c(6, 10);
        for (double& v : c.data())
            v = 8e7 * u(rng);
        std::vector<double> bh(10);
        for (double& b : bh)
            b = 2e7 + 6e7 * u(rng);
        PlacementProblem p(c, bh, 2e7);
        if (!allocation_feasible(p))
            continue;
        auto sol = gspa_solve(p);
        EXPECT_TRUE(sol.feasible);
        EXPECT_GE(sol.count(), *lower_bound(6, 2e7, bh));
        EXPECT_TRUE(std::is_sorted(sol.active_columns.begin(), sol.active_columns.end()));
    }
}

TEST(LowerBound, Values)
{
    std::vector<double> bh(5, 100e6);
    EXPECT_EQ(*lower_bound(70, 20e6, bh), 14u);
    EXPECT_EQ(*lower_bound(70, 0.0, bh), 0u);
    EXPECT_EQ(*lower_bound(1, 100e6, bh), 1u);
    EXPECT_EQ(*lower_bound(3, 1.0, std::vector<double>{0.3}), 10u);
    EXPECT_FALSE(lower_bound(2, 1.0, std::vector<double>{0.0, 0.0}).has_value());
}

TEST(Feasibility, Reports)
{
    Matrix c(2, 3, 10.0);
    PlacementProblem p(c, {20.0, 20.0, 20.0}, 5.0);
    PlacementSolution s;
    s.active_columns = {0, 2};
    s.rates = Matrix(2, 2, 2.5);
    EXPECT_TRUE(verify_feasibility(p, s).ok());

    PlacementSolution low = s;
    low.rates(1, 0) = 2.5 - 5.0 * 1e-3;
    auto rep = verify_feasibility(p, low);
    ASSERT_EQ(rep.violations.size(), 1u);
    EXPECT_EQ(rep.violations[0].kind, ViolationKind::row_sum);
    EXPECT_EQ(rep.violations[0].row, 1u);

    PlacementSolution over = s;
    over.rates(0, 1) = 11.0;
    rep = verify_feasibility(p, over);
    ASSERT_FALSE(rep.ok());
    EXPECT_EQ(rep.violations[0].kind, ViolationKind::capacity);
    EXPECT_EQ(rep.violations[0].row, 0u);
    EXPECT_EQ(rep.violations[0].column, 2u);

    PlacementProblem tight(c, {20.0, 20.0, 4.0}, 5.0);
    rep = verify_feasibility(tight, s);
    ASSERT_FALSE(rep.ok());
    EXPECT_EQ(rep.violations[0].kind, ViolationKind::column_sum);
    EXPECT_EQ(rep.violations[0].column, 2u);
}
