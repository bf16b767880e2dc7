#include "test_support.hpp"

#include <absplace/baselines.hpp>
#include <absplace/flow.hpp>
#include <absplace/propagation.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace absplace;

namespace {

PlacementProblem random_problem(std::mt19937_64& rng, std::size_t m, std::size_t g, double rate)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix c(m, g);
    for (double& v : c.data())
        v = u(rng) < 0.35 ? 0.0 : 2.0 * rate * u(rng);
    std::vector<double> bh(g);
    for (double& v : bh)
        v = rate * (0.5 + 2.5 * u(rng));
    return PlacementProblem(std::move(c), std::move(bh), rate);
}

} // namespace

TEST(Oracle, MatchesExhaustiveEnumeration)
{
    std::mt19937_64 rng(11);
    int checked = 0;
    for (int t = 0; t < 60; ++t) {
        auto p = random_problem(rng, 4, 8, 10.0);
        auto ref = testsupport::exhaustive_min_columns(p);
        if (!ref) {
            EXPECT_THROW(brute_force_min_abs(p), InfeasibleError);
            continue;
        }
        auto res = brute_force_min_abs(p);
        EXPECT_EQ(res.min_count, *ref) << "trial " << t;
        ASSERT_EQ(res.witness_columns.size(), res.min_count);
        auto sol = allocate_on_columns(p, res.witness_columns);
        ASSERT_TRUE(sol.has_value());
        EXPECT_TRUE(verify_feasibility(p, *sol).ok());
        ++checked;
    }
    EXPECT_GT(checked, 20);
}

TEST(Oracle, WitnessIsFirstInLexicographicOrder)
{
    // Any single column works; the first one is reported.
    Matrix c(2, 3, 10.0);
    PlacementProblem p(c, {20.0, 20.0, 20.0}, 5.0);
    auto res = brute_force_min_abs(p);
    EXPECT_EQ(res.min_count, 1u);
    EXPECT_EQ(res.witness_columns, std::vector<std::size_t>{0});
    EXPECT_EQ(res.explored, 1u);
}

TEST(Oracle, StartsAtLowerBound)
{
    Matrix c(4, 5, 10.0);
    PlacementProblem p(c, std::vector<double>(5, 10.0), 5.0); // two GTs per ABS
    auto res = brute_force_min_abs(p);
    EXPECT_EQ(res.min_count, 2u);
    EXPECT_EQ(res.explored, 1u);
}

TEST(Oracle, BudgetAndZeroRate)
{
    PlacementProblem big(Matrix(1, 21, 1.0), std::vector<double>(21, 1.0), 1.0);
    EXPECT_THROW(brute_force_min_abs(big), BudgetError);
    PlacementProblem none(Matrix(3, 4, 1.0), std::vector<double>(4, 1.0), 0.0);
    EXPECT_EQ(brute_force_min_abs(none).min_count, 0u);
    PlacementProblem dark(Matrix(1, 2, 1.0), std::vector<double>(2, 0.0), 1.0);
    EXPECT_THROW(brute_force_min_abs(dark), InfeasibleError);
}

TEST(Flow, SimpleNetwork)
{
    MaxFlow mf(4);
    mf.add_edge(0, 1, 3.0);
    mf.add_edge(0, 2, 2.0);
    auto e = mf.add_edge(1, 2, 1.0);
    mf.add_edge(1, 3, 2.0);
    mf.add_edge(2, 3, 3.0);
    EXPECT_DOUBLE_EQ(mf.solve(0, 3), 5.0);
    EXPECT_DOUBLE_EQ(mf.flow(e), 1.0);
}

TEST(Flow, AllocationAgreesWithReferenceFlow)
{
    std::mt19937_64 rng(5);
    for (int t = 0; t < 200; ++t) {
        auto p = random_problem(rng, 1 + rng() % 5, 1 + rng() % 5, 10.0);
        auto cols = testsupport::iota_vec(p.num_points());
        auto rows = testsupport::iota_vec(p.num_gts());
        bool ref = testsupport::flow_feasible(p.capacity, p.backhaul, p.min_rate, rows, cols);
        auto alloc = flow_allocation(p, cols);
        ASSERT_EQ(alloc.has_value(), ref) << "trial " << t;
        if (alloc) {
            PlacementSolution sol;
            sol.active_columns = cols;
            sol.rates = *alloc;
            EXPECT_TRUE(verify_feasibility(p, sol).ok()) << "trial " << t;
        }
    }
}

TEST(KMeans, TwoClustersUnderTwoPoints)
{
    std::vector<Vec3> gts{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {100, 100, 0}, {101, 100, 0}, {100, 101, 0}};
    std::vector<Vec3> grid{{0.5, 0.5, 50}, {100.5, 100.5, 50}, {50, 50, 50}};
    Matrix c(6, 3, 100.0);
    std::vector<double> bh{30.0, 30.0, 30.0};
    auto res = kmeans_placement(gts, grid, c, bh, 10.0, 3, 7);
    EXPECT_EQ(res.k, 2u);
    EXPECT_EQ(res.solution.active_columns, (std::vector<std::size_t>{0, 1}));
    PlacementProblem p(c, bh, 10.0);
    EXPECT_TRUE(verify_feasibility(p, res.solution).ok());
    for (std::size_t m = 0; m < 3; ++m)
        EXPECT_EQ(res.assignment[m], 0u);
    for (std::size_t m = 3; m < 6; ++m)
        EXPECT_EQ(res.assignment[m], 1u);
}

TEST(KMeans, CoLocatedTerminalsNeedBackhaulStaircase)
{
    std::vector<Vec3> gts{{10, 10, 0}, {10, 10, 0}};
    std::vector<Vec3> grid{{10, 10, 50}, {20, 10, 50}, {30, 10, 50}};
    Matrix c(2, 3, 100.0);
    std::vector<double> bh(3, 15.0); // below 2 R^min
    auto res = kmeans_placement(gts, grid, c, bh, 10.0, 3, 1);
    EXPECT_EQ(res.k, 2u);
    EXPECT_EQ(res.solution.count(), 2u);
}

TEST(KMeans, DeterministicAndRejectsBadInput)
{
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    std::vector<Vec3> gts(12), grid(9);
    for (auto& g : gts)
        g = {u(rng), u(rng), 0.0};
    for (std::size_t i = 0; i < 9; ++i)
        grid[i] = {50.0 * static_cast<double>(i % 3), 50.0 * static_cast<double>(i / 3), 40.0};
    Matrix c(12, 9);
    for (std::size_t m = 0; m < 12; ++m)
        for (std::size_t g = 0; g < 9; ++g)
            c(m, g) = 2000.0 / (1.0 + distance(gts[m], grid[g]));
    std::vector<double> bh(9, 40.0);
    auto a = kmeans_placement(gts, grid, c, bh, 10.0, 9, 99);
    auto b = kmeans_placement(gts, grid, c, bh, 10.0, 9, 99);
    EXPECT_EQ(a.solution.active_columns, b.solution.active_columns);
    EXPECT_EQ(a.assignment, b.assignment);
    EXPECT_THROW(kmeans_placement(gts, grid, c, bh, 10.0, 0, 1), DomainError);
    EXPECT_THROW(kmeans_placement(gts, grid, c, bh, 1000.0, 9, 1), InfeasibleError);
}

TEST(Baselines, CountsAreAtLeastOracle)
{
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int compared = 0;
    for (int t = 0; t < 40; ++t) {
        const std::size_t m_count = 2 + rng() % 5;
        std::vector<Vec3> gts(m_count), grid;
        for (auto& g : gts)
            g = {300.0 * u(rng), 300.0 * u(rng), 1.5};
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j)
                grid.push_back({150.0 * static_cast<double>(i), 150.0 * static_cast<double>(j), 50.0});
        const double rate = 20e6;
        Matrix c = build_capacity_matrix(gts, grid, FreeSpaceModel{}, RadioParams{});
        // Weaken far links so that placement matters.
        for (std::size_t m = 0; m < m_count; ++m)
            for (std::size_t g = 0; g < grid.size(); ++g)
                if (distance(gts[m], grid[g]) > 160.0)
                    c(m, g) = 0.0;
        std::vector<double> bh(grid.size(), rate * (1.5 + 2.0 * u(rng)));
        PlacementProblem p(c, bh, rate);
        OracleResult oracle;
        try {
            oracle = brute_force_min_abs(p);
        } catch (const InfeasibleError&) {
            continue;
        }
        auto lb = lower_bound(m_count, rate, bh);
        ASSERT_TRUE(lb.has_value());
        EXPECT_GE(oracle.min_count, *lb);
        auto gspa = gspa_solve(p);
        EXPECT_TRUE(gspa.feasible);
        EXPECT_GE(gspa.count(), oracle.min_count);
        try {
            auto km = kmeans_placement(gts, grid, c, bh, rate, grid.size(), 3);
            EXPECT_GE(km.solution.count(), oracle.min_count);
        } catch (const InfeasibleError&) {
        }
        ++compared;
    }
    EXPECT_GT(compared, 10);
}
