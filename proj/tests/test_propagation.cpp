#include "test_support.hpp"

#include <absplace/propagation.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace absplace;

namespace {

SpatialLossField random_slf(std::mt19937_64& rng, Dims3 dims, Vec3 spacing, double lo = 0.2, double hi = 2.0)
{
    Grid3 g{{0.5 * spacing.x, 0.5 * spacing.y, 0.5 * spacing.z}, spacing, dims};
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> values(g.size());
    for (double& v : values)
        v = u(rng);
    return SpatialLossField(g, std::move(values));
}

} // namespace

TEST(Tomographic, UnitSegmentAcrossTwoVoxels)
{
    Grid3 g{{0, 0, 0}, {1, 1, 1}, {2, 1, 1}};
    SpatialLossField slf(g, std::vector<double>{1.0, 3.0});
    EXPECT_DOUBLE_EQ(tomographic_integral({0, 0, 0}, {1, 0, 0}, slf), 2.0);
}

TEST(Tomographic, ZeroLengthSegment)
{
    std::mt19937_64 rng(1);
    auto slf = random_slf(rng, {4, 4, 4}, {1, 1, 1});
    EXPECT_EQ(tomographic_integral({1.3, 2.2, 0.7}, {1.3, 2.2, 0.7}, slf), 0.0);
}

TEST(Tomographic, UniformFieldGivesLengthTimesValue)
{
    Grid3 g{{0.5, 0.5, 0.5}, {1, 1, 1}, {10, 10, 10}};
    SpatialLossField slf(g, 0.7);
    Vec3 a{0.1, 0.2, 0.3}, b{8.9, 7.1, 9.4};
    double len = distance(a, b);
    EXPECT_NEAR(tomographic_integral(a, b, slf), 0.7 * std::sqrt(len), 1e-12);
}

TEST(Tomographic, CrossingsBoundedByGridDims)
{
    std::mt19937_64 rng(7);
    auto slf = random_slf(rng, {12, 9, 5}, {2, 3, 4});
    std::uniform_real_distribution<double> ux(0, 24), uy(0, 27), uz(0, 20);
    for (int i = 0; i < 200; ++i) {
        Vec3 a{ux(rng), uy(rng), uz(rng)}, b{ux(rng), uy(rng), uz(rng)};
        double total = 0.0;
        std::size_t n = traverse_segment(a, b, slf.grid(), [&](long, long, long, double dt) {
            EXPECT_GE(dt, 0.0);
            total += dt;
        });
        EXPECT_LE(n, 12u + 9u + 5u);
        EXPECT_NEAR(total, 1.0, 1e-12);
    }
}

TEST(Tomographic, AxisAlignedSegmentMasksZeroDirections)
{
    Grid3 g{{0, 0, 0}, {1, 1, 1}, {5, 1, 1}};
    SpatialLossField slf(g, std::vector<double>{1, 2, 3, 4, 5});
    // From the center of voxel 0 to the center of voxel 4: halves of the ends plus full interior voxels.
    double expected = std::sqrt(4.0) * (0.5 * 1 + 2 + 3 + 4 + 0.5 * 5) / 4.0;
    EXPECT_NEAR(tomographic_integral({0, 0, 0}, {4, 0, 0}, slf), expected, 1e-12);
}

TEST(Tomographic, SegmentLeavingGridUsesBorderVoxels)
{
    Grid3 g{{0, 0, 0}, {1, 1, 1}, {2, 1, 1}};
    SpatialLossField slf(g, std::vector<double>{1.0, 3.0});
    // From x=-2 to x=4: [-2, 0.5) reads voxel 0, [0.5, 4] reads voxel 1.
    double expected = std::sqrt(6.0) * (2.5 * 1.0 + 3.5 * 3.0) / 6.0;
    EXPECT_NEAR(tomographic_integral({-2, 0, 0}, {4, 0, 0}, slf), expected, 1e-12);
}

TEST(Tomographic, MatchesRiemannOracle)
{
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 20; ++trial) {
        auto slf = random_slf(rng, {10, 8, 6}, {5, 5, 10});
        std::uniform_real_distribution<double> ux(0, 50), uy(0, 40), uz(0, 60);
        Vec3 a{ux(rng), uy(rng), uz(rng)}, b{ux(rng), uy(rng), uz(rng)};
        double exact = tomographic_integral(a, b, slf);
        double approx = testsupport::riemann_shadowing(a, b, slf, 100000);
        EXPECT_NEAR(exact, approx, 1e-3 * std::abs(approx));
    }
}

TEST(Tomographic, NonFiniteEndpointThrows)
{
    Grid3 g{{0, 0, 0}, {1, 1, 1}, {2, 1, 1}};
    SpatialLossField slf(g, 1.0);
    EXPECT_THROW(tomographic_integral({0, 0, 0}, {NAN, 0, 0}, slf), DomainError);
}

TEST(Gain, FreeSpaceFormula)
{
    double lambda = kSpeedOfLight / 2.4e9;
    Vec3 a{0, 0, 0}, b{30, 40, 0};
    EXPECT_NEAR(gain_free_space(a, b, lambda), 20.0 * std::log10(lambda / (4.0 * std::numbers::pi * 50.0)), 1e-12);
    EXPECT_THROW(gain_free_space(a, a, lambda), DomainError);
}

TEST(Gain, FreeSpaceDropsSixDbPerDistanceDoubling)
{
    double lambda = 0.125;
    double g1 = gain_free_space({0, 0, 0}, {0, 0, 100}, lambda);
    double g2 = gain_free_space({0, 0, 0}, {0, 0, 200}, lambda);
    EXPECT_NEAR(g1 - g2, 20.0 * std::log10(2.0), 1e-12);
}

TEST(Gain, TomographicSubtractsShadowing)
{
    Grid3 g{{0.5, 0.5, 0.5}, {1, 1, 1}, {4, 4, 4}};
    SpatialLossField slf(g, 2.0);
    Vec3 a{0.5, 0.5, 0.5}, b{3.5, 0.5, 0.5};
    double lambda = 0.1;
    EXPECT_NEAR(gain_tomographic(a, b, slf, lambda), gain_free_space(a, b, lambda) - 2.0 * std::sqrt(3.0), 1e-12);
}

TEST(Gain, AlHouraniLimits)
{
    AlHouraniParams p;
    // At theta = a the probability is 1/(1+a).
    EXPECT_NEAR(alhourani_los_probability(p.a, p), 1.0 / (1.0 + p.a), 1e-15);
    double lambda = 0.125;
    // Directly overhead: near-certain line of sight, excess loss close to eta_los.
    Vec3 gt{0, 0, 0}, up{0, 0, 100};
    double p90 = alhourani_los_probability(90.0, p);
    double expected = gain_free_space(gt, up, lambda) - (p90 * p.eta_los_db + (1 - p90) * p.eta_nlos_db);
    EXPECT_NEAR(gain_alhourani(gt, up, p, lambda), expected, 1e-12);
    EXPECT_THROW(gain_alhourani(gt, {10, 0, 0}, p, lambda), DomainError);
    EXPECT_THROW(gain_alhourani(gt, {10, 0, -1}, p, lambda), DomainError);
}

TEST(Gain, AlHouraniElevationDegrees)
{
    AlHouraniParams p;
    double lambda = 0.125;
    Vec3 gt{0, 0, 0}, abs_pos{100, 0, 100}; // 45 degrees
    double p45 = 1.0 / (1.0 + p.a * std::exp(-p.b * (45.0 - p.a)));
    double expected = gain_free_space(gt, abs_pos, lambda) - (p45 * p.eta_los_db + (1 - p45) * p.eta_nlos_db);
    EXPECT_NEAR(gain_alhourani(gt, abs_pos, p, lambda), expected, 1e-12);
}

TEST(Capacity, ReferenceValue)
{
    RadioParams r{20e6, 20.0, -96.0, 2.4e9};
    double expected = 20e6 * std::log2(1.0 + std::pow(10.0, 3.6));
    EXPECT_NEAR(capacity(-80.0, r), expected, 1e-6 * expected);
    EXPECT_NEAR(capacity(-80.0, r), 2.392e8, 1e5);
}

TEST(Capacity, VanishingGain)
{
    RadioParams r;
    EXPECT_EQ(capacity(-std::numeric_limits<double>::infinity(), r), 0.0);
    EXPECT_LT(capacity(-300.0, r), 1e-10);
}

TEST(Capacity, MonotoneInGain)
{
    RadioParams r;
    double prev = -1.0;
    for (double g = -150.0; g <= -30.0; g += 5.0) {
        double c = capacity(g, r);
        EXPECT_GT(c, prev);
        prev = c;
    }
}

TEST(GainMapIo, RoundTripIsBitExact)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-140.0, -40.0);
    GainMap map{Matrix(5, 7), ChannelModel::tomographic};
    for (double& v : map.gains_db.data())
        v = u(rng);
    map.gains_db(0, 0) = 0.1 + 0.2;
    std::stringstream ss;
    write_gain_map(map, ss);
    GainMap back = read_gain_map(ss);
    EXPECT_EQ(back.gains_db, map.gains_db);
    EXPECT_EQ(back.provenance, ChannelModel::ingested);
}

TEST(GainMapIo, AllZeroTwoByThree)
{
    std::stringstream ss("2 3\n0 0 0\n0 0 0\n");
    GainMap map = read_gain_map(ss);
    EXPECT_EQ(map.gains_db.rows(), 2u);
    EXPECT_EQ(map.gains_db.cols(), 3u);
    for (double v : map.gains_db.data())
        EXPECT_EQ(v, 0.0);
}

TEST(GainMapIo, ShortRowReportsLine)
{
    std::stringstream ss("2 3\n0 0 0\n0 0\n");
    try {
        read_gain_map(ss);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
}

TEST(GainMapIo, MalformedInput)
{
    for (const char* text : {"", "2\n", "2 x\n1 2\n", "1 2\n1 abc\n", "1 1\n1\n2\n", "2 1\n1\n", "1 1\nnan\n"}) {
        std::stringstream ss(text);
        EXPECT_THROW(read_gain_map(ss), ParseError) << text;
    }
}

TEST(CapacityMatrix, IngestedDimensionCheck)
{
    std::vector<Vec3> gts{{0, 0, 0}, {1, 0, 0}};
    std::vector<Vec3> grid{{0, 0, 10}};
    GainModel model = IngestedModel{GainMap{Matrix(3, 1, -80.0), ChannelModel::ingested}};
    EXPECT_THROW(build_capacity_matrix(gts, grid, model, RadioParams{}), DomainError);
}

TEST(CapacityMatrix, ParallelMatchesSerial)
{
    std::mt19937_64 rng(5);
    auto slf = std::make_shared<SpatialLossField>(random_slf(rng, {10, 8, 5}, {10, 10, 10}));
    std::uniform_real_distribution<double> ux(0, 100), uy(0, 80);
    std::vector<Vec3> gts, grid;
    for (int i = 0; i < 9; ++i)
        gts.push_back({ux(rng), uy(rng), 1.5});
    for (int i = 0; i < 13; ++i)
        grid.push_back({ux(rng), uy(rng), 45.0});
    GainModel model = TomographicModel{slf};
    Matrix a = build_capacity_matrix(gts, grid, model, RadioParams{}, 1);
    Matrix b = build_capacity_matrix(gts, grid, model, RadioParams{}, 4);
    EXPECT_EQ(a, b);
    for (double v : a.data())
        EXPECT_GT(v, 0.0);
}

TEST(Backhaul, ConstantAndMapped)
{
    std::vector<Vec3> grid{{0, 0, 50}, {1, 0, 50}};
    auto c = backhaul_vector(grid, ConstantBackhaul{1e8});
    EXPECT_EQ(c, (std::vector<double>{1e8, 1e8}));
    EXPECT_THROW(backhaul_vector(grid, ConstantBackhaul{-1.0}), DomainError);
    RadioParams r;
    auto m = backhaul_vector(grid, MappedBackhaul{{-80.0, -90.0}, r});
    EXPECT_DOUBLE_EQ(m[0], capacity(-80.0, r));
    EXPECT_GT(m[0], m[1]);
    EXPECT_THROW(backhaul_vector(grid, MappedBackhaul{{-80.0}, r}), DomainError);
}
