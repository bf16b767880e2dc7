#include <absplace/bisection.hpp>

#include <gtest/gtest.h>

#include <algorithm>

using namespace absplace;

TEST(Bisection, LinearRoot)
{
    EXPECT_NEAR(bisect_root([](double s) { return -s; }, 0.0, -1.0, 1.0), 0.0, 1e-12);
}

TEST(Bisection, PiecewiseLinear)
{
    auto f = [](double s) { return std::max(3.0 - s, 0.0) + std::max(1.0 - s, 0.0); };
    EXPECT_NEAR(bisect_root(f, 1.0, 0.5, 2.5), 2.0, 1e-11);
}

TEST(Bisection, PlateauAcceptsAnyPoint)
{
    auto f = [](double s) { return std::clamp(1.0 - s, 0.0, 0.5) + std::max(-s, 0.0); };
    // f == 0.5 on [0, 0.5].
    double s = bisect_root(f, 0.5, -1.0, 2.0);
    EXPECT_GE(s, -1e-9);
    EXPECT_LE(s, 0.5 + 1e-9);
    EXPECT_NEAR(f(s), 0.5, 1e-9);
}

TEST(Bisection, BracketViolationCarriesValues)
{
    try {
        bisect_root([](double s) { return -s; }, 5.0, -1.0, 1.0);
        FAIL() << "expected NumericError";
    } catch (const NumericError& e) {
        EXPECT_EQ(e.f_lo(), 1.0);
        EXPECT_EQ(e.f_hi(), -1.0);
    }
}

TEST(Bisection, WidthScalesWithBracket)
{
    auto f = [](double s) { return 1e6 - s; };
    double s = bisect_root(f, 0.0, 0.0, 4e6, 1e-12);
    EXPECT_NEAR(s, 1e6, 4e6 * 1e-12 + 1e-6);
}
