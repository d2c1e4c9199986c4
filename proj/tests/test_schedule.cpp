#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "assembly/schedule.hpp"
#include "oracles.hpp"

using namespace assembly;

TEST(Projection, AveragesAViolatingPair) {
    const std::vector<double> z{1.0, 3.0};
    const auto p = project_feasible(z, 0.0, 50.0, true);
    EXPECT_EQ(p.values, (std::vector<double>{2.0, 2.0}));
}

TEST(Projection, ClampsToUpperBound) {
    const std::vector<double> z{60.0, 40.0};
    const auto p = project_feasible(z, 0.0, 50.0, true);
    EXPECT_EQ(p.values, (std::vector<double>{50.0, 40.0}));
}

TEST(Projection, FeasibleInputUnchanged) {
    const std::vector<double> z{9.0, 7.5, 7.5, 3.0, 0.25};
    EXPECT_EQ(project_feasible(z, 0.0, 10.0, true).values, z);
    EXPECT_EQ(project_feasible(z, 0.0, 10.0, false).values, z);
}

TEST(Projection, InvertedBoundsAreAConfigError) {
    const std::vector<double> z{1.0};
    EXPECT_THROW(project_feasible(z, 2.0, 1.0, true), ConfigError);
}

TEST(Projection, NonFiniteEntryRejected) {
    const std::vector<double> z{1.0, NAN};
    EXPECT_THROW(project_feasible(z, 0.0, 2.0, true), DomainError);
}

TEST(Projection, WithoutMonotonicityIsPlainClamp) {
    const std::vector<double> z{-1.0, 3.0, 0.5, 9.0};
    EXPECT_EQ(project_feasible(z, 0.0, 2.0, false).values, (std::vector<double>{0.0, 2.0, 0.5, 2.0}));
}

TEST(Projection, DegenerateBoxPinsEverything) {
    const std::vector<double> z{4.0, -3.0, 8.0};
    EXPECT_EQ(project_feasible(z, 1.5, 1.5, true).values, (std::vector<double>{1.5, 1.5, 1.5}));
}

TEST(Projection, MatchesExhaustiveOracle) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> coord(-5.0, 25.0);
    std::uniform_real_distribution<double> lo_draw(0.0, 5.0), width(0.0, 15.0);
    std::uniform_int_distribution<int> len(1, 9);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<double> z(static_cast<std::size_t>(len(rng)));
        for (auto& v : z) v = coord(rng);
        const double lo = lo_draw(rng), hi = lo + width(rng);
        const bool monotone = trial % 4 != 0;
        const auto p = project_feasible(z, lo, hi, monotone);
        const auto ref = oracle::project_exhaustive(z, lo, hi, monotone);
        EXPECT_TRUE(p.is_feasible());
        EXPECT_LE(oracle::distance(p.values, ref), 1e-9) << "trial " << trial;
    }
}

TEST(Projection, NoDenseGridPointIsCloser) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> coord(-2.0, 12.0);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<double> z(5);
        for (auto& v : z) v = coord(rng);
        const auto p = project_feasible(z, 0.0, 10.0, true);
        const double grid = oracle::grid_min_distance(z, 0.0, 10.0, true, 41);
        EXPECT_LE(oracle::distance(p.values, z), grid + 1e-12);
    }
}

TEST(Projection, IsIdempotent) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(5.0, 4.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> z(12);
        for (auto& v : z) v = g(rng);
        const auto once = project_feasible(z, 1.0, 8.0, true);
        EXPECT_EQ(project_feasible(once.values, 1.0, 8.0, true).values, once.values);
    }
}

TEST(Projection, IsNonExpansive) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(5.0, 4.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> a(8), b(8);
        for (auto& v : a) v = g(rng);
        for (auto& v : b) v = g(rng);
        const auto pa = project_feasible(a, 0.0, 10.0, true), pb = project_feasible(b, 0.0, 10.0, true);
        EXPECT_LE(oracle::distance(pa.values, pb.values), oracle::distance(a, b) + 1e-12);
    }
}

TEST(Feasibility, DetectsIncreaseAndBounds) {
    TemperatureSchedule s{{3.0, 2.0, 2.5}, 0.0, 5.0, true};
    EXPECT_FALSE(s.is_feasible());
    s.monotone_nonincreasing = false;
    EXPECT_TRUE(s.is_feasible());
    s.values[1] = 5.5;
    EXPECT_FALSE(s.is_feasible());
}

TEST(Newton, DefaultRateReachesOnePercent) {
    EXPECT_NEAR(default_cooling_rate(10.0), 0.46051701859880914, 1e-15);
    const auto grid = TimeGrid::uniform(10.0, 100);
    const auto s = newton_cooling_schedule(50.0, 0.0, default_cooling_rate(10.0), grid);
    EXPECT_EQ(s.values.front(), 50.0);
    EXPECT_NEAR(s.values.back(), 0.5, 1e-12);
    EXPECT_TRUE(s.is_feasible());
}

TEST(Newton, ApproachesEnvironment) {
    const auto grid = TimeGrid::uniform(100.0, 50);
    const auto s = newton_cooling_schedule(50.0, 2.0, 1.0, grid);
    EXPECT_NEAR(s.values.back(), 2.0, 1e-12);
    for (std::size_t n = 1; n < s.values.size(); ++n) EXPECT_LE(s.values[n], s.values[n - 1]);
}

TEST(Newton, MatchesClosedForm) {
    const auto grid = TimeGrid::uniform(3.0, 30);
    const auto s = newton_cooling_schedule(10.0, 1.0, 0.7, grid);
    for (std::size_t n = 0; n < s.values.size(); ++n) {
        const double t = 0.1 * static_cast<double>(n);
        EXPECT_NEAR(s.values[n], 1.0 + 9.0 * std::exp(-0.7 * t), 1e-12);
    }
}

TEST(Newton, RejectsBadParameters) {
    const auto grid = TimeGrid::uniform(1.0, 10);
    EXPECT_THROW(newton_cooling_schedule(50.0, 0.0, 0.0, grid), ConfigError);
    EXPECT_THROW(newton_cooling_schedule(50.0, 0.0, -1.0, grid), ConfigError);
    EXPECT_THROW(newton_cooling_schedule(1.0, 2.0, 1.0, grid), ConfigError);
}

TEST(Constant, IsFlatAndFeasible) {
    const auto s = constant_schedule(4.0, TimeGrid::uniform(1.0, 5));
    EXPECT_EQ(s.values, std::vector<double>(6, 4.0));
    EXPECT_TRUE(s.is_feasible());
    EXPECT_THROW(constant_schedule(-1.0, TimeGrid::uniform(1.0, 5)), ConfigError);
}
