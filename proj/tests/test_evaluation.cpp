#include "cpcal/base_predictors.hpp"
#include "cpcal/datagen.hpp"
#include "cpcal/evaluation.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace cpcal;

using fixture::labels_only;
using fixture::UniformOracle;

TEST_CASE("crps of a point forecast vanishes with the grid spacing") {
    for (double spacing : {1e-2, 1e-4, 1e-6}) {
        DistributionEvaluation d;
        for (int i = -100; i <= 100; ++i) {
            d.grid.push_back(i * spacing);
            d.values.push_back(i >= 0 ? 1.0 : 0.0);
        }
        const auto s = crps(d, 0.0);
        // The only mass is the interpolated jump in the cell ending at the label.
        CHECK(s.value == doctest::Approx(spacing / 2.0).epsilon(1e-12));
        CHECK_FALSE(s.width_warning);
    }
}

TEST_CASE("crps of the uniform distribution function") {
    DistributionEvaluation d;
    d.grid = linspace(0.0, 1.0, 1001);
    d.values = d.grid;
    // Closed forms: int_0^1 (t - 1)^2 dt = int_0^1 t^2 dt = 1/3.
    CHECK(std::abs(crps(d, 0.0).value - 1.0 / 3.0) <= 1e-3);
    CHECK(std::abs(crps(d, 1.0).value - 1.0 / 3.0) <= 1e-3);
    // Off-node label: int_0^y t^2 + int_y^1 (1 - t)^2 = (y^3 + (1 - y)^3) / 3.
    const double y = 0.3337;
    CHECK(std::abs(crps(d, y).value - (y * y * y + std::pow(1.0 - y, 3)) / 3.0) <= 1e-6);
    CHECK_FALSE(crps(d, 0.5).width_warning);
    DistributionEvaluation narrow{linspace(0.3, 0.7, 41), linspace(0.3, 0.7, 41)};
    CHECK(crps(narrow, 0.5).width_warning);
    CHECK_THROWS_AS((void)crps(d, 1.5), ArgumentError);
    CHECK_THROWS_AS((void)crps(d, -0.01), ArgumentError);
}

TEST_CASE("crps of a normal forecast matches the closed form") {
    // CRPS(N(0,1), y) = y (2 Phi(y) - 1) + 2 phi(y) - 1/sqrt(pi).
    DistributionEvaluation d;
    d.grid = linspace(-10.0, 10.0, 20001);
    for (double t : d.grid) d.values.push_back(oracle::normal_cdf_series(std::clamp(t, -6.0, 6.0)));
    for (double y : {-1.3, 0.0, 0.42, 2.0}) {
        const double closed = y * (2.0 * oracle::normal_cdf_series(y) - 1.0) + 2.0 * oracle::gaussian_density(y) -
                              1.0 / std::sqrt(3.14159265358979323846);
        CHECK(crps(d, y).value == doctest::Approx(closed).epsilon(1e-6));
    }
}

TEST_CASE("crps is translation consistent") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int draw = 0; draw < 200; ++draw) {
        const std::size_t n = 2 + rng() % 200;
        DistributionEvaluation d;
        d.grid.resize(n);
        d.values.resize(n);
        double g = -5.0 * unit(rng);
        double v = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            g += 0.01 + unit(rng) * 0.1;
            v = std::min(1.0, v + unit(rng) * 2.0 / static_cast<double>(n));
            d.grid[i] = g;
            d.values[i] = v;
        }
        const double y = d.grid.front() + unit(rng) * (d.grid.back() - d.grid.front());
        const double shift = 100.0 * (unit(rng) - 0.5);
        DistributionEvaluation moved = d;
        for (double& t : moved.grid) t += shift;
        CHECK(std::abs(crps(moved, y + shift).value - crps(d, y).value) < 1e-9);
    }
}

TEST_CASE("pit is the identity on the unit interval") {
    CHECK(pit(0.5) == 0.5);
    CHECK(pit(0.0) == 0.0);
    CHECK(pit(1.0) == 1.0);
    CHECK_THROWS_AS(pit(1.0000001), ArgumentError);
    CHECK_THROWS_AS(pit(-0.5), ArgumentError);
}

TEST_CASE("semi_online_pits examples") {
    const auto training = gen_toy({20, 3});
    const auto tests = gen_toy({1, 4});
    const std::vector<double> tau{0.61};
    const auto base = make_nadaraya_watson({0.3, 0.3});

    // One test: a single p-value against the initial calibration scores.
    const auto one = semi_online_pits(base, training, {12}, tests, tau);
    const auto fitted = base->fit(std::span(training).first(12));
    std::vector<double> calib;
    for (std::size_t i = 12; i < training.size(); ++i) calib.push_back(fitted->evaluate(training[i].x, training[i].y));
    REQUIRE(one.size() == 1);
    CHECK(one.values[0] == scps_pvalue(calib, fitted->evaluate(tests[0].x, tests[0].y), 0.61));

    // Empty initial calibration.
    const std::vector<double> tau3{0.3};
    CHECK(semi_online_pits(base, training, {20}, tests, tau3).values[0] == 0.3);

    // Dempster-Hill trace: PIT_1 = 0, then sigma(1) beats the appended sigma(0).
    const LabeledSequence none;
    const auto seq = labels_only({0.0, 1.0});
    const std::vector<double> zeros{0.0, 0.0};
    const auto trace = semi_online_pits(make_dempster_hill(), none, {0}, seq, zeros);
    CHECK(trace.values[0] == 0.0);
    CHECK(trace.values[1] == 0.5);

    CHECK_THROWS_AS((void)semi_online_pits(base, training, {21}, tests, tau), ArgumentError);
    CHECK_THROWS_AS((void)semi_online_pits(base, training, {10}, tests, zeros), ArgumentError);
}

TEST_CASE("ks_statistic examples") {
    CHECK(ks_statistic(PitSample{{0.5}}) == 0.5);
    CHECK(ks_statistic(PitSample{{1.0 / 3.0, 2.0 / 3.0}}) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    PitSample even;
    for (int i = 1; i <= 9; ++i) even.values.push_back(i / 10.0);
    CHECK(ks_statistic(even) == doctest::Approx(0.1).epsilon(1e-14));
    for (double u : {0.0, 0.2, 0.93, 1.0}) CHECK(ks_statistic(PitSample{{u}}) == std::max(u, 1.0 - u));
    CHECK_THROWS_AS((void)ks_statistic(PitSample{}), ArgumentError);
    CHECK_THROWS_AS((void)ks_statistic(PitSample{{0.5, 1.5}}), ArgumentError);
}

TEST_CASE("ks_statistic agrees with a brute-force scan") {
    std::mt19937_64 rng(33);
    const std::size_t points = 100000;
    for (int draw = 0; draw < 10; ++draw) {
        PitSample s;
        const std::size_t n = 1 + rng() % 300;
        for (std::size_t i = 0; i < n; ++i) {
            // Lattice values, skewed on odd draws.
            double u = static_cast<double>(rng() % (points + 1)) / static_cast<double>(points);
            if (draw % 2 == 1) u = std::round(u * u * points) / static_cast<double>(points);
            s.values.push_back(u);
        }
        CHECK(std::abs(ks_statistic(s) - oracle::ks_brute_force(s.values, points)) <= 1e-6);
    }
}

TEST_CASE("Kolmogorov distribution") {
    CHECK(kolmogorov_cdf(0.0) == 0.0);
    CHECK(kolmogorov_cdf(50.0) == 1.0);
    CHECK_THROWS_AS(kolmogorov_cdf(std::nan("")), ArgumentError);

    // Both series forms against the alternating series summed to a fixed length.
    for (double t : {0.4, 0.6, 0.8, 0.99, 1.0, 1.2, 2.0}) {
        CHECK(std::abs(kolmogorov_cdf(t) - oracle::kolmogorov_alternating(t)) <= 1e-11);
    }
    const double median_oracle = oracle::kolmogorov_alternating(0.8276);
    CHECK(std::abs(median_oracle - 0.5) <= 5e-4);
    CHECK(std::abs(kolmogorov_cdf(0.8276) - 0.5) <= 5e-4);
    CHECK(std::abs(kolmogorov_quantile(0.5) - 0.8276) <= 1e-4);
    CHECK(kolmogorov_cdf(kolmogorov_quantile(0.95)) == doctest::Approx(0.95).epsilon(1e-10));
    CHECK(kolmogorov_pvalue(100, 0.0) == 1.0);
    CHECK_THROWS_AS(kolmogorov_quantile(1.0), ArgumentError);

    double previous = 0.0;
    for (int i = 1; i <= 400; ++i) {
        const double v = kolmogorov_cdf(i / 100.0);
        CHECK(v >= previous);
        previous = v;
    }
}

TEST_CASE("Kolmogorov median agrees with Brownian-bridge simulation") {
    // 1e5 paths: standard error 0.0016; allow three of them.
    const double mc = oracle::brownian_bridge_sup_cdf_mc(0.8276, 100000, 400, 34);
    CHECK(std::abs(mc - kolmogorov_cdf(0.8276)) <= 0.005);
}

TEST_CASE("prop1_check examples") {
    const auto uniform = std::make_shared<UniformOracle>();
    const LabeledSequence none;
    const std::vector<double> quarter{0.25};
    const std::vector<double> three_quarters{0.75};
    CHECK_THROWS_AS((void)prop1_check(uniform, none, 0.0, 0.0, quarter), ArgumentError);

    const auto half = labels_only({0.5});
    const auto a = prop1_check(uniform, half, 0.0, 0.0, quarter);
    CHECK(a.bound == 0.5);
    CHECK(a.sup_discrepancy == 0.0);
    CHECK(a.n == 1);
    const auto b = prop1_check(uniform, half, 0.0, 1.0, three_quarters);
    CHECK(b.sup_discrepancy == 0.0);
    CHECK(icps_evaluate(*uniform, half, 0.0, 0.75, 1.0) == 1.0);

    const std::vector<double> bad{0.0};
    CHECK_THROWS_AS((void)prop1_check(uniform, half, 0.0, 0.0, bad), ArgumentError);
    CHECK_THROWS_AS((void)prop1_check(uniform, half, 0.0, 1.5, quarter), ArgumentError);
}

TEST_CASE("ideal calibrator stays within 1/(n+1) of the empirical PIT distribution") {
    const auto oracle = std::make_shared<ToyOracle>();
    const auto t_grid = unit_interval_grid(1024);
    std::mt19937_64 rng(35);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (std::size_t n : {10, 100, 1000}) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const auto data = gen_toy({n, 1000 + seed});
            const double x = unit(rng);
            for (double tau : {0.0, 0.5, 1.0}) {
                const auto r = prop1_check(oracle, data, x, tau, t_grid);
                CHECK(r.sup_discrepancy <= r.bound + 1e-12);
                CHECK(r.bound == 1.0 / static_cast<double>(n + 1));
            }
        }
    }
}

TEST_CASE("unit interval grid") {
    const auto t = unit_interval_grid(4);
    CHECK(t == std::vector<double>{0.125, 0.375, 0.625, 0.875});
}
