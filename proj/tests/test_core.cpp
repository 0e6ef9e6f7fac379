#include "cpcal/base_predictors.hpp"
#include "cpcal/core.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace cpcal;

TEST_CASE("bisect_monotone: sigmoid midpoint") {
    const double y = bisect_monotone(sigmoid, 0.5, -10.0, 10.0, BisectMode::last_below, 1e-9);
    CHECK(std::abs(y) <= 1e-9);
}

TEST_CASE("bisect_monotone: constant function returns lo for last-below") {
    const auto f = [](double) { return 0.3; };
    CHECK(bisect_monotone(f, 0.3, 0.0, 1.0, BisectMode::last_below) == 0.0);
    CHECK(bisect_monotone(f, 0.3, 0.0, 1.0, BisectMode::first_above) == 1.0);
}

TEST_CASE("bisect_monotone: identity, first-above, checked by direct scan") {
    const auto f = [](double y) { return y; };
    // Direct scan at step 1e-6 for the first y with f(y) > 0.25.
    double scanned = 0.0;
    for (int i = 0; i <= 1000000; ++i) {
        const double y = i * 1e-6;
        if (f(y) > 0.25) {
            scanned = y;
            break;
        }
    }
    CHECK(std::abs(scanned - 0.25) <= 1e-6 + 1e-12);
    const double tol = 1e-9;
    const double y = bisect_monotone(f, 0.25, 0.0, 1.0, BisectMode::first_above, tol);
    CHECK(std::abs(y - 0.25) <= tol);
    CHECK(std::abs(y - scanned) <= 1e-6 + tol);
}

TEST_CASE("bisect_monotone: plateau edges") {
    // 0.2 below 1, 0.5 on [1, 2], rising after.
    const auto f = [](double y) { return y < 1.0 ? 0.2 : (y <= 2.0 ? 0.5 : 0.5 + (y - 2.0)); };
    CHECK(std::abs(bisect_monotone(f, 0.5, 0.0, 5.0, BisectMode::last_below) - 1.0) <= 1e-9);
    CHECK(std::abs(bisect_monotone(f, 0.5, 0.0, 5.0, BisectMode::first_above) - 2.0) <= 1e-9);
}

TEST_CASE("bisect_monotone: errors") {
    const auto f = [](double y) { return y; };
    CHECK_THROWS_AS(bisect_monotone(f, 2.0, 0.0, 1.0, BisectMode::last_below), RangeError);
    CHECK_THROWS_AS(bisect_monotone(f, -1.0, 0.0, 1.0, BisectMode::first_above), RangeError);
    CHECK_THROWS_AS(bisect_monotone(f, 0.5, 0.0, 1.0, BisectMode::last_below, 0.0), ArgumentError);
    CHECK_THROWS_AS(bisect_monotone(f, 0.5, 0.0, 1.0, BisectMode::last_below, -1.0), ArgumentError);
    CHECK_THROWS_AS(bisect_monotone(f, 0.5, 1.0, 0.0, BisectMode::last_below), ArgumentError);
    // 1e300-wide bracket at tolerance 1e-9 needs ~1030 halvings.
    CHECK_THROWS_AS(bisect_monotone(f, 0.5, -1e300, 1e300, BisectMode::last_below), RangeError);
}

TEST_CASE("eval_on_grid: closed-form evaluators") {
    const LabeledSequence none;
    const auto half = make_predictive_system("half", [](ObservationSpan, double, double) { return 0.5; });
    const std::vector<double> grid{-1.0, 0.0, 3.0};
    const auto d = eval_on_grid(*half, none, 0.0, grid);
    for (double v : d.values) CHECK(v == 0.5);

    const auto logistic = make_predictive_system("sigmoid", [](ObservationSpan, double, double y) { return sigmoid(y); });
    const std::vector<double> wide{-1000.0, 0.0, 1000.0};
    const auto s = eval_on_grid(*logistic, none, 0.0, wide);
    CHECK(s.values[0] < 1e-300);
    CHECK(s.values[1] == 0.5);
    CHECK(s.values[2] == 1.0);
}

TEST_CASE("eval_on_grid: Nadaraya-Watson on a single training point") {
    const LabeledSequence one{{0.0, 0.0}};
    const std::vector<double> grid{0.0};
    // Direct evaluation with one term: sigma(0) * G(0) / G(0).
    const double expected = oracle::nw_direct({{0.0, 0.0}}, 0.0, 0.0, 0.3, 0.7);
    CHECK(expected == 0.5);
    const auto d = eval_on_grid(NadarayaWatsonSystem({0.3, 0.7}), one, 0.0, grid);
    CHECK(d.values[0] == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("eval_on_grid: contract violations name the offending pair") {
    const LabeledSequence none;
    const auto decreasing = make_predictive_system("decreasing", [](ObservationSpan, double, double y) { return 1.0 - sigmoid(y); });
    const std::vector<double> grid{-1.0, 0.0, 1.0};
    try {
        (void)eval_on_grid(*decreasing, none, 0.0, grid);
        FAIL("expected a contract violation");
    } catch (const ContractViolation& e) {
        CHECK(std::string(e.what()).find("indices 0 and 1") != std::string::npos);
    }
    const auto too_big = make_predictive_system("too-big", [](ObservationSpan, double, double) { return 1.5; });
    CHECK_THROWS_AS((void)eval_on_grid(*too_big, none, 0.0, grid), ContractViolation);

    const std::vector<double> unsorted{0.0, 0.0};
    CHECK_THROWS_AS((void)eval_on_grid(*decreasing, none, 0.0, unsorted), ArgumentError);
    CHECK_THROWS_AS((void)eval_on_grid(*decreasing, none, 0.0, std::vector<double>{}), ArgumentError);
}

TEST_CASE("eval_on_grid: shipped systems satisfy the axioms on random draws") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> bandwidth(0.02, 1.0);
    for (int draw = 0; draw < 1000; ++draw) {
        const std::size_t n = 1 + rng() % 12;
        LabeledSequence training(n);
        for (auto& z : training) {
            z.x = unit(rng);
            z.y = 2.0 * z.x + 0.5 * std::abs(z.x) * unit(rng);
        }
        const double x = unit(rng);
        const double g = bandwidth(rng);
        const double h = bandwidth(rng);
        const std::vector<PredictiveSystemHandle> systems{
            make_nadaraya_watson({g, h}), make_residual_conformity({g, 1e-3}), make_oracle_system(),
            make_miscalibrated_system(), make_dempster_hill()};
        const PredictiveSystemHandle& ps = systems[static_cast<std::size_t>(draw) % systems.size()];

        // Noise scale: h for NW, the residual floor region for the others; 10 noise scales past the labels.
        double lo = training[0].y;
        double hi = training[0].y;
        for (const auto& z : training) {
            lo = std::min(lo, z.y);
            hi = std::max(hi, z.y);
        }
        lo = std::min(lo, 2.0 * x) - 10.0 * std::max(h, 1.0) - 40.0;
        hi = std::max(hi, 2.0 * x) + 10.0 * std::max(h, 1.0) + 40.0;
        const auto grid = linspace(lo, hi, 512);
        const auto d = eval_on_grid(*ps, training, x, grid);  // throws on any violation
        CHECK(d.values.front() < 0.05);
        CHECK(d.values.back() > 0.95);
    }
}

TEST_CASE("eval_on_grid is deterministic") {
    const LabeledSequence training{{0.1, 0.3}, {-0.4, -0.9}, {0.8, 1.4}};
    const auto grid = linspace(-3.0, 3.0, 101);
    const NadarayaWatsonSystem nw({0.2, 0.3});
    const auto a = eval_on_grid(nw, training, 0.25, grid);
    const auto b = eval_on_grid(nw, training, 0.25, grid);
    CHECK(a.values == b.values);
}

TEST_CASE("ConditionalDistribution default quantile inverts by bisection") {
    struct Logistic final : ConditionalDistribution {
        double cdf(double x, double y) const override { return sigmoid(y - x); }
    };
    const Logistic dist;
    for (double t : {0.01, 0.3, 0.5, 0.77, 0.999}) {
        const double y = dist.quantile(1.5, t);
        CHECK(y == doctest::Approx(1.5 + std::log(t / (1.0 - t))).epsilon(1e-9));
    }
    CHECK_THROWS_AS((void)dist.quantile(0.0, 1.0), ArgumentError);
}

TEST_CASE("normal quantile and cdf") {
    CHECK(normal_cdf(0.0) == 0.5);
    CHECK(normal_cdf(1.0) == doctest::Approx(oracle::normal_cdf_series(1.0)).epsilon(1e-14));
    for (double p : {1e-10, 0.001, 0.2, 0.5, 0.8413447460685429, 0.999}) {
        CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
    }
    CHECK_THROWS_AS(normal_quantile(0.0), ArgumentError);
    CHECK_THROWS_AS(normal_quantile(1.0), ArgumentError);
}

TEST_CASE("parallel_for runs each index once and rethrows") {
    std::vector<int> hits(100, 0);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; }, 4);
    for (int h : hits) CHECK(h == 1);
    CHECK_THROWS_AS(parallel_for(10, [](std::size_t i) { if (i == 3) throw ArgumentError("boom"); }, 3), ArgumentError);
}

TEST_CASE("grid helpers") {
    const auto g = linspace(-5.0, 5.0, 1001);
    CHECK(g.front() == -5.0);
    CHECK(g.back() == 5.0);
    CHECK(std::abs(g[500]) <= 1e-15);
    const auto l = logspace(0.01, 1.0, 8);
    CHECK(l.front() == 0.01);
    CHECK(l.back() == 1.0);
    for (std::size_t i = 1; i < l.size(); ++i) CHECK(l[i] / l[i - 1] == doctest::Approx(std::pow(100.0, 1.0 / 7.0)));
    CHECK_THROWS_AS(linspace(1.0, 0.0, 3), ArgumentError);
    CHECK_THROWS_AS(logspace(0.0, 1.0, 3), ArgumentError);
}
