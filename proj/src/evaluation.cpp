#include "cpcal/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace cpcal {

CrpsScore crps(const DistributionEvaluation& dist, double y) {
    const auto& grid = dist.grid;
    const auto& f = dist.values;
    require_strictly_increasing(grid, "crps");
    if (f.size() != grid.size()) throw ArgumentError("crps: value count does not match grid size");
    if (!(y >= grid.front() && y <= grid.back())) {
        std::ostringstream msg;
        msg << "crps: label " << y << " outside evaluation grid [" << grid.front() << ", " << grid.back() << "]";
        throw ArgumentError(msg.str());
    }

    const auto sq = [](double v) { return v * v; };
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        const double a = grid[k];
        const double b = grid[k + 1];
        if (b <= y) {
            total += 0.5 * (sq(f[k]) + sq(f[k + 1])) * (b - a);
        } else if (a >= y) {
            total += 0.5 * (sq(f[k] - 1.0) + sq(f[k + 1] - 1.0)) * (b - a);
        } else {
            const double f_y = f[k] + (f[k + 1] - f[k]) * (y - a) / (b - a);
            total += 0.5 * (sq(f[k]) + sq(f_y)) * (y - a);
            total += 0.5 * (sq(f_y - 1.0) + sq(f[k + 1] - 1.0)) * (b - y);
        }
    }
    return {total, !(f.front() < 1e-3 && f.back() > 1.0 - 1e-3)};
}

double pit(double dist_value_at_true_label) {
    if (!(dist_value_at_true_label >= 0.0 && dist_value_at_true_label <= 1.0)) {
        throw ArgumentError("pit: distribution value outside [0,1]");
    }
    return dist_value_at_true_label;
}

PitSample semi_online_pits(const PredictiveSystemHandle& base, ObservationSpan training, SplitSpec split,
                           ObservationSpan tests, std::span<const double> taus) {
    if (!base) throw ArgumentError("semi_online_pits: null base predictive system");
    if (taus.size() != tests.size()) throw ArgumentError("semi_online_pits: need one tau per test observation");
    if (split.m > training.size()) throw ArgumentError("semi_online_pits: m exceeds training size");
    for (double tau : taus) require_tau(tau);

    const auto fitted = base->fit(training.first(split.m));
    const auto calibration = training.subspan(split.m);
    std::vector<double> initial(calibration.size());
    for (std::size_t i = 0; i < calibration.size(); ++i) initial[i] = fitted->evaluate(calibration[i].x, calibration[i].y);
    ConformityScores scores(std::move(initial));

    PitSample out;
    out.values.reserve(tests.size());
    for (std::size_t i = 0; i < tests.size(); ++i) {
        const double s = fitted->evaluate(tests[i].x, tests[i].y);
        out.values.push_back(pit(scores.pvalue(s, taus[i])));
        scores.insert(s);
    }
    return out;
}

double ks_statistic(const PitSample& sample) {
    if (sample.values.empty()) throw ArgumentError("ks_statistic: empty sample");
    std::vector<double> u = sample.values;
    for (double v : u) {
        if (!(v >= 0.0 && v <= 1.0)) throw ArgumentError("ks_statistic: sample value outside [0,1]");
    }
    std::sort(u.begin(), u.end());
    const double n = static_cast<double>(u.size());
    double d = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double rank = static_cast<double>(i + 1);
        d = std::max({d, rank / n - u[i], u[i] - (rank - 1.0) / n});
    }
    return d;
}

double kolmogorov_cdf(double t) {
    if (std::isnan(t)) throw ArgumentError("kolmogorov_cdf: NaN argument");
    if (t <= 0.0) return 0.0;
    constexpr double term_floor = 1e-12;
    if (t < 1.0) {
        // Dual theta-function form; the alternating series converges slowly here.
        const double pi2_over_8t2 = std::numbers::pi * std::numbers::pi / (8.0 * t * t);
        double sum = 0.0;
        for (int j = 1; j < 1000; ++j) {
            const double odd = 2.0 * j - 1.0;
            const double term = std::exp(-odd * odd * pi2_over_8t2);
            sum += term;
            if (term < term_floor) break;
        }
        return std::min(1.0, std::sqrt(2.0 * std::numbers::pi) / t * sum);
    }
    double sum = 0.0;
    for (int j = 1; j < 1000; ++j) {
        const double term = std::exp(-2.0 * j * j * t * t);
        sum += (j % 2 == 1) ? term : -term;
        if (term < term_floor) break;
    }
    return std::clamp(1.0 - 2.0 * sum, 0.0, 1.0);
}

double kolmogorov_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw ArgumentError("kolmogorov_quantile: p must lie in (0,1)");
    return bisect_monotone(kolmogorov_cdf, p, 0.0, 10.0, BisectMode::last_below, 1e-12);
}

double kolmogorov_pvalue(std::size_t n, double ks) {
    return 1.0 - kolmogorov_cdf(std::sqrt(static_cast<double>(n)) * ks);
}

ConvergenceReport prop1_check(const ConditionalDistributionHandle& oracle, ObservationSpan data, double x,
                              double tau, std::span<const double> t_grid) {
    if (!oracle) throw ArgumentError("prop1_check: null oracle");
    if (data.empty()) throw ArgumentError("prop1_check: needs at least one observation");
    require_tau(tau);
    for (double t : t_grid) {
        if (!(t > 0.0 && t < 1.0)) throw ArgumentError("prop1_check: t grid must lie inside (0,1)");
    }

    const IdealConformalCalibrator icps(oracle, data);
    const auto pits = icps.pits().sorted();
    const std::size_t n = data.size();

    ConvergenceReport report;
    report.n = n;
    report.bound = 1.0 / static_cast<double>(n + 1);
    for (double t : t_grid) {
        double y = 0.0;
        try {
            y = oracle->quantile(x, t);
        } catch (const std::exception& e) {
            throw RangeError(std::string("prop1_check: oracle inversion failed: ") + e.what());
        }
        if (!std::isfinite(y)) throw RangeError("prop1_check: oracle inversion returned a non-finite label");
        const double conformal = icps.evaluate(x, y, tau);
        const double empirical = static_cast<double>(std::upper_bound(pits.begin(), pits.end(), t) - pits.begin()) /
                                 static_cast<double>(n);
        report.sup_discrepancy = std::max(report.sup_discrepancy, std::abs(conformal - empirical));
    }
    report.scaled_ks = std::sqrt(static_cast<double>(n)) * ks_statistic(PitSample{{pits.begin(), pits.end()}});
    return report;
}

std::vector<double> unit_interval_grid(std::size_t n) {
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    return t;
}

}  // namespace cpcal
