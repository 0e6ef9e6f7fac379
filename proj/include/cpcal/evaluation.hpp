#pragma once

#include "cpcal/calibrators.hpp"
#include "cpcal/core.hpp"

#include <span>
#include <vector>

namespace cpcal {

/// Probability integral transform values, each in [0,1].
struct PitSample {
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
};

struct CrpsScore {
    double value = 0.0;
    /// The distribution is not below 0.001 at the left grid edge or not above 0.999
    /// at the right one, so truncating the integral to the grid biases the score.
    bool width_warning = false;
};

/// Continuous ranked probability score of `dist` for realized label y:
/// integral of (F(t) - 1{t >= y})^2 over the grid, by the trapezoid rule with the
/// grid split at y. The integrand uses the left limit 0 of the indicator on cells
/// ending at y and 1 on cells starting at y. Throws ArgumentError when y is outside
/// the grid.
CrpsScore crps(const DistributionEvaluation& dist, double y);

/// Identity on [0,1]; throws ArgumentError otherwise.
double pit(double dist_value_at_true_label);

/// Semi-online split-conformal protocol: each test observation is predicted with the
/// calibration sequence extended by all earlier test observations, then appended.
PitSample semi_online_pits(const PredictiveSystemHandle& base, ObservationSpan training, SplitSpec split,
                           ObservationSpan tests, std::span<const double> taus);

/// sup_t |G_n(t) - t| for the empirical distribution function G_n of the sample.
double ks_statistic(const PitSample& sample);

/// Distribution function of the supremum of the absolute Brownian bridge.
double kolmogorov_cdf(double t);

/// t with kolmogorov_cdf(t) = p, for p in (0,1).
double kolmogorov_quantile(double p);

/// Asymptotic p-value 1 - K(sqrt(n) * ks).
double kolmogorov_pvalue(std::size_t n, double ks);

struct ConvergenceReport {
    std::size_t n = 0;
    double sup_discrepancy = 0.0;  // sup over the t grid of |ICPS(A_x^{-1}(t)) - G_n(t)|
    double bound = 0.0;            // 1 / (n + 1)
    double scaled_ks = 0.0;        // sqrt(n) * sup_t |G_n(t) - t|
};

/// Compares the ideal conformalized predictive system, read through the oracle's
/// inverse at object x, with the empirical distribution function of the training PITs.
ConvergenceReport prop1_check(const ConditionalDistributionHandle& oracle, ObservationSpan data, double x,
                              double tau, std::span<const double> t_grid);

/// n equally spaced interior points (i - 1/2) / n.
std::vector<double> unit_interval_grid(std::size_t n);

}  // namespace cpcal
