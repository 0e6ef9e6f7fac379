#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cpcal {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Bad argument or violated precondition (empty training set, tau outside [0,1], ...).
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A requested value lies outside what the inputs can produce (bisection target
/// not bracketed, label outside an evaluation grid, ...).
class RangeError : public std::range_error {
public:
    using std::range_error::range_error;
};

/// A predictive system broke its own axioms (non-monotone output, value outside [0,1]).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

struct Observation {
    double x = 0.0;  // object
    double y = 0.0;  // label

    friend bool operator==(const Observation&, const Observation&) = default;
};

/// Order matters: splits into training proper / calibration follow index order.
using LabeledSequence = std::vector<Observation>;
using ObservationSpan = std::span<const Observation>;

/// A predictive distribution sampled on a strictly increasing label grid.
struct DistributionEvaluation {
    std::vector<double> grid;
    std::vector<double> values;

    std::size_t size() const noexcept { return grid.size(); }
};

/// Range of a randomized predictive distribution at one label: value at tau=0 and tau=1.
struct TauInterval {
    double lo = 0.0;
    double hi = 0.0;

    double at(double tau) const noexcept { return lo + tau * (hi - lo); }
};

/// A predictive system that has been trained on a fixed training sequence.
/// Immutable after construction, so safe to share across threads.
class FittedPredictiveSystem {
public:
    virtual ~FittedPredictiveSystem() = default;

    /// Value of the predictive distribution for test object `x` at label `y`.
    virtual double evaluate(double x, double y) const = 0;

    /// Evaluates many labels for one test object. Implementations must return
    /// exactly what repeated calls to evaluate() would.
    virtual void evaluate_many(double x, std::span<const double> ys, std::span<double> out) const;
};

/// A predictive system: maps (training sequence, test object) to a function of the
/// label that is monotonically increasing with limits 0 and 1.
class PredictiveSystem {
public:
    virtual ~PredictiveSystem() = default;

    virtual std::string name() const = 0;

    virtual std::unique_ptr<const FittedPredictiveSystem> fit(ObservationSpan training) const = 0;

    /// One-shot evaluation: fit on `training`, evaluate at (x, y).
    double operator()(ObservationSpan training, double x, double y) const;
};

using PredictiveSystemHandle = std::shared_ptr<const PredictiveSystem>;

/// A conditional distribution function A(x, y) = P(Y <= y | X = x) that needs no
/// training data, such as the true law of a synthetic data model.
class ConditionalDistribution {
public:
    virtual ~ConditionalDistribution() = default;

    virtual double cdf(double x, double y) const = 0;

    /// Label y with cdf(x, y) = t for t in (0,1). The default expands a bracket
    /// around zero and bisects; closed forms should override it.
    virtual double quantile(double x, double t) const;
};

using ConditionalDistributionHandle = std::shared_ptr<const ConditionalDistribution>;

/// Label-only evaluator, e.g. a closed-form distribution function used in tests and demos.
using LabelFunction = std::function<double(ObservationSpan training, double x, double y)>;

/// Wraps a plain callable as a predictive system. The callable must be thread-safe.
PredictiveSystemHandle make_predictive_system(std::string name, LabelFunction fn);

// ---------------------------------------------------------------------------
// Numeric utilities
// ---------------------------------------------------------------------------

double sigmoid(double u) noexcept;

/// Standard normal distribution function.
double normal_cdf(double z) noexcept;

/// Standard normal quantile; p must lie in (0,1).
double normal_quantile(double p);

enum class BisectMode {
    last_below,   // sup { y : f(y) < target }
    first_above,  // inf { y : f(y) > target }
};

inline constexpr double default_bisect_tolerance = 1e-9;
inline constexpr int bisect_iteration_cap = 200;

/// Bisection for the edges of the level set of a monotone increasing function.
///
/// For last_below the search keeps f(lo) < target <= f(hi); for first_above it keeps
/// f(lo) <= target < f(hi). When the defining set is empty inside [lo, hi] because f
/// sits exactly at `target` at the near edge (f(lo) == target for last_below,
/// f(hi) == target for first_above) that edge is returned. A plateau at `target`
/// therefore yields its left edge for last_below and its right edge for first_above.
///
/// Throws ArgumentError for tol <= 0 or lo > hi, RangeError when target is outside
/// [f(lo), f(hi)] and RangeError if the iteration cap is hit.
double bisect_monotone(const std::function<double(double)>& f, double target, double lo, double hi,
                       BisectMode mode, double tol = default_bisect_tolerance);

/// Validates a label grid: nonempty, finite, strictly increasing.
void require_strictly_increasing(std::span<const double> grid, const char* what);

/// Evenly spaced grid with `points` >= 2 nodes, endpoints included exactly.
std::vector<double> linspace(double lo, double hi, std::size_t points);

/// Log-spaced grid with `points` >= 1 nodes between positive lo and hi.
std::vector<double> logspace(double lo, double hi, std::size_t points);

/// Evaluates `ps` trained on `training` at object `x` over `grid` and checks the
/// predictive-distribution axioms (values in [0,1], monotone in the label).
/// Throws ContractViolation naming the first offending adjacent pair.
DistributionEvaluation eval_on_grid(const PredictiveSystem& ps, ObservationSpan training, double x,
                                    std::span<const double> grid);

/// Same check applied to values that were produced elsewhere.
void check_distribution(const DistributionEvaluation& dist, const std::string& who);

/// Runs fn(i) for i in [0, count) on up to `threads` workers (0 = hardware concurrency).
/// Each index is executed exactly once; the first exception thrown is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn, unsigned threads = 0);

}  // namespace cpcal
