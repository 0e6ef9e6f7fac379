#include "cpcal/calibrators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cpcal {

namespace {

double conformal_fraction(std::size_t below, std::size_t equal, std::size_t size, double tau) {
    return (static_cast<double>(below) + tau * static_cast<double>(equal) + tau) / static_cast<double>(size + 1);
}

void validate_folds(const FoldSpec& folds, std::size_t n) {
    if (folds.folds < 2) throw ArgumentError("cross-conformal calibration needs at least two folds");
    if (folds.assignment.size() != n) throw ArgumentError("fold assignment length does not match training size");
    std::vector<std::size_t> sizes(folds.folds, 0);
    for (std::size_t id : folds.assignment) {
        if (id >= folds.folds) throw ArgumentError("fold assignment refers to a fold id >= K");
        ++sizes[id];
    }
    for (std::size_t k = 0; k < folds.folds; ++k) {
        if (sizes[k] == 0) throw ArgumentError("fold " + std::to_string(k) + " is empty");
    }
}

}  // namespace

FoldSpec FoldSpec::contiguous(std::size_t n, std::size_t folds) {
    if (folds < 2) throw ArgumentError("FoldSpec: need at least two folds");
    if (folds > n) throw ArgumentError("FoldSpec: more folds than observations");
    FoldSpec spec{folds, std::vector<std::size_t>(n)};
    for (std::size_t i = 0; i < n; ++i) spec.assignment[i] = i * folds / n;
    return spec;
}

void require_tau(double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) {
        std::ostringstream msg;
        msg << "tau must lie in [0,1], got " << tau;
        throw ArgumentError(msg.str());
    }
}

// ---------------------------------------------------------------------------
// ConformityScores
// ---------------------------------------------------------------------------

ConformityScores::ConformityScores(std::vector<double> scores) : sorted_(std::move(scores)) {
    for (double s : sorted_) {
        if (std::isnan(s)) throw ContractViolation("conformity score is NaN");
    }
    std::sort(sorted_.begin(), sorted_.end());
}

std::pair<std::size_t, std::size_t> ConformityScores::rank(double score) const {
    const auto [first, last] = std::equal_range(sorted_.begin(), sorted_.end(), score);
    return {static_cast<std::size_t>(first - sorted_.begin()), static_cast<std::size_t>(last - first)};
}

double ConformityScores::pvalue(double score, double tau) const {
    const auto [below, equal] = rank(score);
    return conformal_fraction(below, equal, sorted_.size(), tau);
}

void ConformityScores::insert(double score) {
    if (std::isnan(score)) throw ContractViolation("conformity score is NaN");
    sorted_.insert(std::upper_bound(sorted_.begin(), sorted_.end(), score), score);
}

double scps_pvalue(std::span<const double> calib_scores, double test_score, double tau) {
    require_tau(tau);
    std::size_t below = 0;
    std::size_t equal = 0;
    for (double a : calib_scores) {
        if (a < test_score) {
            ++below;
        } else if (a == test_score) {
            ++equal;
        }
    }
    return conformal_fraction(below, equal, calib_scores.size(), tau);
}

// ---------------------------------------------------------------------------
// Split-conformal
// ---------------------------------------------------------------------------

SplitConformalCalibrator::SplitConformalCalibrator(PredictiveSystemHandle base, ObservationSpan training,
                                                   SplitSpec split)
    : base_(std::move(base)) {
    if (!base_) throw ArgumentError("split-conformal calibrator: null base predictive system");
    if (split.m > training.size()) throw ArgumentError("split-conformal calibrator: m exceeds training size");
    if (split.m == training.size()) return;  // no calibration data: output is tau

    fitted_ = base_->fit(training.first(split.m));
    const auto calibration = training.subspan(split.m);
    std::vector<double> scores(calibration.size());
    for (std::size_t i = 0; i < calibration.size(); ++i) {
        scores[i] = fitted_->evaluate(calibration[i].x, calibration[i].y);
    }
    scores_ = ConformityScores(std::move(scores));
}

double SplitConformalCalibrator::score(double x, double y) const {
    if (!fitted_) throw ArgumentError("split-conformal calibrator has no calibration sequence");
    return fitted_->evaluate(x, y);
}

double SplitConformalCalibrator::evaluate(double x, double y, double tau) const {
    require_tau(tau);
    if (!fitted_) return tau;
    return scores_.pvalue(fitted_->evaluate(x, y), tau);
}

DistributionEvaluation SplitConformalCalibrator::calibrate_values(std::span<const double> grid,
                                                                  std::span<const double> base_values,
                                                                  double tau) const {
    require_tau(tau);
    if (grid.size() != base_values.size()) throw ArgumentError("calibrate_values: size mismatch");
    DistributionEvaluation dist;
    dist.grid.assign(grid.begin(), grid.end());
    dist.values.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        dist.values[i] = fitted_ ? scores_.pvalue(base_values[i], tau) : tau;
    }
    return dist;
}

DistributionEvaluation SplitConformalCalibrator::evaluate_grid(double x, double tau,
                                                               std::span<const double> grid) const {
    require_tau(tau);
    require_strictly_increasing(grid, "split-conformal grid");
    std::vector<double> base_values(grid.size(), 0.0);
    if (fitted_) {
        fitted_->evaluate_many(x, grid, base_values);
        DistributionEvaluation base{std::vector<double>(grid.begin(), grid.end()), base_values};
        check_distribution(base, base_->name());
    }
    return calibrate_values(grid, base_values, tau);
}

StepDistribution SplitConformalCalibrator::exact(double x, double y_lo, double y_hi, double tol) const {
    if (!fitted_) throw ArgumentError("exact split-conformal distribution needs a nonempty calibration sequence");
    if (!(y_lo < y_hi)) throw ArgumentError("exact split-conformal distribution: need y_lo < y_hi");

    StepDistribution dist;
    dist.total = scores_.size();
    const auto sorted = scores_.sorted();
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        dist.scores.push_back(sorted[i]);
        dist.counts.push_back(j - i);
        i = j;
    }

    const auto f = [&](double y) { return fitted_->evaluate(x, y); };
    const double f_lo = f(y_lo);
    const double f_hi = f(y_hi);
    auto warn = [&](const char* which, std::size_t j, double edge) {
        std::ostringstream msg;
        msg << which << "[" << j << "] for score " << dist.scores[j] << " clamped to bracket edge " << edge;
        dist.warnings.push_back(msg.str());
    };

    for (std::size_t j = 0; j < dist.scores.size(); ++j) {
        const double p = dist.scores[j];
        double lower;
        if (f_lo >= p) {
            lower = y_lo;
            warn("lower", j, y_lo);
        } else if (f_hi < p) {
            lower = y_hi;
            warn("lower", j, y_hi);
        } else {
            lower = bisect_monotone(f, p, y_lo, y_hi, BisectMode::last_below, tol);
        }

        double upper;
        if (f_hi <= p) {
            upper = y_hi;
            warn("upper", j, y_hi);
        } else if (f_lo > p) {
            upper = y_lo;
            warn("upper", j, y_lo);
        } else {
            upper = bisect_monotone(f, p, y_lo, y_hi, BisectMode::first_above, tol);
        }
        dist.lower.push_back(lower);
        dist.upper.push_back(upper);
    }

    // Bisection places each threshold within tol/2 of the truth; restore the
    // ordering lower[0] <= upper[0] <= lower[1] <= ... that the exact values satisfy.
    for (std::size_t j = 0; j < dist.scores.size(); ++j) {
        if (j > 0) dist.lower[j] = std::max(dist.lower[j], dist.upper[j - 1]);
        dist.upper[j] = std::max(dist.upper[j], dist.lower[j]);
    }
    return dist;
}

std::pair<double, double> default_label_bracket(ObservationSpan training) {
    if (training.empty()) throw ArgumentError("default_label_bracket: empty training sequence");
    const auto [lo, hi] = std::minmax_element(training.begin(), training.end(),
                                              [](const Observation& a, const Observation& b) { return a.y < b.y; });
    double range = hi->y - lo->y;
    if (!(range > 0.0)) range = 1.0;
    return {lo->y - 10.0 * range, hi->y + 10.0 * range};
}

DistributionEvaluation scps_grid(const PredictiveSystemHandle& base, ObservationSpan training, SplitSpec split,
                                 double x, double tau, std::span<const double> grid) {
    return SplitConformalCalibrator(base, training, split).evaluate_grid(x, tau, grid);
}

StepDistribution scps_exact(const PredictiveSystemHandle& base, ObservationSpan training, SplitSpec split,
                            double x, double y_lo, double y_hi) {
    return SplitConformalCalibrator(base, training, split).exact(x, y_lo, y_hi);
}

namespace {

// Value on the open region identified by (passed, entered): `passed` steps lie fully
// left (upper < y), `entered` steps have started (lower < y). entered - passed is 0
// between steps and 1 inside step `passed`.
double step_value(const StepDistribution& dist, std::size_t passed, std::size_t entered, double tau) {
    std::size_t cumulative = 0;
    for (std::size_t j = 0; j < passed; ++j) cumulative += dist.counts[j];
    if (entered == passed) return conformal_fraction(cumulative, 0, dist.total, tau);
    return conformal_fraction(cumulative, dist.counts[passed], dist.total, tau);
}

}  // namespace

TauInterval step_distribution_interval(const StepDistribution& dist, double y) {
    const auto count_below = [y](const std::vector<double>& v) {
        return static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), y) - v.begin());
    };
    const auto count_at_or_below = [y](const std::vector<double>& v) {
        return static_cast<std::size_t>(std::upper_bound(v.begin(), v.end(), y) - v.begin());
    };
    const std::size_t passed_left = count_below(dist.upper);
    const std::size_t entered_left = count_below(dist.lower);
    const std::size_t passed_right = count_at_or_below(dist.upper);
    const std::size_t entered_right = count_at_or_below(dist.lower);
    return {step_value(dist, passed_left, entered_left, 0.0), step_value(dist, passed_right, entered_right, 1.0)};
}

double step_distribution_evaluate(const StepDistribution& dist, double y, double tau) {
    require_tau(tau);
    if (dist.scores.empty()) return tau / static_cast<double>(dist.total + 1);
    const std::size_t passed = static_cast<std::size_t>(
        std::lower_bound(dist.upper.begin(), dist.upper.end(), y) - dist.upper.begin());
    const std::size_t entered = static_cast<std::size_t>(
        std::lower_bound(dist.lower.begin(), dist.lower.end(), y) - dist.lower.begin());
    const bool on_threshold = std::binary_search(dist.upper.begin(), dist.upper.end(), y) ||
                              std::binary_search(dist.lower.begin(), dist.lower.end(), y);
    if (!on_threshold) return step_value(dist, passed, entered, tau);
    return step_distribution_interval(dist, y).at(tau);
}

// ---------------------------------------------------------------------------
// Cross-conformal
// ---------------------------------------------------------------------------

CrossConformalCalibrator::CrossConformalCalibrator(PredictiveSystemHandle base, ObservationSpan training,
                                                   FoldSpec folds)
    : base_(std::move(base)), n_(training.size()) {
    if (!base_) throw ArgumentError("cross-conformal calibrator: null base predictive system");
    validate_folds(folds, training.size());
    for (std::size_t k = 0; k < folds.folds; ++k) {
        LabeledSequence rest;
        LabeledSequence held_out;
        for (std::size_t i = 0; i < training.size(); ++i) {
            (folds.assignment[i] == k ? held_out : rest).push_back(training[i]);
        }
        auto fitted = base_->fit(rest);
        std::vector<double> scores(held_out.size());
        for (std::size_t i = 0; i < held_out.size(); ++i) scores[i] = fitted->evaluate(held_out[i].x, held_out[i].y);
        scores_.emplace_back(std::move(scores));
        fitted_.push_back(std::move(fitted));
    }
}

double CrossConformalCalibrator::evaluate(double x, double y, double tau) const {
    require_tau(tau);
    std::size_t below = 0;
    std::size_t equal = 0;
    for (std::size_t k = 0; k < fitted_.size(); ++k) {
        const auto [b, e] = scores_[k].rank(fitted_[k]->evaluate(x, y));
        below += b;
        equal += e;
    }
    return conformal_fraction(below, equal, n_, tau);
}

DistributionEvaluation CrossConformalCalibrator::evaluate_grid(double x, double tau,
                                                               std::span<const double> grid) const {
    require_tau(tau);
    require_strictly_increasing(grid, "cross-conformal grid");
    std::vector<std::size_t> below(grid.size(), 0);
    std::vector<std::size_t> equal(grid.size(), 0);
    std::vector<double> base_values(grid.size());
    for (std::size_t k = 0; k < fitted_.size(); ++k) {
        fitted_[k]->evaluate_many(x, grid, base_values);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const auto [b, e] = scores_[k].rank(base_values[i]);
            below[i] += b;
            equal[i] += e;
        }
    }
    DistributionEvaluation dist{std::vector<double>(grid.begin(), grid.end()), std::vector<double>(grid.size())};
    for (std::size_t i = 0; i < grid.size(); ++i) dist.values[i] = conformal_fraction(below[i], equal[i], n_, tau);
    return dist;
}

double ccps_evaluate(const PredictiveSystemHandle& base, ObservationSpan training, const FoldSpec& folds, double x,
                     double y, double tau) {
    return CrossConformalCalibrator(base, training, folds).evaluate(x, y, tau);
}

// ---------------------------------------------------------------------------
// Ideal conformalized predictive system
// ---------------------------------------------------------------------------

IdealConformalCalibrator::IdealConformalCalibrator(ConditionalDistributionHandle oracle, ObservationSpan training)
    : oracle_(std::move(oracle)) {
    if (!oracle_) throw ArgumentError("ideal conformal calibrator: null oracle");
    std::vector<double> pits(training.size());
    for (std::size_t i = 0; i < training.size(); ++i) pits[i] = oracle_->cdf(training[i].x, training[i].y);
    pits_ = ConformityScores(std::move(pits));
}

double IdealConformalCalibrator::evaluate(double x, double y, double tau) const {
    require_tau(tau);
    return pits_.pvalue(oracle_->cdf(x, y), tau);
}

double icps_evaluate(const ConditionalDistribution& oracle, ObservationSpan training, double x, double y,
                     double tau) {
    require_tau(tau);
    const double test = oracle.cdf(x, y);
    std::size_t below = 0;
    std::size_t equal = 0;
    for (const auto& z : training) {
        const double pit = oracle.cdf(z.x, z.y);
        if (pit < test) {
            ++below;
        } else if (pit == test) {
            ++equal;
        }
    }
    return conformal_fraction(below, equal, training.size(), tau);
}

}  // namespace cpcal
