#pragma once

#include "cpcal/core.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cpcal {

/// Training sequence z_1..z_n split at m: z_1..z_m is the training sequence proper,
/// z_{m+1}..z_n the calibration sequence. m == n gives an empty calibration sequence,
/// for which every calibrator output is the constant tau.
struct SplitSpec {
    std::size_t m = 0;
};

/// Assignment of training indices to K >= 2 nonempty folds.
struct FoldSpec {
    std::size_t folds = 0;
    std::vector<std::size_t> assignment;  // fold id of each training index

    /// Contiguous blocks of near-equal size, in index order.
    static FoldSpec contiguous(std::size_t n, std::size_t folds);
};

/// Exact piecewise form of a split-conformal predictive distribution.
///
/// scores are the distinct calibration scores in increasing order with their
/// multiplicities in counts; lower[j] = sup{y : A(y) < scores[j]} and
/// upper[j] = inf{y : A(y) > scores[j]}, with
/// lower[0] <= upper[0] <= lower[1] <= ... <= upper[k-1].
struct StepDistribution {
    std::vector<double> scores;
    std::vector<std::size_t> counts;
    std::vector<double> lower;
    std::vector<double> upper;
    std::size_t total = 0;  // size of the calibration sequence
    std::vector<std::string> warnings;

    std::size_t steps() const noexcept { return scores.size(); }
};

/// Sorted multiset of calibration conformity scores.
class ConformityScores {
public:
    ConformityScores() = default;
    explicit ConformityScores(std::vector<double> scores);

    std::size_t size() const noexcept { return sorted_.size(); }
    std::span<const double> sorted() const noexcept { return sorted_; }

    /// (#{a < s}, #{a == s}); equality is exact floating-point equality.
    std::pair<std::size_t, std::size_t> rank(double score) const;

    /// Randomized conformal p-value of a test score.
    double pvalue(double score, double tau) const;

    void insert(double score);

private:
    std::vector<double> sorted_;
};

/// ( #{i: a_i < s} + tau * #{i: a_i == s} + tau ) / (size + 1), by direct counting.
/// Throws ArgumentError for tau outside [0,1].
double scps_pvalue(std::span<const double> calib_scores, double test_score, double tau);

void require_tau(double tau);

/// Split-conformal calibrator: base trained once on the training sequence proper,
/// calibration scores computed once, any number of test objects afterwards.
class SplitConformalCalibrator {
public:
    SplitConformalCalibrator(PredictiveSystemHandle base, ObservationSpan training, SplitSpec split);

    double evaluate(double x, double y, double tau) const;

    DistributionEvaluation evaluate_grid(double x, double tau, std::span<const double> grid) const;

    /// Same as evaluate_grid, reusing base values already computed on `grid`.
    DistributionEvaluation calibrate_values(std::span<const double> grid, std::span<const double> base_values,
                                            double tau) const;

    /// Step form of the predictive distribution for object x. Thresholds that fall
    /// outside [y_lo, y_hi] are clamped to the bracket and reported in `warnings`.
    StepDistribution exact(double x, double y_lo, double y_hi, double tol = default_bisect_tolerance) const;

    double score(double x, double y) const;

    /// Base trained on the training sequence proper; null when there is no calibration sequence.
    const FittedPredictiveSystem* fitted_base() const noexcept { return fitted_.get(); }

    const ConformityScores& calibration_scores() const noexcept { return scores_; }
    std::size_t calibration_size() const noexcept { return scores_.size(); }

private:
    PredictiveSystemHandle base_;
    std::unique_ptr<const FittedPredictiveSystem> fitted_;
    ConformityScores scores_;
};

/// Bracket [min - 10 r, max + 10 r] around the labels, r the label range (1 if zero).
std::pair<double, double> default_label_bracket(ObservationSpan training);

DistributionEvaluation scps_grid(const PredictiveSystemHandle& base, ObservationSpan training, SplitSpec split,
                                 double x, double tau, std::span<const double> grid);

StepDistribution scps_exact(const PredictiveSystemHandle& base, ObservationSpan training, SplitSpec split,
                            double x, double y_lo, double y_hi);

/// Value range over tau at label y. At the finitely many thresholds the interval is
/// the union of the intervals immediately left and right of y.
TauInterval step_distribution_interval(const StepDistribution& dist, double y);

double step_distribution_evaluate(const StepDistribution& dist, double y, double tau);

/// Cross-conformal calibrator: one split-conformal calibrator per fold, counts pooled
/// over folds and normalized by n + 1.
class CrossConformalCalibrator {
public:
    CrossConformalCalibrator(PredictiveSystemHandle base, ObservationSpan training, FoldSpec folds);

    double evaluate(double x, double y, double tau) const;
    DistributionEvaluation evaluate_grid(double x, double tau, std::span<const double> grid) const;

    std::size_t folds() const noexcept { return fitted_.size(); }

private:
    PredictiveSystemHandle base_;
    std::vector<std::unique_ptr<const FittedPredictiveSystem>> fitted_;
    std::vector<ConformityScores> scores_;
    std::size_t n_ = 0;
};

double ccps_evaluate(const PredictiveSystemHandle& base, ObservationSpan training, const FoldSpec& folds, double x,
                     double y, double tau);

/// Ideal conformalized predictive system: the true conditional distribution function
/// as conformity measure and the whole training sequence as calibration sequence.
class IdealConformalCalibrator {
public:
    IdealConformalCalibrator(ConditionalDistributionHandle oracle, ObservationSpan training);

    double evaluate(double x, double y, double tau) const;

    /// Probability integral transforms A(x_i, y_i) of the training sequence, sorted.
    const ConformityScores& pits() const noexcept { return pits_; }
    const ConditionalDistribution& oracle() const noexcept { return *oracle_; }

private:
    ConditionalDistributionHandle oracle_;
    ConformityScores pits_;
};

double icps_evaluate(const ConditionalDistribution& oracle, ObservationSpan training, double x, double y, double tau);

}  // namespace cpcal
