#pragma once

#include "cpcal/core.hpp"

#include <functional>

namespace cpcal {

/// Bandwidths of the Nadaraya-Watson predictive system: `g` for the Gaussian kernel
/// on objects, `h` for the logistic smoothing of labels.
struct NwParams {
    double g = 0.1;
    double h = 0.1;
};

/// Sigmoid-squashed residual conformity: sigma((y - yhat(x)) / sigmahat(x)).
struct ResidualParams {
    double g = 0.1;             // bandwidth of the regression and of the residual smoother
    double sigma_floor = 1e-3;  // lower clamp on sigmahat
};

/// Conditional law Y | X = x ~ N(slope * x, (noise_factor * |x|)^2) of the toy data,
/// with the scale clamped below by sigma_floor so the distribution function stays
/// strictly increasing at x = 0.
struct OracleParams {
    double slope = 2.0;
    double noise_factor = 0.5;
    double sigma_floor = 1e-6;
};

using ProbabilityMap = std::function<double(double)>;

// ---------------------------------------------------------------------------
// Point evaluators
// ---------------------------------------------------------------------------

double nw_evaluate(ObservationSpan training, double x, double y, const NwParams& params);

double residual_conformity(ObservationSpan training, double x, double y, const ResidualParams& params);

double oracle_cdf(double x, double y, const OracleParams& params = {});

/// phi(oracle_cdf(x, y)). `phi` is checked on a probe grid on every call; build a
/// MiscalibratedOracle once when evaluating repeatedly.
double miscalibrated_cdf(double x, double y, const ProbabilityMap& phi, const OracleParams& params = {});

/// sigma(y); ignores training and object.
double dempster_hill_conformity(ObservationSpan training, double x, double y);

/// phi(u) = u^2.
double square_map(double u) noexcept;

/// Throws ContractViolation unless phi(0) = 0, phi(1) = 1 and phi is strictly
/// increasing on a 1,001-point probe grid of [0,1].
void require_probability_map(const ProbabilityMap& phi);

// ---------------------------------------------------------------------------
// Predictive systems
// ---------------------------------------------------------------------------

class NadarayaWatsonSystem final : public PredictiveSystem {
public:
    explicit NadarayaWatsonSystem(NwParams params);

    std::string name() const override;
    std::unique_ptr<const FittedPredictiveSystem> fit(ObservationSpan training) const override;

    const NwParams& params() const noexcept { return params_; }

private:
    NwParams params_;
};

class ResidualConformitySystem final : public PredictiveSystem {
public:
    explicit ResidualConformitySystem(ResidualParams params);

    std::string name() const override;
    std::unique_ptr<const FittedPredictiveSystem> fit(ObservationSpan training) const override;

private:
    ResidualParams params_;
};

class DempsterHillSystem final : public PredictiveSystem {
public:
    std::string name() const override { return "dempster-hill"; }
    std::unique_ptr<const FittedPredictiveSystem> fit(ObservationSpan training) const override;
};

/// True conditional distribution function of the toy model.
class ToyOracle final : public ConditionalDistribution {
public:
    explicit ToyOracle(OracleParams params = {});

    double cdf(double x, double y) const override;
    double quantile(double x, double t) const override;
    double scale(double x) const noexcept;

    const OracleParams& params() const noexcept { return params_; }

private:
    OracleParams params_;
};

/// phi composed with the toy oracle: perfect resolution, distorted calibration.
class MiscalibratedOracle final : public ConditionalDistribution {
public:
    explicit MiscalibratedOracle(ProbabilityMap phi = square_map, OracleParams params = {});

    double cdf(double x, double y) const override;

private:
    ProbabilityMap phi_;
    ToyOracle oracle_;
};

/// Exposes a conditional distribution function as a predictive system that ignores
/// its training data.
class ConditionalSystem final : public PredictiveSystem {
public:
    ConditionalSystem(std::string name, ConditionalDistributionHandle dist);

    std::string name() const override { return name_; }
    std::unique_ptr<const FittedPredictiveSystem> fit(ObservationSpan training) const override;

    const ConditionalDistribution& distribution() const noexcept { return *dist_; }

private:
    std::string name_;
    ConditionalDistributionHandle dist_;
};

PredictiveSystemHandle make_nadaraya_watson(NwParams params);
PredictiveSystemHandle make_residual_conformity(ResidualParams params);
PredictiveSystemHandle make_dempster_hill();
PredictiveSystemHandle make_oracle_system(OracleParams params = {});
PredictiveSystemHandle make_miscalibrated_system(ProbabilityMap phi = square_map, OracleParams params = {});

}  // namespace cpcal
