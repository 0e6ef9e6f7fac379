#include "cpcal/base_predictors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>

namespace cpcal {

namespace {

// Kernel weights below exp(-46) ~ 1e-20 of the largest one are dropped.
constexpr double kernel_cutoff = 46.0;
// |u| <= 700 keeps exp(u) finite and nonzero, so exp(a) * exp(-b) never forms inf * 0.
constexpr double max_factored_exponent = 700.0;

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ArgumentError(std::string(what) + " must be positive and finite");
}

void require_training(ObservationSpan training, const char* who) {
    if (training.empty()) throw ArgumentError(std::string(who) + ": training sequence is empty");
    for (const auto& z : training) {
        if (!std::isfinite(z.x) || !std::isfinite(z.y)) {
            throw ArgumentError(std::string(who) + ": training sequence has a non-finite observation");
        }
    }
}

/// Gaussian kernel weights at object x, scaled so the nearest training object gets
/// weight 1. The 1/sqrt(2 pi) constant cancels in every ratio we form. When even the
/// nearest distance overflows, every object gets weight 1.
struct KernelWeights {
    std::vector<std::uint32_t> index;
    std::vector<double> weight;
    double total = 0.0;
};

KernelWeights kernel_weights(ObservationSpan training, double x, double g) {
    if (!std::isfinite(x)) throw ArgumentError("kernel weights: test object is not finite");
    const std::size_t n = training.size();
    std::vector<double> half_sq(n);
    double min_half_sq = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double u = (x - training[i].x) / g;
        half_sq[i] = 0.5 * u * u;
        min_half_sq = std::min(min_half_sq, half_sq[i]);
    }

    KernelWeights kw;
    if (!std::isfinite(min_half_sq)) {
        kw.index.resize(n);
        kw.weight.assign(n, 1.0);
        for (std::size_t i = 0; i < n; ++i) kw.index[i] = static_cast<std::uint32_t>(i);
        kw.total = static_cast<double>(n);
        return kw;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double excess = half_sq[i] - min_half_sq;
        if (excess > kernel_cutoff) continue;
        const double w = std::exp(-excess);
        kw.index.push_back(static_cast<std::uint32_t>(i));
        kw.weight.push_back(w);
        kw.total += w;
    }
    return kw;
}

double label_center(ObservationSpan training) {
    const auto [lo, hi] = std::minmax_element(training.begin(), training.end(),
                                              [](const Observation& a, const Observation& b) { return a.y < b.y; });
    return 0.5 * (lo->y + hi->y);
}

// ---------------------------------------------------------------------------
// Nadaraya-Watson
// ---------------------------------------------------------------------------

// Each term sigma((y - y_i) / h) is computed as 1 / (1 + exp((y_i - c)/h) * exp(-(y - c)/h))
// around the label midrange c. The label factor is computed once per training point and
// the grid factor once per label, so batched grids cost one multiply-add-divide per term.
// Terms whose exponents leave [-700, 700] use the direct sigmoid.
class NadarayaWatsonFitted final : public FittedPredictiveSystem {
public:
    NadarayaWatsonFitted(ObservationSpan training, NwParams params)
        : training_(training.begin(), training.end()), params_(params), center_(label_center(training)) {
        label_factor_.resize(training_.size());
        label_safe_.resize(training_.size());
        for (std::size_t i = 0; i < training_.size(); ++i) {
            const double u = (training_[i].y - center_) / params_.h;
            label_safe_[i] = std::abs(u) <= max_factored_exponent;
            label_factor_[i] = label_safe_[i] ? std::exp(u) : 0.0;
        }
    }

    double evaluate(double x, double y) const override {
        const KernelWeights kw = kernel_weights(training_, x, params_.g);
        const double v = -(y - center_) / params_.h;
        const bool y_safe = std::abs(v) <= max_factored_exponent;
        const double b = y_safe ? std::exp(v) : 0.0;

        double acc = 0.0;
        for (std::size_t k = 0; k < kw.index.size(); ++k) {
            const std::size_t i = kw.index[k];
            acc += term(i, kw.weight[k], y, b, y_safe);
        }
        return acc / kw.total;
    }

    void evaluate_many(double x, std::span<const double> ys, std::span<double> out) const override {
        if (out.size() != ys.size()) throw ArgumentError("evaluate_many: output span size does not match label count");
        const std::size_t m = ys.size();
        const KernelWeights kw = kernel_weights(training_, x, params_.g);

        std::vector<double> b(m);
        std::vector<char> y_safe(m);
        bool all_safe = true;
        for (std::size_t j = 0; j < m; ++j) {
            const double v = -(ys[j] - center_) / params_.h;
            y_safe[j] = std::abs(v) <= max_factored_exponent;
            b[j] = y_safe[j] ? std::exp(v) : 0.0;
            all_safe = all_safe && y_safe[j];
        }

        std::vector<double> acc(m, 0.0);
        double* const acc_p = acc.data();
        const double* const b_p = b.data();
        for (std::size_t k = 0; k < kw.index.size(); ++k) {
            const std::size_t i = kw.index[k];
            const double w = kw.weight[k];
            if (all_safe && label_safe_[i]) {
                const double a = label_factor_[i];
                for (std::size_t j = 0; j < m; ++j) acc_p[j] += w / (1.0 + a * b_p[j]);
            } else {
                for (std::size_t j = 0; j < m; ++j) acc_p[j] += term(i, w, ys[j], b_p[j], y_safe[j]);
            }
        }
        for (std::size_t j = 0; j < m; ++j) out[j] = acc[j] / kw.total;
    }

private:
    double term(std::size_t i, double w, double y, double b, bool y_safe) const {
        if (y_safe && label_safe_[i]) return w / (1.0 + label_factor_[i] * b);
        return w * sigmoid((y - training_[i].y) / params_.h);
    }

    LabeledSequence training_;
    NwParams params_;
    double center_;
    std::vector<double> label_factor_;
    std::vector<char> label_safe_;
};

// ---------------------------------------------------------------------------
// Residual conformity
// ---------------------------------------------------------------------------

class ResidualFitted final : public FittedPredictiveSystem {
public:
    ResidualFitted(ObservationSpan training, ResidualParams params)
        : training_(training.begin(), training.end()), params_(params), abs_residual_(training.size()) {
        for (std::size_t i = 0; i < training_.size(); ++i) {
            abs_residual_[i] = std::abs(training_[i].y - regression_mean(kernel_weights(training_, training_[i].x, params_.g)));
        }
    }

    double evaluate(double x, double y) const override {
        const auto [mean, scale] = location_scale(x);
        return sigmoid((y - mean) / scale);
    }

    void evaluate_many(double x, std::span<const double> ys, std::span<double> out) const override {
        if (out.size() != ys.size()) throw ArgumentError("evaluate_many: output span size does not match label count");
        const auto [mean, scale] = location_scale(x);
        for (std::size_t j = 0; j < ys.size(); ++j) out[j] = sigmoid((ys[j] - mean) / scale);
    }

private:
    double regression_mean(const KernelWeights& kw) const {
        double acc = 0.0;
        for (std::size_t k = 0; k < kw.index.size(); ++k) acc += kw.weight[k] * training_[kw.index[k]].y;
        return acc / kw.total;
    }

    std::pair<double, double> location_scale(double x) const {
        const KernelWeights kw = kernel_weights(training_, x, params_.g);
        double spread = 0.0;
        for (std::size_t k = 0; k < kw.index.size(); ++k) spread += kw.weight[k] * abs_residual_[kw.index[k]];
        spread /= kw.total;
        return {regression_mean(kw), std::max(spread, params_.sigma_floor)};
    }

    LabeledSequence training_;
    ResidualParams params_;
    std::vector<double> abs_residual_;
};

class DempsterHillFitted final : public FittedPredictiveSystem {
public:
    double evaluate(double, double y) const override { return sigmoid(y); }
};

class ConditionalFitted final : public FittedPredictiveSystem {
public:
    explicit ConditionalFitted(ConditionalDistributionHandle dist) : dist_(std::move(dist)) {}
    double evaluate(double x, double y) const override { return dist_->cdf(x, y); }

private:
    ConditionalDistributionHandle dist_;
};

}  // namespace

// ---------------------------------------------------------------------------
// Point evaluators
// ---------------------------------------------------------------------------

double nw_evaluate(ObservationSpan training, double x, double y, const NwParams& params) {
    return NadarayaWatsonSystem(params).fit(training)->evaluate(x, y);
}

double residual_conformity(ObservationSpan training, double x, double y, const ResidualParams& params) {
    return ResidualConformitySystem(params).fit(training)->evaluate(x, y);
}

double oracle_cdf(double x, double y, const OracleParams& params) {
    return ToyOracle(params).cdf(x, y);
}

double miscalibrated_cdf(double x, double y, const ProbabilityMap& phi, const OracleParams& params) {
    return MiscalibratedOracle(phi, params).cdf(x, y);
}

double dempster_hill_conformity(ObservationSpan, double, double y) {
    return sigmoid(y);
}

double square_map(double u) noexcept {
    return u * u;
}

void require_probability_map(const ProbabilityMap& phi) {
    if (!phi) throw ContractViolation("probability map is empty");
    constexpr int probes = 1000;
    if (std::abs(phi(0.0)) > 1e-12 || std::abs(phi(1.0) - 1.0) > 1e-12) {
        throw ContractViolation("probability map must satisfy phi(0) = 0 and phi(1) = 1");
    }
    double prev = phi(0.0);
    for (int i = 1; i <= probes; ++i) {
        const double u = static_cast<double>(i) / probes;
        const double v = phi(u);
        if (!(v > prev)) {
            std::ostringstream msg;
            msg << "probability map is not strictly increasing near u=" << u;
            throw ContractViolation(msg.str());
        }
        prev = v;
    }
}

// ---------------------------------------------------------------------------
// Predictive systems
// ---------------------------------------------------------------------------

NadarayaWatsonSystem::NadarayaWatsonSystem(NwParams params) : params_(params) {
    require_positive(params.g, "Nadaraya-Watson bandwidth g");
    require_positive(params.h, "Nadaraya-Watson bandwidth h");
}

std::string NadarayaWatsonSystem::name() const {
    std::ostringstream s;
    s << "nadaraya-watson(g=" << params_.g << ",h=" << params_.h << ")";
    return s.str();
}

std::unique_ptr<const FittedPredictiveSystem> NadarayaWatsonSystem::fit(ObservationSpan training) const {
    require_training(training, "nadaraya-watson");
    return std::make_unique<NadarayaWatsonFitted>(training, params_);
}

ResidualConformitySystem::ResidualConformitySystem(ResidualParams params) : params_(params) {
    require_positive(params.g, "residual conformity bandwidth g");
    require_positive(params.sigma_floor, "residual conformity sigma_floor");
}

std::string ResidualConformitySystem::name() const {
    std::ostringstream s;
    s << "residual(g=" << params_.g << ")";
    return s.str();
}

std::unique_ptr<const FittedPredictiveSystem> ResidualConformitySystem::fit(ObservationSpan training) const {
    require_training(training, "residual conformity");
    return std::make_unique<ResidualFitted>(training, params_);
}

std::unique_ptr<const FittedPredictiveSystem> DempsterHillSystem::fit(ObservationSpan) const {
    return std::make_unique<DempsterHillFitted>();
}

ToyOracle::ToyOracle(OracleParams params) : params_(params) {
    require_positive(params.sigma_floor, "oracle sigma_floor");
    if (!(params.noise_factor >= 0.0)) throw ArgumentError("oracle noise_factor must be nonnegative");
}

double ToyOracle::scale(double x) const noexcept {
    return std::max(params_.noise_factor * std::abs(x), params_.sigma_floor);
}

double ToyOracle::cdf(double x, double y) const {
    return normal_cdf((y - params_.slope * x) / scale(x));
}

double ToyOracle::quantile(double x, double t) const {
    return params_.slope * x + scale(x) * normal_quantile(t);
}

MiscalibratedOracle::MiscalibratedOracle(ProbabilityMap phi, OracleParams params)
    : phi_(std::move(phi)), oracle_(params) {
    require_probability_map(phi_);
}

double MiscalibratedOracle::cdf(double x, double y) const {
    return phi_(oracle_.cdf(x, y));
}

ConditionalSystem::ConditionalSystem(std::string name, ConditionalDistributionHandle dist)
    : name_(std::move(name)), dist_(std::move(dist)) {
    if (!dist_) throw ArgumentError("ConditionalSystem: null distribution");
}

std::unique_ptr<const FittedPredictiveSystem> ConditionalSystem::fit(ObservationSpan) const {
    return std::make_unique<ConditionalFitted>(dist_);
}

PredictiveSystemHandle make_nadaraya_watson(NwParams params) {
    return std::make_shared<NadarayaWatsonSystem>(params);
}

PredictiveSystemHandle make_residual_conformity(ResidualParams params) {
    return std::make_shared<ResidualConformitySystem>(params);
}

PredictiveSystemHandle make_dempster_hill() {
    return std::make_shared<DempsterHillSystem>();
}

PredictiveSystemHandle make_oracle_system(OracleParams params) {
    return std::make_shared<ConditionalSystem>("oracle", std::make_shared<ToyOracle>(params));
}

PredictiveSystemHandle make_miscalibrated_system(ProbabilityMap phi, OracleParams params) {
    return std::make_shared<ConditionalSystem>("miscalibrated-oracle",
                                               std::make_shared<MiscalibratedOracle>(std::move(phi), params));
}

}  // namespace cpcal
