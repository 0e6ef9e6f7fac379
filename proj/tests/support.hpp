#pragma once

// Fixtures shared by the unit tests and the acceptance suite.

#include "cpcal/core.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <initializer_list>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace fixture {

/// psi(base(x, y)) for a strictly increasing psi on [0,1].
class ComposedSystem final : public cpcal::PredictiveSystem {
public:
    ComposedSystem(cpcal::PredictiveSystemHandle base, std::function<double(double)> psi)
        : base_(std::move(base)), psi_(std::move(psi)) {}

    std::string name() const override { return "composed"; }

    std::unique_ptr<const cpcal::FittedPredictiveSystem> fit(cpcal::ObservationSpan training) const override {
        struct Fitted final : cpcal::FittedPredictiveSystem {
            std::unique_ptr<const cpcal::FittedPredictiveSystem> inner;
            std::function<double(double)> psi;
            double evaluate(double x, double y) const override { return psi(inner->evaluate(x, y)); }
        };
        auto f = std::make_unique<Fitted>();
        f->inner = base_->fit(training);
        f->psi = psi_;
        return f;
    }

private:
    cpcal::PredictiveSystemHandle base_;
    std::function<double(double)> psi_;
};

/// A(x, y) = clamp(y, 0, 1): the uniform law on [0,1], so labels in [0,1] are their own PITs.
struct UniformOracle final : cpcal::ConditionalDistribution {
    double cdf(double, double y) const override { return std::clamp(y, 0.0, 1.0); }
    double quantile(double, double t) const override { return t; }
};

/// True when psi maps the distinct values of `scores` to strictly increasing doubles. A
/// strictly increasing real function can still merge neighbouring doubles (u^3 underflows
/// below about 1e-108), and then ranks, and so conformal outputs, legitimately change.
inline bool strictly_increasing_on(const std::function<double(double)>& psi, std::vector<double> scores) {
    std::sort(scores.begin(), scores.end());
    scores.erase(std::unique(scores.begin(), scores.end()), scores.end());
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (!(psi(scores[i - 1]) < psi(scores[i]))) return false;
    }
    return true;
}

inline cpcal::LabeledSequence labels_only(std::initializer_list<double> ys) {
    cpcal::LabeledSequence out;
    for (double y : ys) out.push_back({0.0, y});
    return out;
}

/// Toy-model sample from a test-local engine, independent of the library generator.
inline cpcal::LabeledSequence toy(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    cpcal::LabeledSequence out(n);
    for (auto& z : out) {
        z.x = unit(rng);
        z.y = 2.0 * z.x + 0.5 * std::abs(z.x) * normal(rng);
    }
    return out;
}

}  // namespace fixture
