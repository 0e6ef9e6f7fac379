#include "cpcal/core.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

namespace cpcal {

void FittedPredictiveSystem::evaluate_many(double x, std::span<const double> ys,
                                           std::span<double> out) const {
    if (out.size() != ys.size()) {
        throw ArgumentError("evaluate_many: output span size does not match label count");
    }
    for (std::size_t i = 0; i < ys.size(); ++i) {
        out[i] = evaluate(x, ys[i]);
    }
}

double PredictiveSystem::operator()(ObservationSpan training, double x, double y) const {
    return fit(training)->evaluate(x, y);
}

double ConditionalDistribution::quantile(double x, double t) const {
    if (!(t > 0.0 && t < 1.0)) throw ArgumentError("quantile: level must lie in (0,1)");
    double lo = -1.0;
    double hi = 1.0;
    for (int i = 0; cdf(x, lo) >= t; ++i) {
        if (i > 1000) throw RangeError("quantile: cannot bracket level from below");
        lo *= 2.0;
    }
    for (int i = 0; cdf(x, hi) <= t; ++i) {
        if (i > 1000) throw RangeError("quantile: cannot bracket level from above");
        hi *= 2.0;
    }
    const double tol = 1e-12 * std::max(1.0, hi - lo);
    return bisect_monotone([&](double y) { return cdf(x, y); }, t, lo, hi, BisectMode::last_below, tol);
}

namespace {

class FunctionFitted final : public FittedPredictiveSystem {
public:
    FunctionFitted(const LabelFunction& fn, ObservationSpan training)
        : fn_(fn), training_(training.begin(), training.end()) {}

    double evaluate(double x, double y) const override { return fn_(training_, x, y); }

private:
    LabelFunction fn_;
    LabeledSequence training_;
};

class FunctionSystem final : public PredictiveSystem {
public:
    FunctionSystem(std::string name, LabelFunction fn) : name_(std::move(name)), fn_(std::move(fn)) {}

    std::string name() const override { return name_; }

    std::unique_ptr<const FittedPredictiveSystem> fit(ObservationSpan training) const override {
        return std::make_unique<FunctionFitted>(fn_, training);
    }

private:
    std::string name_;
    LabelFunction fn_;
};

}  // namespace

PredictiveSystemHandle make_predictive_system(std::string name, LabelFunction fn) {
    if (!fn) throw ArgumentError("make_predictive_system: empty callable");
    return std::make_shared<FunctionSystem>(std::move(name), std::move(fn));
}

double sigmoid(double u) noexcept {
    return 1.0 / (1.0 + std::exp(-u));
}

double normal_cdf(double z) noexcept {
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw ArgumentError("normal_quantile: probability must lie in (0,1)");
    }
    return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

double bisect_monotone(const std::function<double(double)>& f, double target, double lo, double hi,
                       BisectMode mode, double tol) {
    if (!(tol > 0.0) || !std::isfinite(tol)) {
        throw ArgumentError("bisect_monotone: tolerance must be positive and finite");
    }
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) {
        throw ArgumentError("bisect_monotone: bracket must be finite with lo <= hi");
    }
    auto eval = [&f](double y) {
        const double v = f(y);
        if (std::isnan(v)) throw ContractViolation("bisect_monotone: function returned NaN");
        return v;
    };

    const double f_lo = eval(lo);
    const double f_hi = eval(hi);
    if (target < f_lo || target > f_hi) {
        std::ostringstream msg;
        msg << "bisect_monotone: target " << target << " outside [f(lo), f(hi)] = [" << f_lo << ", "
            << f_hi << "]";
        throw RangeError(msg.str());
    }

    // The defining set is empty inside the bracket.
    if (mode == BisectMode::last_below && f_lo >= target) return lo;
    if (mode == BisectMode::first_above && f_hi <= target) return hi;

    for (int iter = 0; hi - lo > tol; ++iter) {
        if (iter >= bisect_iteration_cap) {
            throw RangeError("bisect_monotone: iteration cap reached before tolerance");
        }
        const double mid = lo + 0.5 * (hi - lo);
        if (mid <= lo || mid >= hi) break;  // adjacent doubles
        const double v = eval(mid);
        const bool go_right = mode == BisectMode::last_below ? v < target : v <= target;
        if (go_right) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo + 0.5 * (hi - lo);
}

void require_strictly_increasing(std::span<const double> grid, const char* what) {
    if (grid.empty()) throw ArgumentError(std::string(what) + ": grid is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!std::isfinite(grid[i])) throw ArgumentError(std::string(what) + ": grid has a non-finite value");
        if (i > 0 && !(grid[i] > grid[i - 1])) {
            throw ArgumentError(std::string(what) + ": grid is not strictly increasing at index " +
                                std::to_string(i));
        }
    }
}

std::vector<double> linspace(double lo, double hi, std::size_t points) {
    if (points < 2) throw ArgumentError("linspace: need at least two points");
    if (!(lo < hi)) throw ArgumentError("linspace: need lo < hi");
    std::vector<double> out(points);
    const double step = (hi - lo) / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) out[i] = lo + step * static_cast<double>(i);
    out.back() = hi;
    return out;
}

std::vector<double> logspace(double lo, double hi, std::size_t points) {
    if (points == 0) throw ArgumentError("logspace: need at least one point");
    if (!(lo > 0.0) || !(hi >= lo)) throw ArgumentError("logspace: need 0 < lo <= hi");
    if (points == 1) return {lo};
    std::vector<double> out(points);
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (std::size_t i = 0; i < points; ++i) {
        out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
    }
    out.front() = lo;
    out.back() = hi;
    return out;
}

void check_distribution(const DistributionEvaluation& dist, const std::string& who) {
    if (dist.values.size() != dist.grid.size()) {
        throw ContractViolation(who + ": value count does not match grid size");
    }
    for (std::size_t i = 0; i < dist.values.size(); ++i) {
        const double v = dist.values[i];
        if (!(v >= 0.0 && v <= 1.0)) {
            std::ostringstream msg;
            msg << who << ": value " << v << " at y=" << dist.grid[i] << " (index " << i
                << ") outside [0,1]";
            throw ContractViolation(msg.str());
        }
        if (i > 0 && v < dist.values[i - 1]) {
            std::ostringstream msg;
            msg.precision(17);
            msg << who << ": not monotone between grid indices " << i - 1 << " and " << i << " (y=" << dist.grid[i - 1]
                << " -> " << dist.values[i - 1] << ", y=" << dist.grid[i] << " -> " << v << ")";
            throw ContractViolation(msg.str());
        }
    }
}

DistributionEvaluation eval_on_grid(const PredictiveSystem& ps, ObservationSpan training, double x,
                                    std::span<const double> grid) {
    require_strictly_increasing(grid, "eval_on_grid");
    DistributionEvaluation dist;
    dist.grid.assign(grid.begin(), grid.end());
    dist.values.resize(grid.size());
    ps.fit(training)->evaluate_many(x, dist.grid, dist.values);
    check_distribution(dist, ps.name());
    return dist;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn, unsigned threads) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> workers;
        workers.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) {
            workers.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (!first_error) first_error = std::current_exception();
                        next = count;
                    }
                }
            });
        }
    }
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace cpcal
