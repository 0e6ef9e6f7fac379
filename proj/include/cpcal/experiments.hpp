#pragma once

#include "cpcal/base_predictors.hpp"
#include "cpcal/calibrators.hpp"
#include "cpcal/datagen.hpp"
#include "cpcal/evaluation.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cpcal {

/// Invalid experiment configuration (CLI exit code 1).
class ConfigError : public ArgumentError {
public:
    using ArgumentError::ArgumentError;
};

enum class TauMode {
    random,      // one uniform draw per test observation from the tau stream
    fixed_half,  // tau = 0.5 everywhere, for bit-reproducible regression runs
};

enum class BaseKind { nadaraya_watson, residual, oracle, miscalibrated, dempster_hill };

TauMode parse_tau_mode(const std::string& text);
std::string to_string(TauMode mode);
BaseKind parse_base_kind(const std::string& text);
std::string to_string(BaseKind kind);
ObjectLaw parse_object_law(const std::string& text);
std::string to_string(ObjectLaw law);

struct GridConfig {
    double lo = -5.0;
    double hi = 5.0;
    std::size_t points = 1001;

    std::vector<double> labels() const;
    void validate() const;
};

/// Per-test randomization variables for `count` predictions.
std::vector<double> draw_taus(TauMode mode, std::uint64_t seed, std::size_t count, std::uint64_t replication = 0);

// ---------------------------------------------------------------------------
// Nadaraya-Watson heatmap: raw vs split-conformal CRPS over a (g, h) grid
// ---------------------------------------------------------------------------

struct HeatmapConfig {
    std::vector<double> g_values = logspace(0.01, 1.0, 8);
    std::vector<double> h_values = logspace(0.01, 1.0, 8);
    std::size_t n_train_proper = 2000;
    std::size_t n_calib = 1000;
    std::size_t n_test = 1000;
    std::uint64_t seed = 0;
    GridConfig grid;
    TauMode tau_mode = TauMode::random;
    std::size_t folds = 0;  // >= 2 adds a cross-conformal column over proper + calibration
    unsigned threads = 0;

    void validate() const;
};

struct HeatmapCell {
    double g = 0.0;
    double h = 0.0;
    double crps_base = 0.0;
    double crps_calibrated = 0.0;
    std::optional<double> crps_cross;
    std::size_t width_warnings_base = 0;
    std::size_t width_warnings_calibrated = 0;
};

struct HeatmapResult {
    std::vector<HeatmapCell> cells;  // sorted by (g, h)
    double improvement_fraction = 0.0;
    std::vector<std::string> warnings;
};

HeatmapResult run_heatmap(const HeatmapConfig& config);

// ---------------------------------------------------------------------------
// Ideal conformalized predictive system vs empirical PIT distribution
// ---------------------------------------------------------------------------

struct Prop1Config {
    std::vector<std::size_t> n_list{10, 100, 1000};
    std::size_t replications = 50;
    std::uint64_t seed = 0;
    std::vector<double> taus{0.0, 0.5, 1.0};
    std::size_t t_points = 1024;
    unsigned threads = 0;

    void validate() const;
};

inline constexpr double prop1_slack = 1e-12;

struct Prop1Row {
    std::size_t n = 0;
    std::size_t replications = 0;
    double max_sup_discrepancy = 0.0;
    double bound = 0.0;
    std::size_t violations = 0;  // (replication, tau) runs above bound + prop1_slack
    bool passed = false;
    double median_scaled_ks = 0.0;
    double kolmogorov_median = 0.0;
    std::vector<double> scaled_ks;  // one per replication
};

std::vector<Prop1Row> run_prop1(const Prop1Config& config);

// ---------------------------------------------------------------------------
// Semi-online PIT stream
// ---------------------------------------------------------------------------

struct SemiOnlineConfig {
    std::size_t n_train = 1000;
    std::size_t n_calib = 1000;
    std::size_t n_test = 1000;
    std::uint64_t seed = 0;
    ObjectLaw drift = ObjectLaw::iid_uniform;
    BaseKind base = BaseKind::nadaraya_watson;
    NwParams nw{0.1, 0.1};
    TauMode tau_mode = TauMode::random;

    void validate() const;
};

struct SemiOnlineResult {
    PitSample pits;
    double ks = 0.0;
    double pvalue = 0.0;
};

SemiOnlineResult run_semi_online(const SemiOnlineConfig& config);

// ---------------------------------------------------------------------------
// Conformalizing a badly calibrated oracle on non-identically distributed objects
// ---------------------------------------------------------------------------

struct NonIidConfig {
    std::vector<std::size_t> n_calib_list{0, 10, 100, 1000};
    std::size_t n_test = 1000;
    std::uint64_t seed = 0;
    ObjectLaw drift = ObjectLaw::deterministic_drift;
    GridConfig grid;
    TauMode tau_mode = TauMode::random;

    void validate() const;
};

struct NonIidRow {
    std::size_t n_calib = 0;
    double crps_oracle = 0.0;
    double crps_miscalibrated = 0.0;
    double crps_conformalized = 0.0;
    double crps_conformalized_oracle = 0.0;
};

std::vector<NonIidRow> run_demo_noniid(const NonIidConfig& config);

PredictiveSystemHandle make_base(BaseKind kind, const NwParams& nw);

// ---------------------------------------------------------------------------
// JSON reports: {command, config, results, warnings}
// ---------------------------------------------------------------------------

nlohmann::json heatmap_report(const HeatmapConfig& config, const HeatmapResult& result);
nlohmann::json prop1_report(const Prop1Config& config, const std::vector<Prop1Row>& rows);
nlohmann::json semi_online_report(const SemiOnlineConfig& config, const SemiOnlineResult& result);
nlohmann::json noniid_report(const NonIidConfig& config, const std::vector<NonIidRow>& rows);

}  // namespace cpcal
