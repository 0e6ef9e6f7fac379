#include "cpcal/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace cpcal {

namespace {

template <typename Enum>
Enum parse_enum(const std::string& text, const std::map<std::string, Enum>& names, const char* what) {
    const auto it = names.find(text);
    if (it == names.end()) throw ConfigError(std::string("unknown ") + what + " '" + text + "'");
    return it->second;
}

const std::map<std::string, TauMode> tau_mode_names{{"random", TauMode::random}, {"fixed-0.5", TauMode::fixed_half}};
const std::map<std::string, BaseKind> base_names{{"nw", BaseKind::nadaraya_watson},
                                                 {"residual", BaseKind::residual},
                                                 {"oracle", BaseKind::oracle},
                                                 {"miscalibrated", BaseKind::miscalibrated},
                                                 {"dempster-hill", BaseKind::dempster_hill}};
const std::map<std::string, ObjectLaw> law_names{{"iid-uniform", ObjectLaw::iid_uniform},
                                                 {"deterministic-drift", ObjectLaw::deterministic_drift}};

template <typename Enum>
std::string enum_name(Enum value, const std::map<std::string, Enum>& names) {
    for (const auto& [name, v] : names) {
        if (v == value) return name;
    }
    return "unknown";
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

void require_positive_values(const std::vector<double>& values, const char* what) {
    if (values.empty()) throw ConfigError(std::string(what) + " list is empty");
    for (double v : values) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(what) + " values must be positive");
    }
}

std::uint64_t replication_seed(std::uint64_t seed, std::size_t n, std::size_t replication) {
    return mix_seed(seed ^ mix_seed((static_cast<std::uint64_t>(n) << 20) ^ replication));
}

}  // namespace

TauMode parse_tau_mode(const std::string& text) { return parse_enum(text, tau_mode_names, "tau mode"); }
std::string to_string(TauMode mode) { return enum_name(mode, tau_mode_names); }
BaseKind parse_base_kind(const std::string& text) { return parse_enum(text, base_names, "base predictive system"); }
std::string to_string(BaseKind kind) { return enum_name(kind, base_names); }
ObjectLaw parse_object_law(const std::string& text) { return parse_enum(text, law_names, "object law"); }
std::string to_string(ObjectLaw law) { return enum_name(law, law_names); }

std::vector<double> GridConfig::labels() const {
    validate();
    return linspace(lo, hi, points);
}

void GridConfig::validate() const {
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) throw ConfigError("grid needs finite lo < hi");
    if (points < 2) throw ConfigError("grid needs at least two points");
}

std::vector<double> draw_taus(TauMode mode, std::uint64_t seed, std::size_t count, std::uint64_t replication) {
    if (mode == TauMode::fixed_half) return std::vector<double>(count, 0.5);
    return uniform_taus(seed, count, replication);
}

PredictiveSystemHandle make_base(BaseKind kind, const NwParams& nw) {
    switch (kind) {
        case BaseKind::nadaraya_watson: return make_nadaraya_watson(nw);
        case BaseKind::residual: return make_residual_conformity({nw.g, 1e-3});
        case BaseKind::oracle: return make_oracle_system();
        case BaseKind::miscalibrated: return make_miscalibrated_system();
        case BaseKind::dempster_hill: return make_dempster_hill();
    }
    throw ConfigError("unknown base predictive system");
}

// ---------------------------------------------------------------------------
// Heatmap
// ---------------------------------------------------------------------------

void HeatmapConfig::validate() const {
    require_positive_values(g_values, "g");
    require_positive_values(h_values, "h");
    if (n_train_proper < 1 || n_calib < 1 || n_test < 1) throw ConfigError("heatmap counts must be at least 1");
    if (folds == 1) throw ConfigError("cross-conformal calibration needs at least two folds");
    if (folds > n_train_proper + n_calib) throw ConfigError("more folds than training observations");
    grid.validate();
}

HeatmapResult run_heatmap(const HeatmapConfig& config) {
    config.validate();
    const auto grid = config.grid.labels();
    const std::size_t n_train = config.n_train_proper + config.n_calib;
    const LabeledSequence data = gen_toy({n_train + config.n_test, config.seed});
    const ObservationSpan training(data.data(), n_train);
    const ObservationSpan tests(data.data() + n_train, config.n_test);
    const auto taus = draw_taus(config.tau_mode, config.seed, config.n_test);

    for (const auto& z : tests) {
        if (z.y < grid.front() || z.y > grid.back()) {
            throw ConfigError("test label " + format_double(z.y) + " outside the evaluation grid; widen --grid-lo/--grid-hi");
        }
    }

    std::vector<std::pair<double, double>> params;
    for (double g : config.g_values) {
        for (double h : config.h_values) params.emplace_back(g, h);
    }
    std::sort(params.begin(), params.end());

    HeatmapResult result;
    result.cells.resize(params.size());
    parallel_for(
        params.size(),
        [&](std::size_t c) {
            HeatmapCell& cell = result.cells[c];
            cell.g = params[c].first;
            cell.h = params[c].second;
            const auto base = make_nadaraya_watson({cell.g, cell.h});
            const SplitConformalCalibrator calibrator(base, training, {config.n_train_proper});
            const FittedPredictiveSystem& fitted = *calibrator.fitted_base();
            std::optional<CrossConformalCalibrator> cross;
            if (config.folds >= 2) cross.emplace(base, training, FoldSpec::contiguous(n_train, config.folds));

            DistributionEvaluation raw{grid, std::vector<double>(grid.size())};
            double sum_base = 0.0;
            double sum_calibrated = 0.0;
            double sum_cross = 0.0;
            for (std::size_t i = 0; i < tests.size(); ++i) {
                fitted.evaluate_many(tests[i].x, grid, raw.values);
                check_distribution(raw, base->name());
                const CrpsScore s_base = crps(raw, tests[i].y);
                const CrpsScore s_cal = crps(calibrator.calibrate_values(grid, raw.values, taus[i]), tests[i].y);
                sum_base += s_base.value;
                sum_calibrated += s_cal.value;
                cell.width_warnings_base += s_base.width_warning;
                cell.width_warnings_calibrated += s_cal.width_warning;
                if (cross) sum_cross += crps(cross->evaluate_grid(tests[i].x, taus[i], grid), tests[i].y).value;
            }
            const double n = static_cast<double>(tests.size());
            cell.crps_base = sum_base / n;
            cell.crps_calibrated = sum_calibrated / n;
            if (cross) cell.crps_cross = sum_cross / n;
        },
        config.threads);

    std::size_t improved = 0;
    for (const auto& cell : result.cells) {
        improved += cell.crps_calibrated <= cell.crps_base;
        if (cell.width_warnings_base > 0) {
            result.warnings.push_back("g=" + format_double(cell.g) + " h=" + format_double(cell.h) + ": " +
                                      std::to_string(cell.width_warnings_base) +
                                      " base predictive distributions are not negligible at the grid edges");
        }
    }
    result.improvement_fraction = static_cast<double>(improved) / static_cast<double>(result.cells.size());
    return result;
}

// ---------------------------------------------------------------------------
// Proposition-1 bound and scaled KS
// ---------------------------------------------------------------------------

void Prop1Config::validate() const {
    if (n_list.empty()) throw ConfigError("prop1 needs at least one n");
    for (std::size_t n : n_list) {
        if (n < 1) throw ConfigError("prop1 sample sizes must be at least 1");
    }
    if (replications < 1) throw ConfigError("prop1 needs at least one replication");
    if (taus.empty()) throw ConfigError("prop1 needs at least one tau");
    for (double tau : taus) {
        if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("prop1 tau values must lie in [0,1]");
    }
    if (t_points < 1) throw ConfigError("prop1 needs a nonempty t grid");
}

std::vector<Prop1Row> run_prop1(const Prop1Config& config) {
    config.validate();
    const auto oracle = std::make_shared<ToyOracle>();
    const auto t_grid = unit_interval_grid(config.t_points);
    const double reference_median = kolmogorov_quantile(0.5);

    std::vector<Prop1Row> rows;
    for (std::size_t n : config.n_list) {
        Prop1Row row;
        row.n = n;
        row.replications = config.replications;
        row.bound = 1.0 / static_cast<double>(n + 1);
        row.kolmogorov_median = reference_median;
        row.scaled_ks.resize(config.replications);
        std::vector<std::vector<double>> discrepancies(config.replications);

        parallel_for(
            config.replications,
            [&](std::size_t r) {
                const auto data = gen_toy({n, replication_seed(config.seed, n, r)});
                RandomStream object_stream(config.seed, Stream::test_object, replication_seed(0, n, r));
                const double x = 2.0 * object_stream.uniform() - 1.0;
                for (double tau : config.taus) {
                    const auto report = prop1_check(oracle, data, x, tau, t_grid);
                    discrepancies[r].push_back(report.sup_discrepancy);
                    row.scaled_ks[r] = report.scaled_ks;
                }
            },
            config.threads);

        for (const auto& per_rep : discrepancies) {
            for (double d : per_rep) {
                row.max_sup_discrepancy = std::max(row.max_sup_discrepancy, d);
                row.violations += d > row.bound + prop1_slack;
            }
        }
        row.passed = row.violations == 0;
        row.median_scaled_ks = median(row.scaled_ks);
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Semi-online
// ---------------------------------------------------------------------------

void SemiOnlineConfig::validate() const {
    if (n_test < 1) throw ConfigError("semi-online run needs at least one test observation");
    if (base == BaseKind::nadaraya_watson || base == BaseKind::residual) {
        if (n_train < 1) throw ConfigError("a trained base needs a nonempty training sequence proper");
        if (!(nw.g > 0.0) || !(nw.h > 0.0)) throw ConfigError("bandwidths must be positive");
    }
}

SemiOnlineResult run_semi_online(const SemiOnlineConfig& config) {
    config.validate();
    const std::size_t n_train = config.n_train + config.n_calib;
    const auto data = gen_toy({n_train + config.n_test, config.seed, 2.0, config.drift});
    const ObservationSpan training(data.data(), n_train);
    const ObservationSpan tests(data.data() + n_train, config.n_test);
    const auto taus = draw_taus(config.tau_mode, config.seed, config.n_test);

    SemiOnlineResult result;
    result.pits = semi_online_pits(make_base(config.base, config.nw), training, {config.n_train}, tests, taus);
    result.ks = ks_statistic(result.pits);
    result.pvalue = kolmogorov_pvalue(result.pits.size(), result.ks);
    return result;
}

// ---------------------------------------------------------------------------
// Non-IID demonstration
// ---------------------------------------------------------------------------

void NonIidConfig::validate() const {
    if (n_calib_list.empty()) throw ConfigError("demo needs at least one calibration size");
    if (n_test < 1) throw ConfigError("demo needs at least one test observation");
    grid.validate();
}

std::vector<NonIidRow> run_demo_noniid(const NonIidConfig& config) {
    config.validate();
    const auto grid = config.grid.labels();
    const auto oracle_base = make_oracle_system();
    const auto distorted_base = make_miscalibrated_system();
    const ToyOracle oracle;
    const MiscalibratedOracle distorted;

    std::vector<NonIidRow> rows;
    for (std::size_t n_calib : config.n_calib_list) {
        const auto data = gen_toy({n_calib + config.n_test, config.seed, 2.0, config.drift});
        const ObservationSpan calibration(data.data(), n_calib);
        const ObservationSpan tests(data.data() + n_calib, config.n_test);
        const auto taus = draw_taus(config.tau_mode, config.seed, config.n_test);

        // Both bases ignore training data, so the whole calibration sequence calibrates.
        const SplitConformalCalibrator conformal(distorted_base, calibration, {0});
        const SplitConformalCalibrator conformal_oracle(oracle_base, calibration, {0});

        NonIidRow row;
        row.n_calib = n_calib;
        DistributionEvaluation dist{grid, std::vector<double>(grid.size())};
        std::vector<double> oracle_values(grid.size());
        std::vector<double> distorted_values(grid.size());
        for (std::size_t i = 0; i < tests.size(); ++i) {
            const auto& z = tests[i];
            if (z.y < grid.front() || z.y > grid.back()) {
                throw ConfigError("test label " + format_double(z.y) + " outside the evaluation grid");
            }
            for (std::size_t j = 0; j < grid.size(); ++j) {
                oracle_values[j] = oracle.cdf(z.x, grid[j]);
                distorted_values[j] = distorted.cdf(z.x, grid[j]);
            }
            dist.values = oracle_values;
            row.crps_oracle += crps(dist, z.y).value;
            dist.values = distorted_values;
            row.crps_miscalibrated += crps(dist, z.y).value;
            row.crps_conformalized += crps(conformal.calibrate_values(grid, distorted_values, taus[i]), z.y).value;
            row.crps_conformalized_oracle +=
                crps(conformal_oracle.calibrate_values(grid, oracle_values, taus[i]), z.y).value;
        }
        const double n = static_cast<double>(tests.size());
        row.crps_oracle /= n;
        row.crps_miscalibrated /= n;
        row.crps_conformalized /= n;
        row.crps_conformalized_oracle /= n;
        rows.push_back(row);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

namespace {

nlohmann::json envelope(const std::string& command, nlohmann::json config, nlohmann::json results,
                        const std::vector<std::string>& warnings) {
    return {{"command", command}, {"config", std::move(config)}, {"results", std::move(results)}, {"warnings", warnings}};
}

nlohmann::json grid_json(const GridConfig& grid) {
    return {{"lo", grid.lo}, {"hi", grid.hi}, {"points", grid.points}};
}

}  // namespace

nlohmann::json heatmap_report(const HeatmapConfig& config, const HeatmapResult& result) {
    nlohmann::json cfg = {{"g_values", config.g_values},
                          {"h_values", config.h_values},
                          {"n_train_proper", config.n_train_proper},
                          {"n_calib", config.n_calib},
                          {"n_test", config.n_test},
                          {"seed", config.seed},
                          {"grid", grid_json(config.grid)},
                          {"tau_mode", to_string(config.tau_mode)},
                          {"folds", config.folds}};
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : result.cells) {
        nlohmann::json cell = {{"g", c.g},
                               {"h", c.h},
                               {"crps_base", c.crps_base},
                               {"crps_calibrated", c.crps_calibrated},
                               {"width_warnings_base", c.width_warnings_base},
                               {"width_warnings_calibrated", c.width_warnings_calibrated}};
        if (c.crps_cross) cell["crps_cross"] = *c.crps_cross;
        cells.push_back(std::move(cell));
    }
    nlohmann::json results = {{"cells", std::move(cells)}, {"improvement_fraction", result.improvement_fraction}};
    return envelope("heatmap", std::move(cfg), std::move(results), result.warnings);
}

nlohmann::json prop1_report(const Prop1Config& config, const std::vector<Prop1Row>& rows) {
    nlohmann::json cfg = {{"n_list", config.n_list},
                          {"replications", config.replications},
                          {"seed", config.seed},
                          {"taus", config.taus},
                          {"t_points", config.t_points}};
    nlohmann::json results = nlohmann::json::array();
    std::vector<std::string> warnings;
    for (const auto& r : rows) {
        results.push_back({{"n", r.n},
                           {"replications", r.replications},
                           {"max_sup_discrepancy", r.max_sup_discrepancy},
                           {"bound", r.bound},
                           {"violations", r.violations},
                           {"passed", r.passed},
                           {"median_scaled_ks", r.median_scaled_ks},
                           {"kolmogorov_median", r.kolmogorov_median}});
        if (!r.passed) warnings.push_back("n=" + std::to_string(r.n) + ": discrepancy bound violated");
    }
    return envelope("prop1", std::move(cfg), std::move(results), warnings);
}

nlohmann::json semi_online_report(const SemiOnlineConfig& config, const SemiOnlineResult& result) {
    nlohmann::json cfg = {{"n_train", config.n_train},
                          {"n_calib", config.n_calib},
                          {"n_test", config.n_test},
                          {"seed", config.seed},
                          {"drift", to_string(config.drift)},
                          {"base", to_string(config.base)},
                          {"g", config.nw.g},
                          {"h", config.nw.h},
                          {"tau_mode", to_string(config.tau_mode)}};
    nlohmann::json results = {{"pits", result.pits.values}, {"ks", result.ks}, {"pvalue", result.pvalue}};
    return envelope("semionline", std::move(cfg), std::move(results), {});
}

nlohmann::json noniid_report(const NonIidConfig& config, const std::vector<NonIidRow>& rows) {
    nlohmann::json cfg = {{"n_calib_list", config.n_calib_list},
                          {"n_test", config.n_test},
                          {"seed", config.seed},
                          {"drift", to_string(config.drift)},
                          {"grid", grid_json(config.grid)},
                          {"tau_mode", to_string(config.tau_mode)}};
    nlohmann::json results = nlohmann::json::array();
    std::vector<std::string> warnings;
    for (const auto& r : rows) {
        results.push_back({{"n_calib", r.n_calib},
                           {"crps_oracle", r.crps_oracle},
                           {"crps_miscalibrated", r.crps_miscalibrated},
                           {"crps_conformalized", r.crps_conformalized},
                           {"crps_conformalized_oracle", r.crps_conformalized_oracle}});
        if (r.n_calib == 0) warnings.push_back("n_calib=0: conformalized output is the constant tau");
    }
    return envelope("demo-noniid", std::move(cfg), std::move(results), warnings);
}

}  // namespace cpcal
