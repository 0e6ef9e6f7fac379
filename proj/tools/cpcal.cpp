// Experiment driver: dataset generation and the calibration experiments, emitting
// CSV datasets and JSON reports.

#include "cpcal/experiments.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

enum ExitCode : int { ok = 0, config_error = 1, io_error = 2, contract_violation = 3 };

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty() || out_path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + out_path + "' for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("write to '" + out_path + "' failed");
}

void emit_json(const nlohmann::json& report, const std::string& out_path) {
    emit(report.dump(2) + "\n", out_path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conformal calibration of predictive systems: datasets and experiments"};
    app.require_subcommand(1);
    // --h is a bandwidth, so help is long-form only.
    app.set_help_flag("--help", "Print this help message and exit");

    std::string out_path;
    std::uint64_t seed = 0;
    std::string tau_mode = "random";
    std::string drift = "iid-uniform";
    cpcal::GridConfig grid;
    unsigned threads = 0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--seed", seed, "Experiment seed");
        cmd->add_option("--out", out_path, "Output file (default: stdout)");
    };
    auto add_grid = [&](CLI::App* cmd) {
        cmd->add_option("--grid-lo", grid.lo, "Lower end of the label grid");
        cmd->add_option("--grid-hi", grid.hi, "Upper end of the label grid");
        cmd->add_option("--grid-points", grid.points, "Number of label grid points");
    };

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a toy dataset as CSV");
    add_common(gen);
    std::size_t gen_n = 1000;
    gen->add_option("--n", gen_n, "Number of observations");
    gen->add_option("--drift", drift, "Object law: iid-uniform | deterministic-drift");

    // heatmap
    cpcal::HeatmapConfig heat;
    auto* heatmap = app.add_subcommand("heatmap", "CRPS of Nadaraya-Watson vs its split-conformal calibration over (g, h)");
    add_common(heatmap);
    add_grid(heatmap);
    heatmap->add_option("--n-train", heat.n_train_proper, "Size of the training sequence proper");
    heatmap->add_option("--n-calib", heat.n_calib, "Size of the calibration sequence");
    heatmap->add_option("--n-test", heat.n_test, "Number of test observations");
    heatmap->add_option("--g", heat.g_values, "Object bandwidths (comma separated)")->delimiter(',');
    heatmap->add_option("--h", heat.h_values, "Label bandwidths (comma separated)")->delimiter(',');
    heatmap->add_option("--tau-mode", tau_mode, "random | fixed-0.5");
    heatmap->add_option("--folds", heat.folds, "Also report a K-fold cross-conformal calibration (K >= 2)");
    heatmap->add_option("--threads", threads, "Worker threads (0 = all cores)");

    // prop1
    cpcal::Prop1Config prop;
    auto* prop1 = app.add_subcommand("prop1", "Ideal conformalized system vs empirical PIT distribution");
    add_common(prop1);
    prop1->add_option("--n", prop.n_list, "Sample sizes (comma separated)")->delimiter(',');
    prop1->add_option("--replications", prop.replications, "Replications per sample size");
    prop1->add_option("--tau", prop.taus, "Tau values (comma separated)")->delimiter(',');
    prop1->add_option("--t-points", prop.t_points, "Size of the t grid in (0,1)");
    prop1->add_option("--threads", threads, "Worker threads (0 = all cores)");

    // semionline
    cpcal::SemiOnlineConfig semi;
    std::string base = "nw";
    auto* semionline = app.add_subcommand("semionline", "Semi-online split-conformal PITs and their KS test");
    add_common(semionline);
    semionline->add_option("--n-train", semi.n_train, "Size of the training sequence proper");
    semionline->add_option("--n-calib", semi.n_calib, "Initial size of the calibration sequence");
    semionline->add_option("--n-test", semi.n_test, "Number of sequential test observations");
    semionline->add_option("--g", semi.nw.g, "Object bandwidth of the base system");
    semionline->add_option("--h", semi.nw.h, "Label bandwidth of the base system");
    semionline->add_option("--base", base, "nw | residual | oracle | miscalibrated | dempster-hill");
    semionline->add_option("--drift", drift, "Object law: iid-uniform | deterministic-drift");
    semionline->add_option("--tau-mode", tau_mode, "random | fixed-0.5");

    // demo-noniid
    cpcal::NonIidConfig demo;
    std::string demo_drift = "deterministic-drift";
    auto* noniid = app.add_subcommand("demo-noniid", "Conformalizing a miscalibrated oracle on non-IID objects");
    add_common(noniid);
    add_grid(noniid);
    noniid->add_option("--n-calib", demo.n_calib_list, "Calibration sizes (comma separated)")->delimiter(',');
    noniid->add_option("--n-test", demo.n_test, "Number of test observations");
    noniid->add_option("--drift", demo_drift, "Object law: iid-uniform | deterministic-drift");
    noniid->add_option("--tau-mode", tau_mode, "random | fixed-0.5");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ExitCode::ok : ExitCode::config_error;
    }

    try {
        if (gen->parsed()) {
            const auto data = cpcal::gen_toy({gen_n, seed, 2.0, cpcal::parse_object_law(drift)});
            std::ostringstream csv;
            cpcal::write_dataset_csv(csv, data);
            emit(csv.str(), out_path);
        } else if (heatmap->parsed()) {
            heat.seed = seed;
            heat.grid = grid;
            heat.tau_mode = cpcal::parse_tau_mode(tau_mode);
            heat.threads = threads;
            emit_json(cpcal::heatmap_report(heat, cpcal::run_heatmap(heat)), out_path);
        } else if (prop1->parsed()) {
            prop.seed = seed;
            prop.threads = threads;
            emit_json(cpcal::prop1_report(prop, cpcal::run_prop1(prop)), out_path);
        } else if (semionline->parsed()) {
            semi.seed = seed;
            semi.base = cpcal::parse_base_kind(base);
            semi.drift = cpcal::parse_object_law(drift);
            semi.tau_mode = cpcal::parse_tau_mode(tau_mode);
            emit_json(cpcal::semi_online_report(semi, cpcal::run_semi_online(semi)), out_path);
        } else if (noniid->parsed()) {
            demo.seed = seed;
            demo.grid = grid;
            demo.drift = cpcal::parse_object_law(demo_drift);
            demo.tau_mode = cpcal::parse_tau_mode(tau_mode);
            emit_json(cpcal::noniid_report(demo, cpcal::run_demo_noniid(demo)), out_path);
        }
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return ExitCode::io_error;
    } catch (const cpcal::ContractViolation& e) {
        std::cerr << "contract violation: " << e.what() << '\n';
        return ExitCode::contract_violation;
    } catch (const cpcal::ArgumentError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return ExitCode::config_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return ExitCode::config_error;
    }
    return ExitCode::ok;
}
