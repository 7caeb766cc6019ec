// SPDX-License-Identifier: Apache-2.0
//
// mbrec - command line front end
//
// Pipeline stages are isolated through files: `simulate` writes the channel
// tensor plus scene and truth descriptions, `estimate` reads only the
// tensor and the scene, `evaluate` joins estimates with the truth.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mbrec/io.hpp"
#include "mbrec/presets.hpp"
#include "mbrec/report.hpp"
#include "mbrec/sage.hpp"

namespace fs = std::filesystem;
using namespace mbrec;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitFormat = 3;
constexpr int kExitNumerical = 4;

std::string default_out() {
    if (const char* env = std::getenv("MBREC_OUT")) return env;
    return ".";
}

struct SimulateArgs {
    std::string preset;
    std::string config;
    std::string out = default_out();
    std::uint64_t seed = 1;
    bool no_noise = false;
};

struct EstimateArgs {
    std::string dir = default_out();
    double grid1 = 0.1;
    double grid2 = 0.2;
    int max_iters = 20;
    double tol = 1e-3;
    bool refine = false;
};

struct EvaluateArgs {
    std::string dir = default_out();
};

PresetScenario load_scenario(const SimulateArgs& a) {
    if (!a.preset.empty()) return preset_scenario(a.preset);
    PresetScenario p;
    load_scene(a.config, p.scene, p.rf, p.trace);
    return p;
}

int do_simulate(const SimulateArgs& a) {
    PresetScenario p = load_scenario(a);
    if (a.no_noise) p.rf.snr_db = std::numeric_limits<double>::infinity();

    const SimulatedScenario sim = trace_scene_paths(p.scene, p.rf, p.trace);
    if (sim.paths.empty()) {
        std::cerr << "error: no propagation path traces in this scene\n";
        return kExitNumerical;
    }
    ChannelTensor y = synthesize_channel(sim.paths, p.rf);
    NoiseInfo info;
    y = add_noise(y, p.rf.snr_db, a.seed, sim.noise_reference_power, &info);

    fs::create_directories(a.out);
    save_tensor(y, p.rf, (fs::path(a.out) / "channel.bin").string());
    save_scene(p.scene, p.rf, p.trace, (fs::path(a.out) / "scene.json").string());
    save_truth(sim.truth, (fs::path(a.out) / "truth.json").string());

    std::cout << "simulated " << sim.paths.size() << " paths, tensor " << y.M << "x"
              << y.N << "x" << y.P << ", sigma0^2 = " << info.sigma0_sq << "\n";
    return 0;
}

int do_estimate(const EstimateArgs& a) {
    RfConfig rf;
    const ChannelTensor y =
        load_tensor((fs::path(a.dir) / "channel.bin").string(), &rf);
    Scene scene;
    TraceOptions trace;
    RfConfig scene_rf;
    load_scene((fs::path(a.dir) / "scene.json").string(), scene, scene_rf, trace);
    scene_rf.sub_bandwidth = rf.sub_bandwidth;
    scene_rf.sub_band_count = rf.sub_band_count;

    SageOptions opts;
    opts.grid_one = a.grid1;
    opts.grid_two = a.grid2;
    opts.max_iters = a.max_iters;
    opts.convergence_tol = a.tol;
    opts.refine = a.refine;

    const SageState state = run_gm_sage(y, scene, scene_rf, opts);
    save_estimates(state, (fs::path(a.dir) / "estimates.json").string());
    std::cout << "estimated " << state.estimates.size() << " paths in "
              << state.iteration << " sweeps"
              << (state.converged ? " (converged)" : "") << "\n";
    return 0;
}

int do_evaluate(const EvaluateArgs& a) {
    const std::vector<PathTruth> truth =
        load_truth((fs::path(a.dir) / "truth.json").string());
    const SageState state =
        load_estimates((fs::path(a.dir) / "estimates.json").string());
    Scene scene;
    TraceOptions trace;
    RfConfig rf;
    load_scene((fs::path(a.dir) / "scene.json").string(), scene, rf, trace);

    ReportOptions ropts;
    ropts.config_echo = (fs::path(a.dir) / "scene.json").string();
    const ReconstructionReport report = build_report(truth, state, rf, ropts);
    emit_report(report, a.dir);

    if (!state.estimates.empty()) {
        const RealMatrix map = sns_amplitude_map(state.estimates, scene.rx.element_count);
        write_amplitude_map_csv(map, (fs::path(a.dir) / "amplitude_map.csv").string());
    }

    int scored = 0, correct = 0, outliers = 0;
    for (const auto& p : report.paths) {
        if (!p.scored) continue;
        ++scored;
        if (p.class_correct) ++correct;
        if (p.outlier) ++outliers;
    }
    std::cout << "report written to " << a.dir << ": " << correct << "/" << scored
              << " wall paths recovered, " << outliers << " flagged as outliers\n";
    return 0;
}

int do_export_pdp(const std::string& dir, int tx_index) {
    RfConfig rf;
    const ChannelTensor y = load_tensor((fs::path(dir) / "channel.bin").string(), &rf);
    if (tx_index < 0 || tx_index >= y.M) {
        std::cerr << "error: tx index out of range\n";
        return kExitConfig;
    }
    const RealMatrix pdp = concatenated_pdp(y, tx_index);
    write_pdp_csv(pdp, rf, (fs::path(dir) / "pdp.csv").string());
    std::cout << "pdp.csv written to " << dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-bounce channel simulator and scatterer localizer"};
    app.require_subcommand(1);

    SimulateArgs sim;
    EstimateArgs est;
    EvaluateArgs eval;
    std::string pdp_dir = default_out();
    int pdp_tx = 0;

    auto* sim_cmd = app.add_subcommand("simulate", "trace a scene and synthesize the channel tensor");
    sim_cmd->add_option("--preset", sim.preset, "built-in scenario: blocked | unblocked")
        ->check(CLI::IsMember({"blocked", "unblocked"}));
    sim_cmd->add_option("--config", sim.config, "scene JSON file")->excludes("--preset");
    sim_cmd->add_option("--seed", sim.seed, "noise RNG seed");
    sim_cmd->add_flag("--no-noise", sim.no_noise, "disable measurement noise");
    sim_cmd->add_option("--out", sim.out, "output directory (default $MBREC_OUT or .)");

    auto* est_cmd = app.add_subcommand("estimate", "run the two-stage estimator on a tensor");
    est_cmd->add_option("--out", est.dir, "run directory with channel.bin and scene.json");
    est_cmd->add_option("--grid1", est.grid1, "one-bounce wall grid step [m]")
        ->check(CLI::PositiveNumber);
    est_cmd->add_option("--grid2", est.grid2, "two-bounce wall grid step [m]")
        ->check(CLI::PositiveNumber);
    est_cmd->add_option("--max-iters", est.max_iters, "maximum refinement sweeps")
        ->check(CLI::PositiveNumber);
    est_cmd->add_option("--tol", est.tol, "relative objective convergence tolerance")
        ->check(CLI::PositiveNumber);
    est_cmd->add_flag("--refine", est.refine, "local fine-grid polish after convergence");

    auto* eval_cmd = app.add_subcommand("evaluate", "score estimates against the simulated truth");
    eval_cmd->add_option("--out", eval.dir, "run directory");

    auto* pdp_cmd = app.add_subcommand("export-pdp", "export the concatenated power delay profile");
    pdp_cmd->add_option("--out", pdp_dir, "run directory");
    pdp_cmd->add_option("--tx", pdp_tx, "tx element index (default 0)");

    auto* all_cmd = app.add_subcommand("run-all", "simulate, estimate and evaluate in one pass");
    all_cmd->add_option("--preset", sim.preset, "built-in scenario: blocked | unblocked")
        ->check(CLI::IsMember({"blocked", "unblocked"}));
    all_cmd->add_option("--config", sim.config, "scene JSON file")->excludes("--preset");
    all_cmd->add_option("--seed", sim.seed, "noise RNG seed");
    all_cmd->add_flag("--no-noise", sim.no_noise, "disable measurement noise");
    all_cmd->add_option("--out", sim.out, "output directory (default $MBREC_OUT or .)");
    all_cmd->add_option("--grid1", est.grid1, "one-bounce wall grid step [m]")
        ->check(CLI::PositiveNumber);
    all_cmd->add_option("--grid2", est.grid2, "two-bounce wall grid step [m]")
        ->check(CLI::PositiveNumber);
    all_cmd->add_option("--max-iters", est.max_iters, "maximum refinement sweeps")
        ->check(CLI::PositiveNumber);
    all_cmd->add_option("--tol", est.tol, "relative objective convergence tolerance")
        ->check(CLI::PositiveNumber);
    all_cmd->add_flag("--refine", est.refine, "local fine-grid polish after convergence");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim_cmd->parsed()) {
            if (sim.preset.empty() && sim.config.empty()) {
                std::cerr << "error: simulate needs --preset or --config\n";
                return kExitConfig;
            }
            return do_simulate(sim);
        }
        if (est_cmd->parsed()) return do_estimate(est);
        if (eval_cmd->parsed()) return do_evaluate(eval);
        if (pdp_cmd->parsed()) return do_export_pdp(pdp_dir, pdp_tx);
        if (all_cmd->parsed()) {
            if (sim.preset.empty() && sim.config.empty()) {
                std::cerr << "error: run-all needs --preset or --config\n";
                return kExitConfig;
            }
            if (const int rc = do_simulate(sim)) return rc;
            est.dir = sim.out;
            if (const int rc = do_estimate(est)) return rc;
            eval.dir = sim.out;
            return do_evaluate(eval);
        }
    } catch (const format_error& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return kExitFormat;
    } catch (const invalid_geometry& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const shape_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const empty_channel_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
