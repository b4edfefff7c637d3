// whdpd: train, sweep and inspect Wiener-Hammerstein pre-distorters against
// a simulated transmitter.
//
// Exit codes: 0 success, 1 configuration or input error, 2 training
// divergence, 3 I/O error.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "whdpd/error.hpp"
#include "whdpd/experiment.hpp"
#include "whdpd/serialization.hpp"

namespace {

using namespace whdpd;

enum ExitCode { kOk = 0, kConfigError = 1, kDiverged = 2, kIoError = 3 };

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string preset;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config, "Experiment configuration (JSON)");
    cmd->add_option("--seed", opts.seed, "Seed for the bit sequence and the channel noise");
    cmd->add_option("--out", opts.out, "Output directory");
    cmd->add_option("--preset", opts.preset, "Channel preset (paper-like, identity)");
}

ExperimentConfig load_config(const CommonOptions& opts) {
    ExperimentConfig cfg = opts.config.empty() ? ExperimentConfig{} : config_from_json(read_json_file(opts.config));
    if (!opts.preset.empty()) {
        cfg.channel = channel_preset(opts.preset);
        cfg.channel_name = opts.preset;
    }
    if (opts.seed) {
        cfg.signal.seed = *opts.seed;
        cfg.channel.seed = *opts.seed;
    }
    if (!opts.out.empty()) cfg.out_dir = opts.out;
    validate(cfg);
    return cfg;
}

int run_train(const CommonOptions& opts, std::optional<double> amplitude, const std::string& mode_str) {
    const auto cfg = load_config(opts);
    DpdMode mode;
    if (mode_str == "wh")
        mode = DpdMode::Wh;
    else if (mode_str == "linear")
        mode = DpdMode::Linear;
    else
        throw ConfigError("--mode must be wh or linear");
    const double amp = amplitude.value_or(cfg.sweep.amplitudes.front());
    if (!(amp > 0.0)) throw ConfigError("--amplitude must be positive");
    const Rails tx = make_tx_signal(cfg.signal);
    const DpdArtifact artifact = train_dpd(cfg, tx, mode, amp);
    Json doc = artifact_to_json(artifact);
    doc["training"]["amplitude"] = amp;
    write_json_file(cfg.out_dir / "artifact.json", doc);
    if (cfg.training_log) write_text_file(cfg.out_dir / "training_log.csv", training_log_csv(artifact.training));
    std::printf("trained %s DPD at amplitude %s: loss %s -> %s after %zu iterations\n",
                std::string(mode_name(mode)).c_str(), format_double(amp).c_str(),
                format_double(artifact.training.initial_loss).c_str(),
                format_double(artifact.training.final_loss).c_str(), artifact.training.iterations);
    return kOk;
}

int run_sweep(const CommonOptions& opts) {
    const auto cfg = load_config(opts);
    const auto result = run_experiment(cfg);
    write_experiment_outputs(result, cfg);
    std::cout << report_to_csv(result.report);
    if (result.error) {
        std::cerr << "error: " << *result.error << "\n";
        return result.diverged ? kDiverged : kConfigError;
    }
    return kOk;
}

int run_sweep_fixed(const CommonOptions& opts, const std::string& artifact_path,
                    std::optional<double> training_amplitude, bool rescale) {
    auto cfg = load_config(opts);
    if (rescale) cfg.sweep.rescale_nl = true;
    const Json doc = read_json_file(artifact_path);
    const DpdArtifact artifact = artifact_from_json(doc);
    if (!training_amplitude && doc.contains("training") && doc.at("training").contains("amplitude"))
        training_amplitude = doc.at("training").at("amplitude").get<double>();
    const auto report = sweep_amplitude_with_fixed_dpd(cfg, artifact, training_amplitude);
    const std::string csv = report_to_csv(report);
    write_text_file(cfg.out_dir / "report_fixed.csv", csv);
    std::cout << csv;
    return kOk;
}

int run_complexity(const std::string& path) {
    const Json doc = read_json_file(path);
    const bool is_artifact = doc.is_object() && doc.value("schema", std::string()) == kArtifactSchema;
    const WhModel model = is_artifact ? artifact_from_json(doc).model : model_from_json(doc);
    const auto report = complexity(model);
    const Json out{{"multiplications_per_sample", report.multiplications_per_sample},
                   {"additions_per_sample", report.additions_per_sample}};
    std::cout << out.dump() << "\n";
    return kOk;
}

int run_simulate(const CommonOptions& opts, const std::string& input, std::uint64_t stream) {
    const auto cfg = load_config(opts);
    const SampledSignal x = read_waveform_csv(input, cfg.signal.rrc.samples_per_symbol);
    const SampledSignal y = simulate_tx(cfg.channel, x, stream);
    const auto path = cfg.out_dir / "simulated.csv";
    write_text_file(path, "# schema=whdpd.waveform/1\n" + waveform_to_csv(y));
    std::printf("wrote %zu samples to %s\n", y.size(), path.string().c_str());
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Wiener-Hammerstein digital pre-distortion experiments"};
    app.require_subcommand(1);

    CommonOptions train_opts, sweep_opts, fixed_opts, sim_opts;
    std::optional<double> amplitude, training_amplitude;
    std::string mode = "wh", artifact_path, model_path, input_path;
    bool rescale = false;
    std::uint64_t stream = 0;

    auto* train = app.add_subcommand("train", "Fit a pre-distorter against the channel");
    add_common(train, train_opts);
    train->add_option("--amplitude", amplitude, "Drive amplitude (joint peak of the I/Q rails)");
    train->add_option("--mode", mode, "wh or linear");

    auto* sweep = app.add_subcommand("sweep", "Train and score every DPD mode over the amplitude grid");
    add_common(sweep, sweep_opts);

    auto* fixed = app.add_subcommand("sweep-fixed", "Score one trained artifact over the amplitude grid");
    add_common(fixed, fixed_opts);
    fixed->add_option("--artifact", artifact_path, "Artifact JSON")->required();
    fixed->add_option("--training-amplitude", training_amplitude, "Amplitude the artifact was trained at");
    fixed->add_flag("--rescale-nl", rescale, "Rescale the cubic coefficient with the drive");

    auto* cx = app.add_subcommand("complexity", "Print per-sample operation counts of a model or artifact");
    cx->add_option("--model", model_path, "Model or artifact JSON")->required();

    auto* sim = app.add_subcommand("simulate", "Run the channel on a waveform file");
    add_common(sim, sim_opts);
    sim->add_option("--input", input_path, "Waveform CSV, one sample per line")->required();
    sim->add_option("--stream", stream, "Noise stream index (rail)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*train) return run_train(train_opts, amplitude, mode);
        if (*sweep) return run_sweep(sweep_opts);
        if (*fixed) return run_sweep_fixed(fixed_opts, artifact_path, training_amplitude, rescale);
        if (*cx) return run_complexity(model_path);
        if (*sim) return run_simulate(sim_opts, input_path, stream);
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kIoError;
    } catch (const DivergenceError& e) {
        std::cerr << "training diverged at iteration " << e.iteration() << ": " << e.what() << "\n";
        return kDiverged;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfigError;
    } catch (const Json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kIoError;
    }
    return kOk;
}
