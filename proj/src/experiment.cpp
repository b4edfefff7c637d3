#include "whdpd/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "whdpd/error.hpp"

namespace whdpd {

WhModel TopologyConfig::initial_model() const {
    PolyNlBlock poly;
    for (int m : nl_orders) poly.coeffs[m] = 0.0;
    return WhModel({FirBlock::impulse(k1), std::move(poly), FirBlock::impulse(k2)});
}

FitConfig ExperimentConfig::default_fit() {
    FitConfig fit;
    fit.iterations = 2000;
    fit.adam.lr_taps = 1e-3;
    fit.adam.lr_nonlinear = 1e-3;
    return fit;
}

void validate(const ExperimentConfig& cfg) {
    try {
        ConstellationSpec::qam(cfg.signal.order);
        if (cfg.signal.symbols < 16) throw ConfigError("signal.symbols must be >= 16");
        rrc_taps(cfg.signal.rrc);
        validate(cfg.channel);
        validate(cfg.fit);
        cfg.topology.initial_model();
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    if (cfg.topology.nl_orders.empty()) throw ConfigError("topology.nl_orders must not be empty");
    const auto& grid = cfg.sweep.amplitudes;
    if (grid.empty()) throw ConfigError("sweep.amplitudes must not be empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0)) throw ConfigError("sweep.amplitudes must be positive");
        if (i > 0 && !(grid[i] > grid[i - 1]))
            throw ConfigError("sweep.amplitudes must be strictly increasing");
    }
}

ExperimentConfig config_from_json(const Json& doc) {
    ExperimentConfig cfg;
    try {
        if (!doc.is_object()) throw ConfigError("config: expected a JSON object");
        if (doc.contains("schema") && doc.at("schema").get<std::string>() != kConfigSchema)
            throw ConfigError("config: schema mismatch, expected " + std::string(kConfigSchema));
        if (doc.contains("signal")) {
            const auto& s = doc.at("signal");
            cfg.signal.order = s.value("order", cfg.signal.order);
            cfg.signal.symbols = s.value("symbols", cfg.signal.symbols);
            cfg.signal.rrc.rolloff = s.value("rolloff", cfg.signal.rrc.rolloff);
            cfg.signal.rrc.span_symbols = s.value("span_symbols", cfg.signal.rrc.span_symbols);
            cfg.signal.rrc.samples_per_symbol =
                s.value("samples_per_symbol", cfg.signal.rrc.samples_per_symbol);
            cfg.signal.seed = s.value("seed", cfg.signal.seed);
        }
        if (doc.contains("channel")) {
            const auto& c = doc.at("channel");
            cfg.channel = channel_from_json(c);
            cfg.channel_name = c.is_string() ? c.get<std::string>()
                                             : c.value("preset", std::string("custom"));
        }
        if (doc.contains("fit")) {
            const auto& f = doc.at("fit");
            cfg.fit.iterations = f.value("iterations", cfg.fit.iterations);
            cfg.fit.adam.lr_taps = f.value("lr_taps", cfg.fit.adam.lr_taps);
            cfg.fit.adam.lr_nonlinear = f.value("lr_nonlinear", cfg.fit.adam.lr_nonlinear);
            cfg.fit.adam.beta1 = f.value("beta1", cfg.fit.adam.beta1);
            cfg.fit.adam.beta2 = f.value("beta2", cfg.fit.adam.beta2);
            cfg.fit.adam.epsilon = f.value("epsilon", cfg.fit.adam.epsilon);
            cfg.fit.lr_decay = f.value("lr_decay", cfg.fit.lr_decay);
            cfg.fit.tolerance = f.value("tolerance", cfg.fit.tolerance);
            cfg.fit.tolerance_window = f.value("tolerance_window", cfg.fit.tolerance_window);
            cfg.fit.ridge = f.value("ridge", cfg.fit.ridge);
            cfg.topology.k1 = f.value("k1", cfg.topology.k1);
            cfg.topology.k2 = f.value("k2", cfg.topology.k2);
            if (f.contains("nl_orders")) cfg.topology.nl_orders = f.at("nl_orders").get<std::vector<int>>();
            cfg.training_log = f.value("training_log", cfg.training_log);
        }
        if (doc.contains("sweep")) {
            const auto& s = doc.at("sweep");
            if (s.contains("amplitudes")) cfg.sweep.amplitudes = s.at("amplitudes").get<std::vector<double>>();
            cfg.sweep.rescale_nl = s.value("rescale_nl", cfg.sweep.rescale_nl);
        }
        if (doc.contains("sync")) {
            const auto& s = doc.at("sync");
            cfg.sync.max_lag = s.value("max_lag", cfg.sync.max_lag);
            cfg.sync.min_correlation = s.value("min_correlation", cfg.sync.min_correlation);
        }
        if (doc.contains("output")) cfg.out_dir = doc.at("output").value("dir", cfg.out_dir.string());
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    validate(cfg);
    return cfg;
}

Json config_to_json(const ExperimentConfig& cfg) {
    Json channel = channel_to_json(cfg.channel);
    return {{"schema", kConfigSchema},
            {"signal",
             {{"order", cfg.signal.order},
              {"symbols", cfg.signal.symbols},
              {"rolloff", cfg.signal.rrc.rolloff},
              {"span_symbols", cfg.signal.rrc.span_symbols},
              {"samples_per_symbol", cfg.signal.rrc.samples_per_symbol},
              {"seed", cfg.signal.seed}}},
            {"channel", channel},
            {"fit",
             {{"iterations", cfg.fit.iterations},
              {"lr_taps", cfg.fit.adam.lr_taps},
              {"lr_nonlinear", cfg.fit.adam.lr_nonlinear},
              {"beta1", cfg.fit.adam.beta1},
              {"beta2", cfg.fit.adam.beta2},
              {"epsilon", cfg.fit.adam.epsilon},
              {"lr_decay", cfg.fit.lr_decay},
              {"tolerance", cfg.fit.tolerance},
              {"tolerance_window", cfg.fit.tolerance_window},
              {"ridge", cfg.fit.ridge},
              {"k1", cfg.topology.k1},
              {"k2", cfg.topology.k2},
              {"nl_orders", cfg.topology.nl_orders},
              {"training_log", cfg.training_log}}},
            {"sweep", {{"amplitudes", cfg.sweep.amplitudes}, {"rescale_nl", cfg.sweep.rescale_nl}}},
            {"sync", {{"max_lag", cfg.sync.max_lag}, {"min_correlation", cfg.sync.min_correlation}}},
            {"output", {{"dir", cfg.out_dir.string()}}}};
}

std::string_view mode_name(DpdMode mode) {
    switch (mode) {
    case DpdMode::None: return "none";
    case DpdMode::Linear: return "linear";
    case DpdMode::Wh: return "wh";
    }
    return "none";
}

Rails make_tx_signal(const SignalConfig& cfg) {
    const auto spec = ConstellationSpec::qam(cfg.order);
    const auto bits = random_bits(cfg.symbols * static_cast<std::size_t>(spec.bits_per_symbol()), cfg.seed);
    const auto symbols = qam_modulate(bits, spec);
    auto [i_rail, q_rail] = shape_pulse(symbols, cfg.rrc);
    Rails rails{std::move(i_rail), std::move(q_rail)};
    return scaled(rails, 1.0 / rms(rails));
}

namespace {

Rails drive(std::span<const SampledSignal> signal, double amplitude) {
    const double peak = peak_abs(signal);
    if (peak == 0.0) throw InvalidArgument("drive: zero signal");
    return scaled(signal, amplitude / peak);
}

double noiseless_output_rms(const TxChannel& channel, std::span<const SampledSignal> driven) {
    Rails out;
    for (std::size_t r = 0; r < driven.size(); ++r)
        out.push_back(simulate_tx_trace(channel, driven[r], r).noiseless_output);
    return rms(out);
}

}  // namespace

ChannelOracle driven_channel(const TxChannel& channel, double amplitude) {
    return [channel, amplitude](std::span<const SampledSignal> rails) {
        return simulate_tx(channel, drive(rails, amplitude));
    };
}

Measurement measure(const TxChannel& channel, std::span<const SampledSignal> reference,
                    std::span<const SampledSignal> signal, double amplitude,
                    const SyncOptions& sync) {
    const Rails driven = drive(signal, amplitude);
    Rails captured, clean;
    for (std::size_t r = 0; r < driven.size(); ++r) {
        auto trace = simulate_tx_trace(channel, driven[r], r);
        captured.push_back(synchronize(reference[r], trace.output, sync).aligned);
        clean.push_back(std::move(trace.noiseless_output));
    }
    return Measurement{snr_db(reference, captured), rms(clean), papr_db(driven)};
}

DpdArtifact train_dpd(const ExperimentConfig& cfg, std::span<const SampledSignal> tx, DpdMode mode,
                      double amplitude) {
    if (mode == DpdMode::None) throw InvalidArgument("train_dpd: nothing to train for mode none");
    FitConfig fit = cfg.fit;
    fit.freeze_nonlinear = mode == DpdMode::Linear;
    return indirect_learn(tx, driven_channel(cfg.channel, amplitude), cfg.topology.initial_model(),
                          fit, cfg.sync);
}

double match_output_rms(const TxChannel& channel, std::span<const SampledSignal> signal,
                        double target_rms, double lo, double hi, double tolerance_db) {
    auto level_db = [&](double amp) {
        return 20.0 * std::log10(noiseless_output_rms(channel, drive(signal, amp)) / target_rms);
    };
    double f_lo = level_db(lo), f_hi = level_db(hi);
    if (f_lo > 0.0 || f_hi < 0.0)
        throw InvalidArgument("match_output_rms: target is outside the bracket");
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double f = level_db(mid);
        if (std::abs(f) <= tolerance_db) return mid;
        if (f < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

std::string report_to_csv(const SweepReport& report) {
    std::ostringstream out;
    out << "# schema=" << kReportSchema << "\n";
    out << "mode,v_in,output_rms,snr_db,papr_db,final_loss,mults_per_sample,adds_per_sample,status\n";
    for (const auto& row : report.rows) {
        out << row.mode << ',' << format_double(row.v_in) << ',' << format_double(row.output_rms)
            << ',' << format_double(row.snr_db) << ',' << format_double(row.papr_db) << ','
            << (row.final_loss ? format_double(*row.final_loss) : std::string()) << ','
            << row.complexity.multiplications_per_sample << ','
            << row.complexity.additions_per_sample << ',' << row.status << '\n';
    }
    return out.str();
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    validate(cfg);
    ExperimentResult result;
    const Rails tx = make_tx_signal(cfg.signal);
    for (double amp : cfg.sweep.amplitudes) {
        for (DpdMode mode : {DpdMode::None, DpdMode::Linear, DpdMode::Wh}) {
            SweepRow row;
            row.mode = mode_name(mode);
            row.v_in = amp;
            try {
                Rails signal = tx;
                if (mode != DpdMode::None) {
                    DpdArtifact artifact = train_dpd(cfg, tx, mode, amp);
                    signal = apply_dpd(artifact, tx);
                    row.final_loss = artifact.training.final_loss;
                    row.complexity = complexity(artifact.model);
                    result.artifacts.push_back({mode, amp, std::move(artifact)});
                }
                const auto m = measure(cfg.channel, tx, signal, amp, cfg.sync);
                row.snr_db = m.snr_db;
                row.output_rms = m.output_rms;
                row.papr_db = m.papr_db;
                result.report.rows.push_back(std::move(row));
            } catch (const Error& e) {
                row.status = std::string("error: ") + e.what();
                std::replace(row.status.begin(), row.status.end(), ',', ';');
                std::replace(row.status.begin(), row.status.end(), '\n', ' ');
                result.report.rows.push_back(std::move(row));
                result.error = e.what();
                result.diverged = dynamic_cast<const DivergenceError*>(&e) != nullptr;
                return result;
            }
        }
    }
    return result;
}

SweepReport sweep_amplitude_with_fixed_dpd(const ExperimentConfig& cfg, const DpdArtifact& artifact,
                                           std::optional<double> training_amplitude) {
    validate(cfg);
    validate(artifact);
    const double base = training_amplitude.value_or(cfg.sweep.amplitudes.front());
    if (!(base > 0.0)) throw ConfigError("training amplitude must be positive");
    const Rails tx = make_tx_signal(cfg.signal);
    SweepReport report;
    for (double amp : cfg.sweep.amplitudes) {
        const DpdArtifact used = cfg.sweep.rescale_nl ? rescale_artifact(artifact, amp / base) : artifact;
        const Rails signal = apply_dpd(used, tx);
        const auto m = measure(cfg.channel, tx, signal, amp, cfg.sync);
        SweepRow row;
        row.mode = cfg.sweep.rescale_nl ? "wh-fixed-rescaled" : "wh-fixed";
        row.v_in = amp;
        row.output_rms = m.output_rms;
        row.snr_db = m.snr_db;
        row.papr_db = m.papr_db;
        row.final_loss = artifact.training.final_loss;
        row.complexity = complexity(used.model);
        report.rows.push_back(std::move(row));
    }
    return report;
}

std::string training_log_csv(const TrainingInfo& info) {
    std::ostringstream out;
    out << "# schema=whdpd.training-log/1\n";
    out << "iteration,loss,gradient_norm\n";
    for (const auto& e : info.log)
        out << e.iteration << ',' << format_double(e.loss) << ',' << format_double(e.gradient_norm) << '\n';
    return out.str();
}

void write_experiment_outputs(const ExperimentResult& result, const ExperimentConfig& cfg) {
    namespace fs = std::filesystem;
    write_text_file(cfg.out_dir / "report.csv", report_to_csv(result.report));
    std::size_t index = 0;
    for (const auto& t : result.artifacts) {
        const std::string stem = "artifact_" + std::string(mode_name(t.mode)) + "_" + std::to_string(index++);
        Json doc = artifact_to_json(t.artifact);
        doc["training"]["amplitude"] = t.amplitude;
        write_json_file(cfg.out_dir / (stem + ".json"), doc);
        if (cfg.training_log) write_text_file(cfg.out_dir / (stem + "_log.csv"), training_log_csv(t.artifact.training));
    }
}

}  // namespace whdpd
