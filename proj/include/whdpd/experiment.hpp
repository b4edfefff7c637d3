#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "whdpd/dsp.hpp"
#include "whdpd/serialization.hpp"
#include "whdpd/tx_sim.hpp"
#include "whdpd/wh_learn.hpp"

namespace whdpd {

inline constexpr std::string_view kConfigSchema = "whdpd.config/1";
inline constexpr std::string_view kReportSchema = "whdpd.report/1";

struct SignalConfig {
    int order = 16;
    std::size_t symbols = 8192;
    RrcSpec rrc{0.2, 32, 2};
    std::uint64_t seed = 1;
};

struct TopologyConfig {
    std::size_t k1 = 31;
    std::size_t k2 = 31;
    std::vector<int> nl_orders{3};

    /// Impulse filters around a zero polynomial with the configured orders.
    WhModel initial_model() const;
};

/// Drive amplitudes are the joint peak of the I/Q rails entering the
/// channel. The paper-like preset saturates at 1.0, so there they read as
/// multiples of the saturation level.
struct SweepConfig {
    std::vector<double> amplitudes{0.5, 1.0, 1.5, 2.0, 2.5};
    /// Fixed-artifact sweeps: rescale the cubic coefficient with the drive.
    bool rescale_nl = false;
};

struct ExperimentConfig {
    SignalConfig signal;
    std::string channel_name = "paper-like";
    TxChannel channel = TxChannel::paper_like();
    FitConfig fit = default_fit();
    TopologyConfig topology;
    SweepConfig sweep;
    SyncOptions sync{64, 0.5};
    std::filesystem::path out_dir = "out";
    bool training_log = false;

    /// Desk-scale learning rates: larger than the library defaults so the
    /// cubic coefficient can reach its optimum within the budget.
    static FitConfig default_fit();
};

/// Throws ConfigError.
void validate(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const Json& doc);
Json config_to_json(const ExperimentConfig& cfg);

enum class DpdMode { None, Linear, Wh };
std::string_view mode_name(DpdMode mode);

/// Gray-mapped QAM, RRC shaped, scaled to unit joint RMS over the I/Q rails.
Rails make_tx_signal(const SignalConfig& cfg);

/// Scales its input so the joint peak equals `amplitude`, then runs the
/// channel on each rail.
ChannelOracle driven_channel(const TxChannel& channel, double amplitude);

struct Measurement {
    double snr_db = 0.0;
    /// RMS of the noiseless channel output over both rails.
    double output_rms = 0.0;
    /// PAPR of the DAC input.
    double papr_db = 0.0;
};

/// Drives the channel with `signal` at `amplitude`, aligns the captured
/// rails to `reference` and scores them.
Measurement measure(const TxChannel& channel, std::span<const SampledSignal> reference,
                    std::span<const SampledSignal> signal, double amplitude,
                    const SyncOptions& sync);

/// Indirect learning at `amplitude`. Linear mode freezes the polynomial at zero.
DpdArtifact train_dpd(const ExperimentConfig& cfg, std::span<const SampledSignal> tx, DpdMode mode,
                      double amplitude);

/// Drive in [lo, hi] whose noiseless output RMS matches `target_rms` within
/// `tolerance_db`, found by bisection.
double match_output_rms(const TxChannel& channel, std::span<const SampledSignal> signal,
                        double target_rms, double lo, double hi, double tolerance_db = 0.01);

struct SweepRow {
    std::string mode;
    double v_in = 0.0;
    double output_rms = 0.0;
    double snr_db = 0.0;
    double papr_db = 0.0;
    std::optional<double> final_loss;
    ComplexityReport complexity;
    std::string status = "ok";
};

struct SweepReport {
    std::vector<SweepRow> rows;
};

/// Schema comment line, header row, then one line per row.
std::string report_to_csv(const SweepReport& report);

struct TrainedArtifact {
    DpdMode mode;
    double amplitude;
    DpdArtifact artifact;
};

struct ExperimentResult {
    SweepReport report;
    std::vector<TrainedArtifact> artifacts;
    /// Set when a point failed; the report ends with an error row.
    std::optional<std::string> error;
    bool diverged = false;
};

/// For every amplitude and every mode: train where needed, pre-distort,
/// drive the channel and score. Rows come out in grid order, modes in
/// none/linear/wh order.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Applies one artifact across the amplitude grid. It is taken to be
/// trained at `training_amplitude` (default: the first grid point), which
/// sets the reference for coefficient rescaling.
SweepReport sweep_amplitude_with_fixed_dpd(const ExperimentConfig& cfg, const DpdArtifact& artifact,
                                           std::optional<double> training_amplitude = {});

/// report.csv, artifact_<mode>_<i>.json and optionally training logs.
void write_experiment_outputs(const ExperimentResult& result, const ExperimentConfig& cfg);
std::string training_log_csv(const TrainingInfo& info);

}  // namespace whdpd
