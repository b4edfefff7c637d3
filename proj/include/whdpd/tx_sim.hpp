#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "whdpd/signal.hpp"
#include "whdpd/wh_model.hpp"

namespace whdpd {

enum class SaturationKind { Arctan, Tanh, Cubic, Linear };

/// Static driver-amplifier compression. All kinds are odd with small-signal
/// slope `gain`:
///   arctan: (2 sat / pi) atan(pi gain x / (2 sat)), bounded by sat
///   tanh:   sat tanh(gain x / sat)
///   cubic:  gain x - (gain x)^3 / (3 sat^2), monotone only for |gain x| < sat
///   linear: gain x (no compression)
struct SaturationSpec {
    SaturationKind kind = SaturationKind::Arctan;
    double saturation_level = 1.0;
    double gain = 1.0;

    double eval(double x) const noexcept;
};

/// Per-rail Mach-Zehnder field transfer sin(pi v / (2 v_pi)).
struct MzmSpec {
    double v_pi = 1.0;
};

/// Simulated transmitter: DAC -> pre FIR -> driver saturation -> post FIR
/// -> optional MZM -> optional AWGN.
struct TxChannel {
    /// DAC resolution. The quantizer full scale tracks each rail's peak, the
    /// way an AWG spans its range whatever the programmed output amplitude.
    std::optional<int> dac_bits;
    FirBlock pre_fir = FirBlock::impulse(1);
    SaturationSpec saturation;
    FirBlock post_fir = FirBlock::impulse(1);
    std::optional<MzmSpec> mzm;
    std::optional<double> noise_snr_db;
    /// Noise power is reference_rms^2 / 10^(snr/10). When unset the reference
    /// is the RMS of the noiseless output of each call.
    std::optional<double> noise_reference_rms;
    std::uint64_t seed = 1;

    /// Synthetic stand-in for the lab chain: 8-bit DAC, 15-tap low-pass
    /// filters with a weak reflection, arctan saturation at 1.0, no MZM and
    /// a fixed receiver noise floor 35 dB below an RMS of 0.5.
    static TxChannel paper_like();
};

/// Throws InvalidArgument on out-of-range fields.
void validate(const TxChannel& channel);

/// Mid-rise uniform quantizer with levels (i + 1/2) * 2 fs / 2^bits, clipped
/// to +-fs.
SampledSignal quantize(const SampledSignal& x, int bits, double full_scale);

SampledSignal saturate(const SaturationSpec& spec, const SampledSignal& x);

struct TxTrace {
    SampledSignal noiseless_output;
    SampledSignal output;
};

/// `stream` selects an independent noise sequence for the same seed, e.g.
/// the rail index.
TxTrace simulate_tx_trace(const TxChannel& channel, const SampledSignal& x,
                          std::uint64_t stream = 0);
SampledSignal simulate_tx(const TxChannel& channel, const SampledSignal& x,
                          std::uint64_t stream = 0);
/// Rail r uses noise stream r.
Rails simulate_tx(const TxChannel& channel, std::span<const SampledSignal> rails);

}  // namespace whdpd
