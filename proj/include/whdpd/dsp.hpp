#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "whdpd/signal.hpp"

namespace whdpd {

using Complex = std::complex<double>;

/// Square QAM with per-axis reflected Gray coding.
///
/// A symbol's bits are split in half: the leading half selects the in-phase
/// level and the trailing half the quadrature level. Within an axis the Gray
/// word g(i) = i ^ (i >> 1) labels the i-th level counted from the most
/// positive one, so for 16QAM:
///
///     bits  00   01   11   10
///     level +3   +1   -1   -3    (all divided by sqrt(10))
///
/// and 4QAM maps `00` to (1 + j)/sqrt(2).
class ConstellationSpec {
public:
    /// Accepts 4, 16, 64 and 256.
    static ConstellationSpec qam(int order);

    int order() const noexcept { return order_; }
    int bits_per_symbol() const noexcept { return bits_per_symbol_; }
    /// Points indexed by the symbol's bits read MSB first.
    std::span<const Complex> points() const noexcept { return points_; }

private:
    ConstellationSpec() = default;
    int order_ = 0;
    int bits_per_symbol_ = 0;
    std::vector<Complex> points_;
};

struct RrcSpec {
    double rolloff = 0.2;
    int span_symbols = 32;
    int samples_per_symbol = 2;
};

/// Uniform random bits (0 or 1) from a seeded mt19937_64.
std::vector<std::uint8_t> random_bits(std::size_t count, std::uint64_t seed);

/// Throws InvalidArgument when bits.size() is not a multiple of bits_per_symbol
/// or a bit is not 0/1.
std::vector<Complex> qam_modulate(std::span<const std::uint8_t> bits,
                                  const ConstellationSpec& spec);

/// Unit-energy root-raised-cosine taps, length span_symbols * sps + 1.
std::vector<double> rrc_taps(const RrcSpec& spec);

/// Upsamples and filters with the RRC taps. Each rail has exactly
/// symbols.size() * sps samples: the full convolution is cut to the window
/// centered on the filter's middle tap, with zeros outside the burst.
std::pair<SampledSignal, SampledSignal> shape_pulse(std::span<const Complex> symbols,
                                                    const RrcSpec& spec);

struct SyncOptions {
    /// Largest |delay| searched, in samples; 0 means every lag.
    std::size_t max_lag = 0;
    /// Normalized correlation below this is an AlignmentError.
    double min_correlation = 0.5;
};

struct SyncResult {
    /// `received[n + delay]` lines up with `reference[n]`. Negative means the
    /// received waveform leads.
    long delay = 0;
    double correlation = 0.0;
    SampledSignal aligned;
};

/// Picks the lag maximizing the normalized circular cross-correlation and
/// returns `received` rotated by it and cut to the reference length.
SyncResult synchronize(const SampledSignal& reference, const SampledSignal& received,
                       const SyncOptions& options = {});

SampledSignal rms_normalize(const SampledSignal& x, double target_rms);

struct SnrOptions {
    /// Keep every `decimation`-th sample starting at `offset`. 1 keeps the
    /// full-rate domain; decimation = sps gives one sample per symbol.
    std::size_t decimation = 1;
    std::size_t offset = 0;
};

/// Returned when the residual power underflows.
inline constexpr double kSnrCeilingDb = 100.0;

/// 10 log10(E|r|^2 / E|r - g d|^2) with g the real least-squares gain of d
/// onto r. Rails are treated as components of one vector signal.
double snr_db(std::span<const SampledSignal> reference, std::span<const SampledSignal> received,
              const SnrOptions& options = {});
double snr_db(const SampledSignal& reference, const SampledSignal& received,
              const SnrOptions& options = {});

/// Peak-to-average power ratio. With several rails the instantaneous power
/// is the sum over rails (|I + jQ|^2 for an I/Q pair).
double papr_db(std::span<const SampledSignal> rails);
double papr_db(const SampledSignal& x);

}  // namespace whdpd
