#include "whdpd/tx_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "whdpd/error.hpp"

namespace whdpd {

namespace {

// Hamming-windowed sinc, unit DC gain. `cutoff` is a fraction of Nyquist.
FirBlock windowed_sinc(std::size_t num_taps, double cutoff) {
    using std::numbers::pi;
    FirBlock block{std::vector<double>(num_taps)};
    const double mid = static_cast<double>(num_taps / 2);
    double sum = 0.0;
    for (std::size_t i = 0; i < num_taps; ++i) {
        const double t = static_cast<double>(i) - mid;
        const double sinc = t == 0.0 ? cutoff : std::sin(pi * cutoff * t) / (pi * t);
        const double w = 0.54 - 0.46 * std::cos(2.0 * pi * static_cast<double>(i) /
                                                 static_cast<double>(num_taps - 1));
        block.taps[i] = sinc * w;
        sum += block.taps[i];
    }
    for (double& h : block.taps) h /= sum;
    return block;
}

}  // namespace

double SaturationSpec::eval(double x) const noexcept {
    using std::numbers::pi;
    const double sat = saturation_level;
    switch (kind) {
    case SaturationKind::Arctan:
        return 2.0 * sat / pi * std::atan(pi * gain * x / (2.0 * sat));
    case SaturationKind::Tanh:
        return sat * std::tanh(gain * x / sat);
    case SaturationKind::Cubic: {
        const double gx = gain * x;
        return gx - gx * gx * gx / (3.0 * sat * sat);
    }
    case SaturationKind::Linear:
        return gain * x;
    }
    return x;
}

TxChannel TxChannel::paper_like() {
    TxChannel ch;
    ch.dac_bits = 8;
    ch.pre_fir = windowed_sinc(15, 0.75);
    // Post response: slightly wider low-pass with a weak reflection three
    // samples behind the main tap.
    ch.post_fir = windowed_sinc(15, 0.85);
    ch.post_fir.taps[ch.post_fir.center() + 3] += 0.06;
    double sum = 0.0;
    for (double h : ch.post_fir.taps) sum += h;
    for (double& h : ch.post_fir.taps) h /= sum;
    ch.saturation = SaturationSpec{SaturationKind::Arctan, 1.0, 1.0};
    ch.noise_snr_db = 35.0;
    ch.noise_reference_rms = 0.5;
    ch.seed = 7;
    return ch;
}

void validate(const TxChannel& ch) {
    if (ch.dac_bits && (*ch.dac_bits < 1 || *ch.dac_bits > 16))
        throw InvalidArgument("TxChannel: dac_bits must be in [1, 16]");
    if (ch.pre_fir.taps.empty() || ch.post_fir.taps.empty())
        throw InvalidArgument("TxChannel: FIR blocks need at least one tap");
    if (!(ch.saturation.saturation_level > 0.0))
        throw InvalidArgument("TxChannel: saturation_level must be positive");
    if (ch.mzm && !(ch.mzm->v_pi > 0.0)) throw InvalidArgument("TxChannel: v_pi must be positive");
    if (ch.noise_snr_db && !std::isfinite(*ch.noise_snr_db))
        throw InvalidArgument("TxChannel: noise_snr_db must be finite");
    if (ch.noise_reference_rms && !(*ch.noise_reference_rms > 0.0))
        throw InvalidArgument("TxChannel: noise_reference_rms must be positive");
}

SampledSignal quantize(const SampledSignal& x, int bits, double full_scale) {
    if (bits < 1) throw InvalidArgument("quantize: bits must be >= 1");
    if (!(full_scale > 0.0)) throw InvalidArgument("quantize: full_scale must be positive");
    const double lsb = 2.0 * full_scale / std::ldexp(1.0, bits);
    const double top = full_scale - 0.5 * lsb;
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double q = (std::floor(x[i] / lsb) + 0.5) * lsb;
        out[i] = std::clamp(q, -top, top);
    }
    return x.with_samples(std::move(out));
}

SampledSignal saturate(const SaturationSpec& spec, const SampledSignal& x) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = spec.eval(x[i]);
    return x.with_samples(std::move(out));
}

TxTrace simulate_tx_trace(const TxChannel& ch, const SampledSignal& x, std::uint64_t stream) {
    validate(ch);
    SampledSignal v = x;
    if (ch.dac_bits) {
        const double fs = peak_abs(v.samples());
        if (fs > 0.0) v = quantize(v, *ch.dac_bits, fs);
    }
    v = fir_apply(ch.pre_fir, v);
    v = saturate(ch.saturation, v);
    v = fir_apply(ch.post_fir, v);
    if (ch.mzm) {
        const double k = std::numbers::pi / (2.0 * ch.mzm->v_pi);
        std::vector<double> out(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::sin(k * v[i]);
        v = v.with_samples(std::move(out));
    }
    SampledSignal noiseless = v;
    if (ch.noise_snr_db) {
        const double ref = ch.noise_reference_rms ? *ch.noise_reference_rms : rms(v.samples());
        const double sigma = ref * std::pow(10.0, -*ch.noise_snr_db / 20.0);
        std::seed_seq seq{static_cast<std::uint32_t>(ch.seed), static_cast<std::uint32_t>(ch.seed >> 32),
                          static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> gauss(0.0, sigma);
        std::vector<double> out(v.vec());
        for (double& s : out) s += gauss(rng);
        v = v.with_samples(std::move(out));
    }
    return TxTrace{std::move(noiseless), std::move(v)};
}

SampledSignal simulate_tx(const TxChannel& ch, const SampledSignal& x, std::uint64_t stream) {
    return simulate_tx_trace(ch, x, stream).output;
}

Rails simulate_tx(const TxChannel& ch, std::span<const SampledSignal> rails) {
    Rails out;
    out.reserve(rails.size());
    for (std::size_t r = 0; r < rails.size(); ++r) out.push_back(simulate_tx(ch, rails[r], r));
    return out;
}

}  // namespace whdpd
