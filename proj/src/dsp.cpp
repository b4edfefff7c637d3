#include "whdpd/dsp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "whdpd/error.hpp"

namespace whdpd {

SampledSignal::SampledSignal(std::vector<double> samples, double samples_per_symbol,
                             std::string label)
    : samples_(std::move(samples)), samples_per_symbol_(samples_per_symbol),
      label_(std::move(label)) {
    if (samples_.empty()) throw InvalidArgument("SampledSignal: no samples");
    if (!(samples_per_symbol_ > 0.0))
        throw InvalidArgument("SampledSignal: samples_per_symbol must be positive");
}

SampledSignal SampledSignal::with_samples(std::vector<double> samples) const {
    return SampledSignal(std::move(samples), samples_per_symbol_, label_);
}

SampledSignal SampledSignal::with_label(std::string label) const {
    return SampledSignal(samples_, samples_per_symbol_, std::move(label));
}

double rms(std::span<const double> x) {
    if (x.empty()) return 0.0;
    double acc = 0.0;
    for (double v : x) acc += v * v;
    return std::sqrt(acc / static_cast<double>(x.size()));
}

double rms(std::span<const SampledSignal> rails) {
    double acc = 0.0;
    std::size_t n = 0;
    for (const auto& r : rails) {
        for (double v : r.samples()) acc += v * v;
        n += r.size();
    }
    return n == 0 ? 0.0 : std::sqrt(acc / static_cast<double>(n));
}

double peak_abs(std::span<const double> x) {
    double p = 0.0;
    for (double v : x) p = std::max(p, std::abs(v));
    return p;
}

double peak_abs(std::span<const SampledSignal> rails) {
    double p = 0.0;
    for (const auto& r : rails) p = std::max(p, peak_abs(r.samples()));
    return p;
}

SampledSignal scaled(const SampledSignal& x, double factor) {
    std::vector<double> out(x.vec());
    for (double& v : out) v *= factor;
    return x.with_samples(std::move(out));
}

Rails scaled(std::span<const SampledSignal> rails, double factor) {
    Rails out;
    out.reserve(rails.size());
    for (const auto& r : rails) out.push_back(scaled(r, factor));
    return out;
}

ConstellationSpec ConstellationSpec::qam(int order) {
    if (order != 4 && order != 16 && order != 64 && order != 256)
        throw InvalidArgument("qam: unsupported order " + std::to_string(order));
    ConstellationSpec spec;
    spec.order_ = order;
    spec.bits_per_symbol_ = std::countr_zero(static_cast<unsigned>(order));
    const int axis_bits = spec.bits_per_symbol_ / 2;
    const int levels = 1 << axis_bits;

    // Level for each Gray word: index i counts down from the most positive level.
    std::vector<double> level_of_word(static_cast<std::size_t>(levels));
    for (int i = 0; i < levels; ++i) {
        const int word = i ^ (i >> 1);
        level_of_word[static_cast<std::size_t>(word)] = static_cast<double>(levels - 1 - 2 * i);
    }
    const double norm = std::sqrt(2.0 * (order - 1) / 3.0);

    spec.points_.resize(static_cast<std::size_t>(order));
    for (int s = 0; s < order; ++s) {
        const int i_word = s >> axis_bits;
        const int q_word = s & (levels - 1);
        spec.points_[static_cast<std::size_t>(s)] =
            Complex(level_of_word[static_cast<std::size_t>(i_word)],
                    level_of_word[static_cast<std::size_t>(q_word)]) /
            norm;
    }
    return spec;
}

std::vector<std::uint8_t> random_bits(std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::uint8_t> bits(count);
    std::uint64_t word = 0;
    for (std::size_t i = 0; i < count; ++i) {
        if (i % 64 == 0) word = rng();
        bits[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1u);
    }
    return bits;
}

std::vector<Complex> qam_modulate(std::span<const std::uint8_t> bits,
                                  const ConstellationSpec& spec) {
    const auto bps = static_cast<std::size_t>(spec.bits_per_symbol());
    if (bits.size() % bps != 0)
        throw InvalidArgument("qam_modulate: " + std::to_string(bits.size()) +
                              " bits is not a multiple of " + std::to_string(bps));
    std::vector<Complex> symbols;
    symbols.reserve(bits.size() / bps);
    for (std::size_t i = 0; i < bits.size(); i += bps) {
        std::size_t index = 0;
        for (std::size_t b = 0; b < bps; ++b) {
            if (bits[i + b] > 1) throw InvalidArgument("qam_modulate: bit values must be 0 or 1");
            index = (index << 1) | bits[i + b];
        }
        symbols.push_back(spec.points()[index]);
    }
    return symbols;
}

std::vector<double> rrc_taps(const RrcSpec& spec) {
    const double beta = spec.rolloff;
    if (!(beta > 0.0 && beta <= 1.0)) throw InvalidArgument("rrc_taps: rolloff must be in (0, 1]");
    if (spec.span_symbols <= 0 || spec.span_symbols % 2 != 0)
        throw InvalidArgument("rrc_taps: span_symbols must be a positive even integer");
    if (spec.samples_per_symbol <= 0)
        throw InvalidArgument("rrc_taps: samples_per_symbol must be positive");

    using std::numbers::pi;
    const int sps = spec.samples_per_symbol;
    const int len = spec.span_symbols * sps + 1;
    const int mid = len / 2;
    std::vector<double> taps(static_cast<std::size_t>(len));
    for (int i = 0; i < len; ++i) {
        const double t = static_cast<double>(i - mid) / sps;  // in symbol periods
        double h;
        if (i == mid) {
            h = 1.0 - beta + 4.0 * beta / pi;
        } else if (std::abs(std::abs(t) - 1.0 / (4.0 * beta)) < 1e-12) {
            h = beta / std::sqrt(2.0) *
                ((1.0 + 2.0 / pi) * std::sin(pi / (4.0 * beta)) +
                 (1.0 - 2.0 / pi) * std::cos(pi / (4.0 * beta)));
        } else {
            const double num = std::sin(pi * t * (1.0 - beta)) +
                               4.0 * beta * t * std::cos(pi * t * (1.0 + beta));
            const double den = pi * t * (1.0 - (4.0 * beta * t) * (4.0 * beta * t));
            h = num / den;
        }
        taps[static_cast<std::size_t>(i)] = h;
    }
    // Mirror to make the symmetry exact in floating point.
    for (int i = 0; i < mid; ++i)
        taps[static_cast<std::size_t>(len - 1 - i)] = taps[static_cast<std::size_t>(i)];
    const double energy = std::inner_product(taps.begin(), taps.end(), taps.begin(), 0.0);
    const double norm = 1.0 / std::sqrt(energy);
    for (double& v : taps) v *= norm;
    return taps;
}

std::pair<SampledSignal, SampledSignal> shape_pulse(std::span<const Complex> symbols,
                                                    const RrcSpec& spec) {
    if (symbols.empty()) throw InvalidArgument("shape_pulse: no symbols");
    const auto taps = rrc_taps(spec);
    const auto sps = static_cast<std::size_t>(spec.samples_per_symbol);
    const std::size_t n = symbols.size() * sps;
    const std::ptrdiff_t mid = static_cast<std::ptrdiff_t>(taps.size() / 2);
    const auto len = static_cast<std::ptrdiff_t>(taps.size());

    std::vector<double> i_rail(n, 0.0), q_rail(n, 0.0);
    // Symbol k sits at upsampled index k * sps and spreads over the taps.
    for (std::size_t k = 0; k < symbols.size(); ++k) {
        const auto pos = static_cast<std::ptrdiff_t>(k * sps);
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, pos - mid);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n) - 1,
                                                           pos - mid + len - 1);
        const double re = symbols[k].real();
        const double im = symbols[k].imag();
        for (std::ptrdiff_t m = lo; m <= hi; ++m) {
            const double h = taps[static_cast<std::size_t>(m - pos + mid)];
            i_rail[static_cast<std::size_t>(m)] += re * h;
            q_rail[static_cast<std::size_t>(m)] += im * h;
        }
    }
    const double sps_d = static_cast<double>(sps);
    return {SampledSignal(std::move(i_rail), sps_d, "I"), SampledSignal(std::move(q_rail), sps_d, "Q")};
}

SyncResult synchronize(const SampledSignal& reference, const SampledSignal& received,
                       const SyncOptions& options) {
    const std::size_t n = reference.size();
    const std::size_t m = received.size();
    if (reference.samples_per_symbol() != received.samples_per_symbol())
        throw InvalidArgument("synchronize: sample rates differ");
    if (m < n) throw InvalidArgument("synchronize: received is shorter than the reference");

    const auto ref = reference.samples();
    const auto rec = received.samples();
    const double ref_norm = std::sqrt(std::inner_product(ref.begin(), ref.end(), ref.begin(), 0.0));

    // Lags are searched over [-max_lag, max_lag] modulo m.
    const std::size_t max_lag =
        options.max_lag == 0 ? m - 1 : std::min(options.max_lag, m - 1);
    long best_lag = 0;
    double best = -std::numeric_limits<double>::infinity();
    auto try_lag = [&](long lag) {
        const std::size_t shift = static_cast<std::size_t>((lag % static_cast<long>(m) +
                                                            static_cast<long>(m)) %
                                                           static_cast<long>(m));
        double dot = 0.0, energy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t j = i + shift;
            if (j >= m) j -= m;
            dot += ref[i] * rec[j];
            energy += rec[j] * rec[j];
        }
        const double denom = ref_norm * std::sqrt(energy);
        const double c = denom > 0.0 ? dot / denom : 0.0;
        if (c > best) {
            best = c;
            best_lag = lag;
        }
    };
    if (options.max_lag == 0) {
        for (std::size_t lag = 0; lag < m; ++lag)
            try_lag(lag <= m / 2 ? static_cast<long>(lag)
                                 : static_cast<long>(lag) - static_cast<long>(m));
    } else {
        for (long lag = -static_cast<long>(max_lag); lag <= static_cast<long>(max_lag); ++lag)
            try_lag(lag);
    }

    if (!(best >= options.min_correlation))
        throw AlignmentError("synchronize: correlation peak " + std::to_string(best) +
                                 " is below the floor " + std::to_string(options.min_correlation),
                             best);

    const std::size_t shift = static_cast<std::size_t>(
        (best_lag % static_cast<long>(m) + static_cast<long>(m)) % static_cast<long>(m));
    std::vector<double> aligned(n);
    for (std::size_t i = 0; i < n; ++i) aligned[i] = rec[(i + shift) % m];
    return SyncResult{best_lag, best, received.with_samples(std::move(aligned))};
}

SampledSignal rms_normalize(const SampledSignal& x, double target_rms) {
    if (!(target_rms > 0.0)) throw InvalidArgument("rms_normalize: target must be positive");
    const double current = rms(x.samples());
    if (current == 0.0) throw InvalidArgument("rms_normalize: input has zero RMS");
    return scaled(x, target_rms / current);
}

double snr_db(std::span<const SampledSignal> reference, std::span<const SampledSignal> received,
              const SnrOptions& options) {
    if (reference.size() != received.size())
        throw InvalidArgument("snr_db: rail counts differ");
    if (options.decimation == 0) throw InvalidArgument("snr_db: decimation must be >= 1");
    double rr = 0.0, rd = 0.0, dd = 0.0;
    for (std::size_t k = 0; k < reference.size(); ++k) {
        const auto r = reference[k].samples();
        const auto d = received[k].samples();
        if (r.size() != d.size()) throw InvalidArgument("snr_db: length mismatch");
        for (std::size_t i = options.offset; i < r.size(); i += options.decimation) {
            rr += r[i] * r[i];
            rd += r[i] * d[i];
            dd += d[i] * d[i];
        }
    }
    if (rr == 0.0) throw InvalidArgument("snr_db: reference has zero power");
    const double gain = dd > 0.0 ? rd / dd : 0.0;
    double err = 0.0;
    for (std::size_t k = 0; k < reference.size(); ++k) {
        const auto r = reference[k].samples();
        const auto d = received[k].samples();
        for (std::size_t i = options.offset; i < r.size(); i += options.decimation) {
            const double e = r[i] - gain * d[i];
            err += e * e;
        }
    }
    if (err <= rr * std::pow(10.0, -kSnrCeilingDb / 10.0)) return kSnrCeilingDb;
    return 10.0 * std::log10(rr / err);
}

double snr_db(const SampledSignal& reference, const SampledSignal& received,
              const SnrOptions& options) {
    return snr_db(std::span(&reference, 1), std::span(&received, 1), options);
}

double papr_db(std::span<const SampledSignal> rails) {
    if (rails.empty()) throw InvalidArgument("papr_db: no rails");
    const std::size_t n = rails.front().size();
    double peak = 0.0, mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double p = 0.0;
        for (const auto& r : rails) {
            if (r.size() != n) throw InvalidArgument("papr_db: rail lengths differ");
            p += r[i] * r[i];
        }
        peak = std::max(peak, p);
        mean += p;
    }
    mean /= static_cast<double>(n);
    if (mean == 0.0) throw InvalidArgument("papr_db: signal has zero power");
    return 10.0 * std::log10(peak / mean);
}

double papr_db(const SampledSignal& x) { return papr_db(std::span(&x, 1)); }

}  // namespace whdpd
