#pragma once

#include <span>
#include <string>
#include <vector>

namespace whdpd {

/// Real-valued waveform. Complex baseband is carried as two of these (I and Q rails).
class SampledSignal {
public:
    /// Throws InvalidArgument if `samples` is empty or `samples_per_symbol` <= 0.
    explicit SampledSignal(std::vector<double> samples, double samples_per_symbol = 1.0,
                  std::string label = {});

    std::span<const double> samples() const noexcept { return samples_; }
    std::size_t size() const noexcept { return samples_.size(); }
    double operator[](std::size_t i) const { return samples_[i]; }
    double samples_per_symbol() const noexcept { return samples_per_symbol_; }
    const std::string& label() const noexcept { return label_; }

    /// Same metadata, new samples.
    SampledSignal with_samples(std::vector<double> samples) const;
    SampledSignal with_label(std::string label) const;

    const std::vector<double>& vec() const noexcept { return samples_; }

    friend bool operator==(const SampledSignal&, const SampledSignal&) = default;

private:
    std::vector<double> samples_;
    double samples_per_symbol_;
    std::string label_;
};

/// I/Q pair or any other set of rails that belong together.
using Rails = std::vector<SampledSignal>;

double rms(std::span<const double> x);
double rms(std::span<const SampledSignal> rails);
double peak_abs(std::span<const double> x);
double peak_abs(std::span<const SampledSignal> rails);

SampledSignal scaled(const SampledSignal& x, double factor);
Rails scaled(std::span<const SampledSignal> rails, double factor);

}  // namespace whdpd
