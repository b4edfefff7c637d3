#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <variant>
#include <vector>

#include "whdpd/signal.hpp"

namespace whdpd {

/// FIR filter applied as a same-length convolution: the center tap sits at
/// index K/2 (rounded down) and samples outside the input are zero, so
///
///     y[n] = sum_k taps[k] * x[n + K/2 - k].
struct FirBlock {
    std::vector<double> taps;

    /// Unit impulse at the center tap: the identity filter for odd K.
    static FirBlock impulse(std::size_t num_taps);

    std::size_t size() const noexcept { return taps.size(); }
    std::size_t center() const noexcept { return taps.size() / 2; }

    friend bool operator==(const FirBlock&, const FirBlock&) = default;
};

/// Memoryless polynomial f(y) = y + sum_m a_m y^m over orders m >= 2.
/// The linear term is fixed at 1; absent orders are zero.
struct PolyNlBlock {
    std::map<int, double> coeffs;

    static PolyNlBlock cubic(double a);

    double eval(double y) const noexcept;
    /// df/dy.
    double slope(double y) const noexcept;

    friend bool operator==(const PolyNlBlock&, const PolyNlBlock&) = default;
};

using Block = std::variant<FirBlock, PolyNlBlock>;

/// Alternating cascade of linear and static nonlinear blocks (LNL, LNLNL, ...).
class WhModel {
public:
    /// Throws InvalidArgument on an empty cascade, an empty FIR, a
    /// polynomial order below 2 or a non-finite coefficient.
    explicit WhModel(std::vector<Block> layers);

    /// FIR(k1) -> y + a y^3 -> FIR(k2), with impulse filters.
    static WhModel lnl(std::size_t k1, std::size_t k2, double a = 0.0);

    std::span<const Block> layers() const noexcept { return layers_; }
    std::span<Block> layers() noexcept { return layers_; }
    std::size_t size() const noexcept { return layers_.size(); }
    std::size_t num_nonlinear() const noexcept;

    friend bool operator==(const WhModel&, const WhModel&) = default;

private:
    std::vector<Block> layers_;
};

std::vector<double> fir_apply(const FirBlock& block, std::span<const double> x);
SampledSignal fir_apply(const FirBlock& block, const SampledSignal& x);

std::vector<double> nl_apply(const PolyNlBlock& block, std::span<const double> y);
SampledSignal nl_apply(const PolyNlBlock& block, const SampledSignal& y);

/// Everything the backward pass needs from a forward pass.
struct ForwardTrace {
    /// inputs[l] is what entered block l; inputs[0] is the model input.
    std::vector<std::vector<double>> inputs;
    std::vector<double> output;
};

ForwardTrace wh_forward_trace(const WhModel& model, std::span<const double> x);

struct ForwardResult {
    SampledSignal output;
    ForwardTrace trace;
};

ForwardResult wh_forward(const WhModel& model, const SampledSignal& x);

struct ComplexityReport {
    long long multiplications_per_sample = 0;
    long long additions_per_sample = 0;

    ComplexityReport& operator+=(const ComplexityReport& other) noexcept;
    friend bool operator==(const ComplexityReport&, const ComplexityReport&) = default;
};

/// K multiplications and K - 1 additions per FIR; m multiplications and one
/// addition for every order-m polynomial term present.
ComplexityReport complexity(const FirBlock& block);
ComplexityReport complexity(const PolyNlBlock& block);
ComplexityReport complexity(const WhModel& model);

}  // namespace whdpd
