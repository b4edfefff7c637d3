#include "whdpd/wh_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kernels.hpp"
#include "whdpd/error.hpp"

namespace whdpd {

namespace {

double ipow(double x, int m) noexcept {
    double r = 1.0;
    for (int i = 0; i < m; ++i) r *= x;
    return r;
}

}  // namespace

FirBlock FirBlock::impulse(std::size_t num_taps) {
    if (num_taps == 0) throw InvalidArgument("FirBlock: at least one tap required");
    FirBlock block{std::vector<double>(num_taps, 0.0)};
    block.taps[num_taps / 2] = 1.0;
    return block;
}

PolyNlBlock PolyNlBlock::cubic(double a) { return PolyNlBlock{{{3, a}}}; }

double PolyNlBlock::eval(double y) const noexcept {
    double out = y;
    for (const auto& [order, a] : coeffs) out += a * ipow(y, order);
    return out;
}

double PolyNlBlock::slope(double y) const noexcept {
    double out = 1.0;
    for (const auto& [order, a] : coeffs) out += order * a * ipow(y, order - 1);
    return out;
}

WhModel::WhModel(std::vector<Block> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw InvalidArgument("WhModel: at least one block required");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const std::string where = "WhModel: block " + std::to_string(l);
        if (const auto* fir = std::get_if<FirBlock>(&layers_[l])) {
            if (fir->taps.empty()) throw InvalidArgument(where + " has no taps");
            for (double h : fir->taps)
                if (!std::isfinite(h)) throw InvalidArgument(where + " has a non-finite tap");
        } else {
            for (const auto& [order, a] : std::get<PolyNlBlock>(layers_[l]).coeffs) {
                if (order < 2) throw InvalidArgument(where + " has polynomial order below 2");
                if (!std::isfinite(a)) throw InvalidArgument(where + " has a non-finite coefficient");
            }
        }
    }
}

WhModel WhModel::lnl(std::size_t k1, std::size_t k2, double a) {
    return WhModel({FirBlock::impulse(k1), PolyNlBlock::cubic(a), FirBlock::impulse(k2)});
}

std::size_t WhModel::num_nonlinear() const noexcept {
    return static_cast<std::size_t>(std::count_if(layers_.begin(), layers_.end(), [](const Block& b) {
        return std::holds_alternative<PolyNlBlock>(b);
    }));
}

std::vector<double> fir_apply(const FirBlock& block, std::span<const double> x) {
    const auto n = static_cast<std::ptrdiff_t>(x.size());
    const auto k_len = static_cast<std::ptrdiff_t>(block.taps.size());
    const auto c = static_cast<std::ptrdiff_t>(block.center());
    // Reversed taps make both operands run forward: y[i] = sum_j r[j] x[i + c - K + 1 + j].
    const std::vector<double> reversed(block.taps.rbegin(), block.taps.rend());
    std::vector<double> y(x.size(), 0.0);
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const std::ptrdiff_t base = i + c - k_len + 1;
        const std::ptrdiff_t j_lo = std::max<std::ptrdiff_t>(0, -base);
        const std::ptrdiff_t j_hi = std::min<std::ptrdiff_t>(k_len, n - base);
        if (j_hi <= j_lo) continue;
        y[static_cast<std::size_t>(i)] =
            detail::dot(reversed.data() + j_lo, x.data() + base + j_lo, j_hi - j_lo);
    }
    return y;
}

SampledSignal fir_apply(const FirBlock& block, const SampledSignal& x) {
    return x.with_samples(fir_apply(block, x.samples()));
}

std::vector<double> nl_apply(const PolyNlBlock& block, std::span<const double> y) {
    std::vector<double> out(y.size());
    // Cubic-only is the common case; skip pow for it.
    if (block.coeffs.size() == 1 && block.coeffs.begin()->first == 3) {
        const double a = block.coeffs.begin()->second;
        for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] + a * y[i] * y[i] * y[i];
        return out;
    }
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = block.eval(y[i]);
    return out;
}

SampledSignal nl_apply(const PolyNlBlock& block, const SampledSignal& y) {
    return y.with_samples(nl_apply(block, y.samples()));
}

ForwardTrace wh_forward_trace(const WhModel& model, std::span<const double> x) {
    if (x.empty()) throw InvalidArgument("wh_forward: empty input");
    ForwardTrace trace;
    trace.inputs.reserve(model.size());
    std::vector<double> current(x.begin(), x.end());
    for (const auto& block : model.layers()) {
        std::vector<double> next;
        if (const auto* fir = std::get_if<FirBlock>(&block))
            next = fir_apply(*fir, current);
        else
            next = nl_apply(std::get<PolyNlBlock>(block), current);
        trace.inputs.push_back(std::move(current));
        current = std::move(next);
    }
    trace.output = std::move(current);
    return trace;
}

ForwardResult wh_forward(const WhModel& model, const SampledSignal& x) {
    auto trace = wh_forward_trace(model, x.samples());
    SampledSignal out = x.with_samples(trace.output);
    return ForwardResult{std::move(out), std::move(trace)};
}

ComplexityReport& ComplexityReport::operator+=(const ComplexityReport& other) noexcept {
    multiplications_per_sample += other.multiplications_per_sample;
    additions_per_sample += other.additions_per_sample;
    return *this;
}

ComplexityReport complexity(const FirBlock& block) {
    const auto k = static_cast<long long>(block.taps.size());
    return {k, k - 1};
}

ComplexityReport complexity(const PolyNlBlock& block) {
    ComplexityReport r;
    for (const auto& [order, a] : block.coeffs) {
        r.multiplications_per_sample += order;
        r.additions_per_sample += 1;
    }
    return r;
}

ComplexityReport complexity(const WhModel& model) {
    ComplexityReport total;
    for (const auto& block : model.layers())
        total += std::visit([](const auto& b) { return complexity(b); }, block);
    return total;
}

}  // namespace whdpd
