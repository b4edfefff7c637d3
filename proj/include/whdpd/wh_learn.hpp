#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "whdpd/dsp.hpp"
#include "whdpd/signal.hpp"
#include "whdpd/wh_model.hpp"

namespace whdpd {

/// Partial derivatives laid out like the model's parameters: one vector per
/// block, FIR taps in tap order and polynomial coefficients in ascending order.
struct WhGradients {
    std::vector<std::vector<double>> blocks;

    static WhGradients zeros_like(const WhModel& model);

    bool congruent_with(const WhModel& model) const noexcept;
    double norm() const noexcept;
    WhGradients& operator+=(const WhGradients& other);
    WhGradients& operator*=(double factor) noexcept;
};

/// Flattened parameters of one block, in the same layout as WhGradients.
std::vector<double> block_parameters(const Block& block);

/// 0.5 * sum (y - ref)^2.
double loss(std::span<const double> y, std::span<const double> reference);
double loss(const SampledSignal& y, const SampledSignal& reference);
/// Adds ridge * (sum of squares of every tap and coefficient of `model`).
double loss(const SampledSignal& y, const SampledSignal& reference, const WhModel& model,
            double ridge);

/// Adjoint of fir_apply with respect to its input: correlation of `grad_out`
/// with the taps over the same window.
std::vector<double> fir_backward_input(const FirBlock& block, std::span<const double> grad_out);
/// dE/dh[k] = sum_n grad_out[n] * x[n + K/2 - k].
std::vector<double> fir_backward_taps(const FirBlock& block, std::span<const double> x,
                                      std::span<const double> grad_out);

/// Exact gradient of 0.5 |y_out - reference|^2 (+ ridge term) for a trace
/// produced by wh_forward on `model`. Throws InvalidArgument when the trace
/// or reference do not match the model.
WhGradients wh_backward(const WhModel& model, const ForwardTrace& trace,
                        std::span<const double> reference, double ridge = 0.0);
WhGradients wh_backward(const WhModel& model, const ForwardTrace& trace,
                        const SampledSignal& reference, double ridge = 0.0);

struct AdamHyper {
    double lr_taps = 1e-3;
    double lr_nonlinear = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    AdamHyper hyper;
    std::vector<std::vector<double>> first_moment;
    std::vector<std::vector<double>> second_moment;
    std::size_t step = 0;

    static AdamState for_model(const WhModel& model, const AdamHyper& hyper = {});
};

/// One bias-corrected Adam update of every parameter, in place. FIR taps use
/// `lr_taps` and polynomial coefficients `lr_nonlinear`, each multiplied by
/// `lr_scale`.
void adam_step(AdamState& state, WhModel& model, const WhGradients& grads, double lr_scale = 1.0);

struct FitConfig {
    std::size_t iterations = 2000;
    AdamHyper adam;
    /// Learning rate at iteration t is lr * lr_decay^t.
    double lr_decay = 1.0;
    /// Stop once |E(t) - E(t - window)| / E(t - window) drops below this.
    double tolerance = 1e-9;
    std::size_t tolerance_window = 10;
    double ridge = 0.0;
    /// Hold polynomial coefficients at their initial values (linear-only DPD).
    bool freeze_nonlinear = false;
};

void validate(const FitConfig& cfg);

struct FitLogEntry {
    std::size_t iteration = 0;
    double loss = 0.0;
    double gradient_norm = 0.0;
};

struct TrainingInfo {
    double initial_loss = 0.0;
    double final_loss = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<FitLogEntry> log;
};

/// Trained model plus what is needed to reproduce the training conditions
/// in front of the device.
struct DpdArtifact {
    WhModel model;
    /// Peak |sample| entering each polynomial block, in cascade order.
    std::vector<double> stored_nl_input_amplitude;
    TrainingInfo training;
};

/// Throws InvalidArgument when the amplitudes do not match the polynomial
/// blocks or are not all positive.
void validate(const DpdArtifact& artifact);

/// Full-batch fit of `init` mapping `received` onto `reference`, summed over
/// rails. Returns the lowest-loss iterate; gradients are divided by the total
/// sample count before the Adam update. Throws DivergenceError on a
/// non-finite loss.
DpdArtifact fit_postestimator(std::span<const SampledSignal> received,
                              std::span<const SampledSignal> reference, const WhModel& init,
                              const FitConfig& cfg);
DpdArtifact fit_postestimator(const SampledSignal& received, const SampledSignal& reference,
                              const WhModel& init, const FitConfig& cfg);

/// Forward model of the device: maps the transmitted rails to the captured ones.
using ChannelOracle = std::function<Rails(std::span<const SampledSignal>)>;

/// Single-shot indirect learning: pass `tx` through the channel, align and
/// RMS-normalize each captured rail against its transmitted rail, then fit a
/// post-inverse which is returned as the pre-distorter.
DpdArtifact indirect_learn(std::span<const SampledSignal> tx, const ChannelOracle& channel,
                           const WhModel& init, const FitConfig& cfg,
                           const SyncOptions& sync = {});

/// Coefficient of the order-m term after the input amplitude changes by `s`:
/// f(s x)/s = x + a s^(m-1) x^m. Throws InvalidArgument for s <= 0.
double rescale_nl_coeff(double a, double s, int order = 3);
PolyNlBlock rescale_nl_block(const PolyNlBlock& block, double s);

/// Same artifact with every polynomial coefficient rescaled for an input
/// amplitude change of `s`.
DpdArtifact rescale_artifact(const DpdArtifact& artifact, double s);

/// Runs the artifact's cascade, but before each polynomial block the signal
/// is scaled so its peak equals the stored amplitude and scaled back after
/// it. With several rails one common scale per block is used.
SampledSignal apply_dpd(const DpdArtifact& artifact, const SampledSignal& x);
Rails apply_dpd(const DpdArtifact& artifact, std::span<const SampledSignal> rails);

}  // namespace whdpd
