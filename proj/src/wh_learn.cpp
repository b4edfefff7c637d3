#include "whdpd/wh_learn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "kernels.hpp"
#include "whdpd/error.hpp"

namespace whdpd {

namespace {

std::vector<double> coeff_values(const PolyNlBlock& block) {
    std::vector<double> out;
    out.reserve(block.coeffs.size());
    for (const auto& [order, a] : block.coeffs) out.push_back(a);
    return out;
}

double sum_of_squares(const WhModel& model) {
    double acc = 0.0;
    for (const auto& block : model.layers())
        for (double p : block_parameters(block)) acc += p * p;
    return acc;
}

}  // namespace

std::vector<double> block_parameters(const Block& block) {
    if (const auto* fir = std::get_if<FirBlock>(&block)) return fir->taps;
    return coeff_values(std::get<PolyNlBlock>(block));
}

WhGradients WhGradients::zeros_like(const WhModel& model) {
    WhGradients g;
    for (const auto& block : model.layers())
        g.blocks.emplace_back(block_parameters(block).size(), 0.0);
    return g;
}

bool WhGradients::congruent_with(const WhModel& model) const noexcept {
    if (blocks.size() != model.size()) return false;
    for (std::size_t l = 0; l < blocks.size(); ++l)
        if (blocks[l].size() != block_parameters(model.layers()[l]).size()) return false;
    return true;
}

double WhGradients::norm() const noexcept {
    double acc = 0.0;
    for (const auto& b : blocks)
        for (double v : b) acc += v * v;
    return std::sqrt(acc);
}

WhGradients& WhGradients::operator+=(const WhGradients& other) {
    if (other.blocks.size() != blocks.size())
        throw InvalidArgument("WhGradients: block counts differ");
    for (std::size_t l = 0; l < blocks.size(); ++l) {
        if (other.blocks[l].size() != blocks[l].size())
            throw InvalidArgument("WhGradients: block sizes differ");
        for (std::size_t i = 0; i < blocks[l].size(); ++i) blocks[l][i] += other.blocks[l][i];
    }
    return *this;
}

WhGradients& WhGradients::operator*=(double factor) noexcept {
    for (auto& b : blocks)
        for (double& v : b) v *= factor;
    return *this;
}

double loss(std::span<const double> y, std::span<const double> reference) {
    if (y.size() != reference.size()) throw InvalidArgument("loss: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = y[i] - reference[i];
        acc += e * e;
    }
    return 0.5 * acc;
}

double loss(const SampledSignal& y, const SampledSignal& reference) {
    return loss(y.samples(), reference.samples());
}

double loss(const SampledSignal& y, const SampledSignal& reference, const WhModel& model,
            double ridge) {
    if (ridge < 0.0) throw InvalidArgument("loss: ridge weight must be >= 0");
    return loss(y, reference) + ridge * sum_of_squares(model);
}

std::vector<double> fir_backward_input(const FirBlock& block, std::span<const double> grad_out) {
    const auto n = static_cast<std::ptrdiff_t>(grad_out.size());
    const auto k_len = static_cast<std::ptrdiff_t>(block.taps.size());
    const auto c = static_cast<std::ptrdiff_t>(block.center());
    std::vector<double> gx(grad_out.size(), 0.0);
    for (std::ptrdiff_t m = 0; m < n; ++m) {
        // output index i = m - c + k must lie in [0, n).
        const std::ptrdiff_t k_lo = std::max<std::ptrdiff_t>(0, c - m);
        const std::ptrdiff_t k_hi = std::min<std::ptrdiff_t>(k_len, n - m + c);
        if (k_hi <= k_lo) continue;
        gx[static_cast<std::size_t>(m)] =
            detail::dot(block.taps.data() + k_lo, grad_out.data() + (m - c + k_lo), k_hi - k_lo);
    }
    return gx;
}

std::vector<double> fir_backward_taps(const FirBlock& block, std::span<const double> x,
                                      std::span<const double> grad_out) {
    if (x.size() != grad_out.size()) throw InvalidArgument("fir_backward_taps: length mismatch");
    const auto n = static_cast<std::ptrdiff_t>(x.size());
    const auto k_len = static_cast<std::ptrdiff_t>(block.taps.size());
    const auto c = static_cast<std::ptrdiff_t>(block.center());
    std::vector<double> gh(block.taps.size(), 0.0);
    for (std::ptrdiff_t k = 0; k < k_len; ++k) {
        // x index j = i + c - k must lie in [0, n).
        const std::ptrdiff_t i_lo = std::max<std::ptrdiff_t>(0, k - c);
        const std::ptrdiff_t i_hi = std::min<std::ptrdiff_t>(n, n + k - c);
        if (i_hi <= i_lo) continue;
        gh[static_cast<std::size_t>(k)] =
            detail::dot(grad_out.data() + i_lo, x.data() + (i_lo + c - k), i_hi - i_lo);
    }
    return gh;
}

WhGradients wh_backward(const WhModel& model, const ForwardTrace& trace,
                        std::span<const double> reference, double ridge) {
    if (trace.inputs.size() != model.size())
        throw InvalidArgument("wh_backward: trace does not match the model");
    if (trace.output.size() != reference.size())
        throw InvalidArgument("wh_backward: reference length does not match the output");
    for (const auto& in : trace.inputs)
        if (in.size() != reference.size())
            throw InvalidArgument("wh_backward: inconsistent intermediate lengths");

    WhGradients grads;
    grads.blocks.resize(model.size());

    std::vector<double> grad(reference.size());
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = trace.output[i] - reference[i];

    for (std::size_t idx = model.size(); idx-- > 0;) {
        const auto& block = model.layers()[idx];
        const auto& x = trace.inputs[idx];
        if (const auto* fir = std::get_if<FirBlock>(&block)) {
            grads.blocks[idx] = fir_backward_taps(*fir, x, grad);
            if (idx > 0) grad = fir_backward_input(*fir, grad);
        } else {
            const auto& poly = std::get<PolyNlBlock>(block);
            auto& g = grads.blocks[idx];
            g.reserve(poly.coeffs.size());
            for (const auto& [order, a] : poly.coeffs) {
                double acc = 0.0;
                for (std::size_t n = 0; n < x.size(); ++n) {
                    double p = x[n];
                    for (int m = 1; m < order; ++m) p *= x[n];
                    acc += grad[n] * p;
                }
                g.push_back(acc);
            }
            if (idx > 0)
                for (std::size_t n = 0; n < x.size(); ++n) grad[n] *= poly.slope(x[n]);
        }
    }

    if (ridge != 0.0) {
        for (std::size_t l = 0; l < model.size(); ++l) {
            const auto params = block_parameters(model.layers()[l]);
            for (std::size_t i = 0; i < params.size(); ++i) grads.blocks[l][i] += 2.0 * ridge * params[i];
        }
    }
    return grads;
}

WhGradients wh_backward(const WhModel& model, const ForwardTrace& trace,
                        const SampledSignal& reference, double ridge) {
    return wh_backward(model, trace, reference.samples(), ridge);
}

AdamState AdamState::for_model(const WhModel& model, const AdamHyper& hyper) {
    AdamState state;
    state.hyper = hyper;
    const auto zeros = WhGradients::zeros_like(model);
    state.first_moment = zeros.blocks;
    state.second_moment = zeros.blocks;
    return state;
}

void adam_step(AdamState& state, WhModel& model, const WhGradients& grads, double lr_scale) {
    if (!grads.congruent_with(model) || state.first_moment.size() != model.size() ||
        state.second_moment.size() != model.size())
        throw InvalidArgument("adam_step: state, model and gradients are not congruent");
    for (std::size_t l = 0; l < model.size(); ++l)
        if (state.first_moment[l].size() != grads.blocks[l].size() ||
            state.second_moment[l].size() != grads.blocks[l].size())
            throw InvalidArgument("adam_step: state, model and gradients are not congruent");

    const auto& hp = state.hyper;
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double bias1 = 1.0 - std::pow(hp.beta1, t);
    const double bias2 = 1.0 - std::pow(hp.beta2, t);

    auto update = [&](double& param, double g, double& m, double& v, double lr) {
        m = hp.beta1 * m + (1.0 - hp.beta1) * g;
        v = hp.beta2 * v + (1.0 - hp.beta2) * g * g;
        const double m_hat = m / bias1;
        const double v_hat = v / bias2;
        param -= lr * m_hat / (std::sqrt(v_hat) + hp.epsilon);
    };

    for (std::size_t l = 0; l < model.size(); ++l) {
        auto& m = state.first_moment[l];
        auto& v = state.second_moment[l];
        const auto& g = grads.blocks[l];
        if (auto* fir = std::get_if<FirBlock>(&model.layers()[l])) {
            const double lr = hp.lr_taps * lr_scale;
            for (std::size_t i = 0; i < g.size(); ++i) update(fir->taps[i], g[i], m[i], v[i], lr);
        } else {
            auto& poly = std::get<PolyNlBlock>(model.layers()[l]);
            const double lr = hp.lr_nonlinear * lr_scale;
            std::size_t i = 0;
            for (auto& [order, a] : poly.coeffs) {
                update(a, g[i], m[i], v[i], lr);
                ++i;
            }
        }
    }
}

void validate(const FitConfig& cfg) {
    if (cfg.iterations < 1) throw InvalidArgument("FitConfig: iterations must be >= 1");
    if (!(cfg.tolerance > 0.0)) throw InvalidArgument("FitConfig: tolerance must be positive");
    if (cfg.tolerance_window < 1) throw InvalidArgument("FitConfig: tolerance window must be >= 1");
    if (!(cfg.ridge >= 0.0)) throw InvalidArgument("FitConfig: ridge weight must be >= 0");
    if (!(cfg.lr_decay > 0.0 && cfg.lr_decay <= 1.0))
        throw InvalidArgument("FitConfig: lr_decay must be in (0, 1]");
    const auto& a = cfg.adam;
    if (!(a.lr_taps >= 0.0) || !(a.lr_nonlinear >= 0.0))
        throw InvalidArgument("FitConfig: learning rates must be >= 0");
    if (!(a.beta1 >= 0.0 && a.beta1 < 1.0) || !(a.beta2 >= 0.0 && a.beta2 < 1.0))
        throw InvalidArgument("FitConfig: Adam betas must be in [0, 1)");
    if (!(a.epsilon > 0.0)) throw InvalidArgument("FitConfig: Adam epsilon must be positive");
}

void validate(const DpdArtifact& artifact) {
    if (artifact.stored_nl_input_amplitude.size() != artifact.model.num_nonlinear())
        throw InvalidArgument("DpdArtifact: one stored amplitude per nonlinear block required");
    for (double a : artifact.stored_nl_input_amplitude)
        if (!(a > 0.0) || !std::isfinite(a))
            throw InvalidArgument("DpdArtifact: stored amplitudes must be positive");
}

DpdArtifact fit_postestimator(std::span<const SampledSignal> received,
                              std::span<const SampledSignal> reference, const WhModel& init,
                              const FitConfig& cfg) {
    validate(cfg);
    if (received.empty() || received.size() != reference.size())
        throw InvalidArgument("fit_postestimator: need matching, non-empty rail sets");
    std::size_t total = 0;
    for (std::size_t r = 0; r < received.size(); ++r) {
        if (received[r].size() != reference[r].size())
            throw InvalidArgument("fit_postestimator: rail length mismatch");
        total += received[r].size();
    }

    AdamHyper hyper = cfg.adam;
    if (cfg.freeze_nonlinear) hyper.lr_nonlinear = 0.0;
    WhModel model = init;
    AdamState state = AdamState::for_model(model, hyper);

    TrainingInfo info;
    WhModel best = model;
    double best_loss = std::numeric_limits<double>::infinity();
    std::vector<double> history;
    const double ridge_loss_weight = cfg.ridge;

    for (std::size_t t = 0;; ++t) {
        double e = 0.0;
        WhGradients grads = WhGradients::zeros_like(model);
        for (std::size_t r = 0; r < received.size(); ++r) {
            const auto trace = wh_forward_trace(model, received[r].samples());
            e += loss(trace.output, reference[r].samples());
            grads += wh_backward(model, trace, reference[r].samples());
        }
        if (ridge_loss_weight > 0.0) {
            e += ridge_loss_weight * sum_of_squares(model);
            for (std::size_t l = 0; l < model.size(); ++l) {
                const auto params = block_parameters(model.layers()[l]);
                for (std::size_t i = 0; i < params.size(); ++i)
                    grads.blocks[l][i] += 2.0 * ridge_loss_weight * params[i];
            }
        }
        if (!std::isfinite(e))
            throw DivergenceError("fit_postestimator: loss is not finite at iteration " +
                                      std::to_string(t),
                                  t);
        grads *= 1.0 / static_cast<double>(total);

        if (t == 0) info.initial_loss = e;
        if (e < best_loss) {
            best_loss = e;
            best = model;
        }
        info.log.push_back({t, e, grads.norm()});
        history.push_back(e);

        if (e == 0.0) {
            info.converged = true;
            break;
        }
        if (t >= cfg.tolerance_window) {
            const double prev = history[t - cfg.tolerance_window];
            if (std::abs(e - prev) <= cfg.tolerance * prev) {
                info.converged = true;
                break;
            }
        }
        if (t == cfg.iterations) break;

        adam_step(state, model, grads, std::pow(cfg.lr_decay, static_cast<double>(t)));
        info.iterations = t + 1;
    }

    // Final pass with the returned model for the stored amplitudes.
    std::vector<double> peaks(best.num_nonlinear(), 0.0);
    for (const auto& rail : received) {
        const auto trace = wh_forward_trace(best, rail.samples());
        std::size_t nl = 0;
        for (std::size_t l = 0; l < best.size(); ++l) {
            if (std::holds_alternative<PolyNlBlock>(best.layers()[l])) {
                peaks[nl] = std::max(peaks[nl], peak_abs(trace.inputs[l]));
                ++nl;
            }
        }
    }
    info.final_loss = best_loss;

    DpdArtifact artifact{std::move(best), std::move(peaks), std::move(info)};
    validate(artifact);
    return artifact;
}

DpdArtifact fit_postestimator(const SampledSignal& received, const SampledSignal& reference,
                              const WhModel& init, const FitConfig& cfg) {
    return fit_postestimator(std::span(&received, 1), std::span(&reference, 1), init, cfg);
}

DpdArtifact indirect_learn(std::span<const SampledSignal> tx, const ChannelOracle& channel,
                           const WhModel& init, const FitConfig& cfg, const SyncOptions& sync) {
    if (tx.empty()) throw InvalidArgument("indirect_learn: no rails");
    const Rails captured = channel(tx);
    if (captured.size() != tx.size())
        throw InvalidArgument("indirect_learn: channel returned a different rail count");
    Rails received;
    received.reserve(tx.size());
    for (std::size_t r = 0; r < tx.size(); ++r) {
        auto aligned = synchronize(tx[r], captured[r], sync).aligned;
        received.push_back(rms_normalize(aligned, rms(tx[r].samples())));
    }
    return fit_postestimator(received, tx, init, cfg);
}

double rescale_nl_coeff(double a, double s, int order) {
    if (!(s > 0.0)) throw InvalidArgument("rescale_nl_coeff: amplitude gain must be positive");
    return a * std::pow(s, order - 1);
}

PolyNlBlock rescale_nl_block(const PolyNlBlock& block, double s) {
    PolyNlBlock out;
    for (const auto& [order, a] : block.coeffs) out.coeffs[order] = rescale_nl_coeff(a, s, order);
    return out;
}

DpdArtifact rescale_artifact(const DpdArtifact& artifact, double s) {
    std::vector<Block> layers(artifact.model.layers().begin(), artifact.model.layers().end());
    for (auto& block : layers)
        if (auto* poly = std::get_if<PolyNlBlock>(&block)) *poly = rescale_nl_block(*poly, s);
    return DpdArtifact{WhModel(std::move(layers)), artifact.stored_nl_input_amplitude,
                       artifact.training};
}

Rails apply_dpd(const DpdArtifact& artifact, std::span<const SampledSignal> rails) {
    validate(artifact);
    if (rails.empty()) throw InvalidArgument("apply_dpd: no rails");
    std::vector<std::vector<double>> current;
    current.reserve(rails.size());
    for (const auto& r : rails) current.push_back(r.vec());

    std::size_t nl = 0;
    for (const auto& block : artifact.model.layers()) {
        if (const auto* fir = std::get_if<FirBlock>(&block)) {
            for (auto& c : current) c = fir_apply(*fir, c);
            continue;
        }
        double peak = 0.0;
        for (const auto& c : current) peak = std::max(peak, peak_abs(c));
        if (peak == 0.0) throw InvalidArgument("apply_dpd: zero signal at a nonlinear block");
        const double s = artifact.stored_nl_input_amplitude[nl++] / peak;
        const PolyNlBlock effective = rescale_nl_block(std::get<PolyNlBlock>(block), s);
        for (auto& c : current) c = nl_apply(effective, c);
    }

    Rails out;
    out.reserve(rails.size());
    for (std::size_t r = 0; r < rails.size(); ++r) out.push_back(rails[r].with_samples(std::move(current[r])));
    return out;
}

SampledSignal apply_dpd(const DpdArtifact& artifact, const SampledSignal& x) {
    return apply_dpd(artifact, std::span(&x, 1)).front();
}

}  // namespace whdpd
