#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lforge/model/attention.hpp"
#include "lforge/model/backbone.hpp"
#include "lforge/model/config.hpp"
#include "lforge/model/loss.hpp"
#include "lforge/model/lstm.hpp"
#include "lforge/model/params.hpp"
#include "lforge/parallel.hpp"
#include "lforge/video/clip.hpp"

namespace lforge {

/// Frames of one clip after preprocessing, each [H,W,C].
using FrameSeq = std::vector<Tensor>;

inline constexpr int kGenuineClass = static_cast<int>(Label::genuine);

struct ClipOutput {
    Tensor clip_probs;   // [2]: attack, genuine
    Tensor frame_probs;  // [N,2]
    Tensor attention;    // [N]
};

struct ClipCache {
    std::vector<BackboneCache> backbone;  // per frame
    Tensor z;                             // [N, D_in] features after normalization
    std::vector<LstmStepCache> steps;
    std::vector<Tensor> h;
    AttentionResult att;
};

struct BatchCache {
    ops::Mode mode = ops::Mode::train;
    std::vector<ClipCache> clips;
    ops::BatchNormCache<double> norm;
};

/// Per-frame backbone -> batch norm over every frame row of the batch ->
/// per-frame auxiliary head and an LSTM over the frames -> attention pooling
/// -> clip head.
class Model {
public:
    ModelConfig config;
    ModelParams params;
    ops::RunningStats<double> norm_stats;

    explicit Model(ModelConfig cfg)
        : config(std::move(cfg)), params(ModelParams::zeros(config)), norm_stats(config.feature_dim()) {}

    static Model initialized(const ModelConfig& cfg, std::uint64_t seed) {
        Model m(cfg);
        m.params = initialize_params(cfg, seed);
        return m;
    }

    std::vector<ClipOutput> forward(std::span<const FrameSeq* const> clips, ops::Mode mode, BatchCache* cache = nullptr,
                                    std::size_t threads = 1) {
        const std::size_t B = clips.size(), N = config.frames, D = config.feature_dim();
        require(B >= 1, "forward: empty batch");
        for (const FrameSeq* c : clips)
            require(c->size() == N, "forward: clip has " + std::to_string(c->size()) + " frames, model expects " +
                                        std::to_string(N));

        std::vector<ClipCache> local(cache ? 0 : B);
        std::vector<ClipCache>& cc = cache ? cache->clips : local;
        if (cache) {
            cache->mode = mode;
            cc.assign(B, ClipCache{});
        }
        for (auto& c : cc) c.backbone.resize(N);

        Tensor features({B * N, D});
        parallel_for(B * N, threads, [&](std::size_t r) {
            const std::size_t b = r / N, t = r % N;
            const Tensor f = backbone_forward(config, params.convs, (*clips[b])[t], cache ? &cc[b].backbone[t] : nullptr);
            std::copy(f.data().begin(), f.data().end(), features.data().begin() + static_cast<std::ptrdiff_t>(r * D));
        });

        Tensor z = config.batch_norm ? ops::batchnorm(features, params.norm_gamma, params.norm_beta, norm_stats, mode,
                                                      cache ? &cache->norm : nullptr)
                                     : features;

        std::vector<ClipOutput> out(B);
        parallel_for(B, threads, [&](std::size_t b) {
            ClipCache& c = cc[b];
            c.z = Tensor({N, D});
            std::copy(z.data().begin() + static_cast<std::ptrdiff_t>(b * N * D),
                      z.data().begin() + static_cast<std::ptrdiff_t>((b + 1) * N * D), c.z.data().begin());
            out[b] = forward_sequence(c);
            if (!cache) c = ClipCache{};
        });
        return out;
    }

    /// Inference on one clip (running normalization statistics).
    ClipOutput predict(const FrameSeq& clip) {
        const FrameSeq* p = &clip;
        return forward(std::span<const FrameSeq* const>(&p, 1), ops::Mode::infer).front();
    }

    /// Mean combined loss over the batch. When `grads` is given, adds the
    /// gradient of that mean into it.
    LossBreakdown loss(std::span<const FrameSeq* const> clips, std::span<const int> labels, double lambda,
                       ModelParams* grads, ops::Mode mode = ops::Mode::train, std::size_t threads = 1) {
        require(labels.size() == clips.size(), "loss: one label per clip required");
        BatchCache cache;
        const auto out = forward(clips, mode, grads ? &cache : nullptr, threads);
        const std::size_t B = clips.size();
        double cnn = 0.0, lstm = 0.0;
        for (std::size_t b = 0; b < B; ++b) {
            const LossBreakdown l = combined_loss(out[b].clip_probs, out[b].frame_probs, labels[b], lambda);
            cnn += l.cnn_loss;
            lstm += l.lstm_loss;
        }
        const LossBreakdown total = combine_losses(cnn / static_cast<double>(B), lstm / static_cast<double>(B), lambda);
        if (grads) backward(cache, out, labels, lambda, *grads, threads);
        return total;
    }

private:
    ClipOutput forward_sequence(ClipCache& c) const {
        const std::size_t N = config.frames, D = config.feature_dim();
        ClipOutput o;
        o.frame_probs = ops::activation(ops::Activation::softmax,
                                        ops::linear(c.z, params.frame_head.weight, params.frame_head.bias));
        LstmState state = LstmState::zeros(config.hidden);
        c.steps.resize(N);
        c.h.resize(N);
        for (std::size_t t = 0; t < N; ++t) {
            Tensor x({D});
            std::copy(c.z.data().begin() + static_cast<std::ptrdiff_t>(t * D),
                      c.z.data().begin() + static_cast<std::ptrdiff_t>((t + 1) * D), x.data().begin());
            state = lstm_step(params.lstm, x, state, &c.steps[t]);
            c.h[t] = state.h;
        }
        c.att = attention_pool(config.attention, params.attention, c.h);
        o.clip_probs = ops::activation(ops::Activation::softmax,
                                       ops::linear(c.att.c.reshaped({1, config.hidden}), params.clip_head.weight,
                                                   params.clip_head.bias))
                           .reshaped({2});
        o.attention = c.att.alpha;
        return o;
    }

    void backward(const BatchCache& cache, const std::vector<ClipOutput>& out, std::span<const int> labels,
                  double lambda, ModelParams& grads, std::size_t threads) const {
        const std::size_t B = out.size(), N = config.frames, D = config.feature_dim(), H = config.hidden;
        const double weight = 1.0 / static_cast<double>(B);

        // Heads, attention and LSTM per clip into private buffers.
        std::vector<ModelParams> clip_grads(B);
        Tensor grad_z({B * N, D});
        parallel_for(B, threads, [&](std::size_t b) {
            const ClipCache& c = cache.clips[b];
            ModelParams g = params.zeros_like();
            const LossGrads lg = combined_loss_backward(out[b].clip_probs, out[b].frame_probs, labels[b], lambda, weight);

            const Tensor clip_logit_grad = ops::activation_backward(
                ops::Activation::softmax, out[b].clip_probs.reshaped({1, 2}), lg.clip_probs);
            const Tensor grad_c = ops::linear_backward(c.att.c.reshaped({1, H}), params.clip_head.weight,
                                                       clip_logit_grad, g.clip_head.weight, g.clip_head.bias);
            std::vector<Tensor> grad_h(N, Tensor({H}));
            attention_backward(config.attention, params.attention, c.h, c.att, grad_c.reshaped({H}), g.attention,
                               grad_h);

            const Tensor frame_logit_grad =
                ops::activation_backward(ops::Activation::softmax, out[b].frame_probs, lg.frame_probs);
            Tensor gz = ops::linear_backward(c.z, params.frame_head.weight, frame_logit_grad, g.frame_head.weight,
                                             g.frame_head.bias);

            LstmState carry = LstmState::zeros(H);
            for (std::size_t t = N; t-- > 0;) {
                for (std::size_t j = 0; j < H; ++j) carry.h[j] += grad_h[t][j];
                Tensor gx;
                carry = lstm_step_backward(params.lstm, c.steps[t], carry, g.lstm, &gx);
                for (std::size_t k = 0; k < D; ++k) gz[t * D + k] += gx[k];
            }
            std::copy(gz.data().begin(), gz.data().end(),
                      grad_z.data().begin() + static_cast<std::ptrdiff_t>(b * N * D));
            clip_grads[b] = std::move(g);
        });

        ModelParams total = params.zeros_like();
        for (const auto& g : clip_grads) total.add(g);

        const Tensor grad_features =
            config.batch_norm
                ? ops::batchnorm_backward(cache.norm, params.norm_gamma, grad_z, total.norm_gamma, total.norm_beta)
                : grad_z;

        std::vector<std::vector<ConvLayer>> frame_grads(B * N);
        parallel_for(B * N, threads, [&](std::size_t r) {
            std::vector<ConvLayer> g = total.convs;
            for (auto& layer : g) {
                layer.kernel.fill(0.0);
                layer.bias.fill(0.0);
            }
            Tensor gf({D});
            std::copy(grad_features.data().begin() + static_cast<std::ptrdiff_t>(r * D),
                      grad_features.data().begin() + static_cast<std::ptrdiff_t>((r + 1) * D), gf.data().begin());
            backbone_backward(config, params.convs, cache.clips[r / N].backbone[r % N], gf, g);
            frame_grads[r] = std::move(g);
        });
        for (const auto& g : frame_grads)
            for (std::size_t l = 0; l < g.size(); ++l) {
                for (std::size_t i = 0; i < g[l].kernel.size(); ++i) total.convs[l].kernel[i] += g[l].kernel[i];
                for (std::size_t i = 0; i < g[l].bias.size(); ++i) total.convs[l].bias[i] += g[l].bias[i];
            }
        grads.add(total);
    }
};

}  // namespace lforge
