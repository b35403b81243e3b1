#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lforge/model/model.hpp"
#include "lforge/numerics/grad_check.hpp"

namespace lforge {

/// Central-difference check of Model::loss over every parameter. Parameter
/// values and normalization statistics are restored afterwards.
inline GradCheckResult check_model_gradients(Model& model, std::span<const FrameSeq* const> clips,
                                             std::span<const int> labels, double lambda, double step = 1e-5) {
    const ModelParams saved = model.params;
    const ops::RunningStats<double> saved_stats = model.norm_stats;
    auto named = model.params.named();
    std::vector<Parameter> params;
    params.reserve(named.size());
    for (const auto& [name, t] : named) params.emplace_back(name, *t);
    std::vector<Parameter*> ptrs;
    for (auto& p : params) ptrs.push_back(&p);

    auto loss = [&](bool with_grad) {
        for (std::size_t k = 0; k < named.size(); ++k) *named[k].second = params[k].value;
        ModelParams grads = model.params.zeros_like();
        const double l = model.loss(clips, labels, lambda, with_grad ? &grads : nullptr).combined;
        if (with_grad) {
            const auto g = grads.named();
            for (std::size_t k = 0; k < g.size(); ++k)
                for (std::size_t i = 0; i < params[k].grad.size(); ++i) params[k].grad[i] += (*g[k].second)[i];
        }
        return l;
    };
    GradCheckResult r = grad_check(loss, std::span<Parameter* const>(ptrs), step);
    model.params = saved;
    model.norm_stats = saved_stats;
    return r;
}

struct TinyCheck {
    GradCheckResult result;
    std::size_t parameters = 0;
};

/// The shipped tiny model (16x16 input, 4 frames) on two random clips, one
/// per class, so batch normalization couples frames across clips.
inline TinyCheck tiny_model_gradcheck(std::uint64_t seed = 1, const ModelConfig& cfg = ModelConfig::tiny()) {
    Model model = Model::initialized(cfg, seed);
    Rng rng(mix_seed(seed, 0x6c1c));
    std::vector<FrameSeq> clips(2);
    for (auto& clip : clips)
        for (std::size_t t = 0; t < cfg.frames; ++t) {
            Tensor f({cfg.height, cfg.width, cfg.channels});
            for (auto& v : f.data()) v = rng.uniform();
            clip.push_back(std::move(f));
        }
    const std::vector<const FrameSeq*> batch{&clips[0], &clips[1]};
    const std::vector<int> labels{static_cast<int>(Label::attack), static_cast<int>(Label::genuine)};
    return {check_model_gradients(model, batch, labels, 0.5), model.params.count()};
}

}  // namespace lforge
