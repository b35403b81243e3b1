#pragma once

#include <vector>

#include "lforge/model/config.hpp"
#include "lforge/model/params.hpp"
#include "lforge/numerics/ops.hpp"

namespace lforge {

struct BackboneCache {
    std::vector<Tensor> conv_in;   // input of each conv
    std::vector<Tensor> conv_out;  // tanh output of each conv
    std::vector<Tensor> pool_in;   // input of each block's pool
    Shape map_shape;
};

/// Frame [H,W,C] -> flattened final pooling map [D_in] (row-major HWC, so a
/// feature index encodes its spatial position).
inline Tensor backbone_forward(const ModelConfig& cfg, const std::vector<ConvLayer>& convs, const Tensor& frame,
                               BackboneCache* cache = nullptr) {
    require(frame.shape() == Shape({cfg.height, cfg.width, cfg.channels}),
            "backbone: frame shape " + shape_string(frame.shape()) + " does not match configured input " +
                shape_string({cfg.height, cfg.width, cfg.channels}));
    if (cache) *cache = BackboneCache{};
    Tensor x = frame;
    std::size_t layer = 0;
    for (const auto& block : cfg.blocks) {
        for (std::size_t c = 0; c < block.convs; ++c, ++layer) {
            if (cache) cache->conv_in.push_back(x);
            x = ops::activation(ops::Activation::tanh, ops::conv2d(x, convs[layer].kernel, convs[layer].bias));
            if (cache) cache->conv_out.push_back(x);
        }
        if (cache) cache->pool_in.push_back(x);
        x = ops::maxpool2(x);
    }
    if (cache) cache->map_shape = x.shape();
    return x.reshaped({x.size()});
}

/// Accumulates conv gradients into `grads`; returns d(loss)/d(frame) only when asked.
inline void backbone_backward(const ModelConfig& cfg, const std::vector<ConvLayer>& convs, const BackboneCache& cache,
                              const Tensor& grad_features, std::vector<ConvLayer>& grads,
                              Tensor* grad_frame = nullptr) {
    Tensor g = grad_features.reshaped(cache.map_shape);
    std::size_t layer = convs.size();
    for (std::size_t b = cfg.blocks.size(); b-- > 0;) {
        g = ops::maxpool2_backward(cache.pool_in[b], g);
        for (std::size_t c = 0; c < cfg.blocks[b].convs; ++c) {
            --layer;
            g = ops::activation_backward(ops::Activation::tanh, cache.conv_out[layer], g);
            const bool need_input = layer > 0 || grad_frame != nullptr;
            Tensor gi;
            ops::conv2d_backward(cache.conv_in[layer], convs[layer].kernel, g, 1, need_input ? &gi : nullptr,
                                 grads[layer].kernel, grads[layer].bias);
            g = std::move(gi);
        }
    }
    if (grad_frame) *grad_frame = std::move(g);
}

}  // namespace lforge
