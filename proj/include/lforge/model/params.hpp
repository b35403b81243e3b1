#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lforge/model/config.hpp"
#include "lforge/numerics/tensor.hpp"
#include "lforge/rng.hpp"

namespace lforge {

/// Gate order used throughout: forget, input, candidate, output.
enum Gate : std::size_t { gate_f = 0, gate_i = 1, gate_g = 2, gate_o = 3 };
inline constexpr std::array<const char*, 4> kGateNames{"f", "i", "g", "o"};

struct ConvLayer {
    Tensor kernel;  // [3,3,Cin,Cout]
    Tensor bias;    // [Cout]
};

struct LstmParams {
    std::array<Tensor, 4> T;  // [D_in, D_h]
    std::array<Tensor, 4> R;  // [D_h, D_h]
    std::array<Tensor, 4> b;  // [D_h]

    static LstmParams zeros(std::size_t d_in, std::size_t d_h) {
        LstmParams p;
        for (std::size_t g = 0; g < 4; ++g) {
            p.T[g] = Tensor({d_in, d_h});
            p.R[g] = Tensor({d_h, d_h});
            p.b[g] = Tensor({d_h});
        }
        return p;
    }
    std::size_t input_dim() const { return T[0].dim(0); }
    std::size_t hidden_dim() const { return T[0].dim(1); }
};

struct DenseParams {
    Tensor weight;  // [D_in, D_out]
    Tensor bias;    // [D_out]
};

/// Every trainable tensor of the clip model. Gradients and optimizer moments
/// are further instances of the same layout.
struct ModelParams {
    std::vector<ConvLayer> convs;  // blocks flattened in order
    Tensor norm_gamma;             // [D_in], empty without batch norm
    Tensor norm_beta;
    DenseParams frame_head;  // [D_in, 2]
    LstmParams lstm;
    Tensor attention;  // [D_h] shared, [N, D_h] per_step
    DenseParams clip_head;  // [D_h, 2]

    static ModelParams zeros(const ModelConfig& cfg) {
        cfg.validate();
        ModelParams p;
        std::size_t cin = cfg.channels;
        for (const auto& block : cfg.blocks)
            for (std::size_t c = 0; c < block.convs; ++c) {
                p.convs.push_back({Tensor({3, 3, cin, block.width}), Tensor({block.width})});
                cin = block.width;
            }
        const std::size_t d_in = cfg.feature_dim(), d_h = cfg.hidden;
        if (cfg.batch_norm) {
            p.norm_gamma = Tensor({d_in});
            p.norm_beta = Tensor({d_in});
        }
        p.frame_head = {Tensor({d_in, 2}), Tensor({2})};
        p.lstm = LstmParams::zeros(d_in, d_h);
        p.attention = cfg.attention == AttentionKind::shared ? Tensor({d_h}) : Tensor({cfg.frames, d_h});
        p.clip_head = {Tensor({d_h, 2}), Tensor({2})};
        return p;
    }

    ModelParams zeros_like() const {
        ModelParams z = *this;
        for (auto& [name, t] : z.named()) t->fill(0.0);
        return z;
    }

    /// Stable (name, tensor) enumeration; the order defines checkpoint and
    /// initialization layout.
    std::vector<std::pair<std::string, Tensor*>> named() {
        std::vector<std::pair<std::string, Tensor*>> out;
        for (std::size_t i = 0; i < convs.size(); ++i) {
            out.emplace_back("conv" + std::to_string(i) + ".kernel", &convs[i].kernel);
            out.emplace_back("conv" + std::to_string(i) + ".bias", &convs[i].bias);
        }
        if (norm_gamma.size() > 0) {
            out.emplace_back("norm.gamma", &norm_gamma);
            out.emplace_back("norm.beta", &norm_beta);
        }
        out.emplace_back("frame_head.weight", &frame_head.weight);
        out.emplace_back("frame_head.bias", &frame_head.bias);
        for (std::size_t g = 0; g < 4; ++g) out.emplace_back(std::string("lstm.T_") + kGateNames[g], &lstm.T[g]);
        for (std::size_t g = 0; g < 4; ++g) out.emplace_back(std::string("lstm.R_") + kGateNames[g], &lstm.R[g]);
        for (std::size_t g = 0; g < 4; ++g) out.emplace_back(std::string("lstm.b_") + kGateNames[g], &lstm.b[g]);
        out.emplace_back("attention.w", &attention);
        out.emplace_back("clip_head.weight", &clip_head.weight);
        out.emplace_back("clip_head.bias", &clip_head.bias);
        return out;
    }

    std::vector<std::pair<std::string, const Tensor*>> named() const {
        std::vector<std::pair<std::string, const Tensor*>> out;
        for (auto& [n, t] : const_cast<ModelParams*>(this)->named()) out.emplace_back(n, t);
        return out;
    }

    std::size_t count() const {
        std::size_t n = 0;
        for (const auto& [name, t] : named()) n += t->size();
        return n;
    }

    /// this += other, tensor by tensor in enumeration order.
    void add(const ModelParams& other) {
        auto dst = named();
        const auto src = other.named();
        require(dst.size() == src.size(), "ModelParams::add: layout mismatch");
        for (std::size_t k = 0; k < dst.size(); ++k) {
            Tensor& d = *dst[k].second;
            const Tensor& s = *src[k].second;
            require(d.shape() == s.shape(), "ModelParams::add: shape mismatch for " + dst[k].first);
            for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
        }
    }

    void scale(double s) {
        for (auto& [name, t] : named())
            for (auto& v : t->data()) v *= s;
    }
};

/// Zero-mean uniform init with bound 1/sqrt(fan_in) per tensor, biases zero
/// except the forget gate (+1), batch-norm gamma 1 / beta 0.
inline ModelParams initialize_params(const ModelConfig& cfg, std::uint64_t seed) {
    ModelParams p = ModelParams::zeros(cfg);
    Rng rng(mix_seed(seed, 0x1417));
    auto fill_uniform = [&](Tensor& t, std::size_t fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (auto& v : t.data()) v = rng.uniform(-bound, bound);
    };
    for (auto& c : p.convs) fill_uniform(c.kernel, 9 * c.kernel.dim(2));
    if (cfg.batch_norm) p.norm_gamma.fill(1.0);
    fill_uniform(p.frame_head.weight, cfg.feature_dim());
    for (std::size_t g = 0; g < 4; ++g) fill_uniform(p.lstm.T[g], cfg.feature_dim());
    for (std::size_t g = 0; g < 4; ++g) fill_uniform(p.lstm.R[g], cfg.hidden);
    p.lstm.b[gate_f].fill(1.0);
    fill_uniform(p.attention, cfg.hidden);
    fill_uniform(p.clip_head.weight, cfg.hidden);
    return p;
}

}  // namespace lforge
