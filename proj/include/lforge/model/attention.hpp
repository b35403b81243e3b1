#pragma once

#include <vector>

#include "lforge/model/config.hpp"
#include "lforge/numerics/ops.hpp"

namespace lforge {

struct AttentionResult {
    Tensor c;       // pooled [D_h]
    Tensor alpha;   // weights [N], on the simplex
    Tensor scores;  // pre-softmax [N]
};

inline Tensor attention_weights(const Tensor& scores) { return ops::activation(ops::Activation::softmax, scores); }

/// c = sum_i alpha_i h_i with alpha = softmax(scores). Scores are w . h_i for
/// the shared kind (w: [D_h]) and W_i . h_{i-1} for per_step (W: [N, D_h],
/// h_0 = 0).
inline AttentionResult attention_pool(AttentionKind kind, const Tensor& w, const std::vector<Tensor>& h) {
    require(!h.empty(), "attention_pool: need at least one hidden state");
    const std::size_t N = h.size(), d_h = h.front().size();
    if (kind == AttentionKind::shared)
        require(w.size() == d_h, "attention_pool: scoring vector length must equal the hidden size");
    else
        require(w.rank() == 2 && w.dim(0) == N && w.dim(1) == d_h,
                "attention_pool: per-step scoring needs [" + std::to_string(N) + "," + std::to_string(d_h) +
                    "] weights, got " + shape_string(w.shape()));

    AttentionResult r;
    r.scores = Tensor({N});
    for (std::size_t i = 0; i < N; ++i) {
        double s = 0.0;
        if (kind == AttentionKind::shared) {
            for (std::size_t j = 0; j < d_h; ++j) s += w[j] * h[i][j];
        } else if (i > 0) {
            for (std::size_t j = 0; j < d_h; ++j) s += w.at(i, j) * h[i - 1][j];
        }
        r.scores[i] = s;
    }
    r.alpha = attention_weights(r.scores);
    r.c = Tensor({d_h});
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < d_h; ++j) r.c[j] += r.alpha[i] * h[i][j];
    return r;
}

/// Accumulates into grad_w and adds d(loss)/dh_i into grad_h[i].
inline void attention_backward(AttentionKind kind, const Tensor& w, const std::vector<Tensor>& h,
                               const AttentionResult& r, const Tensor& grad_c, Tensor& grad_w,
                               std::vector<Tensor>& grad_h) {
    const std::size_t N = h.size(), d_h = h.front().size();
    Tensor grad_alpha({N});
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < d_h; ++j) {
            grad_alpha[i] += grad_c[j] * h[i][j];
            grad_h[i][j] += r.alpha[i] * grad_c[j];
        }
    const Tensor grad_s = ops::activation_backward(ops::Activation::softmax, r.alpha, grad_alpha);
    for (std::size_t i = 0; i < N; ++i) {
        if (kind == AttentionKind::shared) {
            for (std::size_t j = 0; j < d_h; ++j) {
                grad_w[j] += grad_s[i] * h[i][j];
                grad_h[i][j] += grad_s[i] * w[j];
            }
        } else if (i > 0) {
            for (std::size_t j = 0; j < d_h; ++j) {
                grad_w.at(i, j) += grad_s[i] * h[i - 1][j];
                grad_h[i - 1][j] += grad_s[i] * w.at(i, j);
            }
        }
    }
}

}  // namespace lforge
