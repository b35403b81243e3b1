#pragma once

#include <vector>

#include "lforge/error.hpp"
#include "lforge/numerics/ops.hpp"

namespace lforge {

struct LossBreakdown {
    double cnn_loss = 0.0;   // mean per-frame cross-entropy
    double lstm_loss = 0.0;  // clip-level cross-entropy
    double lambda = 0.5;
    double combined = 0.0;   // lambda * lstm_loss + (1 - lambda) * cnn_loss
};

inline LossBreakdown combine_losses(double cnn_loss, double lstm_loss, double lambda) {
    require(lambda >= 0.0 && lambda <= 1.0, "combined_loss: lambda must lie in [0,1], got " + std::to_string(lambda));
    return {cnn_loss, lstm_loss, lambda, lambda * lstm_loss + (1.0 - lambda) * cnn_loss};
}

/// clip_probs [2] or [1,2]; frame_probs [N,2]; every frame inherits the clip label.
inline LossBreakdown combined_loss(const Tensor& clip_probs, const Tensor& frame_probs, int label, double lambda) {
    const std::vector<int> clip_label{label};
    const std::vector<int> frame_labels(frame_probs.dim(0), label);
    return combine_losses(ops::cross_entropy(frame_probs, frame_labels),
                          ops::cross_entropy(clip_probs.reshaped({1, clip_probs.size()}), clip_label), lambda);
}

struct LossGrads {
    Tensor clip_probs;   // [1,2]
    Tensor frame_probs;  // [N,2]
};

/// Gradient of `weight * combined_loss` with respect to both probability heads.
inline LossGrads combined_loss_backward(const Tensor& clip_probs, const Tensor& frame_probs, int label, double lambda,
                                        double weight = 1.0) {
    const std::vector<int> clip_label{label};
    const std::vector<int> frame_labels(frame_probs.dim(0), label);
    return {ops::cross_entropy_backward(clip_probs.reshaped({1, clip_probs.size()}), clip_label, weight * lambda),
            ops::cross_entropy_backward(frame_probs, frame_labels, weight * (1.0 - lambda))};
}

}  // namespace lforge
