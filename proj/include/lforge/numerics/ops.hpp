#pragma once

// Forward and hand-written backward rules for the fixed set of primitives the
// clip model uses. Forward functions are pure. Backward functions take the
// forward inputs (and, where cheaper, outputs) plus the upstream gradient;
// parameter gradients are accumulated (+=), input gradients are returned.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "lforge/numerics/tensor.hpp"

namespace lforge::ops {

// ---------------------------------------------------------------------------
// conv2d: same-padding cross-correlation, HWC input, [k,k,Cin,Cout] kernels.

inline std::size_t conv_out_dim(std::size_t n, std::size_t stride) { return (n + stride - 1) / stride; }

template <typename T>
void check_conv_args(const BasicTensor<T>& input, const BasicTensor<T>& kernels, const BasicTensor<T>& bias,
                     std::size_t stride) {
    require(input.rank() == 3, "conv2d: input must be [H,W,Cin], got " + shape_string(input.shape()));
    require(kernels.rank() == 4, "conv2d: kernels must be [k,k,Cin,Cout], got " + shape_string(kernels.shape()));
    const std::size_t k = kernels.dim(0);
    require(kernels.dim(1) == k, "conv2d: kernel dim 1 (" + std::to_string(kernels.dim(1)) +
                                     ") must equal kernel dim 0 (" + std::to_string(k) + ")");
    require(k % 2 == 1, "conv2d: kernel size must be odd, got " + std::to_string(k));
    require(kernels.dim(2) == input.dim(2), "conv2d: kernel Cin (" + std::to_string(kernels.dim(2)) +
                                                ") does not match input channel dim (" +
                                                std::to_string(input.dim(2)) + ")");
    require(bias.rank() == 1 && bias.dim(0) == kernels.dim(3),
            "conv2d: bias length must equal Cout (" + std::to_string(kernels.dim(3)) + ")");
    const std::size_t pad = (k - 1) / 2;
    require(k <= input.dim(0) + 2 * pad, "conv2d: kernel larger than padded height");
    require(k <= input.dim(1) + 2 * pad, "conv2d: kernel larger than padded width");
    require(stride >= 1, "conv2d: stride must be >= 1");
}

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& kernels, const BasicTensor<T>& bias,
                      std::size_t stride = 1) {
    check_conv_args(input, kernels, bias, stride);
    const std::size_t H = input.dim(0), W = input.dim(1), Cin = input.dim(2);
    const std::size_t k = kernels.dim(0), Cout = kernels.dim(3);
    const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>((k - 1) / 2);
    const std::size_t Ho = conv_out_dim(H, stride), Wo = conv_out_dim(W, stride);

    BasicTensor<T> out({Ho, Wo, Cout});
    const T* in = input.data().data();
    const T* K = kernels.data().data();
    T* o = out.data().data();
    for (std::size_t y = 0; y < Ho; ++y) {
        for (std::size_t x = 0; x < Wo; ++x) {
            T* orow = o + (y * Wo + x) * Cout;
            for (std::size_t co = 0; co < Cout; ++co) orow[co] = bias[co];
            for (std::size_t dy = 0; dy < k; ++dy) {
                const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y * stride + dy) - pad;
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
                for (std::size_t dx = 0; dx < k; ++dx) {
                    const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(x * stride + dx) - pad;
                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W)) continue;
                    const T* ipix = in + (static_cast<std::size_t>(iy) * W + static_cast<std::size_t>(ix)) * Cin;
                    const T* kk = K + (dy * k + dx) * Cin * Cout;
                    for (std::size_t ci = 0; ci < Cin; ++ci) {
                        const T v = ipix[ci];
                        const T* kc = kk + ci * Cout;
                        for (std::size_t co = 0; co < Cout; ++co) orow[co] += v * kc[co];
                    }
                }
            }
        }
    }
    LFORGE_DEBUG_FINITE(out, "conv2d");
    return out;
}

/// Accumulates into grad_kernels / grad_bias. Fills grad_input when non-null.
template <typename T>
void conv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& kernels, const BasicTensor<T>& grad_out,
                     std::size_t stride, BasicTensor<T>* grad_input, BasicTensor<T>& grad_kernels,
                     BasicTensor<T>& grad_bias) {
    const std::size_t H = input.dim(0), W = input.dim(1), Cin = input.dim(2);
    const std::size_t k = kernels.dim(0), Cout = kernels.dim(3);
    const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>((k - 1) / 2);
    const std::size_t Ho = conv_out_dim(H, stride), Wo = conv_out_dim(W, stride);
    require(grad_out.shape() == Shape({Ho, Wo, Cout}), "conv2d_backward: grad_out shape mismatch");
    require(grad_kernels.shape() == kernels.shape(), "conv2d_backward: grad_kernels shape mismatch");

    if (grad_input) *grad_input = BasicTensor<T>(input.shape());
    const T* in = input.data().data();
    const T* K = kernels.data().data();
    const T* go = grad_out.data().data();
    T* gK = grad_kernels.data().data();
    T* gi = grad_input ? grad_input->data().data() : nullptr;

    for (std::size_t y = 0; y < Ho; ++y) {
        for (std::size_t x = 0; x < Wo; ++x) {
            const T* g = go + (y * Wo + x) * Cout;
            for (std::size_t co = 0; co < Cout; ++co) grad_bias[co] += g[co];
            for (std::size_t dy = 0; dy < k; ++dy) {
                const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y * stride + dy) - pad;
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
                for (std::size_t dx = 0; dx < k; ++dx) {
                    const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(x * stride + dx) - pad;
                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W)) continue;
                    const std::size_t ioff = (static_cast<std::size_t>(iy) * W + static_cast<std::size_t>(ix)) * Cin;
                    const T* ipix = in + ioff;
                    const std::size_t koff = (dy * k + dx) * Cin * Cout;
                    for (std::size_t ci = 0; ci < Cin; ++ci) {
                        const T v = ipix[ci];
                        T* gkc = gK + koff + ci * Cout;
                        const T* kc = K + koff + ci * Cout;
                        T acc = 0;
                        for (std::size_t co = 0; co < Cout; ++co) {
                            gkc[co] += v * g[co];
                            acc += kc[co] * g[co];
                        }
                        if (gi) gi[ioff + ci] += acc;
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// maxpool2: 2x2 window, stride 2.

template <typename T>
BasicTensor<T> maxpool2(const BasicTensor<T>& input) {
    require(input.rank() == 3, "maxpool2: input must be [H,W,C]");
    const std::size_t H = input.dim(0), W = input.dim(1), C = input.dim(2);
    require(H % 2 == 0, "maxpool2: height must be even, got " + std::to_string(H));
    require(W % 2 == 0, "maxpool2: width must be even, got " + std::to_string(W));
    BasicTensor<T> out({H / 2, W / 2, C});
    for (std::size_t y = 0; y < H / 2; ++y)
        for (std::size_t x = 0; x < W / 2; ++x)
            for (std::size_t c = 0; c < C; ++c) {
                T m = input.at(2 * y, 2 * x, c);
                m = std::max(m, input.at(2 * y, 2 * x + 1, c));
                m = std::max(m, input.at(2 * y + 1, 2 * x, c));
                m = std::max(m, input.at(2 * y + 1, 2 * x + 1, c));
                out.at(y, x, c) = m;
            }
    return out;
}

/// Routes each output gradient to the first maximal site in row-major window order.
template <typename T>
BasicTensor<T> maxpool2_backward(const BasicTensor<T>& input, const BasicTensor<T>& grad_out) {
    const std::size_t H = input.dim(0), W = input.dim(1), C = input.dim(2);
    require(grad_out.shape() == Shape({H / 2, W / 2, C}), "maxpool2_backward: grad_out shape mismatch");
    BasicTensor<T> gi(input.shape());
    for (std::size_t y = 0; y < H / 2; ++y)
        for (std::size_t x = 0; x < W / 2; ++x)
            for (std::size_t c = 0; c < C; ++c) {
                std::size_t by = 2 * y, bx = 2 * x;
                T best = input.at(by, bx, c);
                for (std::size_t dy = 0; dy < 2; ++dy)
                    for (std::size_t dx = 0; dx < 2; ++dx) {
                        const T v = input.at(2 * y + dy, 2 * x + dx, c);
                        if (v > best) {
                            best = v;
                            by = 2 * y + dy;
                            bx = 2 * x + dx;
                        }
                    }
                gi.at(by, bx, c) += grad_out.at(y, x, c);
            }
    return gi;
}

// ---------------------------------------------------------------------------
// batchnorm over the rows of a [B,F] matrix.

enum class Mode { train, infer };

inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.9;

template <typename T>
struct RunningStats {
    BasicTensor<T> mean;
    BasicTensor<T> var;

    explicit RunningStats(std::size_t features = 1)
        : mean(Shape{features}, T(0)), var(Shape{features}, T(1)) {}
};

/// Values the backward pass needs.
template <typename T>
struct BatchNormCache {
    Mode mode = Mode::train;
    BasicTensor<T> xhat;
    std::vector<T> inv_std;
};

template <typename T>
BasicTensor<T> batchnorm(const BasicTensor<T>& input, const BasicTensor<T>& gamma, const BasicTensor<T>& beta,
                         RunningStats<T>& stats, Mode mode, BatchNormCache<T>* cache = nullptr) {
    require(input.rank() == 2, "batchnorm: input must be [B,F]");
    const std::size_t B = input.dim(0), F = input.dim(1);
    require(gamma.size() == F && beta.size() == F, "batchnorm: gamma/beta length must equal F");
    require(stats.mean.size() == F && stats.var.size() == F, "batchnorm: running stats length must equal F");
    if (mode == Mode::train) require(B >= 2, "batchnorm: train mode needs batch size >= 2, got " + std::to_string(B));

    const T eps = static_cast<T>(kBatchNormEpsilon);
    const T mom = static_cast<T>(kBatchNormMomentum);
    std::vector<T> mean(F, T(0)), var(F, T(0));
    if (mode == Mode::train) {
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t f = 0; f < F; ++f) mean[f] += input.at(b, f);
        for (std::size_t f = 0; f < F; ++f) mean[f] /= static_cast<T>(B);
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t f = 0; f < F; ++f) {
                const T d = input.at(b, f) - mean[f];
                var[f] += d * d;
            }
        for (std::size_t f = 0; f < F; ++f) {
            var[f] /= static_cast<T>(B);
            stats.mean[f] = mom * stats.mean[f] + (T(1) - mom) * mean[f];
            stats.var[f] = mom * stats.var[f] + (T(1) - mom) * var[f];
        }
    } else {
        for (std::size_t f = 0; f < F; ++f) {
            mean[f] = stats.mean[f];
            var[f] = stats.var[f];
        }
    }

    std::vector<T> inv_std(F);
    for (std::size_t f = 0; f < F; ++f) inv_std[f] = T(1) / std::sqrt(var[f] + eps);
    BasicTensor<T> xhat(input.shape());
    BasicTensor<T> out(input.shape());
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t f = 0; f < F; ++f) {
            const T xh = (input.at(b, f) - mean[f]) * inv_std[f];
            xhat.at(b, f) = xh;
            out.at(b, f) = gamma[f] * xh + beta[f];
        }
    if (cache) {
        cache->mode = mode;
        cache->xhat = std::move(xhat);
        cache->inv_std = std::move(inv_std);
    }
    LFORGE_DEBUG_FINITE(out, "batchnorm");
    return out;
}

template <typename T>
BasicTensor<T> batchnorm_backward(const BatchNormCache<T>& cache, const BasicTensor<T>& gamma,
                                  const BasicTensor<T>& grad_out, BasicTensor<T>& grad_gamma,
                                  BasicTensor<T>& grad_beta) {
    const std::size_t B = grad_out.dim(0), F = grad_out.dim(1);
    require(cache.xhat.shape() == grad_out.shape(), "batchnorm_backward: cache/grad shape mismatch");
    BasicTensor<T> gi(grad_out.shape());
    std::vector<T> sum_g(F, T(0)), sum_gx(F, T(0));
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t f = 0; f < F; ++f) {
            const T g = grad_out.at(b, f);
            grad_beta[f] += g;
            grad_gamma[f] += g * cache.xhat.at(b, f);
            sum_g[f] += g * gamma[f];
            sum_gx[f] += g * gamma[f] * cache.xhat.at(b, f);
        }
    const T n = static_cast<T>(B);
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t f = 0; f < F; ++f) {
            const T dxhat = grad_out.at(b, f) * gamma[f];
            if (cache.mode == Mode::train)
                gi.at(b, f) = cache.inv_std[f] / n * (n * dxhat - sum_g[f] - cache.xhat.at(b, f) * sum_gx[f]);
            else
                gi.at(b, f) = dxhat * cache.inv_std[f];
        }
    return gi;
}

// ---------------------------------------------------------------------------
// Element-wise activations and softmax over the last axis.

enum class Activation { sigmoid, tanh, softmax };

template <typename T>
T sigmoid(T x) {
    if (x >= 0) return T(1) / (T(1) + std::exp(-x));
    const T e = std::exp(x);
    return e / (T(1) + e);
}

template <typename T>
BasicTensor<T> activation(Activation kind, const BasicTensor<T>& input) {
    BasicTensor<T> out(input.shape());
    switch (kind) {
        case Activation::sigmoid:
            for (std::size_t i = 0; i < input.size(); ++i) out[i] = sigmoid(input[i]);
            break;
        case Activation::tanh:
            for (std::size_t i = 0; i < input.size(); ++i) out[i] = std::tanh(input[i]);
            break;
        case Activation::softmax: {
            const std::size_t K = input.shape().back();
            const std::size_t rows = input.size() / K;
            for (std::size_t r = 0; r < rows; ++r) {
                const T* x = input.data().data() + r * K;
                T* y = out.data().data() + r * K;
                T m = x[0];
                for (std::size_t j = 1; j < K; ++j) m = std::max(m, x[j]);
                T s = 0;
                for (std::size_t j = 0; j < K; ++j) {
                    y[j] = std::exp(x[j] - m);
                    s += y[j];
                }
                for (std::size_t j = 0; j < K; ++j) y[j] /= s;
            }
            break;
        }
    }
    LFORGE_DEBUG_FINITE(out, "activation");
    return out;
}

/// Backward from the activation's output.
template <typename T>
BasicTensor<T> activation_backward(Activation kind, const BasicTensor<T>& output, const BasicTensor<T>& grad_out) {
    require(output.shape() == grad_out.shape(), "activation_backward: shape mismatch");
    BasicTensor<T> gi(output.shape());
    switch (kind) {
        case Activation::sigmoid:
            for (std::size_t i = 0; i < output.size(); ++i) gi[i] = grad_out[i] * output[i] * (T(1) - output[i]);
            break;
        case Activation::tanh:
            for (std::size_t i = 0; i < output.size(); ++i) gi[i] = grad_out[i] * (T(1) - output[i] * output[i]);
            break;
        case Activation::softmax: {
            const std::size_t K = output.shape().back();
            const std::size_t rows = output.size() / K;
            for (std::size_t r = 0; r < rows; ++r) {
                const T* y = output.data().data() + r * K;
                const T* g = grad_out.data().data() + r * K;
                T dot = 0;
                for (std::size_t j = 0; j < K; ++j) dot += y[j] * g[j];
                for (std::size_t j = 0; j < K; ++j) gi[r * K + j] = y[j] * (g[j] - dot);
            }
            break;
        }
    }
    return gi;
}

// ---------------------------------------------------------------------------
// Mean negative log-likelihood over a [B,K] matrix of probabilities.

inline constexpr double kLogClamp = 1e-12;

template <typename T>
void check_labels(const BasicTensor<T>& probs, std::span<const int> labels) {
    require(probs.rank() == 2, "cross_entropy: probs must be [B,K]");
    require(labels.size() == probs.dim(0), "cross_entropy: one label per row required");
    for (int l : labels)
        require(l >= 0 && static_cast<std::size_t>(l) < probs.dim(1),
                "cross_entropy: label " + std::to_string(l) + " outside the class range");
}

template <typename T>
T cross_entropy(const BasicTensor<T>& probs, std::span<const int> labels) {
    check_labels(probs, labels);
    const std::size_t B = probs.dim(0);
    T loss = 0;
    for (std::size_t b = 0; b < B; ++b)
        loss -= std::log(std::max(probs.at(b, static_cast<std::size_t>(labels[b])), static_cast<T>(kLogClamp)));
    return loss / static_cast<T>(B);
}

template <typename T>
BasicTensor<T> cross_entropy_backward(const BasicTensor<T>& probs, std::span<const int> labels, T grad_loss = T(1)) {
    check_labels(probs, labels);
    const std::size_t B = probs.dim(0);
    BasicTensor<T> gi(probs.shape());
    for (std::size_t b = 0; b < B; ++b) {
        const auto l = static_cast<std::size_t>(labels[b]);
        const T p = probs.at(b, l);
        // The clamp is flat below kLogClamp.
        if (p > static_cast<T>(kLogClamp)) gi.at(b, l) = -grad_loss / (static_cast<T>(B) * p);
    }
    return gi;
}

// ---------------------------------------------------------------------------
// linear: [B,Din] x [Din,Dout] + [Dout].

template <typename T>
BasicTensor<T> linear(const BasicTensor<T>& input, const BasicTensor<T>& weight, const BasicTensor<T>& bias) {
    require(input.rank() == 2 && weight.rank() == 2, "linear: input [B,Din] and weight [Din,Dout] required");
    const std::size_t B = input.dim(0), Din = input.dim(1), Dout = weight.dim(1);
    require(weight.dim(0) == Din, "linear: weight rows (" + std::to_string(weight.dim(0)) +
                                      ") must equal input features (" + std::to_string(Din) + ")");
    require(bias.size() == Dout, "linear: bias length must equal Dout");
    BasicTensor<T> out({B, Dout});
    for (std::size_t b = 0; b < B; ++b) {
        T* o = out.data().data() + b * Dout;
        for (std::size_t j = 0; j < Dout; ++j) o[j] = bias[j];
        const T* x = input.data().data() + b * Din;
        for (std::size_t i = 0; i < Din; ++i) {
            const T v = x[i];
            if (v == T(0)) continue;
            const T* w = weight.data().data() + i * Dout;
            for (std::size_t j = 0; j < Dout; ++j) o[j] += v * w[j];
        }
    }
    return out;
}

/// Accumulates weight/bias gradients; returns the input gradient when want_input.
template <typename T>
BasicTensor<T> linear_backward(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                               const BasicTensor<T>& grad_out, BasicTensor<T>& grad_weight,
                               BasicTensor<T>& grad_bias, bool want_input = true) {
    const std::size_t B = input.dim(0), Din = input.dim(1), Dout = weight.dim(1);
    require(grad_out.shape() == Shape({B, Dout}), "linear_backward: grad_out shape mismatch");
    BasicTensor<T> gi(input.shape());
    for (std::size_t b = 0; b < B; ++b) {
        const T* g = grad_out.data().data() + b * Dout;
        const T* x = input.data().data() + b * Din;
        for (std::size_t j = 0; j < Dout; ++j) grad_bias[j] += g[j];
        for (std::size_t i = 0; i < Din; ++i) {
            T* gw = grad_weight.data().data() + i * Dout;
            const T* w = weight.data().data() + i * Dout;
            const T v = x[i];
            T acc = 0;
            for (std::size_t j = 0; j < Dout; ++j) {
                gw[j] += v * g[j];
                acc += w[j] * g[j];
            }
            if (want_input) gi.at(b, i) = acc;
        }
    }
    return gi;
}

}  // namespace lforge::ops
