#pragma once

#include <array>
#include <cmath>

#include "lforge/model/params.hpp"
#include "lforge/numerics/ops.hpp"

namespace lforge {

struct LstmState {
    Tensor C;  // memory cell [D_h]
    Tensor h;  // output [D_h]

    static LstmState zeros(std::size_t d_h) { return {Tensor({d_h}), Tensor({d_h})}; }
};

struct LstmStepCache {
    Tensor x, h_prev, C_prev;
    std::array<Tensor, 4> gate;  // activated f, i, g, o
    Tensor C, tanh_C;
};

/// f = sigma(T_f x + R_f h + b_f), i = sigma(...), g = tanh(...), o = sigma(...),
/// C = g*i + C_prev*f, h = tanh(C)*o.
inline LstmState lstm_step(const LstmParams& p, const Tensor& x, const LstmState& prev, LstmStepCache* cache = nullptr) {
    const std::size_t d_in = p.input_dim(), d_h = p.hidden_dim();
    require(x.size() == d_in, "lstm_step: input has " + std::to_string(x.size()) + " features, expected " +
                                  std::to_string(d_in));
    require(prev.h.size() == d_h && prev.C.size() == d_h, "lstm_step: state size does not match hidden size");

    std::array<Tensor, 4> z;
    for (std::size_t g = 0; g < 4; ++g) {
        z[g] = p.b[g];
        double* zg = z[g].data().data();
        for (std::size_t k = 0; k < d_in; ++k) {
            const double v = x[k];
            if (v == 0.0) continue;
            const double* row = p.T[g].data().data() + k * d_h;
            for (std::size_t j = 0; j < d_h; ++j) zg[j] += v * row[j];
        }
        for (std::size_t k = 0; k < d_h; ++k) {
            const double v = prev.h[k];
            if (v == 0.0) continue;
            const double* row = p.R[g].data().data() + k * d_h;
            for (std::size_t j = 0; j < d_h; ++j) zg[j] += v * row[j];
        }
    }
    std::array<Tensor, 4> a;
    for (std::size_t g = 0; g < 4; ++g)
        a[g] = ops::activation(g == gate_g ? ops::Activation::tanh : ops::Activation::sigmoid, z[g]);

    LstmState next = LstmState::zeros(d_h);
    Tensor tanh_C({d_h});
    for (std::size_t j = 0; j < d_h; ++j) {
        next.C[j] = a[gate_g][j] * a[gate_i][j] + prev.C[j] * a[gate_f][j];
        tanh_C[j] = std::tanh(next.C[j]);
        next.h[j] = tanh_C[j] * a[gate_o][j];
    }
    if (cache) {
        cache->x = x;
        cache->h_prev = prev.h;
        cache->C_prev = prev.C;
        cache->gate = std::move(a);
        cache->C = next.C;
        cache->tanh_C = std::move(tanh_C);
    }
    return next;
}

/// Backward through one step. `grad_next` holds d(loss)/dh and d(loss)/dC
/// of this step's output; returns the same for the previous state. Parameter
/// gradients accumulate into `grads`; d(loss)/dx goes to `grad_x` if given.
inline LstmState lstm_step_backward(const LstmParams& p, const LstmStepCache& cache, const LstmState& grad_next,
                                    LstmParams& grads, Tensor* grad_x = nullptr) {
    const std::size_t d_in = p.input_dim(), d_h = p.hidden_dim();
    const auto& f = cache.gate[gate_f];
    const auto& i = cache.gate[gate_i];
    const auto& g = cache.gate[gate_g];
    const auto& o = cache.gate[gate_o];

    std::array<Tensor, 4> dz;
    for (auto& t : dz) t = Tensor({d_h});
    LstmState grad_prev = LstmState::zeros(d_h);
    for (std::size_t j = 0; j < d_h; ++j) {
        const double dh = grad_next.h[j];
        const double tc = cache.tanh_C[j];
        const double dC = grad_next.C[j] + dh * o[j] * (1.0 - tc * tc);
        dz[gate_o][j] = dh * tc * o[j] * (1.0 - o[j]);
        dz[gate_f][j] = dC * cache.C_prev[j] * f[j] * (1.0 - f[j]);
        dz[gate_i][j] = dC * g[j] * i[j] * (1.0 - i[j]);
        dz[gate_g][j] = dC * i[j] * (1.0 - g[j] * g[j]);
        grad_prev.C[j] = dC * f[j];
    }

    if (grad_x) *grad_x = Tensor({d_in});
    for (std::size_t gi = 0; gi < 4; ++gi) {
        const double* d = dz[gi].data().data();
        for (std::size_t j = 0; j < d_h; ++j) grads.b[gi][j] += d[j];
        for (std::size_t k = 0; k < d_in; ++k) {
            const double v = cache.x[k];
            double* gT = grads.T[gi].data().data() + k * d_h;
            const double* T = p.T[gi].data().data() + k * d_h;
            double acc = 0.0;
            for (std::size_t j = 0; j < d_h; ++j) {
                gT[j] += v * d[j];
                acc += T[j] * d[j];
            }
            if (grad_x) (*grad_x)[k] += acc;
        }
        for (std::size_t k = 0; k < d_h; ++k) {
            const double v = cache.h_prev[k];
            double* gR = grads.R[gi].data().data() + k * d_h;
            const double* R = p.R[gi].data().data() + k * d_h;
            double acc = 0.0;
            for (std::size_t j = 0; j < d_h; ++j) {
                gR[j] += v * d[j];
                acc += R[j] * d[j];
            }
            grad_prev.h[k] += acc;
        }
    }
    return grad_prev;
}

}  // namespace lforge
