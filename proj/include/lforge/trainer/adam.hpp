#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lforge/error.hpp"
#include "lforge/model/params.hpp"

namespace lforge {

struct AdamConfig {
    double lr = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const {
        require(lr > 0.0, "adam: lr must be > 0");
        require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "adam: betas must lie in [0,1)");
        require(epsilon > 0.0, "adam: epsilon must be > 0");
    }
};

inline nlohmann::json to_json(const AdamConfig& c) {
    return {{"lr", c.lr}, {"beta1", c.beta1}, {"beta2", c.beta2}, {"epsilon", c.epsilon}};
}

struct AdamSlot {
    std::string name;
    Tensor* value;
    Tensor* grad;
};

/// Bias-corrected Adam. Moments are created lazily on the first step and
/// mirror the slot shapes from then on.
class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

    const AdamConfig& config() const { return cfg_; }
    std::uint64_t steps() const { return t_; }
    const std::vector<Tensor>& first_moments() const { return m_; }
    const std::vector<Tensor>& second_moments() const { return v_; }

    /// Updates every value from its gradient, then zeroes the gradients.
    /// A non-finite gradient aborts before anything changes.
    void step(std::span<const AdamSlot> slots) {
        for (const auto& s : slots) {
            require(s.value->shape() == s.grad->shape(), "adam: gradient shape mismatch for '" + s.name + "'");
            for (std::size_t i = 0; i < s.grad->size(); ++i)
                if (!std::isfinite((*s.grad)[i]))
                    throw RuntimeError("non-finite gradient in parameter '" + s.name + "' at element " +
                                       std::to_string(i));
        }
        if (m_.empty()) {
            for (const auto& s : slots) {
                m_.emplace_back(s.value->shape());
                v_.emplace_back(s.value->shape());
            }
        }
        require(m_.size() == slots.size(), "adam: parameter set changed between steps");
        ++t_;
        const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t k = 0; k < slots.size(); ++k) {
            Tensor& theta = *slots[k].value;
            Tensor& g = *slots[k].grad;
            require(m_[k].shape() == theta.shape(), "adam: parameter '" + slots[k].name + "' changed shape");
            for (std::size_t i = 0; i < theta.size(); ++i) {
                m_[k][i] = cfg_.beta1 * m_[k][i] + (1.0 - cfg_.beta1) * g[i];
                v_[k][i] = cfg_.beta2 * v_[k][i] + (1.0 - cfg_.beta2) * g[i] * g[i];
                const double m_hat = m_[k][i] / c1;
                const double v_hat = v_[k][i] / c2;
                theta[i] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
            }
            g.fill(0.0);
        }
    }

    void step(ModelParams& params, ModelParams& grads) {
        auto values = params.named();
        auto gs = grads.named();
        require(values.size() == gs.size(), "adam: gradient layout does not match parameters");
        std::vector<AdamSlot> slots;
        for (std::size_t k = 0; k < values.size(); ++k) slots.push_back({values[k].first, values[k].second, gs[k].second});
        step(slots);
    }

    void step(std::span<Parameter* const> params) {
        std::vector<AdamSlot> slots;
        for (Parameter* p : params) slots.push_back({p->name, &p->value, &p->grad});
        step(slots);
    }

private:
    AdamConfig cfg_;
    std::vector<Tensor> m_, v_;
    std::uint64_t t_ = 0;
};

}  // namespace lforge
