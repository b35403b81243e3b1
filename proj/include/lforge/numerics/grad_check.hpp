#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include "lforge/numerics/tensor.hpp"

namespace lforge {

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    std::size_t checked = 0;
    bool finite = true;
    std::string message;
};

/// Compares reverse-mode gradients against central differences.
///
/// `loss(with_grad)` must return the scalar loss for the current parameter
/// values and, when `with_grad` is true, accumulate d(loss)/d(param) into
/// each parameter's grad. The relative error per element is
/// |g - g_fd| / max(|g|, |g_fd|, 1e-8).
template <typename LossFn>
GradCheckResult grad_check(LossFn&& loss, std::span<Parameter* const> params, double step = 1e-5) {
    GradCheckResult result;
    for (Parameter* p : params) p->zero_grad();
    const double base = loss(true);
    if (!std::isfinite(base)) {
        result.finite = false;
        result.message = "loss is not finite at the probe point";
        return result;
    }
    for (Parameter* p : params) {
        for (std::size_t i = 0; i < p->size(); ++i) {
            const double saved = p->value[i];
            p->value[i] = saved + step;
            const double up = loss(false);
            p->value[i] = saved - step;
            const double down = loss(false);
            p->value[i] = saved;
            if (!std::isfinite(up) || !std::isfinite(down)) {
                result.finite = false;
                result.message = "loss is not finite when perturbing " + p->name + "[" + std::to_string(i) + "]";
                return result;
            }
            const double numeric = (up - down) / (2.0 * step);
            const double analytic = p->grad[i];
            const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
            const double rel = std::abs(analytic - numeric) / denom;
            ++result.checked;
            if (rel > result.max_rel_error) {
                result.max_rel_error = rel;
                result.worst_param = p->name;
                result.worst_index = i;
            }
        }
    }
    return result;
}

}  // namespace lforge
