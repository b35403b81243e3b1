#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "lforge/error.hpp"
#include "lforge/numerics/tensor.hpp"
#include "lforge/video/clip.hpp"

namespace lforge {

enum class PyramidKind { gaussian, laplacian };

/// Multi-scale decomposition of a clip. levels[l][t] is frame t at level l,
/// sized ceil(H/2^l) x ceil(W/2^l). For the laplacian kind the last level is
/// the low-pass residual.
struct PyramidStack {
    std::vector<std::vector<Tensor>> levels;
    PyramidKind kind = PyramidKind::laplacian;
    double fps = 30.0;

    std::size_t level_count() const { return levels.size(); }
    std::size_t frame_count() const { return levels.empty() ? 0 : levels.front().size(); }
};

namespace pyramid_detail {

inline std::size_t reflect(std::ptrdiff_t i, std::size_t n) {
    if (n == 1) return 0;
    const auto m = static_cast<std::ptrdiff_t>(n);
    while (i < 0 || i >= m) i = i < 0 ? -i : 2 * (m - 1) - i;
    return static_cast<std::size_t>(i);
}

/// Separable 5-tap binomial filter [1 4 6 4 1] * gain / 16 per axis.
inline Tensor blur5(const Tensor& img, double gain) {
    static constexpr double k[5] = {1.0, 4.0, 6.0, 4.0, 1.0};
    const std::size_t H = img.dim(0), W = img.dim(1), C = img.dim(2);
    const double s = gain / 16.0;
    Tensor tmp(img.shape()), out(img.shape());
    for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x)
            for (std::size_t c = 0; c < C; ++c) {
                double acc = 0.0;
                for (int d = -2; d <= 2; ++d)
                    acc += k[d + 2] * img.at(y, reflect(static_cast<std::ptrdiff_t>(x) + d, W), c);
                tmp.at(y, x, c) = acc * s;
            }
    for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x)
            for (std::size_t c = 0; c < C; ++c) {
                double acc = 0.0;
                for (int d = -2; d <= 2; ++d)
                    acc += k[d + 2] * tmp.at(reflect(static_cast<std::ptrdiff_t>(y) + d, H), x, c);
                out.at(y, x, c) = acc * s;
            }
    return out;
}

}  // namespace pyramid_detail

/// Blur then keep even rows/columns: [H,W,C] -> [ceil(H/2), ceil(W/2), C].
inline Tensor pyr_down(const Tensor& img) {
    const Tensor b = pyramid_detail::blur5(img, 1.0);
    const std::size_t H = (img.dim(0) + 1) / 2, W = (img.dim(1) + 1) / 2, C = img.dim(2);
    Tensor out({H, W, C});
    for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x)
            for (std::size_t c = 0; c < C; ++c) out.at(y, x, c) = b.at(2 * y, 2 * x, c);
    return out;
}

/// Zero-insert into an out_h x out_w grid, then interpolate with the binomial filter.
inline Tensor pyr_up(const Tensor& img, std::size_t out_h, std::size_t out_w) {
    const std::size_t C = img.dim(2);
    require((out_h + 1) / 2 == img.dim(0) && (out_w + 1) / 2 == img.dim(1), "pyr_up: target size mismatch");
    Tensor z({out_h, out_w, C});
    for (std::size_t y = 0; y < img.dim(0); ++y)
        for (std::size_t x = 0; x < img.dim(1); ++x)
            for (std::size_t c = 0; c < C; ++c) z.at(2 * y, 2 * x, c) = img.at(y, x, c);
    return pyramid_detail::blur5(z, 2.0);
}

inline std::size_t max_pyramid_levels(std::size_t h, std::size_t w) {
    std::size_t n = std::min(h, w), l = 0;
    while (n >= 2) {
        n /= 2;
        ++l;
    }
    return l;
}

inline PyramidStack build_pyramid(const Clip& clip, std::size_t levels, PyramidKind kind) {
    clip.validate();
    const std::size_t max_levels = max_pyramid_levels(clip.height(), clip.width());
    require(levels >= 1 && levels <= max_levels, "build_pyramid: levels must lie in [1, " +
                                                     std::to_string(max_levels) + "], got " +
                                                     std::to_string(levels));
    PyramidStack stack;
    stack.kind = kind;
    stack.fps = clip.fps;
    stack.levels.assign(levels, {});
    for (const Tensor& frame : clip.frames) {
        std::vector<Tensor> gauss{frame};
        for (std::size_t l = 1; l < levels; ++l) gauss.push_back(pyr_down(gauss.back()));
        for (std::size_t l = 0; l < levels; ++l) {
            if (kind == PyramidKind::laplacian && l + 1 < levels) {
                Tensor band = gauss[l];
                const Tensor up = pyr_up(gauss[l + 1], band.dim(0), band.dim(1));
                for (std::size_t i = 0; i < band.size(); ++i) band[i] -= up[i];
                stack.levels[l].push_back(std::move(band));
            } else {
                stack.levels[l].push_back(gauss[l]);
            }
        }
    }
    return stack;
}

/// Inverse of the laplacian build: upsample-and-add from the residual down.
inline std::vector<Tensor> collapse_frames(const PyramidStack& stack) {
    require(stack.kind == PyramidKind::laplacian, "collapse_pyramid: gaussian pyramids are not invertible");
    require(stack.level_count() >= 1, "collapse_pyramid: empty stack");
    std::vector<Tensor> out;
    for (std::size_t t = 0; t < stack.frame_count(); ++t) {
        Tensor cur = stack.levels.back()[t];
        for (std::size_t l = stack.level_count() - 1; l-- > 0;) {
            const Tensor& band = stack.levels[l][t];
            Tensor up = pyr_up(cur, band.dim(0), band.dim(1));
            for (std::size_t i = 0; i < up.size(); ++i) up[i] += band[i];
            cur = std::move(up);
        }
        out.push_back(std::move(cur));
    }
    return out;
}

inline Clip collapse_pyramid(const PyramidStack& stack) {
    Clip clip;
    clip.fps = stack.fps;
    clip.frames = collapse_frames(stack);
    return clip;
}

}  // namespace lforge
