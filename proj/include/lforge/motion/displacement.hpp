#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "lforge/error.hpp"
#include "lforge/numerics/tensor.hpp"

namespace lforge {

struct Shift {
    double dx = 0.0;
    double dy = 0.0;
};

namespace displacement_detail {

inline std::vector<double> gray(const Tensor& f) {
    const std::size_t H = f.dim(0), W = f.dim(1), C = f.dim(2);
    std::vector<double> g(H * W, 0.0);
    for (std::size_t i = 0; i < H * W; ++i) {
        for (std::size_t c = 0; c < C; ++c) g[i] += f[i * C + c];
        g[i] /= static_cast<double>(C);
    }
    return g;
}

inline double parabolic_offset(double left, double center, double right) {
    const double denom = left - 2.0 * center + right;
    if (denom >= 0.0) return 0.0;
    return std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
}

}  // namespace displacement_detail

/// Dominant translation of `test` relative to `reference` (positive dx = content
/// moved right). Integer peak of the normalized cross-correlation over shifts
/// up to `max_shift`, refined per axis by a parabolic fit. The correlation
/// wraps around the frame edges, which is exact for content on a flat border.
inline Shift measure_displacement(const Tensor& reference, const Tensor& test, int max_shift = 3) {
    require(reference.rank() == 3 && reference.shape() == test.shape(),
            "measure_displacement: frames must share one [H,W,C] shape");
    const auto H = static_cast<int>(reference.dim(0)), W = static_cast<int>(reference.dim(1));
    std::vector<double> a = displacement_detail::gray(reference), b = displacement_detail::gray(test);

    auto center = [](std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m += x;
        m /= static_cast<double>(v.size());
        double ss = 0.0;
        for (double& x : v) {
            x -= m;
            ss += x * x;
        }
        return ss;
    };
    const double na = center(a), nb = center(b);
    if (na <= 1e-20 || nb <= 1e-20) throw RuntimeError("measure_displacement: flat frame, shift undefined");
    const double norm = std::sqrt(na * nb);

    const int R = max_shift;
    const int side = 2 * R + 1;
    std::vector<double> ncc(static_cast<std::size_t>(side * side));
    auto at = [&](int sx, int sy) -> double& { return ncc[static_cast<std::size_t>((sy + R) * side + (sx + R))]; };
    for (int sy = -R; sy <= R; ++sy)
        for (int sx = -R; sx <= R; ++sx) {
            double acc = 0.0;
            for (int y = 0; y < H; ++y) {
                const int ty = (y + sy + H) % H;
                for (int x = 0; x < W; ++x)
                    acc += a[static_cast<std::size_t>(y * W + x)] * b[static_cast<std::size_t>(ty * W + (x + sx + W) % W)];
            }
            at(sx, sy) = acc / norm;
        }

    int bx = 0, by = 0;
    double best = at(0, 0);
    for (int sy = -R; sy <= R; ++sy)
        for (int sx = -R; sx <= R; ++sx)
            if (at(sx, sy) > best) {
                best = at(sx, sy);
                bx = sx;
                by = sy;
            }

    Shift s{static_cast<double>(bx), static_cast<double>(by)};
    if (bx > -R && bx < R) s.dx += displacement_detail::parabolic_offset(at(bx - 1, by), best, at(bx + 1, by));
    if (by > -R && by < R) s.dy += displacement_detail::parabolic_offset(at(bx, by - 1), best, at(bx, by + 1));
    return s;
}

}  // namespace lforge
