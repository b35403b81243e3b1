#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "lforge/error.hpp"
#include "lforge/numerics/tensor.hpp"
#include "lforge/video/clip.hpp"

namespace lforge {

/// Grows each side of `box` by ratio * (side length), then clamps to the frame.
inline BBox extend_bbox(const BBox& box, double ratio, std::size_t frame_h, std::size_t frame_w) {
    require(ratio >= 0.0 && ratio <= 1.0, "crop_extend: ratio must lie in [0,1]");
    const int gx = static_cast<int>(std::lround(ratio * box.w));
    const int gy = static_cast<int>(std::lround(ratio * box.h));
    const int x0 = std::max(0, box.x - gx);
    const int y0 = std::max(0, box.y - gy);
    const int x1 = std::min(static_cast<int>(frame_w), box.x + box.w + gx);
    const int y1 = std::min(static_cast<int>(frame_h), box.y + box.h + gy);
    require(x1 > x0 && y1 > y0, "crop_extend: empty crop after clamping");
    return BBox{x0, y0, x1 - x0, y1 - y0};
}

inline Tensor crop(const Tensor& frame, const BBox& r) {
    const std::size_t C = frame.dim(2);
    Tensor out({static_cast<std::size_t>(r.h), static_cast<std::size_t>(r.w), C});
    for (int y = 0; y < r.h; ++y)
        for (int x = 0; x < r.w; ++x)
            for (std::size_t c = 0; c < C; ++c)
                out.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), c) =
                    frame.at(static_cast<std::size_t>(r.y + y), static_cast<std::size_t>(r.x + x), c);
    return out;
}

/// Crops the face box enlarged to include surrounding background.
inline Tensor crop_extend(const Tensor& frame, const BBox& box, double ratio) {
    require(frame.rank() == 3, "crop_extend: frame must be [H,W,C]");
    return crop(frame, extend_bbox(box, ratio, frame.dim(0), frame.dim(1)));
}

/// Bilinear resize on a corner-aligned grid: output sample i maps to source
/// coordinate i * (in - 1) / (out - 1).
inline Tensor resize_bilinear(const Tensor& frame, std::size_t out_h, std::size_t out_w) {
    require(frame.rank() == 3, "resize_bilinear: frame must be [H,W,C]");
    require(out_h >= 1 && out_w >= 1, "resize_bilinear: output size must be positive");
    const std::size_t H = frame.dim(0), W = frame.dim(1), C = frame.dim(2);
    auto source = [](std::size_t i, std::size_t in, std::size_t out) {
        if (out == 1 || in == 1) return 0.0;
        return static_cast<double>(i * (in - 1)) / static_cast<double>(out - 1);
    };
    Tensor out({out_h, out_w, C});
    for (std::size_t i = 0; i < out_h; ++i) {
        const double sy = source(i, H, out_h);
        const auto y0 = static_cast<std::size_t>(std::floor(sy));
        const std::size_t y1 = std::min(y0 + 1, H - 1);
        const double ty = sy - static_cast<double>(y0);
        for (std::size_t j = 0; j < out_w; ++j) {
            const double sx = source(j, W, out_w);
            const auto x0 = static_cast<std::size_t>(std::floor(sx));
            const std::size_t x1 = std::min(x0 + 1, W - 1);
            const double tx = sx - static_cast<double>(x0);
            for (std::size_t c = 0; c < C; ++c) {
                const double top = frame.at(y0, x0, c) + (frame.at(y0, x1, c) - frame.at(y0, x0, c)) * tx;
                const double bot = frame.at(y1, x0, c) + (frame.at(y1, x1, c) - frame.at(y1, x0, c)) * tx;
                out.at(i, j, c) = top + (bot - top) * ty;
            }
        }
    }
    return out;
}

/// Source indices used by sample_frames.
inline std::vector<std::size_t> sample_indices(std::size_t length, std::size_t n) {
    require(n >= 2, "sample_frames: N must be >= 2");
    require(length >= 1, "sample_frames: empty clip");
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = length >= n ? (i * length) / n : i % length;
    return idx;
}

/// Exactly n frames: even subsampling of long clips, cyclic repetition of short ones.
inline Clip sample_frames(const Clip& clip, std::size_t n) {
    Clip out = clip;
    out.frames.clear();
    for (std::size_t i : sample_indices(clip.length(), n)) out.frames.push_back(clip.frames[i]);
    return out;
}

}  // namespace lforge
