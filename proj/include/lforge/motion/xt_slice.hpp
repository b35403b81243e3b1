#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include "lforge/error.hpp"
#include "lforge/numerics/tensor.hpp"
#include "lforge/video/clip.hpp"

namespace lforge {

/// Row y of every frame stacked top to bottom: a [T, W] image in which
/// horizontal motion appears as slanted traces. Channels are averaged.
inline Tensor xt_slice(const Clip& clip, std::size_t y) {
    clip.validate();
    require(y < clip.height(), "xt_slice: row " + std::to_string(y) + " outside frame height " +
                                   std::to_string(clip.height()));
    const std::size_t T = clip.length(), W = clip.width(), C = clip.channels();
    Tensor img({T, W});
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t x = 0; x < W; ++x) {
            double v = 0.0;
            for (std::size_t c = 0; c < C; ++c) v += clip.frames[t].at(y, x, c);
            img.at(t, x) = v / static_cast<double>(C);
        }
    return img;
}

/// Binary 8-bit PGM (P5); values clamped to [0,1].
inline void write_pgm(const Tensor& img, const std::filesystem::path& path) {
    require(img.rank() == 2, "write_pgm: image must be [rows, cols]");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeError("cannot open '" + path.string() + "' for writing");
    out << "P5\n" << img.dim(1) << ' ' << img.dim(0) << "\n255\n";
    for (double v : img.data())
        out.put(static_cast<char>(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
    if (!out) throw RuntimeError("write failed for '" + path.string() + "'");
}

}  // namespace lforge
