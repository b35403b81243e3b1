#pragma once

// Eulerian motion magnification: I_hat = I + alpha * B, where B is the
// temporally bandpassed signal of every pixel of every pyramid level.

#include <cstddef>
#include <vector>

#include <json.hpp>

#include "lforge/error.hpp"
#include "lforge/motion/bandpass.hpp"
#include "lforge/motion/pyramid.hpp"
#include "lforge/video/clip.hpp"

namespace lforge {

struct MagnificationConfig {
    double alpha = 10.0;
    BandpassSpec bandpass{};
    std::size_t levels = 4;
    /// Multiplier on alpha for level l (finest first). Levels past the end use 1.
    std::vector<double> level_attenuation{0.5};

    double attenuation(std::size_t level) const {
        return level < level_attenuation.size() ? level_attenuation[level] : 1.0;
    }

    void validate() const {
        require(alpha >= 0.0, "magnify: alpha must be >= 0");
        for (double a : level_attenuation) require(a >= 0.0 && a <= 1.0, "magnify: level attenuation must lie in [0,1]");
    }
};

inline nlohmann::json to_json(const MagnificationConfig& c) {
    return {{"alpha", c.alpha},
            {"f_low", c.bandpass.f_low},
            {"f_high", c.bandpass.f_high},
            {"filter", std::string(to_string(c.bandpass.kind))},
            {"levels", c.levels},
            {"level_attenuation", c.level_attenuation}};
}

/// Bandpass every pixel time series of every level in place, scaled per level.
inline void amplify_stack(PyramidStack& stack, const MagnificationConfig& cfg) {
    const std::size_t T = stack.frame_count();
    BandpassSpec spec = cfg.bandpass;
    spec.fps = stack.fps;
    const TemporalFilter filter(spec, T);
    std::vector<double> series(T), band(T);
    for (std::size_t l = 0; l < stack.level_count(); ++l) {
        const double gain = cfg.alpha * cfg.attenuation(l);
        if (gain == 0.0) continue;
        auto& frames = stack.levels[l];
        const std::size_t n = frames.front().size();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t t = 0; t < T; ++t) series[t] = frames[t][i];
            filter.apply(series, band);
            for (std::size_t t = 0; t < T; ++t) frames[t][i] += gain * band[t];
        }
    }
}

/// Output values are not clamped; clamping to [0,1] happens at export.
inline Clip magnify_clip(const Clip& clip, const MagnificationConfig& cfg) {
    clip.validate();
    cfg.validate();
    require(clip.length() >= kMinSeriesLength,
            "magnify: clip needs at least 8 frames, has " + std::to_string(clip.length()));
    BandpassSpec spec = cfg.bandpass;
    spec.fps = clip.fps;
    spec.validate();

    PyramidStack stack = build_pyramid(clip, cfg.levels, PyramidKind::laplacian);
    amplify_stack(stack, cfg);
    Clip out = clip;
    out.frames = collapse_frames(stack);
    return out;
}

}  // namespace lforge
