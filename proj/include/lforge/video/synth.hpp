#pragma once

// Deterministic synthetic presentation-attack corpus.
//
// Every clip shows a textured face-like patch (skin ellipse, two eyes, a
// mouth) over a textured background. Genuine clips have eyes that blink
// (periodic intensity oscillation of the eye regions) and a patch that
// translates relative to a static background. Attack clips are replays: a
// frozen frame either held still (photo) or rigidly translated together with
// its background (handheld screen). Appearance statistics do not depend on the
// class; only the temporal behaviour does.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "lforge/error.hpp"
#include "lforge/rng.hpp"
#include "lforge/video/clip.hpp"
#include "lforge/video/manifest.hpp"
#include "lforge/video/rvid.hpp"

namespace lforge {

struct SynthConfig {
    std::uint64_t seed = 7;
    /// Seeds appearance (textures, tones, face placement). 0 derives it from seed.
    std::uint64_t texture_seed = 0;
    std::size_t clips = 200;
    std::size_t height = 64;
    std::size_t width = 64;
    std::size_t channels = 1;
    double fps = 30.0;
    std::size_t frames = 48;
    /// Peak translation in pixels (genuine patch motion and rigid replay motion).
    double motion_amplitude = 1.0;
    /// Oscillation frequency in Hz of motion and blinks.
    double frequency = 1.5;
    /// Fraction of eye contrast lost at the bottom of a blink.
    double blink_depth = 0.6;
    double noise_sigma = 0.002;
};

inline nlohmann::json to_json(const SynthConfig& c) {
    return {{"seed", c.seed},
            {"texture_seed", c.texture_seed},
            {"clips", c.clips},
            {"height", c.height},
            {"width", c.width},
            {"channels", c.channels},
            {"fps", c.fps},
            {"frames", c.frames},
            {"motion_amplitude", c.motion_amplitude},
            {"frequency", c.frequency},
            {"blink_depth", c.blink_depth},
            {"noise_sigma", c.noise_sigma}};
}

enum class SynthKind { genuine, static_attack, rigid_attack };

namespace synth_detail {

struct Wave {
    double kx, ky, phase, amp;
};

inline std::vector<Wave> random_waves(Rng& rng, int n, double fmin, double fmax, double amp) {
    std::vector<Wave> w;
    for (int i = 0; i < n; ++i) {
        const double f = rng.uniform(fmin, fmax);
        const double th = rng.uniform(0.0, 2.0 * std::numbers::pi);
        w.push_back({2.0 * std::numbers::pi * f * std::cos(th), 2.0 * std::numbers::pi * f * std::sin(th),
                     rng.uniform(0.0, 2.0 * std::numbers::pi), amp * rng.uniform(0.5, 1.0)});
    }
    return w;
}

inline double eval_waves(const std::vector<Wave>& ws, double x, double y) {
    double v = 0.0;
    for (const auto& w : ws) v += w.amp * std::sin(w.kx * x + w.ky * y + w.phase);
    return v;
}

/// Anti-aliased ellipse coverage with a ~1.5 px soft edge.
inline double ellipse_mask(double x, double y, double cx, double cy, double rx, double ry) {
    const double dx = (x - cx) / rx, dy = (y - cy) / ry;
    const double d = std::sqrt(dx * dx + dy * dy);
    const double edge_px = (1.0 - d) * std::min(rx, ry);
    return std::clamp(edge_px / 1.5 + 0.5, 0.0, 1.0);
}

struct Scene {
    double bg_base;
    std::vector<Wave> bg;
    double cx, cy, rx, ry;
    double skin;
    std::vector<Wave> face;
    double eye_dark;
    double mouth_dark;
    std::vector<double> tint;  // per channel
};

inline Scene random_scene(Rng& rng, const SynthConfig& cfg) {
    Scene s;
    const double W = static_cast<double>(cfg.width), H = static_cast<double>(cfg.height);
    s.bg = random_waves(rng, 16, 0.08, 0.2, 0.06);
    s.cx = W / 2.0 + rng.uniform(-2.0, 2.0);
    s.cy = H / 2.0 + rng.uniform(-2.0, 2.0);
    const double scale = rng.uniform(0.9, 1.1);
    s.rx = 0.19 * W * scale;
    s.ry = 0.24 * H * scale;
    s.skin = rng.uniform(0.55, 0.8);
    s.bg_base = s.skin - rng.uniform(0.15, 0.25);
    s.face = random_waves(rng, 4, 0.08, 0.25, 0.04);
    s.eye_dark = rng.uniform(0.05, 0.2);
    s.mouth_dark = rng.uniform(0.2, 0.35);
    for (std::size_t c = 0; c < cfg.channels; ++c) s.tint.push_back(cfg.channels == 1 ? 1.0 : rng.uniform(0.8, 1.1));
    return s;
}

/// Renders the scene. (fx, fy) translates the face only, (gx, gy) the whole
/// frame; eye_contrast in [0,1] scales eye darkness (1 = open).
inline Tensor render(const Scene& s, const SynthConfig& cfg, double fx, double fy, double gx, double gy,
                     double eye_contrast) {
    Tensor frame({cfg.height, cfg.width, cfg.channels});
    for (std::size_t iy = 0; iy < cfg.height; ++iy) {
        for (std::size_t ix = 0; ix < cfg.width; ++ix) {
            // Sample the scene at the point that lands on this pixel.
            const double x = static_cast<double>(ix) - gx, y = static_cast<double>(iy) - gy;
            double v = s.bg_base + eval_waves(s.bg, x, y);

            const double px = x - fx, py = y - fy;
            const double fm = ellipse_mask(px, py, s.cx, s.cy, s.rx, s.ry);
            if (fm > 0.0) {
                double face = s.skin + eval_waves(s.face, px - s.cx, py - s.cy);
                const double ey = s.cy - 0.25 * s.ry;
                const double erx = 0.22 * s.rx, ery = 0.13 * s.ry;
                const double eyes = std::max(ellipse_mask(px, py, s.cx - 0.4 * s.rx, ey, erx, ery),
                                             ellipse_mask(px, py, s.cx + 0.4 * s.rx, ey, erx, ery));
                face += eyes * eye_contrast * (s.eye_dark - face);
                const double mouth = ellipse_mask(px, py, s.cx, s.cy + 0.5 * s.ry, 0.45 * s.rx, 0.08 * s.ry);
                face += mouth * (s.mouth_dark - face);
                v = fm * face + (1.0 - fm) * v;
            }
            for (std::size_t c = 0; c < cfg.channels; ++c) frame.at(iy, ix, c) = v * s.tint[c];
        }
    }
    return frame;
}

inline BBox face_bbox(const Scene& s, const SynthConfig& cfg) {
    const int x0 = std::max(0, static_cast<int>(std::floor(s.cx - s.rx)));
    const int y0 = std::max(0, static_cast<int>(std::floor(s.cy - s.ry)));
    const int x1 = std::min(static_cast<int>(cfg.width), static_cast<int>(std::ceil(s.cx + s.rx)));
    const int y1 = std::min(static_cast<int>(cfg.height), static_cast<int>(std::ceil(s.cy + s.ry)));
    return BBox{x0, y0, x1 - x0, y1 - y0};
}

}  // namespace synth_detail

inline Label synth_label(std::size_t index) { return index % 2 == 0 ? Label::genuine : Label::attack; }

inline SynthKind synth_kind(std::size_t index) {
    if (synth_label(index) == Label::genuine) return SynthKind::genuine;
    return (index / 2) % 2 == 0 ? SynthKind::static_attack : SynthKind::rigid_attack;
}

/// Split per clip index: within each class a seeded permutation assigns the
/// first half to train, the next quarter to dev and the rest to test.
inline std::vector<Split> synth_splits(const SynthConfig& cfg) {
    std::vector<Split> splits(cfg.clips, Split::train);
    Rng rng(mix_seed(cfg.seed, 0x5e11));
    for (int cls = 0; cls < 2; ++cls) {
        std::vector<std::size_t> members;
        for (std::size_t i = static_cast<std::size_t>(cls); i < cfg.clips; i += 2) members.push_back(i);
        rng.shuffle(std::span<std::size_t>(members));
        const std::size_t n = members.size();
        const std::size_t n_train = n / 2, n_dev = n / 4;
        for (std::size_t k = 0; k < n; ++k)
            splits[members[k]] = k < n_train ? Split::train : (k < n_train + n_dev ? Split::dev : Split::test);
    }
    return splits;
}

/// Pure function of (cfg, index).
inline Clip synth_clip(const SynthConfig& cfg, std::size_t index) {
    require(cfg.height >= 8 && cfg.width >= 8, "synth: frame must be at least 8x8");
    require(cfg.channels == 1 || cfg.channels == 3, "synth: channels must be 1 or 3");
    require(cfg.frames >= 2, "synth: need at least 2 frames");
    require(cfg.fps > 0.0, "synth: fps must be positive");
    using namespace synth_detail;

    const std::uint64_t tex_seed = cfg.texture_seed ? cfg.texture_seed : mix_seed(cfg.seed, 0x7e47);
    Rng tex(mix_seed(tex_seed, index));
    Rng motion(mix_seed(cfg.seed, 0x1000 + index));
    Rng noise(mix_seed(cfg.seed, 0x9000000 + index));

    const Scene scene = random_scene(tex, cfg);
    const SynthKind kind = synth_kind(index);
    const double two_pi = 2.0 * std::numbers::pi;
    const double f_motion = cfg.frequency * motion.uniform(0.85, 1.15);
    const double f_blink = cfg.frequency * motion.uniform(0.85, 1.15);
    const double ph_x = motion.uniform(0.0, two_pi), ph_y = motion.uniform(0.0, two_pi);
    const double ph_blink = motion.uniform(0.0, two_pi);
    const double frozen_t = motion.uniform(0.0, 1.0 / cfg.frequency);
    const double A = cfg.motion_amplitude;

    auto blink = [&](double t) { return 1.0 - cfg.blink_depth * (0.5 + 0.5 * std::sin(two_pi * f_blink * t + ph_blink)); };

    Clip clip;
    clip.id = "clip_" + std::to_string(index);
    clip.fps = cfg.fps;
    clip.label = synth_label(index);
    clip.bbox = face_bbox(scene, cfg);
    for (std::size_t k = 0; k < cfg.frames; ++k) {
        const double t = static_cast<double>(k) / cfg.fps;
        const double dx = A * std::sin(two_pi * f_motion * t + ph_x);
        const double dy = 0.5 * A * std::sin(two_pi * f_motion * t + ph_y);
        Tensor frame;
        switch (kind) {
            case SynthKind::genuine: frame = render(scene, cfg, dx, dy, 0.0, 0.0, blink(t)); break;
            case SynthKind::static_attack: frame = render(scene, cfg, 0.0, 0.0, 0.0, 0.0, blink(frozen_t)); break;
            case SynthKind::rigid_attack: frame = render(scene, cfg, 0.0, 0.0, dx, dy, blink(frozen_t)); break;
        }
        for (auto& v : frame.data()) v = std::clamp(v + cfg.noise_sigma * noise.normal(), 0.0, 1.0);
        clip.frames.push_back(std::move(frame));
    }
    return clip;
}

/// Writes clip_NNNN.rvid files, manifest.jsonl and corpus.json into `dir`.
inline CorpusManifest synth_corpus(const SynthConfig& cfg, const std::filesystem::path& dir) {
    require(cfg.clips >= 2 && cfg.clips % 2 == 0, "synth: clip count must be even and positive");
    std::filesystem::create_directories(dir);
    const auto splits = synth_splits(cfg);
    CorpusManifest m;
    m.root = dir;
    m.seed = cfg.seed;
    for (std::size_t i = 0; i < cfg.clips; ++i) {
        Clip clip = synth_clip(cfg, i);
        char name[32];
        std::snprintf(name, sizeof name, "clip_%04zu.rvid", i);
        rvid::write_clip(clip, dir / name);
        m.entries.push_back({name, clip.label, splits[i], cfg.fps, clip.bbox});
    }
    write_manifest(m, dir / kManifestName);
    std::ofstream info(dir / kCorpusInfoName);
    info << to_json(cfg).dump(2) << '\n';
    return m;
}

}  // namespace lforge
