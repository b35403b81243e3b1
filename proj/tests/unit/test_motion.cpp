#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>

#include "../support/blob_fixture.hpp"
#include "../support/signal_fixture.hpp"
#include "helpers.hpp"
#include "lforge/motion/bandpass.hpp"
#include "lforge/motion/displacement.hpp"
#include "lforge/motion/magnify.hpp"
#include "lforge/motion/pyramid.hpp"
#include "lforge/motion/xt_slice.hpp"
#include "lforge/video/preprocess.hpp"

using namespace lforge;
using lforge::testing::BlobSpec;
using lforge::testing::fitted_amplitude;
using lforge::testing::random_tensor;
using lforge::testing::sinusoid;

namespace {

Clip random_clip(Rng& rng, std::size_t T, std::size_t H, std::size_t W, std::size_t C = 1) {
    Clip clip;
    clip.fps = 30.0;
    for (std::size_t t = 0; t < T; ++t) clip.frames.push_back(random_tensor({H, W, C}, rng, 0.0, 1.0));
    return clip;
}

double clip_max_diff(const Clip& a, const Clip& b) {
    double m = 0.0;
    for (std::size_t t = 0; t < a.length(); ++t) m = std::max(m, max_abs_diff(a.frames[t], b.frames[t]));
    return m;
}

// Intensity-weighted horizontal centroid of each XT row above the background.
std::vector<double> trace_positions(const Tensor& xt, double background) {
    std::vector<double> pos;
    for (std::size_t t = 0; t < xt.dim(0); ++t) {
        double w = 0.0, wx = 0.0;
        for (std::size_t x = 0; x < xt.dim(1); ++x) {
            const double v = std::max(0.0, xt.at(t, x) - background);
            w += v;
            wx += v * static_cast<double>(x);
        }
        pos.push_back(wx / w);
    }
    return pos;
}

double spread(const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi - *lo;
}

}  // namespace

TEST(Pyramid, SingleLevelIsIdentity) {
    Rng rng(1);
    Clip clip = random_clip(rng, 3, 9, 7);
    PyramidStack s = build_pyramid(clip, 1, PyramidKind::laplacian);
    ASSERT_EQ(s.level_count(), 1u);
    for (std::size_t t = 0; t < 3; ++t) EXPECT_EQ(s.levels[0][t], clip.frames[t]);
    EXPECT_EQ(clip_max_diff(collapse_pyramid(s), clip), 0.0);
}

TEST(Pyramid, LevelDimensions) {
    Rng rng(2);
    PyramidStack s = build_pyramid(random_clip(rng, 2, 64, 64), 3, PyramidKind::laplacian);
    ASSERT_EQ(s.level_count(), 3u);
    EXPECT_EQ(s.levels[0][0].shape(), (Shape{64, 64, 1}));
    EXPECT_EQ(s.levels[1][0].shape(), (Shape{32, 32, 1}));
    EXPECT_EQ(s.levels[2][0].shape(), (Shape{16, 16, 1}));
    PyramidStack odd = build_pyramid(random_clip(rng, 2, 13, 17), 3, PyramidKind::gaussian);
    EXPECT_EQ(odd.levels[1][0].shape(), (Shape{7, 9, 1}));
    EXPECT_EQ(odd.levels[2][0].shape(), (Shape{4, 5, 1}));
    for (const auto& level : odd.levels) EXPECT_EQ(level.size(), 2u);
}

TEST(Pyramid, LevelRange) {
    Rng rng(3);
    Clip clip = random_clip(rng, 2, 16, 20);
    EXPECT_THROW(build_pyramid(clip, 0, PyramidKind::laplacian), ContractError);
    EXPECT_THROW(build_pyramid(clip, 5, PyramidKind::laplacian), ContractError);
    EXPECT_NO_THROW(build_pyramid(clip, 4, PyramidKind::laplacian));
}

TEST(Pyramid, RoundTripProperty) {
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t H = 8 + rng.below(40), W = 8 + rng.below(40);
        Clip clip = random_clip(rng, 2, H, W, rng.below(2) ? 3 : 1);
        const std::size_t levels = 1 + rng.below(max_pyramid_levels(H, W));
        EXPECT_LE(clip_max_diff(collapse_pyramid(build_pyramid(clip, levels, PyramidKind::laplacian)), clip), 1e-6)
            << H << "x" << W << " levels " << levels;
    }
}

TEST(Pyramid, CollapseThenRebuildMatchesLevels) {
    Rng rng(5);
    PyramidStack s = build_pyramid(random_clip(rng, 3, 24, 20), 3, PyramidKind::laplacian);
    PyramidStack again = build_pyramid(collapse_pyramid(s), 3, PyramidKind::laplacian);
    for (std::size_t l = 0; l < 3; ++l)
        for (std::size_t t = 0; t < 3; ++t) EXPECT_LE(max_abs_diff(s.levels[l][t], again.levels[l][t]), 1e-6);
}

TEST(Pyramid, ZeroStackCollapsesToZero) {
    Rng rng(6);
    PyramidStack s = build_pyramid(random_clip(rng, 2, 16, 16), 3, PyramidKind::laplacian);
    for (auto& level : s.levels)
        for (auto& f : level) f.fill(0.0);
    for (const auto& f : collapse_pyramid(s).frames)
        for (double v : f.data()) EXPECT_EQ(v, 0.0);
}

TEST(Pyramid, GaussianNotInvertible) {
    Rng rng(7);
    PyramidStack s = build_pyramid(random_clip(rng, 2, 16, 16), 2, PyramidKind::gaussian);
    EXPECT_THROW(collapse_pyramid(s), ContractError);
}

TEST(Bandpass, ConstantGivesExactZero) {
    for (FilterKind kind : {FilterKind::ideal_fft, FilterKind::iir_butterworth2}) {
        BandpassSpec spec;
        spec.kind = kind;
        for (double v : temporal_bandpass(std::vector<double>(40, 0.731), spec)) EXPECT_EQ(v, 0.0);
    }
}

// The ideal filter has exactly unit gain for tones on a DFT bin; 274 frames
// put the band centre within 0.005 bins of one.
TEST(Bandpass, IdealPassesGeometricCenter) {
    BandpassSpec spec;
    const double f = std::sqrt(spec.f_low * spec.f_high);
    for (std::size_t n : {274u}) {
        const auto out = temporal_bandpass(sinusoid(n, f, spec.fps), spec);
        const double gain = fitted_amplitude(out, f, spec.fps, n / 4, 3 * n / 4);
        EXPECT_GE(gain, 0.99) << n;
        EXPECT_LE(gain, 1.01) << n;
    }
}

TEST(Bandpass, InBandGainProperty) {
    Rng rng(8);
    for (int trial = 0; trial < 30; ++trial) {
        BandpassSpec spec;
        spec.f_low = rng.uniform(0.3, 1.0);
        spec.f_high = rng.uniform(2.0, 4.0);
        const std::size_t n = 120 + rng.below(200);
        const double bin = spec.fps / static_cast<double>(n);
        const double f = bin * std::round(rng.uniform(spec.f_low + 0.3, spec.f_high - 0.3) / bin);
        const auto out = temporal_bandpass(sinusoid(n, f, spec.fps, rng.uniform(0.0, 6.0)), spec);
        const double gain = fitted_amplitude(out, f, spec.fps, n / 4, 3 * n / 4);
        EXPECT_GE(gain, 0.9) << f;
        EXPECT_LE(gain, 1.01) << f;
    }
}

TEST(Bandpass, StopsFourTimesHighCutoff) {
    for (FilterKind kind : {FilterKind::ideal_fft, FilterKind::iir_butterworth2}) {
        BandpassSpec spec;
        spec.kind = kind;
        const double f = 4.0 * spec.f_high;
        const auto out = temporal_bandpass(sinusoid(120, f, spec.fps), spec);
        EXPECT_LT(fitted_amplitude(out, f, spec.fps, 0, 120), 0.1) << to_string(kind);
        double peak = 0.0;
        for (std::size_t t = 30; t < 90; ++t) peak = std::max(peak, std::abs(out[t]));
        EXPECT_LT(peak, 0.1) << to_string(kind);
    }
}

TEST(Bandpass, IirPassesBand) {
    BandpassSpec spec;
    spec.kind = FilterKind::iir_butterworth2;
    const double f = std::sqrt(spec.f_low * spec.f_high);
    const auto out = temporal_bandpass(sinusoid(300, f, spec.fps), spec);
    const double gain = fitted_amplitude(out, f, spec.fps, 75, 225);
    EXPECT_GT(gain, 0.8);
    EXPECT_LT(gain, 1.05);
}

TEST(Bandpass, Preconditions) {
    BandpassSpec spec;
    EXPECT_THROW(temporal_bandpass(std::vector<double>(7, 0.0), spec), ContractError);
    spec.f_high = 15.0;
    EXPECT_THROW(temporal_bandpass(std::vector<double>(20, 0.0), spec), ContractError);
    spec.f_high = 0.2;
    EXPECT_THROW(temporal_bandpass(std::vector<double>(20, 0.0), spec), ContractError);
    EXPECT_EQ(parse_filter_kind("iir"), FilterKind::iir_butterworth2);
    EXPECT_THROW(parse_filter_kind("fir"), ContractError);
}

TEST(Magnify, StaticClipUnchanged) {
    Rng rng(9);
    Clip clip = random_clip(rng, 1, 32, 32);
    for (int t = 0; t < 15; ++t) clip.frames.push_back(clip.frames.front());
    MagnificationConfig cfg;
    cfg.alpha = 50.0;
    for (FilterKind kind : {FilterKind::ideal_fft, FilterKind::iir_butterworth2}) {
        cfg.bandpass.kind = kind;
        EXPECT_LE(clip_max_diff(magnify_clip(clip, cfg), clip), 1e-6);
    }
}

TEST(Magnify, ZeroAlphaIsIdentity) {
    Rng rng(10);
    Clip clip = random_clip(rng, 16, 32, 24, 3);
    MagnificationConfig cfg;
    cfg.alpha = 0.0;
    EXPECT_LE(clip_max_diff(magnify_clip(clip, cfg), clip), 1e-6);
}

TEST(Magnify, Linear) {
    Rng rng(11);
    for (FilterKind kind : {FilterKind::ideal_fft, FilterKind::iir_butterworth2}) {
        Clip a = random_clip(rng, 16, 24, 24), b = random_clip(rng, 16, 24, 24);
        Clip mix = a;
        for (std::size_t t = 0; t < 16; ++t)
            for (std::size_t i = 0; i < mix.frames[t].size(); ++i)
                mix.frames[t][i] = 0.7 * a.frames[t][i] - 1.3 * b.frames[t][i];
        MagnificationConfig cfg;
        cfg.bandpass.kind = kind;
        const Clip ma = magnify_clip(a, cfg), mb = magnify_clip(b, cfg), mm = magnify_clip(mix, cfg);
        double err = 0.0;
        for (std::size_t t = 0; t < 16; ++t)
            for (std::size_t i = 0; i < mm.frames[t].size(); ++i)
                err = std::max(err, std::abs(mm.frames[t][i] - (0.7 * ma.frames[t][i] - 1.3 * mb.frames[t][i])));
        EXPECT_LE(err, 1e-6) << to_string(kind);
    }
}

TEST(Magnify, Preconditions) {
    Rng rng(12);
    MagnificationConfig cfg;
    EXPECT_THROW(magnify_clip(random_clip(rng, 7, 16, 16), cfg), ContractError);
    cfg.alpha = -1.0;
    EXPECT_THROW(magnify_clip(random_clip(rng, 8, 16, 16), cfg), ContractError);
    cfg.alpha = 1.0;
    cfg.level_attenuation = {1.5};
    EXPECT_THROW(magnify_clip(random_clip(rng, 8, 16, 16), cfg), ContractError);
}

TEST(Magnify, SmallBlobAmplification) {
    BlobSpec spec;
    MagnificationConfig cfg;
    cfg.alpha = 4.0;
    cfg.bandpass.f_low = 0.5;
    cfg.bandpass.f_high = 2.0;
    const Clip clip = lforge::testing::blob_clip(spec);
    const Tensor ref = lforge::testing::blob_frame(spec, 0.0);
    const double in = lforge::testing::displacement_amplitude(clip, ref, spec.freq_hz);
    const double out = lforge::testing::displacement_amplitude(magnify_clip(clip, cfg), ref, spec.freq_hz);
    EXPECT_NEAR(in, 0.3, 0.03);
    EXPECT_GE(out / in, 4.0);
    EXPECT_LE(out / in, 6.0);
}

// Blob scale and the 6 px search window keep the measurement inside the
// regime where the first-order intensity model holds.
TEST(Magnify, AmplitudeLaw) {
    for (double delta : {0.1, 0.3, 0.5}) {
        BlobSpec spec;
        spec.sigma = 10.0;
        spec.amplitude_px = delta;
        const Clip clip = lforge::testing::blob_clip(spec);
        const Tensor ref = lforge::testing::blob_frame(spec, 0.0);
        const double in = lforge::testing::displacement_amplitude(clip, ref, spec.freq_hz);
        for (double alpha : {1.0, 4.0, 8.0}) {
            MagnificationConfig cfg;
            cfg.alpha = alpha;
            cfg.bandpass.f_low = 0.5;
            cfg.bandpass.f_high = 2.0;
            cfg.level_attenuation = {1.0};
            const double out = lforge::testing::displacement_amplitude(magnify_clip(clip, cfg), ref, spec.freq_hz);
            const double ratio = out / in;
            EXPECT_GE(ratio, 0.8 * (1.0 + alpha)) << "delta " << delta << " alpha " << alpha;
            EXPECT_LE(ratio, 1.2 * (1.0 + alpha)) << "delta " << delta << " alpha " << alpha;
        }
    }
}

TEST(XtSlice, StaticClipRowsEqual) {
    Rng rng(13);
    Clip clip = random_clip(rng, 1, 8, 12, 3);
    for (int t = 0; t < 5; ++t) clip.frames.push_back(clip.frames.front());
    const Tensor xt = xt_slice(clip, 4);
    EXPECT_EQ(xt.shape(), (Shape{6, 12}));
    for (std::size_t t = 1; t < 6; ++t)
        for (std::size_t x = 0; x < 12; ++x) EXPECT_EQ(xt.at(t, x), xt.at(0, x));
    EXPECT_THROW(xt_slice(clip, 8), ContractError);
}

TEST(XtSlice, TranslatingEdgeIsDiagonal) {
    Clip clip;
    for (std::size_t t = 0; t < 10; ++t) {
        Tensor f({4, 16, 1});
        for (std::size_t y = 0; y < 4; ++y)
            for (std::size_t x = 0; x < 16; ++x) f.at(y, x, 0) = x >= 3 + t ? 1.0 : 0.0;
        clip.frames.push_back(f);
    }
    const Tensor xt = xt_slice(clip, 2);
    for (std::size_t t = 0; t < 10; ++t) {
        std::size_t edge = 0;
        while (xt.at(t, edge) == 0.0) ++edge;
        EXPECT_EQ(edge, 3 + t);
    }
}

TEST(XtSlice, MagnifiedTraceWider) {
    BlobSpec spec;
    const Clip clip = lforge::testing::blob_clip(spec);
    MagnificationConfig cfg;
    cfg.alpha = 8.0;
    const std::size_t row = spec.size / 2;
    const double before = spread(trace_positions(xt_slice(clip, row), 0.1));
    const double after = spread(trace_positions(xt_slice(magnify_clip(clip, cfg), row), 0.1));
    EXPECT_GT(before, 0.3);
    EXPECT_GT(after, 2.0 * before);
}

TEST(XtSlice, WritesPgm) {
    const auto dir = lforge::testing::scratch_dir("pgm");
    Tensor img(Shape{2, 3}, std::vector<double>{0.0, 0.5, 1.0, -1.0, 2.0, 0.25});
    write_pgm(img, dir / "a.pgm");
    std::ifstream in(dir / "a.pgm", std::ios::binary);
    const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    EXPECT_EQ(bytes.substr(0, 11), "P5\n3 2\n255\n");
    ASSERT_EQ(bytes.size(), 17u);
    EXPECT_EQ(static_cast<unsigned char>(bytes[12]), 128);
    EXPECT_EQ(static_cast<unsigned char>(bytes[14]), 0);
    EXPECT_EQ(static_cast<unsigned char>(bytes[15]), 255);
}

TEST(Displacement, SelfIsZero) {
    Rng rng(14);
    const Tensor f = random_tensor({24, 24, 1}, rng, 0.0, 1.0);
    const Shift s = measure_displacement(f, f);
    EXPECT_NEAR(s.dx, 0.0, 1e-12);
    EXPECT_NEAR(s.dy, 0.0, 1e-12);
}

TEST(Displacement, ImpulseShift) {
    Tensor a({16, 16, 1}), b({16, 16, 1});
    a.at(7, 5, 0) = 1.0;
    b.at(7, 7, 0) = 1.0;
    const Shift s = measure_displacement(a, b);
    EXPECT_EQ(s.dx, 2.0);
    EXPECT_EQ(s.dy, 0.0);
}

TEST(Displacement, HalfPixelBilinearShift) {
    BlobSpec spec;
    const Tensor f = lforge::testing::blob_frame(spec, 0.0);
    const std::size_t W = spec.size;
    // Resampling onto a half-pixel grid and keeping odd columns samples f(x + 0.5),
    // i.e. content moved 0.5 px left.
    const Tensor fine = resize_bilinear(f, spec.size, 2 * W - 1);
    Tensor shifted(f.shape());
    for (std::size_t y = 0; y < spec.size; ++y)
        for (std::size_t x = 0; x < W; ++x)
            shifted.at(y, x, 0) = x + 1 < W ? fine.at(y, 2 * x + 1, 0) : f.at(y, x, 0);
    const Shift s = measure_displacement(f, shifted);
    EXPECT_NEAR(s.dx, -0.5, 0.05);
    EXPECT_NEAR(s.dy, 0.0, 0.05);
    const Shift back = measure_displacement(shifted, f);
    EXPECT_NEAR(back.dx, 0.5, 0.05);
}

TEST(Displacement, FlatFrameRejected) {
    Tensor flat(Shape{8, 8, 1}, 0.5);
    Rng rng(15);
    EXPECT_THROW(measure_displacement(flat, random_tensor({8, 8, 1}, rng)), RuntimeError);
}
