#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lforge/error.hpp"

namespace lforge {

enum class FilterKind { ideal_fft, iir_butterworth2 };

inline std::string_view to_string(FilterKind k) { return k == FilterKind::ideal_fft ? "ideal" : "iir"; }

inline FilterKind parse_filter_kind(std::string_view s) {
    if (s == "ideal" || s == "ideal_fft") return FilterKind::ideal_fft;
    if (s == "iir" || s == "iir_butterworth2") return FilterKind::iir_butterworth2;
    throw ContractError("unknown filter kind '" + std::string(s) + "'");
}

struct BandpassSpec {
    double f_low = 0.4;
    double f_high = 3.0;
    FilterKind kind = FilterKind::ideal_fft;
    double fps = 30.0;

    void validate() const {
        require(fps > 0.0, "bandpass: fps must be positive");
        require(f_low > 0.0 && f_low < f_high && f_high < fps / 2.0,
                "bandpass: need 0 < f_low < f_high < fps/2, got f_low=" + std::to_string(f_low) +
                    " f_high=" + std::to_string(f_high) + " fps=" + std::to_string(fps));
    }
};

inline constexpr std::size_t kMinSeriesLength = 8;

/// Zero-phase temporal bandpass for series of one fixed length.
///
/// Both kinds remove DC exactly: the first sample is subtracted before
/// filtering, so a constant series maps to exact zeros.
class TemporalFilter {
public:
    TemporalFilter(const BandpassSpec& spec, std::size_t length) : spec_(spec), n_(length) {
        spec.validate();
        require(length >= kMinSeriesLength, "temporal_bandpass: series must have at least 8 samples, got " +
                                                 std::to_string(length));
        if (spec.kind == FilterKind::ideal_fft) init_ideal();
        else init_iir();
    }

    std::size_t length() const { return n_; }
    const BandpassSpec& spec() const { return spec_; }

    void apply(std::span<const double> in, std::span<double> out) const {
        require(in.size() == n_ && out.size() == n_, "temporal_bandpass: series length mismatch");
        std::vector<double> work(n_);
        const double x0 = in[0];
        for (std::size_t i = 0; i < n_; ++i) work[i] = in[i] - x0;
        if (spec_.kind == FilterKind::ideal_fft) apply_ideal(work, out);
        else apply_iir(work, out);
    }

    std::vector<double> apply(std::span<const double> in) const {
        std::vector<double> out(n_);
        apply(in, out);
        return out;
    }

private:
    struct Biquad {
        double b0, b1, b2, a1, a2;
        double dc_gain() const { return (b0 + b1 + b2) / (1.0 + a1 + a2); }
    };

    // Keeps DFT bins k with f_low <= k*fps/N <= f_high. Each kept bin is a
    // (cos, sin) pair of basis rows; the Nyquist bin is never in band.
    void init_ideal() {
        const double df = spec_.fps / static_cast<double>(n_);
        for (std::size_t k = 1; 2 * k < n_; ++k) {
            const double f = df * static_cast<double>(k);
            if (f < spec_.f_low || f > spec_.f_high) continue;
            std::vector<double> c(n_), s(n_);
            for (std::size_t t = 0; t < n_; ++t) {
                const double ph = 2.0 * std::numbers::pi * static_cast<double>((k * t) % n_) / static_cast<double>(n_);
                c[t] = std::cos(ph);
                s[t] = std::sin(ph);
            }
            cos_.push_back(std::move(c));
            sin_.push_back(std::move(s));
        }
    }

    void apply_ideal(const std::vector<double>& work, std::span<double> out) const {
        for (std::size_t t = 0; t < n_; ++t) out[t] = 0.0;
        const double scale = 2.0 / static_cast<double>(n_);
        for (std::size_t b = 0; b < cos_.size(); ++b) {
            double re = 0.0, im = 0.0;
            for (std::size_t t = 0; t < n_; ++t) {
                re += work[t] * cos_[b][t];
                im += work[t] * sin_[b][t];
            }
            re *= scale;
            im *= scale;
            for (std::size_t t = 0; t < n_; ++t) out[t] += re * cos_[b][t] + im * sin_[b][t];
        }
    }

    // Second-order Butterworth high-pass at f_low cascaded with a second-order
    // Butterworth low-pass at f_high (bilinear transform with prewarping).
    void init_iir() {
        const double q = 1.0 / std::sqrt(2.0);
        auto design = [&](double f0, bool high) {
            const double w0 = 2.0 * std::numbers::pi * f0 / spec_.fps;
            const double alpha = std::sin(w0) / (2.0 * q), cw = std::cos(w0);
            const double a0 = 1.0 + alpha;
            Biquad bq{};
            if (high) {
                bq.b0 = (1.0 + cw) / 2.0 / a0;
                bq.b1 = -(1.0 + cw) / a0;
                bq.b2 = (1.0 + cw) / 2.0 / a0;
            } else {
                bq.b0 = (1.0 - cw) / 2.0 / a0;
                bq.b1 = (1.0 - cw) / a0;
                bq.b2 = (1.0 - cw) / 2.0 / a0;
            }
            bq.a1 = -2.0 * cw / a0;
            bq.a2 = (1.0 - alpha) / a0;
            return bq;
        };
        sections_ = {design(spec_.f_low, true), design(spec_.f_high, false)};
    }

    // Direct form II transposed, initial state at steady state for x[0].
    static void run_section(const Biquad& s, std::vector<double>& x) {
        const double u = x.front(), g = s.dc_gain();
        double z2 = s.b2 * u - s.a2 * g * u;
        double z1 = s.b1 * u - s.a1 * g * u + z2;
        for (double& v : x) {
            const double in = v;
            const double y = s.b0 * in + z1;
            z1 = s.b1 * in - s.a1 * y + z2;
            z2 = s.b2 * in - s.a2 * y;
            v = y;
        }
    }

    void apply_iir(const std::vector<double>& work, std::span<double> out) const {
        const std::size_t pad = std::min<std::size_t>(n_ - 1, 12);
        std::vector<double> x;
        x.reserve(n_ + 2 * pad);
        // Odd reflection about the end samples.
        for (std::size_t i = pad; i >= 1; --i) x.push_back(2.0 * work[0] - work[i]);
        x.insert(x.end(), work.begin(), work.end());
        for (std::size_t i = 1; i <= pad; ++i) x.push_back(2.0 * work[n_ - 1] - work[n_ - 1 - i]);

        for (const auto& s : sections_) run_section(s, x);
        std::reverse(x.begin(), x.end());
        for (const auto& s : sections_) run_section(s, x);
        std::reverse(x.begin(), x.end());
        for (std::size_t t = 0; t < n_; ++t) out[t] = x[pad + t];
    }

    BandpassSpec spec_;
    std::size_t n_;
    std::vector<std::vector<double>> cos_, sin_;
    std::vector<Biquad> sections_;
};

/// One-shot convenience form of TemporalFilter.
inline std::vector<double> temporal_bandpass(std::span<const double> series, const BandpassSpec& spec) {
    return TemporalFilter(spec, series.size()).apply(series);
}

}  // namespace lforge
