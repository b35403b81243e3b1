#pragma once

// Sampled sinusoids and the least-squares amplitude oracle shared by unit and
// acceptance tests.

#include <cmath>
#include <numbers>
#include <vector>

namespace lforge::testing {

inline std::vector<double> sinusoid(std::size_t n, double freq, double fps, double phase = 0.3) {
    std::vector<double> s(n);
    for (std::size_t t = 0; t < n; ++t)
        s[t] = std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(t) / fps + phase);
    return s;
}

// Least-squares fit of a*sin + b*cos + c at one frequency over [from, to).
inline double fitted_amplitude(const std::vector<double>& s, double freq, double fps, std::size_t from, std::size_t to) {
    double m[3][4] = {};
    for (std::size_t t = from; t < to; ++t) {
        const double ph = 2.0 * std::numbers::pi * freq * static_cast<double>(t) / fps;
        const double row[3] = {std::sin(ph), std::cos(ph), 1.0};
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) m[i][j] += row[i] * row[j];
            m[i][3] += row[i] * s[t];
        }
    }
    for (int i = 0; i < 3; ++i)
        for (int k = i + 1; k < 3; ++k) {
            const double f = m[k][i] / m[i][i];
            for (int j = i; j < 4; ++j) m[k][j] -= f * m[i][j];
        }
    double x[3];
    for (int i = 2; i >= 0; --i) {
        x[i] = m[i][3];
        for (int j = i + 1; j < 3; ++j) x[i] -= m[i][j] * x[j];
        x[i] /= m[i][i];
    }
    return std::hypot(x[0], x[1]);
}

}  // namespace lforge::testing
