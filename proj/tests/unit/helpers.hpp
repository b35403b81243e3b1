#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "lforge/numerics/tensor.hpp"
#include "lforge/rng.hpp"

namespace lforge::testing {

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.data()) v = rng.uniform(lo, hi);
    return t;
}

inline Parameter random_param(std::string name, Shape shape, Rng& rng, double scale = 1.0) {
    return Parameter(std::move(name), random_tensor(std::move(shape), rng, -scale, scale));
}

/// Fresh scratch directory under the test working directory.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::current_path() / "scratch" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace lforge::testing
