#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lforge/error.hpp"
#include "lforge/numerics/tensor.hpp"

namespace lforge {

enum class Label { attack = 0, genuine = 1 };
enum class Split { train, dev, test };

inline std::string_view to_string(Label l) { return l == Label::genuine ? "genuine" : "attack"; }

inline std::string_view to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::dev: return "dev";
        case Split::test: return "test";
    }
    return "train";
}

inline Label parse_label(std::string_view s) {
    if (s == "genuine") return Label::genuine;
    if (s == "attack") return Label::attack;
    throw ContractError("unknown label '" + std::string(s) + "'");
}

inline Split parse_split(std::string_view s) {
    if (s == "train") return Split::train;
    if (s == "dev") return Split::dev;
    if (s == "test") return Split::test;
    throw ContractError("unknown split '" + std::string(s) + "'");
}

/// Axis-aligned pixel rectangle: origin (x, y), extent (w, h).
struct BBox {
    int x = 0, y = 0, w = 0, h = 0;
    friend bool operator==(const BBox&, const BBox&) = default;
};

/// Ordered frames of one recording; the unit of classification.
///
/// Frames are [H,W,C] tensors, C in {1,3}. Values are nominally in [0,1];
/// processed clips (e.g. magnified) may leave that range until export.
struct Clip {
    std::string id;
    std::vector<Tensor> frames;
    double fps = 30.0;
    Label label = Label::genuine;
    Split split = Split::train;
    std::optional<BBox> bbox;

    std::size_t height() const { return frames.front().dim(0); }
    std::size_t width() const { return frames.front().dim(1); }
    std::size_t channels() const { return frames.front().dim(2); }
    std::size_t length() const { return frames.size(); }

    void validate() const {
        require(frames.size() >= 2, "clip '" + id + "' needs at least 2 frames, has " + std::to_string(frames.size()));
        require(fps > 0.0, "clip '" + id + "' fps must be positive");
        const Shape& s = frames.front().shape();
        require(s.size() == 3, "clip '" + id + "' frames must be [H,W,C]");
        require(s[2] == 1 || s[2] == 3, "clip '" + id + "' channel count must be 1 or 3");
        for (const Tensor& f : frames)
            require(f.shape() == s, "clip '" + id + "' frames do not share one shape");
        if (bbox) {
            const BBox& b = *bbox;
            require(b.x >= 0 && b.y >= 0 && b.w > 0 && b.h > 0 && static_cast<std::size_t>(b.x + b.w) <= s[1] &&
                        static_cast<std::size_t>(b.y + b.h) <= s[0],
                    "clip '" + id + "' bbox lies outside the frame");
        }
    }
};

}  // namespace lforge
