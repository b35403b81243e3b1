#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lforge/error.hpp"

namespace lforge {

/// `convs` 3x3 tanh convolutions of `width` channels, then a 2x2 max-pool.
struct BlockConfig {
    std::size_t convs = 1;
    std::size_t width = 8;

    friend bool operator==(const BlockConfig&, const BlockConfig&) = default;
};

/// shared: score_i = w . h_i with one vector w.
/// per_step: score_i = W_i . h_{i-1} with one vector per timestep (h_0 = 0);
/// only defined for the configured clip length.
enum class AttentionKind { shared, per_step };

inline std::string_view to_string(AttentionKind k) { return k == AttentionKind::shared ? "shared" : "per_step"; }

inline AttentionKind parse_attention_kind(std::string_view s) {
    if (s == "shared") return AttentionKind::shared;
    if (s == "per_step") return AttentionKind::per_step;
    throw ContractError("unknown attention kind '" + std::string(s) + "' (expected shared or per_step)");
}

struct ModelConfig {
    std::size_t height = 64;
    std::size_t width = 64;
    std::size_t channels = 1;
    std::vector<BlockConfig> blocks{{1, 8}, {1, 16}, {1, 32}};
    std::size_t hidden = 32;
    std::size_t frames = 16;
    bool batch_norm = true;
    AttentionKind attention = AttentionKind::shared;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;

    std::size_t map_height() const { return height >> blocks.size(); }
    std::size_t map_width() const { return width >> blocks.size(); }
    std::size_t map_channels() const { return blocks.empty() ? channels : blocks.back().width; }
    std::size_t feature_dim() const { return map_height() * map_width() * map_channels(); }

    void validate() const {
        require(channels == 1 || channels == 3, "model: channels must be 1 or 3");
        require(!blocks.empty(), "model: at least one conv block is required");
        for (const auto& b : blocks) require(b.convs >= 1 && b.width >= 1, "model: blocks need >= 1 conv and width");
        const std::size_t scale = std::size_t{1} << blocks.size();
        require(height % scale == 0 && width % scale == 0,
                "model: input " + std::to_string(height) + "x" + std::to_string(width) + " must be divisible by " +
                    std::to_string(scale) + " for " + std::to_string(blocks.size()) + " pooling blocks");
        require(map_height() >= 2 && map_width() >= 2,
                "model: final feature map must keep at least 2x2 spatial extent");
        require(hidden >= 1, "model: hidden size must be >= 1");
        require(frames >= 1, "model: frames per clip must be >= 1");
    }

    /// 16x16 input, two 4-wide blocks, 8 hidden units, 4 frames.
    static ModelConfig tiny() {
        ModelConfig c;
        c.height = c.width = 16;
        c.blocks = {{1, 4}, {1, 4}};
        c.hidden = 8;
        c.frames = 4;
        return c;
    }
};

inline nlohmann::json to_json(const ModelConfig& c) {
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& b : c.blocks) blocks.push_back({{"convs", b.convs}, {"width", b.width}});
    return {{"height", c.height},
            {"width", c.width},
            {"channels", c.channels},
            {"blocks", blocks},
            {"hidden", c.hidden},
            {"frames", c.frames},
            {"batch_norm", c.batch_norm},
            {"attention", std::string(to_string(c.attention))}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.height = j.at("height").get<std::size_t>();
    c.width = j.at("width").get<std::size_t>();
    c.channels = j.at("channels").get<std::size_t>();
    c.blocks.clear();
    for (const auto& b : j.at("blocks")) c.blocks.push_back({b.at("convs").get<std::size_t>(), b.at("width").get<std::size_t>()});
    c.hidden = j.at("hidden").get<std::size_t>();
    c.frames = j.at("frames").get<std::size_t>();
    c.batch_norm = j.at("batch_norm").get<bool>();
    c.attention = parse_attention_kind(j.at("attention").get<std::string>());
    return c;
}

/// Parses "8,16,32" or "2x8,2x16" (convs x width) into blocks.
inline std::vector<BlockConfig> parse_blocks(std::string_view spec) {
    std::vector<BlockConfig> out;
    std::size_t pos = 0;
    while (pos <= spec.size()) {
        const std::size_t comma = std::min(spec.find(',', pos), spec.size());
        const std::string item(spec.substr(pos, comma - pos));
        BlockConfig b;
        try {
            const std::size_t x = item.find('x');
            std::size_t used = 0;
            if (x == std::string::npos) {
                b.width = std::stoul(item, &used);
                require(used == item.size(), "");
            } else {
                b.convs = std::stoul(item.substr(0, x), &used);
                require(used == x, "");
                b.width = std::stoul(item.substr(x + 1), &used);
                require(used == item.size() - x - 1, "");
            }
        } catch (const std::exception&) {
            throw ContractError("bad block spec '" + item + "' (expected W or CxW, comma separated)");
        }
        out.push_back(b);
        pos = comma + 1;
    }
    return out;
}

inline std::string blocks_string(const std::vector<BlockConfig>& blocks) {
    std::string s;
    for (const auto& b : blocks) {
        if (!s.empty()) s += ',';
        if (b.convs != 1) s += std::to_string(b.convs) + "x";
        s += std::to_string(b.width);
    }
    return s;
}

}  // namespace lforge
