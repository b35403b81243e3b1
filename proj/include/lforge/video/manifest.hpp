#pragma once

// Corpus manifest: JSON lines, one clip per line.
//   {"path": "clip_0000.rvid", "label": "genuine", "split": "train", "fps": 30.0, "bbox": [16, 16, 32, 32]}
// Paths are relative to the manifest's directory. Record order is irrelevant.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "lforge/error.hpp"
#include "lforge/video/clip.hpp"
#include "lforge/video/rvid.hpp"

namespace lforge {

struct ManifestEntry {
    std::string path;
    Label label = Label::genuine;
    Split split = Split::train;
    double fps = 30.0;
    std::optional<BBox> bbox;
};

struct CorpusManifest {
    std::filesystem::path root;
    std::vector<ManifestEntry> entries;
    std::uint64_t seed = 0;

    std::vector<const ManifestEntry*> split(Split s) const {
        std::vector<const ManifestEntry*> out;
        for (const auto& e : entries)
            if (e.split == s) out.push_back(&e);
        return out;
    }

    void validate() const {
        std::set<std::string> seen;
        for (const auto& e : entries)
            if (!seen.insert(e.path).second) throw ContractError("duplicate manifest path '" + e.path + "'");
    }

    /// Reads the clip and attaches manifest metadata.
    Clip load(const ManifestEntry& e) const {
        const auto full = root / e.path;
        Clip clip;
        try {
            clip = rvid::read_clip(full);
        } catch (const std::exception& ex) {
            throw RuntimeError("corrupt clip '" + full.string() + "': " + ex.what());
        }
        clip.label = e.label;
        clip.split = e.split;
        clip.bbox = e.bbox;
        clip.fps = e.fps;
        clip.id = std::filesystem::path(e.path).stem().string();
        clip.validate();
        return clip;
    }
};

inline nlohmann::json to_json(const ManifestEntry& e) {
    nlohmann::json j;
    j["path"] = e.path;
    j["label"] = std::string(to_string(e.label));
    j["split"] = std::string(to_string(e.split));
    j["fps"] = e.fps;
    if (e.bbox) j["bbox"] = {e.bbox->x, e.bbox->y, e.bbox->w, e.bbox->h};
    return j;
}

inline ManifestEntry entry_from_json(const nlohmann::json& j) {
    ManifestEntry e;
    e.path = j.at("path").get<std::string>();
    e.label = parse_label(j.at("label").get<std::string>());
    e.split = parse_split(j.at("split").get<std::string>());
    e.fps = j.at("fps").get<double>();
    if (j.contains("bbox") && !j["bbox"].is_null()) {
        const auto& b = j["bbox"];
        require(b.is_array() && b.size() == 4, "manifest bbox must be [x,y,w,h]");
        e.bbox = BBox{b[0].get<int>(), b[1].get<int>(), b[2].get<int>(), b[3].get<int>()};
    }
    return e;
}

inline constexpr const char* kManifestName = "manifest.jsonl";
inline constexpr const char* kCorpusInfoName = "corpus.json";

inline void write_manifest(const CorpusManifest& m, const std::filesystem::path& file) {
    m.validate();
    std::ofstream out(file);
    if (!out) throw RuntimeError("cannot open '" + file.string() + "' for writing");
    for (const auto& e : m.entries) out << to_json(e).dump() << '\n';
}

/// Accepts either the manifest file or the corpus directory containing it.
inline CorpusManifest read_manifest(const std::filesystem::path& where) {
    std::filesystem::path file = where;
    if (std::filesystem::is_directory(where)) file = where / kManifestName;
    std::ifstream in(file);
    if (!in) throw RuntimeError("cannot open manifest '" + file.string() + "'");
    CorpusManifest m;
    m.root = file.parent_path();
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            m.entries.push_back(entry_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& ex) {
            throw RuntimeError(file.string() + ":" + std::to_string(lineno) + ": " + ex.what());
        }
    }
    const auto info = m.root / kCorpusInfoName;
    if (std::filesystem::exists(info)) {
        std::ifstream is(info);
        const auto j = nlohmann::json::parse(is);
        if (j.contains("seed")) m.seed = j["seed"].get<std::uint64_t>();
    }
    m.validate();
    return m;
}

}  // namespace lforge
