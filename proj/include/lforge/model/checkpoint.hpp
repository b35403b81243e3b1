#pragma once

// Checkpoint layout (little-endian):
//   "LFCK" | u32 version | u64 meta_len | meta JSON (UTF-8)
//   u32 blob_count, then per blob: u32 name_len | name | u32 rank | u64 dims[rank] | f64 values
// meta["model"] holds the model config; load compares it with the expected one.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lforge/error.hpp"
#include "lforge/model/model.hpp"

namespace lforge {

inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace checkpoint_detail {

class Writer {
public:
    std::vector<std::uint8_t> bytes;
    void raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        bytes.insert(bytes.end(), b, b + n);
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        raw(s.data(), s.size());
    }
};

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& b) : bytes_(b) {}
    std::size_t offset() const { return pos_; }
    void need(std::uint64_t n, const char* what) {
        if (n > bytes_.size() - pos_) throw ParseError(std::string("checkpoint truncated reading ") + what, pos_);
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::uint64_t u64(const char* what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }
    double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
    std::string str(std::uint64_t n, const char* what) {
        need(n, what);
        std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                      bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
        pos_ += n;
        return s;
    }

private:
    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

inline std::vector<std::pair<std::string, Tensor*>> blobs(Model& m) {
    auto out = m.params.named();
    if (m.config.batch_norm) {
        out.emplace_back("norm.running_mean", &m.norm_stats.mean);
        out.emplace_back("norm.running_var", &m.norm_stats.var);
    }
    return out;
}

}  // namespace checkpoint_detail

struct Checkpoint {
    Model model;
    nlohmann::json meta;
};

/// `meta` is stored verbatim with the model config added under "model".
inline std::vector<std::uint8_t> encode_checkpoint(const Model& model, nlohmann::json meta) {
    meta["model"] = to_json(model.config);
    checkpoint_detail::Writer w;
    w.raw("LFCK", 4);
    w.u32(kCheckpointVersion);
    const std::string text = meta.dump();
    w.u64(text.size());
    w.raw(text.data(), text.size());
    const auto blobs = checkpoint_detail::blobs(const_cast<Model&>(model));
    w.u32(static_cast<std::uint32_t>(blobs.size()));
    for (const auto& [name, t] : blobs) {
        w.str(name);
        w.u32(static_cast<std::uint32_t>(t->rank()));
        for (std::size_t d : t->shape()) w.u64(d);
        for (double v : t->data()) w.f64(v);
    }
    return std::move(w.bytes);
}

/// Rejects files whose model config differs from `expected` when given.
inline Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes, const ModelConfig* expected = nullptr) {
    checkpoint_detail::Reader r(bytes);
    if (r.str(4, "magic") != "LFCK") throw ParseError("not a checkpoint (bad magic)", 0);
    const std::uint32_t version = r.u32("version");
    if (version != kCheckpointVersion)
        throw ParseError("unsupported checkpoint version " + std::to_string(version), 4);
    const std::uint64_t meta_len = r.u64("meta length");
    const std::size_t meta_at = r.offset();
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(r.str(meta_len, "meta"));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("checkpoint meta is not valid JSON: ") + e.what(), meta_at);
    }
    ModelConfig cfg;
    try {
        cfg = model_config_from_json(meta.at("model"));
        cfg.validate();
    } catch (const std::exception& e) {
        throw ParseError(std::string("checkpoint model config unreadable: ") + e.what(), meta_at);
    }
    if (expected && !(cfg == *expected))
        throw ContractError("checkpoint model config " + to_json(cfg).dump() + " does not match expected " +
                            to_json(*expected).dump());

    Checkpoint ck{Model(cfg), meta};
    auto blobs = checkpoint_detail::blobs(ck.model);
    const std::size_t count_at = r.offset();
    const std::uint32_t count = r.u32("blob count");
    if (count != blobs.size())
        throw ParseError("checkpoint has " + std::to_string(count) + " blobs, config implies " +
                             std::to_string(blobs.size()),
                         count_at);
    for (auto& [name, t] : blobs) {
        const std::size_t at = r.offset();
        const std::string got = r.str(r.u32("blob name length"), "blob name");
        if (got != name) throw ParseError("expected blob '" + name + "', found '" + got + "'", at);
        const std::uint32_t rank = r.u32("blob rank");
        Shape shape;
        for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(r.u64("blob dims"));
        if (shape != t->shape())
            throw ParseError("blob '" + name + "' has shape " + shape_string(shape) + ", expected " +
                                 shape_string(t->shape()),
                             at);
        r.need(8 * t->size(), "blob values");
        for (auto& v : t->data()) v = r.f64("blob values");
    }
    if (r.offset() != bytes.size()) throw ParseError("trailing bytes after checkpoint blobs", r.offset());
    return ck;
}

inline void save_checkpoint(const Model& model, const nlohmann::json& meta, const std::filesystem::path& path) {
    const auto bytes = encode_checkpoint(model, meta);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeError("cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw RuntimeError("write failed for '" + path.string() + "'");
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelConfig* expected = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RuntimeError("cannot open checkpoint '" + path.string() + "'");
    const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    try {
        return decode_checkpoint(bytes, expected);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.detail(), e.offset());
    }
}

}  // namespace lforge
