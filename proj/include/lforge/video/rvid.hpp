#pragma once

// RVID1 frame container.
//
//   offset  size  field
//   0       5     magic "RVID1"
//   5       4     width        (u32 LE)
//   9       4     height       (u32 LE)
//   13      4     channels     (u32 LE)
//   17      4     frame_count  (u32 LE)
//   21      4     fps_milli    (u32 LE, fps * 1000)
//   25      1     dtype        (0 = u8, normalized to [0,1] on load)
//   26      ...   frame_count planes, row-major, channel-interleaved

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <vector>

#include "lforge/error.hpp"
#include "lforge/video/clip.hpp"

namespace lforge::rvid {

inline constexpr char kMagic[5] = {'R', 'V', 'I', 'D', '1'};
inline constexpr std::size_t kHeaderSize = 26;
inline constexpr std::uint64_t kMaxPayloadBytes = std::uint64_t{1} << 34;

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[off + i]) << (8 * i);
    return v;
}

}  // namespace detail

/// Quantizes to 8 bits. Values outside [0,1] are clamped here and nowhere else.
inline std::uint8_t quantize(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

inline std::vector<std::uint8_t> encode(const Clip& clip) {
    clip.validate();
    const auto H = clip.height(), W = clip.width(), C = clip.channels();
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    detail::put_u32(out, static_cast<std::uint32_t>(W));
    detail::put_u32(out, static_cast<std::uint32_t>(H));
    detail::put_u32(out, static_cast<std::uint32_t>(C));
    detail::put_u32(out, static_cast<std::uint32_t>(clip.length()));
    detail::put_u32(out, static_cast<std::uint32_t>(std::lround(clip.fps * 1000.0)));
    out.push_back(0);
    out.reserve(out.size() + clip.length() * H * W * C);
    for (const Tensor& f : clip.frames)
        for (double v : f.data()) out.push_back(quantize(v));
    return out;
}

/// Parses a container. Label, split, bbox and id are not stored in the file.
inline Clip decode(const std::vector<std::uint8_t>& bytes, std::string id = {}) {
    if (bytes.size() < 5 || std::memcmp(bytes.data(), kMagic, 5) != 0) throw ParseError("bad RVID1 magic", 0);
    if (bytes.size() < kHeaderSize) throw ParseError("truncated RVID1 header", bytes.size());
    const std::uint32_t W = detail::get_u32(bytes, 5);
    const std::uint32_t H = detail::get_u32(bytes, 9);
    const std::uint32_t C = detail::get_u32(bytes, 13);
    const std::uint32_t frames = detail::get_u32(bytes, 17);
    const std::uint32_t fps_milli = detail::get_u32(bytes, 21);
    const std::uint8_t dtype = bytes[25];

    if (W == 0) throw ParseError("zero width", 5);
    if (H == 0) throw ParseError("zero height", 9);
    if (C != 1 && C != 3) throw ParseError("channel count must be 1 or 3, got " + std::to_string(C), 13);
    if (frames < 2) throw ParseError("frame_count must be at least 2, got " + std::to_string(frames), 17);
    if (fps_milli == 0) throw ParseError("fps must be positive", 21);
    if (dtype != 0) throw ParseError("unsupported dtype " + std::to_string(dtype), 25);

    const std::uint64_t frame_bytes = std::uint64_t{W} * H * C;
    if (frame_bytes > kMaxPayloadBytes / frames) throw ParseError("dimensions overflow payload limit", 5);
    const std::uint64_t payload = frame_bytes * frames;
    const std::uint64_t available = bytes.size() - kHeaderSize;
    if (available < payload) {
        const std::uint64_t complete = available / frame_bytes;
        throw ParseError("truncated payload: header declares " + std::to_string(frames) + " frames, " +
                             std::to_string(complete) + " complete",
                         kHeaderSize + complete * frame_bytes);
    }

    Clip clip;
    clip.id = std::move(id);
    clip.fps = fps_milli / 1000.0;
    clip.frames.reserve(frames);
    std::size_t off = kHeaderSize;
    for (std::uint32_t t = 0; t < frames; ++t) {
        std::vector<double> data(frame_bytes);
        for (std::uint64_t i = 0; i < frame_bytes; ++i) data[i] = bytes[off + i] / 255.0;
        off += frame_bytes;
        clip.frames.emplace_back(Shape{H, W, C}, std::move(data));
    }
    return clip;
}

inline void write_clip(const Clip& clip, const std::filesystem::path& path) {
    const auto bytes = encode(clip);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeError("cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw RuntimeError("write failed for '" + path.string() + "'");
}

inline Clip read_clip(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RuntimeError("cannot open '" + path.string() + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return decode(bytes, path.stem().string());
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.detail(), e.offset());
    }
}

}  // namespace lforge::rvid
