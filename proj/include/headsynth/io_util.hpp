#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "headsynth/errors.hpp"

namespace headsynth {

inline std::uint64_t byteswap_u64(std::uint64_t v) {
    return ((v & 0x00000000000000ffULL) << 56) | ((v & 0x000000000000ff00ULL) << 40) |
           ((v & 0x0000000000ff0000ULL) << 24) | ((v & 0x00000000ff000000ULL) << 8) |
           ((v & 0x000000ff00000000ULL) >> 8) | ((v & 0x0000ff0000000000ULL) >> 24) |
           ((v & 0x00ff000000000000ULL) >> 40) | ((v & 0xff00000000000000ULL) >> 56);
}

// Doubles are stored little-endian on disk regardless of host order.
inline void write_f64_le(std::ostream& out, std::span<const double> values) {
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(values.data()),
                  static_cast<std::streamsize>(values.size() * sizeof(double)));
    } else {
        for (double v : values) {
            std::uint64_t bits;
            std::memcpy(&bits, &v, sizeof(bits));
            bits = byteswap_u64(bits);
            out.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
        }
    }
    if (!out) throw IoError("failed writing float payload");
}

inline void read_f64_le(std::istream& in, std::span<double> values) {
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(values.size() * sizeof(double)))
        throw FormatError("float payload truncated");
    if constexpr (std::endian::native == std::endian::big) {
        for (double& v : values) {
            std::uint64_t bits;
            std::memcpy(&bits, &v, sizeof(bits));
            bits = byteswap_u64(bits);
            std::memcpy(&v, &bits, sizeof(bits));
        }
    }
}

inline void write_u64_le(std::ostream& out, std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::big) v = byteswap_u64(v);
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    if (!out) throw IoError("failed writing u64");
}

inline std::uint64_t read_u64_le(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (in.gcount() != sizeof(v)) throw FormatError("u64 field truncated");
    if constexpr (std::endian::native == std::endian::big) v = byteswap_u64(v);
    return v;
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path.string());
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return content;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open file for writing: " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("failed writing file: " + path.string());
}

} // namespace headsynth
