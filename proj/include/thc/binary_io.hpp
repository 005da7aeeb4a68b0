#pragma once

// Little-endian primitive readers/writers shared by the volume and checkpoint formats.

#include "thc/error.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

namespace thc::binio {

template <typename T>
    requires std::is_integral_v<T>
void write_le(std::ostream& out, T value) {
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(value);
    char bytes[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        bytes[i] = static_cast<char>(static_cast<unsigned char>(u & 0xFFu));
        u = static_cast<U>(u >> 8);
    }
    out.write(bytes, sizeof(T));
}

inline void write_f32(std::ostream& out, float value) { write_le(out, std::bit_cast<std::uint32_t>(value)); }
inline void write_f64(std::ostream& out, double value) { write_le(out, std::bit_cast<std::uint64_t>(value)); }

/// Throws IoError on short reads, so a truncated file never yields a partial object.
template <typename T>
    requires std::is_integral_v<T>
T read_le(std::istream& in) {
    unsigned char bytes[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
        throw Error(Errc::IoError, "unexpected end of file");
    }
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = sizeof(T); i-- > 0;) u = static_cast<decltype(u)>((u << 8) | bytes[i]);
    return static_cast<T>(u);
}

inline float read_f32(std::istream& in) { return std::bit_cast<float>(read_le<std::uint32_t>(in)); }
inline double read_f64(std::istream& in) { return std::bit_cast<double>(read_le<std::uint64_t>(in)); }

/// Reads a 4-byte magic tag. Files shorter than the tag are reported as BadMagic.
inline void expect_magic(std::istream& in, const char (&magic)[5]) {
    char tag[4] = {};
    in.read(tag, 4);
    if (in.gcount() != 4 || std::memcmp(tag, magic, 4) != 0) {
        throw Error(Errc::BadMagic, std::string("expected magic \"") + magic + "\"");
    }
}

inline void expect_eof(std::istream& in) {
    if (in.peek() != std::char_traits<char>::eof()) throw Error(Errc::IoError, "trailing bytes after payload");
}

inline std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
    return in;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoError, "cannot create " + path.string());
    return out;
}

} // namespace thc::binio
