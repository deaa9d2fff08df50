#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

#include "samgcnn/common.hpp"

// Little-endian binary primitives shared by the file formats.
namespace samgcnn::io {

inline void write_u8(std::ostream& out, uint8_t v) { out.put(static_cast<char>(v)); }

inline void write_u16(std::ostream& out, uint16_t v) {
    char b[2] = {char(v & 0xff), char(v >> 8)};
    out.write(b, 2);
}

inline void write_u32(std::ostream& out, uint32_t v) {
    char b[4] = {char(v & 0xff), char(v >> 8 & 0xff), char(v >> 16 & 0xff), char(v >> 24 & 0xff)};
    out.write(b, 4);
}

inline void write_f32(std::ostream& out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    write_u32(out, bits);
}

inline void write_f32_array(std::ostream& out, const float* data, std::ptrdiff_t n) {
    for (std::ptrdiff_t i = 0; i < n; ++i) write_f32(out, data[i]);
}

inline uint8_t read_u8(std::istream& in) {
    int c = in.get();
    if (c == EOF) throw FormatError("unexpected end of file");
    return static_cast<uint8_t>(c);
}

inline uint16_t read_u16(std::istream& in) {
    unsigned char b[2];
    in.read(reinterpret_cast<char*>(b), 2);
    if (!in) throw FormatError("unexpected end of file");
    return uint16_t(b[0]) | uint16_t(b[1]) << 8;
}

inline uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw FormatError("unexpected end of file");
    return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 | uint32_t(b[3]) << 24;
}

inline float read_f32(std::istream& in) {
    uint32_t bits = read_u32(in);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

inline void read_f32_array(std::istream& in, float* data, std::ptrdiff_t n) {
    for (std::ptrdiff_t i = 0; i < n; ++i) data[i] = read_f32(in);
}

}  // namespace samgcnn::io
