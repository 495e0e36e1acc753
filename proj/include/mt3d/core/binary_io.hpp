#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "mt3d/core/errors.hpp"

namespace mt3d::binary {

/// Little-endian scalar I/O, independent of host byte order.
inline void put_uint(std::ostream& out, std::uint64_t v, int bytes) {
    for (int b = 0; b < bytes; ++b) out.put(static_cast<char>((v >> (8 * b)) & 0xff));
}

inline std::uint64_t get_uint(std::istream& in, int bytes) {
    std::uint64_t v = 0;
    for (int b = 0; b < bytes; ++b) {
        const int c = in.get();
        if (c == std::char_traits<char>::eof()) throw InvalidInput("binary stream truncated");
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * b);
    }
    return v;
}

inline void put_u32(std::ostream& out, std::uint32_t v) { put_uint(out, v, 4); }
inline void put_u64(std::ostream& out, std::uint64_t v) { put_uint(out, v, 8); }
inline void put_f64(std::ostream& out, double v) { put_uint(out, std::bit_cast<std::uint64_t>(v), 8); }
inline std::uint32_t get_u32(std::istream& in) { return static_cast<std::uint32_t>(get_uint(in, 4)); }
inline std::uint64_t get_u64(std::istream& in) { return get_uint(in, 8); }
inline double get_f64(std::istream& in) { return std::bit_cast<double>(get_uint(in, 8)); }

inline void put_f64s(std::ostream& out, const std::vector<double>& v) {
    put_u64(out, v.size());
    for (double x : v) put_f64(out, x);
}

inline std::vector<double> get_f64s(std::istream& in, std::uint64_t max_count = 1ull << 32) {
    const std::uint64_t n = get_u64(in);
    if (n > max_count) throw InvalidInput("binary stream: implausible array length");
    std::vector<double> v(n);
    for (double& x : v) x = get_f64(in);
    return v;
}

inline void put_string(std::ostream& out, const std::string& s) {
    put_u64(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& in, std::uint64_t max_size = 1ull << 24) {
    const std::uint64_t n = get_u64(in);
    if (n > max_size) throw InvalidInput("binary stream: implausible string length");
    std::string s(n, '\0');
    if (!in.read(s.data(), static_cast<std::streamsize>(n))) throw InvalidInput("binary stream truncated");
    return s;
}

inline void put_magic(std::ostream& out, const char (&magic)[9]) { out.write(magic, 8); }

inline void expect_magic(std::istream& in, const char (&magic)[9], const char* what) {
    char buf[8];
    if (!in.read(buf, 8) || std::string(buf, 8) != std::string(magic, 8))
        throw InvalidInput(std::string(what) + ": bad header");
}

}  // namespace mt3d::binary
