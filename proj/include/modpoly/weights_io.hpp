#pragma once

// MODPOLY1 weight dumps:
//
//   bytes 0..7   "MODPOLY1"
//   u32 LE       kind (0 addition, 1 multiplication, 2 trained)
//   u32 LE       p
//   u32 LE       S  (number of embedding blocks)
//   u32 LE       N  (hidden width)
//   f64 LE       S blocks, each N x p, row-major
//   f64 LE       output matrix, p x N, row-major

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "modpoly/error.hpp"
#include "modpoly/net.hpp"

namespace modpoly {

inline constexpr std::array<char, 8> weight_magic = {'M', 'O', 'D', 'P', 'O', 'L', 'Y', '1'};

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
    const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                           static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    os.write(bytes, 4);
}

inline void put_f64(std::ostream& os, double x) {
    const auto v = std::bit_cast<std::uint64_t>(x);
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(bytes, 8);
}

inline std::uint32_t get_u32(std::istream& is) {
    unsigned char bytes[4];
    if (!is.read(reinterpret_cast<char*>(bytes), 4)) throw FormatError("truncated MODPOLY1 header");
    return std::uint32_t{bytes[0]} | std::uint32_t{bytes[1]} << 8 | std::uint32_t{bytes[2]} << 16 |
           std::uint32_t{bytes[3]} << 24;
}

inline double get_f64(std::istream& is) {
    unsigned char bytes[8];
    if (!is.read(reinterpret_cast<char*>(bytes), 8)) throw FormatError("truncated MODPOLY1 payload");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{bytes[i]} << (8 * i);
    return std::bit_cast<double>(v);
}

inline void put_matrix(std::ostream& os, const Matrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) put_f64(os, m(r, c));
}

inline Matrix get_matrix(std::istream& is, Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = get_f64(is);
    return m;
}

} // namespace detail

inline void write_weights(std::ostream& os, const TwoLayerNet& net) {
    os.write(weight_magic.data(), weight_magic.size());
    detail::put_u32(os, static_cast<std::uint32_t>(net.kind()));
    detail::put_u32(os, net.p());
    detail::put_u32(os, static_cast<std::uint32_t>(net.arity()));
    detail::put_u32(os, static_cast<std::uint32_t>(net.width()));
    for (const auto& b : net.blocks()) detail::put_matrix(os, b);
    detail::put_matrix(os, net.out());
    if (!os) throw FormatError("failed writing MODPOLY1 dump");
}

/// The activation power is not stored; pass it when it differs from S.
inline TwoLayerNet read_weights(std::istream& is, unsigned power = 0) {
    std::array<char, 8> magic{};
    if (!is.read(magic.data(), magic.size()) || magic != weight_magic) throw FormatError("missing MODPOLY1 magic");
    const auto kind = detail::get_u32(is);
    if (kind > 2) throw FormatError("unknown network kind tag " + std::to_string(kind));
    const auto p = detail::get_u32(is);
    const auto s = detail::get_u32(is);
    const auto n = detail::get_u32(is);
    if (p < 2 || s < 1 || n < 1 || s > 64) throw FormatError("implausible MODPOLY1 header");
    std::vector<Matrix> blocks;
    for (std::uint32_t i = 0; i < s; ++i) blocks.push_back(detail::get_matrix(is, n, p));
    Matrix out = detail::get_matrix(is, p, n);
    if (is.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after MODPOLY1 payload");
    return TwoLayerNet(p, static_cast<NetKind>(kind), std::move(blocks), std::move(out), power);
}

inline void save_weights(const std::string& path, const TwoLayerNet& net) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot open " + path + " for writing");
    write_weights(os, net);
}

inline TwoLayerNet load_weights(const std::string& path, unsigned power = 0) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open " + path);
    return read_weights(is, power);
}

} // namespace modpoly
