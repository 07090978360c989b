#pragma once

#include "slcn/field2d.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

namespace slcn {

/// Binary snapshot of a field's coefficients.
///
///     bytes 0..3   "CHSL"
///     bytes 4..7   format version, uint32 little-endian
///     bytes 8..11  M, uint32 little-endian
///     then M*M IEEE-754 doubles, little-endian, row-major (x-mode outer)
namespace snapshot {

inline constexpr std::array<char, 4> magic{'C', 'H', 'S', 'L'};
inline constexpr std::uint32_t version = 1;
inline constexpr std::size_t header_size = 12;

inline std::size_t file_size(std::uint32_t m) { return header_size + std::size_t{m} * m * sizeof(double); }

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class BadMagic : public Error {
public:
    BadMagic() : Error("snapshot: bad magic") {}
};
class VersionMismatch : public Error {
public:
    explicit VersionMismatch(std::uint32_t found)
        : Error("snapshot: unsupported version " + std::to_string(found))
    {}
};
class Truncated : public Error {
public:
    Truncated() : Error("snapshot: truncated payload") {}
};

namespace detail {

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v)
{
    for (int b = 0; b < 4; ++b) {
        out.push_back(static_cast<unsigned char>((v >> (8 * b)) & 0xffu));
    }
}

inline void put_u64(std::vector<unsigned char>& out, std::uint64_t v)
{
    for (int b = 0; b < 8; ++b) {
        out.push_back(static_cast<unsigned char>((v >> (8 * b)) & 0xffu));
    }
}

inline std::uint64_t get_le(const unsigned char* p, int nbytes)
{
    std::uint64_t v = 0;
    for (int b = 0; b < nbytes; ++b) {
        v |= std::uint64_t{p[b]} << (8 * b);
    }
    return v;
}

} // namespace detail

inline std::vector<unsigned char> encode(const Matrix& coeffs)
{
    if (coeffs.rows() != coeffs.cols()) {
        throw std::invalid_argument("snapshot: coefficients must be square");
    }
    const auto m = static_cast<std::uint32_t>(coeffs.rows());
    std::vector<unsigned char> out;
    out.reserve(file_size(m));
    out.insert(out.end(), magic.begin(), magic.end());
    detail::put_u32(out, version);
    detail::put_u32(out, m);
    for (std::uint32_t j = 0; j < m; ++j) {
        for (std::uint32_t k = 0; k < m; ++k) {
            detail::put_u64(out, std::bit_cast<std::uint64_t>(coeffs(j, k)));
        }
    }
    return out;
}

inline Matrix decode(const std::vector<unsigned char>& bytes)
{
    if (bytes.size() < 4 || std::memcmp(bytes.data(), magic.data(), 4) != 0) {
        throw BadMagic();
    }
    if (bytes.size() < header_size) {
        throw Truncated();
    }
    const auto ver = static_cast<std::uint32_t>(detail::get_le(bytes.data() + 4, 4));
    if (ver != version) {
        throw VersionMismatch(ver);
    }
    const auto m = static_cast<std::uint32_t>(detail::get_le(bytes.data() + 8, 4));
    if (bytes.size() < file_size(m)) {
        throw Truncated();
    }
    Matrix c(m, m);
    const unsigned char* p = bytes.data() + header_size;
    for (std::uint32_t j = 0; j < m; ++j) {
        for (std::uint32_t k = 0; k < m; ++k, p += 8) {
            c(j, k) = std::bit_cast<double>(detail::get_le(p, 8));
        }
    }
    return c;
}

} // namespace snapshot

inline void snapshot_write(const Field2D& field, const std::filesystem::path& path)
{
    const std::vector<unsigned char> bytes = snapshot::encode(field.coeffs());
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw snapshot::Error("snapshot: cannot open " + path.string() + " for writing");
    }
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!os) {
        throw snapshot::Error("snapshot: write failed for " + path.string());
    }
}

/// Raw coefficients from a snapshot file.
inline Matrix snapshot_read_coeffs(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw snapshot::Error("snapshot: cannot open " + path.string());
    }
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return snapshot::decode(bytes);
}

/// Reads a snapshot into a field on `basis`; the stored M must match.
inline Field2D snapshot_read(const std::filesystem::path& path, BasisPtr basis)
{
    Matrix c = snapshot_read_coeffs(path);
    if (c.rows() != basis->dimension()) {
        throw BasisMismatch("snapshot: file has M = " + std::to_string(c.rows()) + ", basis has M = " +
                            std::to_string(basis->dimension()));
    }
    return Field2D(std::move(basis), std::move(c));
}

} // namespace slcn
