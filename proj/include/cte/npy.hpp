#pragma once

// Minimal NPY v1.0 reader/writer.
//
// Only the subset needed for segmentation outputs is accepted: little-endian
// unsigned integers (u1/u2/u4) and floats (f4/f8), C order, rank >= 1. Header
// parsing is strict: the dictionary must hold exactly the keys 'descr',
// 'fortran_order' and 'shape', and the payload size must match the shape.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cte::npy {

enum class Dtype { kU1, kU2, kU4, kF4, kF8 };

std::size_t item_size(Dtype dtype) noexcept;
bool is_integer(Dtype dtype) noexcept;
// Canonical descr string as numpy writes it, e.g. "|u1", "<f4".
std::string_view descr(Dtype dtype) noexcept;
Dtype parse_descr(std::string_view text);

struct Array {
    Dtype dtype = Dtype::kF8;
    std::vector<std::size_t> shape;
    std::vector<std::byte> data;  // raw little-endian payload, C order

    std::size_t element_count() const noexcept;

    // Element accessors convert from the stored dtype.
    double as_double(std::size_t index) const;
    std::uint64_t as_uint(std::size_t index) const;
};

Array parse(std::span<const std::byte> bytes);
Array read(const std::filesystem::path& path);

// Header layout follows numpy's own writer so files produced here are
// byte-identical to np.save output for the same array.
std::string make_header(Dtype dtype, std::span<const std::size_t> shape);
std::vector<std::byte> serialize(const Array& array);
void write(const std::filesystem::path& path, const Array& array);

// Packs values into the little-endian payload of the requested dtype.
std::vector<std::byte> pack_uints(std::span<const std::uint32_t> values, Dtype dtype);
std::vector<std::byte> pack_doubles(std::span<const double> values, Dtype dtype);

} // namespace cte::npy
