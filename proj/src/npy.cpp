#include "cte/npy.hpp"

#include "cte/errors.hpp"
#include "cte/fs_util.hpp"

#include <fmt/format.h>

#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <limits>
#include <optional>

static_assert(std::endian::native == std::endian::little, "NPY payloads are handled as little-endian");

namespace cte::npy {

namespace {

constexpr std::string_view kMagic = "\x93NUMPY";
constexpr std::size_t kPreambleSize = 10;  // magic + version + uint16 header length
constexpr std::size_t kAlign = 64;
constexpr std::size_t kGrowthAxisMaxDigits = 21;

ValidationError header_error(const std::string& msg) {
    return ValidationError("malformed NPY header: " + msg);
}

// Recursive-descent parser for the python dict literal in the header.
class HeaderParser {
public:
    explicit HeaderParser(std::string_view text) : text_(text) {}

    void parse(Array& out) {
        std::optional<Dtype> dtype;
        std::optional<bool> fortran;
        std::optional<std::vector<std::size_t>> shape;

        skip_ws();
        expect('{');
        skip_ws();
        while (peek() != '}') {
            std::string key = parse_string();
            skip_ws();
            expect(':');
            skip_ws();
            if (key == "descr") {
                if (dtype) throw header_error("duplicate key 'descr'");
                dtype = parse_descr(parse_string());
            } else if (key == "fortran_order") {
                if (fortran) throw header_error("duplicate key 'fortran_order'");
                fortran = parse_bool();
            } else if (key == "shape") {
                if (shape) throw header_error("duplicate key 'shape'");
                shape = parse_shape();
            } else {
                throw header_error(fmt::format("unexpected key '{}'", key));
            }
            skip_ws();
            if (peek() == ',') {
                ++pos_;
                skip_ws();
            } else if (peek() != '}') {
                throw header_error("expected ',' or '}'");
            }
        }
        ++pos_;
        // Only padding spaces and the terminating newline may follow.
        while (pos_ < text_.size() && text_[pos_] == ' ')
            ++pos_;
        if (pos_ + 1 != text_.size() || text_[pos_] != '\n')
            throw header_error("header must end with padding and a newline");

        if (!dtype || !fortran || !shape)
            throw header_error("missing one of 'descr', 'fortran_order', 'shape'");
        if (*fortran)
            throw ValidationError("Fortran-ordered NPY arrays are not supported");
        out.dtype = *dtype;
        out.shape = std::move(*shape);
    }

private:
    char peek() const {
        if (pos_ >= text_.size())
            throw header_error("unexpected end of header");
        return text_[pos_];
    }

    void expect(char c) {
        if (peek() != c)
            throw header_error(fmt::format("expected '{}' at offset {}", c, pos_));
        ++pos_;
    }

    void skip_ws() {
        while (pos_ < text_.size() && text_[pos_] == ' ')
            ++pos_;
    }

    std::string parse_string() {
        char quote = peek();
        if (quote != '\'' && quote != '"')
            throw header_error("expected quoted string");
        ++pos_;
        std::size_t end = text_.find(quote, pos_);
        if (end == std::string_view::npos)
            throw header_error("unterminated string");
        std::string value(text_.substr(pos_, end - pos_));
        pos_ = end + 1;
        return value;
    }

    bool parse_bool() {
        if (text_.substr(pos_, 4) == "True") {
            pos_ += 4;
            return true;
        }
        if (text_.substr(pos_, 5) == "False") {
            pos_ += 5;
            return false;
        }
        throw header_error("expected True or False");
    }

    std::vector<std::size_t> parse_shape() {
        std::vector<std::size_t> dims;
        expect('(');
        skip_ws();
        while (peek() != ')') {
            if (!std::isdigit(static_cast<unsigned char>(peek())))
                throw header_error("shape entries must be non-negative integers");
            std::size_t value = 0;
            while (std::isdigit(static_cast<unsigned char>(peek()))) {
                std::size_t digit = static_cast<std::size_t>(peek() - '0');
                if (value > (std::numeric_limits<std::size_t>::max() - digit) / 10)
                    throw header_error("shape entry overflows");
                value = value * 10 + digit;
                ++pos_;
            }
            dims.push_back(value);
            skip_ws();
            if (peek() == ',') {
                ++pos_;
                skip_ws();
            } else if (peek() != ')') {
                throw header_error("expected ',' or ')' in shape");
            }
        }
        ++pos_;
        return dims;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

std::string python_tuple_repr(std::span<const std::size_t> shape) {
    if (shape.empty())
        return "()";
    if (shape.size() == 1)
        return fmt::format("({},)", shape[0]);
    return fmt::format("({})", fmt::join(shape, ", "));
}

template <typename T>
T load_le(const std::byte* p) {
    T value;
    std::memcpy(&value, p, sizeof(T));
    return value;
}

template <typename T>
void store_le(std::byte* p, T value) {
    std::memcpy(p, &value, sizeof(T));
}

} // namespace

std::size_t item_size(Dtype dtype) noexcept {
    switch (dtype) {
    case Dtype::kU1: return 1;
    case Dtype::kU2: return 2;
    case Dtype::kU4: return 4;
    case Dtype::kF4: return 4;
    case Dtype::kF8: return 8;
    }
    return 0;
}

bool is_integer(Dtype dtype) noexcept {
    return dtype == Dtype::kU1 || dtype == Dtype::kU2 || dtype == Dtype::kU4;
}

std::string_view descr(Dtype dtype) noexcept {
    switch (dtype) {
    case Dtype::kU1: return "|u1";
    case Dtype::kU2: return "<u2";
    case Dtype::kU4: return "<u4";
    case Dtype::kF4: return "<f4";
    case Dtype::kF8: return "<f8";
    }
    return "";
}

Dtype parse_descr(std::string_view text) {
    if (text == "|u1" || text == "<u1") return Dtype::kU1;
    if (text == "<u2") return Dtype::kU2;
    if (text == "<u4") return Dtype::kU4;
    if (text == "<f4") return Dtype::kF4;
    if (text == "<f8") return Dtype::kF8;
    if (text == "|i1" || text == "<i1" || text == "<i2" || text == "<i4" || text == "<i8")
        throw ValidationError(fmt::format("signed dtype '{}' rejected: labels must be unsigned, negative labels are invalid", text));
    throw ValidationError(fmt::format("unsupported NPY dtype '{}' (accepted: u1, <u2, <u4, <f4, <f8)", text));
}

std::size_t Array::element_count() const noexcept {
    std::size_t n = 1;
    for (std::size_t d : shape)
        n *= d;
    return n;
}

double Array::as_double(std::size_t index) const {
    const std::byte* p = data.data() + index * item_size(dtype);
    switch (dtype) {
    case Dtype::kU1: return static_cast<double>(std::to_integer<std::uint8_t>(*p));
    case Dtype::kU2: return static_cast<double>(load_le<std::uint16_t>(p));
    case Dtype::kU4: return static_cast<double>(load_le<std::uint32_t>(p));
    case Dtype::kF4: return static_cast<double>(load_le<float>(p));
    case Dtype::kF8: return load_le<double>(p);
    }
    return 0.0;
}

std::uint64_t Array::as_uint(std::size_t index) const {
    const std::byte* p = data.data() + index * item_size(dtype);
    switch (dtype) {
    case Dtype::kU1: return std::to_integer<std::uint8_t>(*p);
    case Dtype::kU2: return load_le<std::uint16_t>(p);
    case Dtype::kU4: return load_le<std::uint32_t>(p);
    default: throw ValidationError("integer access to a floating-point NPY array");
    }
}

Array parse(std::span<const std::byte> bytes) {
    if (bytes.size() < kPreambleSize)
        throw header_error("file shorter than the NPY preamble");
    if (std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0)
        throw header_error("bad magic string");
    auto major = std::to_integer<unsigned>(bytes[6]);
    auto minor = std::to_integer<unsigned>(bytes[7]);
    if (major != 1 || minor != 0)
        throw header_error(fmt::format("unsupported NPY version {}.{} (only 1.0)", major, minor));
    std::size_t header_len = load_le<std::uint16_t>(bytes.data() + 8);
    if (kPreambleSize + header_len > bytes.size())
        throw header_error("declared header length exceeds file size");

    std::string_view header(reinterpret_cast<const char*>(bytes.data() + kPreambleSize), header_len);
    Array array;
    HeaderParser(header).parse(array);

    std::size_t count = 1;
    for (std::size_t d : array.shape) {
        if (d != 0 && count > std::numeric_limits<std::size_t>::max() / d)
            throw header_error("shape product overflows");
        count *= d;
    }
    std::size_t payload = bytes.size() - kPreambleSize - header_len;
    std::size_t expected = count * item_size(array.dtype);
    if (payload != expected)
        throw ValidationError(fmt::format("NPY payload is {} bytes but shape and dtype require {}", payload, expected));
    auto body = bytes.subspan(kPreambleSize + header_len);
    array.data.assign(body.begin(), body.end());
    return array;
}

Array read(const std::filesystem::path& path) {
    auto bytes = read_file_bytes(path);
    try {
        return parse(bytes);
    } catch (const ValidationError& e) {
        throw ValidationError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

std::string make_header(Dtype dtype, std::span<const std::size_t> shape) {
    std::string dict = fmt::format("{{'descr': '{}', 'fortran_order': False, 'shape': {}, }}", descr(dtype),
                                   python_tuple_repr(shape));
    if (!shape.empty()) {
        std::size_t digits = fmt::formatted_size("{}", shape[0]);
        if (digits < kGrowthAxisMaxDigits)
            dict.append(kGrowthAxisMaxDigits - digits, ' ');
    }
    std::size_t hlen = dict.size() + 1;
    std::size_t padlen = kAlign - ((kPreambleSize + hlen) % kAlign);
    dict.append(padlen, ' ');
    dict.push_back('\n');
    if (dict.size() > std::numeric_limits<std::uint16_t>::max())
        throw ValidationError("NPY header too long for format version 1.0");
    return dict;
}

std::vector<std::byte> serialize(const Array& array) {
    if (array.data.size() != array.element_count() * item_size(array.dtype))
        throw ValidationError("array payload does not match its shape");
    std::string header = make_header(array.dtype, array.shape);
    std::vector<std::byte> out(kPreambleSize + header.size() + array.data.size());
    std::memcpy(out.data(), kMagic.data(), kMagic.size());
    out[6] = std::byte{1};
    out[7] = std::byte{0};
    store_le<std::uint16_t>(out.data() + 8, static_cast<std::uint16_t>(header.size()));
    std::memcpy(out.data() + kPreambleSize, header.data(), header.size());
    if (!array.data.empty())
        std::memcpy(out.data() + kPreambleSize + header.size(), array.data.data(), array.data.size());
    return out;
}

void write(const std::filesystem::path& path, const Array& array) {
    write_file_atomic(path, serialize(array));
}

std::vector<std::byte> pack_uints(std::span<const std::uint32_t> values, Dtype dtype) {
    if (!is_integer(dtype))
        throw ValidationError("pack_uints needs an integer dtype");
    std::vector<std::byte> out(values.size() * item_size(dtype));
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::uint32_t v = values[i];
        std::byte* p = out.data() + i * item_size(dtype);
        switch (dtype) {
        case Dtype::kU1:
            if (v > 0xFFu) throw ValidationError(fmt::format("label {} does not fit in uint8", v));
            *p = static_cast<std::byte>(v);
            break;
        case Dtype::kU2:
            if (v > 0xFFFFu) throw ValidationError(fmt::format("label {} does not fit in uint16", v));
            store_le<std::uint16_t>(p, static_cast<std::uint16_t>(v));
            break;
        default:
            store_le<std::uint32_t>(p, v);
        }
    }
    return out;
}

std::vector<std::byte> pack_doubles(std::span<const double> values, Dtype dtype) {
    if (dtype != Dtype::kF4 && dtype != Dtype::kF8)
        throw ValidationError("pack_doubles needs a floating-point dtype");
    std::vector<std::byte> out(values.size() * item_size(dtype));
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::byte* p = out.data() + i * item_size(dtype);
        if (dtype == Dtype::kF4)
            store_le<float>(p, static_cast<float>(values[i]));
        else
            store_le<double>(p, values[i]);
    }
    return out;
}

} // namespace cte::npy
