#include "cte/tensor_io.hpp"

#include "cte/errors.hpp"

#include <fmt/format.h>

namespace cte {

namespace fs = std::filesystem;

namespace {

template <typename Fn>
auto with_path_context(const fs::path& path, Fn&& fn) {
    try {
        return fn();
    } catch (const ValidationError& e) {
        throw ValidationError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

std::vector<double> unpack_doubles(const npy::Array& array) {
    std::vector<double> values(array.element_count());
    for (std::size_t i = 0; i < values.size(); ++i)
        values[i] = array.as_double(i);
    return values;
}

} // namespace

LabelMap label_map_from_npy(const npy::Array& array) {
    if (!npy::is_integer(array.dtype))
        throw ValidationError(fmt::format("expected an integer label array, found dtype '{}'", npy::descr(array.dtype)));
    if (array.shape.size() != 2)
        throw ValidationError(fmt::format("label arrays must be 2-D, found rank {}", array.shape.size()));
    std::vector<std::uint32_t> values(array.element_count());
    for (std::size_t i = 0; i < values.size(); ++i)
        values[i] = static_cast<std::uint32_t>(array.as_uint(i));
    return LabelMap(array.shape[0], array.shape[1], std::move(values), array.dtype);
}

ProbMap prob_map_from_npy(const npy::Array& array) {
    if (npy::is_integer(array.dtype))
        throw ValidationError(
            fmt::format("expected a floating-point probability array, found dtype '{}'", npy::descr(array.dtype)));
    if (array.shape.size() == 2)
        return ProbMap(1, array.shape[0], array.shape[1], unpack_doubles(array), array.dtype, false);
    if (array.shape.size() == 3)
        return ProbMap(array.shape[0], array.shape[1], array.shape[2], unpack_doubles(array), array.dtype, true);
    throw ValidationError(fmt::format("probability arrays must be 2-D or 3-D, found rank {}", array.shape.size()));
}

ImagePatch image_from_npy(const npy::Array& array) {
    if (npy::is_integer(array.dtype))
        throw ValidationError("images must be stored as float32 or float64");
    if (array.shape.size() == 2)
        return ImagePatch(1, array.shape[0], array.shape[1], unpack_doubles(array), array.dtype, false);
    if (array.shape.size() == 3)
        return ImagePatch(array.shape[0], array.shape[1], array.shape[2], unpack_doubles(array), array.dtype, true);
    throw ValidationError(fmt::format("images must be 2-D or 3-D, found rank {}", array.shape.size()));
}

AnyArray read_array(const fs::path& path, ArrayKind expected) {
    npy::Array raw = npy::read(path);
    return with_path_context(path, [&]() -> AnyArray {
        if (expected == ArrayKind::kLabel)
            return label_map_from_npy(raw);
        return prob_map_from_npy(raw);
    });
}

LabelMap read_label_map(const fs::path& path) {
    return std::get<LabelMap>(read_array(path, ArrayKind::kLabel));
}

ProbMap read_prob_map(const fs::path& path) {
    return std::get<ProbMap>(read_array(path, ArrayKind::kProb));
}

ImagePatch read_image(const fs::path& path) {
    npy::Array raw = npy::read(path);
    return with_path_context(path, [&] { return image_from_npy(raw); });
}

npy::Array to_npy(const LabelMap& labels) {
    npy::Array out;
    out.dtype = labels.storage();
    out.shape = {labels.height(), labels.width()};
    out.data = npy::pack_uints(labels.values(), labels.storage());
    return out;
}

npy::Array to_npy(const ProbMap& probs) {
    npy::Array out;
    out.dtype = probs.storage();
    if (probs.has_channel_axis())
        out.shape = {probs.classes(), probs.height(), probs.width()};
    else
        out.shape = {probs.height(), probs.width()};
    out.data = npy::pack_doubles(probs.values(), probs.storage());
    return out;
}

npy::Array to_npy(const ImagePatch& image) {
    npy::Array out;
    out.dtype = image.storage;
    if (image.channel_axis)
        out.shape = {image.channels, image.height, image.width};
    else
        out.shape = {image.height, image.width};
    out.data = npy::pack_doubles(image.values, image.storage);
    return out;
}

void write_array(const fs::path& path, const LabelMap& labels) { npy::write(path, to_npy(labels)); }
void write_array(const fs::path& path, const ProbMap& probs) { npy::write(path, to_npy(probs)); }
void write_array(const fs::path& path, const ImagePatch& image) { npy::write(path, to_npy(image)); }

} // namespace cte
