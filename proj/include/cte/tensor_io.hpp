#pragma once

#include "cte/arrays.hpp"

#include <filesystem>
#include <variant>

namespace cte {

enum class ArrayKind { kLabel, kProb };

using AnyArray = std::variant<LabelMap, ProbMap>;

// Reads and validates an NPY file. Integer files become LabelMaps (shape
// H x W); floating files become ProbMaps (shape C x H x W, or H x W for a
// binary foreground probability). A dtype that contradicts `expected` is a
// ValidationError.
AnyArray read_array(const std::filesystem::path& path, ArrayKind expected);

LabelMap read_label_map(const std::filesystem::path& path);
ProbMap read_prob_map(const std::filesystem::path& path);
ImagePatch read_image(const std::filesystem::path& path);

npy::Array to_npy(const LabelMap& labels);
npy::Array to_npy(const ProbMap& probs);
npy::Array to_npy(const ImagePatch& image);

LabelMap label_map_from_npy(const npy::Array& array);
ProbMap prob_map_from_npy(const npy::Array& array);
ImagePatch image_from_npy(const npy::Array& array);

void write_array(const std::filesystem::path& path, const LabelMap& labels);
void write_array(const std::filesystem::path& path, const ProbMap& probs);
void write_array(const std::filesystem::path& path, const ImagePatch& image);

} // namespace cte
