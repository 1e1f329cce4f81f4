#pragma once

#include "cte/npy.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace cte {

// Integer segmentation output over an H x W grid. Semantic maps hold class
// ids, instance maps hold instance ids; 0 is background in both cases.
class LabelMap {
public:
    LabelMap(std::size_t height, std::size_t width, std::vector<std::uint32_t> values,
             npy::Dtype storage = npy::Dtype::kU4);

    static LabelMap zeros(std::size_t height, std::size_t width, npy::Dtype storage = npy::Dtype::kU4);

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t size() const noexcept { return values_.size(); }
    npy::Dtype storage() const noexcept { return storage_; }

    std::span<const std::uint32_t> values() const noexcept { return values_; }
    std::uint32_t operator[](std::size_t i) const noexcept { return values_[i]; }
    std::uint32_t at(std::size_t row, std::size_t col) const { return values_.at(row * width_ + col); }

    std::uint32_t max_label() const noexcept;
    std::size_t foreground_count() const noexcept;

    // Throws ValidationError when a label is not below num_classes.
    void check_class_count(std::uint32_t num_classes) const;

    bool same_shape(const LabelMap& other) const noexcept {
        return height_ == other.height_ && width_ == other.width_;
    }

    friend bool operator==(const LabelMap&, const LabelMap&) = default;

private:
    std::size_t height_;
    std::size_t width_;
    std::vector<std::uint32_t> values_;
    npy::Dtype storage_;
};

// Per-pixel class probabilities after softmax, stored channel-major (C, H, W).
// A single-channel map is the foreground probability of a binary model and
// may be stored on disk without the channel axis.
class ProbMap {
public:
    static constexpr double kChannelSumTolerance = 1e-4;

    ProbMap(std::size_t classes, std::size_t height, std::size_t width, std::vector<double> values,
            npy::Dtype storage = npy::Dtype::kF8, bool channel_axis = true);

    std::size_t classes() const noexcept { return classes_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t pixels() const noexcept { return height_ * width_; }
    npy::Dtype storage() const noexcept { return storage_; }
    bool has_channel_axis() const noexcept { return channel_axis_; }

    std::span<const double> values() const noexcept { return values_; }
    double at(std::size_t cls, std::size_t pixel) const { return values_.at(cls * pixels() + pixel); }

    // Probability of the most likely class at a pixel; for a single-channel
    // map that is max(p, 1 - p).
    double confidence(std::size_t pixel) const noexcept;
    std::uint32_t argmax(std::size_t pixel) const noexcept;

    friend bool operator==(const ProbMap&, const ProbMap&) = default;

private:
    std::size_t classes_;
    std::size_t height_;
    std::size_t width_;
    std::vector<double> values_;
    npy::Dtype storage_;
    bool channel_axis_;
};

// Model input image, intensity-normalised, channel-major (C, H, W).
struct ImagePatch {
    std::size_t channels = 1;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> values;
    npy::Dtype storage = npy::Dtype::kF8;
    bool channel_axis = false;

    ImagePatch() = default;
    ImagePatch(std::size_t channels, std::size_t height, std::size_t width, std::vector<double> values,
               npy::Dtype storage = npy::Dtype::kF8, bool channel_axis = false);

    std::size_t size() const noexcept { return values.size(); }
    bool same_shape(const ImagePatch& other) const noexcept {
        return channels == other.channels && height == other.height && width == other.width;
    }
    double mean() const noexcept;

    friend bool operator==(const ImagePatch&, const ImagePatch&) = default;
};

} // namespace cte
