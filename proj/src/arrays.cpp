#include "cte/arrays.hpp"

#include "cte/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cte {

LabelMap::LabelMap(std::size_t height, std::size_t width, std::vector<std::uint32_t> values, npy::Dtype storage)
    : height_(height), width_(width), values_(std::move(values)), storage_(storage) {
    if (height_ == 0 || width_ == 0)
        throw ValidationError(fmt::format("label map dimensions must be positive, got {}x{}", height_, width_));
    if (values_.size() != height_ * width_)
        throw ValidationError(fmt::format("label map holds {} values for a {}x{} grid", values_.size(), height_, width_));
    if (!npy::is_integer(storage_))
        throw ValidationError("label maps need an unsigned integer dtype");
}

LabelMap LabelMap::zeros(std::size_t height, std::size_t width, npy::Dtype storage) {
    return LabelMap(height, width, std::vector<std::uint32_t>(height * width, 0), storage);
}

std::uint32_t LabelMap::max_label() const noexcept {
    return values_.empty() ? 0 : *std::max_element(values_.begin(), values_.end());
}

std::size_t LabelMap::foreground_count() const noexcept {
    return static_cast<std::size_t>(std::count_if(values_.begin(), values_.end(), [](std::uint32_t v) { return v != 0; }));
}

void LabelMap::check_class_count(std::uint32_t num_classes) const {
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (values_[i] >= num_classes)
            throw ValidationError(fmt::format("label {} at pixel {} is not below the class count {}", values_[i], i,
                                              num_classes));
    }
}

ProbMap::ProbMap(std::size_t classes, std::size_t height, std::size_t width, std::vector<double> values,
                 npy::Dtype storage, bool channel_axis)
    : classes_(classes), height_(height), width_(width), values_(std::move(values)), storage_(storage),
      channel_axis_(channel_axis) {
    if (classes_ == 0 || height_ == 0 || width_ == 0)
        throw ValidationError(
            fmt::format("probability map dimensions must be positive, got {}x{}x{}", classes_, height_, width_));
    if (values_.size() != classes_ * height_ * width_)
        throw ValidationError("probability map value count does not match its shape");
    if (storage_ != npy::Dtype::kF4 && storage_ != npy::Dtype::kF8)
        throw ValidationError("probability maps need a float32 or float64 dtype");
    if (!channel_axis_ && classes_ != 1)
        throw ValidationError("only single-channel probability maps may omit the channel axis");

    for (std::size_t i = 0; i < values_.size(); ++i) {
        double v = values_[i];
        if (!std::isfinite(v))
            throw ValidationError(fmt::format("probability map holds a non-finite value at index {}", i));
        if (v < 0.0 || v > 1.0)
            throw ValidationError(fmt::format("value out of [0,1]: {} at index {}", v, i));
    }
    if (classes_ >= 2) {
        const std::size_t n = pixels();
        for (std::size_t p = 0; p < n; ++p) {
            double sum = 0.0;
            for (std::size_t c = 0; c < classes_; ++c)
                sum += values_[c * n + p];
            if (std::abs(sum - 1.0) > kChannelSumTolerance)
                throw ValidationError(fmt::format("class probabilities at pixel {} sum to {}, not 1", p, sum));
        }
    }
}

double ProbMap::confidence(std::size_t pixel) const noexcept {
    if (classes_ == 1) {
        double p = values_[pixel];
        return std::max(p, 1.0 - p);
    }
    double best = 0.0;
    const std::size_t n = pixels();
    for (std::size_t c = 0; c < classes_; ++c)
        best = std::max(best, values_[c * n + pixel]);
    return best;
}

std::uint32_t ProbMap::argmax(std::size_t pixel) const noexcept {
    if (classes_ == 1)
        return values_[pixel] > 0.5 ? 1u : 0u;
    const std::size_t n = pixels();
    std::uint32_t best = 0;
    for (std::size_t c = 1; c < classes_; ++c) {
        if (values_[c * n + pixel] > values_[best * n + pixel])
            best = static_cast<std::uint32_t>(c);
    }
    return best;
}

ImagePatch::ImagePatch(std::size_t c, std::size_t h, std::size_t w, std::vector<double> v, npy::Dtype s, bool axis)
    : channels(c), height(h), width(w), values(std::move(v)), storage(s), channel_axis(axis) {
    if (channels == 0 || height == 0 || width == 0)
        throw ValidationError("image dimensions must be positive");
    if (values.size() != channels * height * width)
        throw ValidationError("image value count does not match its shape");
    if (!channel_axis && channels != 1)
        throw ValidationError("multichannel images need a channel axis");
    for (double x : values) {
        if (!std::isfinite(x))
            throw ValidationError("image holds a non-finite value");
    }
}

double ImagePatch::mean() const noexcept {
    if (values.empty())
        return 0.0;
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

} // namespace cte
