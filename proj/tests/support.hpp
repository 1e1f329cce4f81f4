#pragma once

#include "cte/arrays.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace cte::testing {

// Unique scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "cte") {
        static std::uint64_t counter = 0;
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                (tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::filesystem::path data_file(const std::string& name) {
    return std::filesystem::path(CTE_TEST_DATA_DIR) / name;
}

inline LabelMap random_labels(std::mt19937_64& gen, std::size_t h, std::size_t w, std::uint32_t max_label) {
    std::uniform_int_distribution<std::uint32_t> label(0, max_label);
    std::vector<std::uint32_t> v(h * w);
    for (auto& x : v)
        x = label(gen);
    return LabelMap(h, w, std::move(v));
}

// Softmax-normalised probabilities over `classes` channels.
inline ProbMap random_probs(std::mt19937_64& gen, std::size_t classes, std::size_t h, std::size_t w) {
    std::uniform_real_distribution<double> u(0.01, 1.0);
    const std::size_t n = h * w;
    std::vector<double> v(classes * n);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t c = 0; c < classes; ++c)
            sum += v[c * n + i] = u(gen);
        for (std::size_t c = 0; c < classes; ++c)
            v[c * n + i] /= sum;
    }
    return ProbMap(classes, h, w, std::move(v));
}

inline LabelMap argmax_labels(const ProbMap& p) {
    std::vector<std::uint32_t> v(p.pixels());
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = p.argmax(i);
    return LabelMap(p.height(), p.width(), std::move(v));
}

} // namespace cte::testing
