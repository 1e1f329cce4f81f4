#pragma once

#include "cte/perturb.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cte {

enum class Task { kSemanticBinary, kSemanticMulticlass, kInstance };

std::string_view to_string(Task task) noexcept;
Task parse_task(std::string_view text);

struct PredictionEntry {
    std::string model;
    std::string image;
    std::optional<std::string> perturbation;  // nullopt marks the unperturbed reference
    std::filesystem::path path;               // label map, resolved against the manifest directory
    std::optional<std::filesystem::path> prob_path;

    bool is_reference() const noexcept { return !perturbation.has_value(); }
};

// All predictions of one model on one image.
struct PredictionGroup {
    std::size_t model_index = 0;
    std::size_t image_index = 0;
    std::size_t reference = 0;              // index into Manifest::predictions
    std::vector<std::size_t> perturbed;     // indices into Manifest::predictions, manifest order
};

struct Manifest {
    std::string dataset_id;
    Task task = Task::kSemanticBinary;
    std::uint32_t num_classes = 2;
    std::vector<std::string> model_ids;
    std::vector<std::string> image_ids;
    std::vector<perturb::PerturbationSpec> perturbations;
    std::vector<PredictionEntry> predictions;
    std::optional<std::map<std::string, double>> performance;
    std::filesystem::path root;

    // Groups ordered model-major, then by image, following the id lists.
    std::vector<PredictionGroup> groups;

    std::size_t num_models() const noexcept { return model_ids.size(); }
    std::size_t num_images() const noexcept { return image_ids.size(); }
    std::size_t num_perturbations() const noexcept { return perturbations.size(); }

    const PredictionGroup& group(std::size_t model_index, std::size_t image_index) const {
        return groups.at(model_index * image_ids.size() + image_index);
    }
};

struct ManifestOptions {
    bool check_files = true;
};

// Parses and cross-checks a manifest document. Relative paths resolve
// against base_dir. Throws ValidationError (schema, duplicates, completeness)
// or IoError (unreadable or dangling files).
Manifest parse_manifest(const nlohmann::json& doc, const std::filesystem::path& base_dir,
                        const ManifestOptions& options = {});
Manifest load_manifest(const std::filesystem::path& path, const ManifestOptions& options = {});

// Serialises with paths relative to manifest.root where possible.
nlohmann::json manifest_to_json(const Manifest& manifest);

} // namespace cte
