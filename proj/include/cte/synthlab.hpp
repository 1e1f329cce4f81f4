#pragma once

// Desk-scale synthetic transfer studies.
//
// Scenes are random disks rendered into a textured image. Each toy model
// thresholds a box-blurred copy of the image plus its high-frequency residual
// scaled by the model's noise amplitude. The residual carries texture, not
// signal, so a larger amplitude pushes pixels towards the decision threshold:
// accuracy drops and predictions become less stable under input noise.
// Models are re-run on inputs perturbed by the real perturbation engine, and
// the resulting folder is an ordinary experiment manifest.

#include "cte/arrays.hpp"
#include "cte/manifest.hpp"
#include "cte/pipeline.hpp"
#include "cte/rankstats.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <vector>

namespace cte::synth {

enum class SceneTask { kSemantic, kInstance };

std::string_view to_string(SceneTask task) noexcept;
SceneTask parse_scene_task(std::string_view text);

struct SyntheticScene {
    std::string image_id;
    LabelMap ground_truth;  // binary for semantic scenes, instance ids otherwise
    ImagePatch image;
};

struct ToyModel {
    std::string model_id;
    int blur_radius = 1;     // box-filter half width
    double amplitude = 0.0;  // gain on high-frequency input content
};

struct ModelOutput {
    LabelMap labels;
    std::optional<ProbMap> probs;  // semantic only: foreground probability
};

struct StudyOptions {
    SceneTask task = SceneTask::kSemantic;
    std::size_t n_models = 8;
    std::size_t n_images = 16;
    std::uint64_t seed = 7;
    std::size_t image_size = 64;
    perturb::StrengthRange noise_sigma{0.08, 0.12};
    // Overrides the default quality ladder, e.g. to build a study of
    // identical models.
    std::optional<std::vector<ToyModel>> models;
    unsigned jobs = 1;
};

struct StudySummary {
    std::filesystem::path manifest_path;
    std::vector<ToyModel> models;
    std::vector<std::pair<std::string, double>> performance;  // model order
    std::size_t prediction_files = 0;
};

// Seed panel used by the robustness checks.
inline constexpr std::array<std::uint64_t, 10> kSeedPanel = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

inline constexpr double kMaxAmplitude = 0.7;

std::vector<ToyModel> default_ladder(std::size_t n_models);

SyntheticScene make_scene(SceneTask task, std::size_t index, std::uint64_t seed, std::size_t size);

ModelOutput run_model(const ToyModel& model, SceneTask task, const ImagePatch& image);

// Pixel F1 of the foreground against ground truth (1.0 when both are empty).
double foreground_f1(const LabelMap& truth, const LabelMap& prediction);

// Writes images, ground truth, predictions, performance and manifest into
// `folder`. Requires n_models >= 4 and n_images >= 8. With the default
// ladder the measured performance must fall strictly along the ladder,
// otherwise a ValidationError is raised.
StudySummary generate_study(const std::filesystem::path& folder, const StudyOptions& options);

// Runs the full pipeline on a study folder, writing results to
// <folder>/results, and returns the correlation report.
stats::CorrelationReport run_study(const std::filesystem::path& folder, const RunConfig& overrides = {});

} // namespace cte::synth
