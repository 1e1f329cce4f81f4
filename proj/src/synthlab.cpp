#include "cte/synthlab.hpp"

#include "cte/consistency.hpp"
#include "cte/errors.hpp"
#include "cte/fs_util.hpp"
#include "cte/perturb.hpp"
#include "cte/report.hpp"
#include "cte/rng.hpp"
#include "cte/scoring.hpp"
#include "cte/tensor_io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <queue>

namespace cte::synth {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(SceneTask task) noexcept {
    return task == SceneTask::kSemantic ? "semantic" : "instance";
}

SceneTask parse_scene_task(std::string_view text) {
    if (text == "semantic") return SceneTask::kSemantic;
    if (text == "instance") return SceneTask::kInstance;
    throw ValidationError(fmt::format("unknown synthetic task '{}' (expected semantic or instance)", text));
}

namespace {

constexpr double kBackground = 0.2;
constexpr double kForeground = 0.8;
constexpr double kTextureSigma = 0.05;
constexpr double kLogitGain = 10.0;
constexpr double kHighPassGain = 5.0;
constexpr std::size_t kMinInstanceSize = 5;

struct Disk {
    double cy, cx, r;
};

// Separable box filter with clamp-to-edge borders.
std::vector<double> box_blur(std::span<const double> src, std::size_t h, std::size_t w, int radius) {
    if (radius <= 0)
        return {src.begin(), src.end()};
    auto clampi = [](long v, long hi) { return std::clamp<long>(v, 0, hi - 1); };
    const double norm = 1.0 / (2.0 * radius + 1.0);
    std::vector<double> tmp(h * w);
    std::vector<double> out(h * w);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            double s = 0.0;
            for (int d = -radius; d <= radius; ++d)
                s += src[y * w + static_cast<std::size_t>(clampi(static_cast<long>(x) + d, static_cast<long>(w)))];
            tmp[y * w + x] = s * norm;
        }
    }
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            double s = 0.0;
            for (int d = -radius; d <= radius; ++d)
                s += tmp[static_cast<std::size_t>(clampi(static_cast<long>(y) + d, static_cast<long>(h))) * w + x];
            out[y * w + x] = s * norm;
        }
    }
    return out;
}

// Connected components (4-neighbourhood) of a mask, numbered in raster
// order of their first pixel. Components below kMinInstanceSize are
// dropped, as instance post-processing usually does.
std::vector<std::uint32_t> label_components(const std::vector<bool>& mask, std::size_t h, std::size_t w) {
    std::vector<std::uint32_t> labels(h * w, 0);
    std::vector<bool> seen(h * w, false);
    std::uint32_t next = 1;
    std::vector<std::size_t> members;
    for (std::size_t start = 0; start < h * w; ++start) {
        if (!mask[start] || seen[start])
            continue;
        members.clear();
        std::queue<std::size_t> frontier;
        frontier.push(start);
        seen[start] = true;
        while (!frontier.empty()) {
            std::size_t p = frontier.front();
            frontier.pop();
            members.push_back(p);
            const std::size_t y = p / w;
            const std::size_t x = p % w;
            auto visit = [&](std::size_t q) {
                if (mask[q] && !seen[q]) {
                    seen[q] = true;
                    frontier.push(q);
                }
            };
            if (y > 0) visit(p - w);
            if (y + 1 < h) visit(p + w);
            if (x > 0) visit(p - 1);
            if (x + 1 < w) visit(p + 1);
        }
        if (members.size() < kMinInstanceSize)
            continue;
        for (std::size_t p : members)
            labels[p] = next;
        ++next;
    }
    return labels;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double to_float32(double v) { return static_cast<double>(static_cast<float>(v)); }

perturb::PerturbationSpec study_perturbation(const StudyOptions& options) {
    perturb::PerturbationSpec spec;
    spec.id = "gauss";
    spec.kind = perturb::Kind::kGauss;
    spec.strength = options.noise_sigma;
    spec.placement = perturb::Placement::kInput;
    spec.seed = rng::mix64(options.seed ^ 0xC0FFEEULL);
    spec.validate();
    return spec;
}

double performance_of(SceneTask task, const LabelMap& truth, const LabelMap& prediction) {
    if (task == SceneTask::kSemantic)
        return foreground_f1(truth, prediction);
    return consistency::ars_consistency(truth, prediction, consistency::kDefaultArsAlpha).value;
}

} // namespace

std::vector<ToyModel> default_ladder(std::size_t n_models) {
    std::vector<ToyModel> ladder;
    for (std::size_t j = 0; j < n_models; ++j) {
        ToyModel m;
        m.model_id = fmt::format("m{:02}", j);
        const double t = n_models > 1 ? static_cast<double>(j) / static_cast<double>(n_models - 1) : 0.0;
        m.amplitude = kMaxAmplitude * t;
        m.blur_radius = 1 + static_cast<int>(2 * j / std::max<std::size_t>(1, n_models - 1));
        ladder.push_back(std::move(m));
    }
    return ladder;
}

SyntheticScene make_scene(SceneTask task, std::size_t index, std::uint64_t seed, std::size_t size) {
    const std::string image_id = fmt::format("img{:03}", index);
    const auto stream = rng::CounterStream::derive(seed, rng::StreamTag::kScene, image_id);
    std::uint64_t counter = 0;
    const double scale = static_cast<double>(size) / 64.0;
    const std::size_t n = size * size;

    for (int attempt = 0; attempt < 1000; ++attempt) {
        const std::size_t n_disks = 3 + stream.below(4, counter);
        std::vector<Disk> disks;
        for (int tries = 0; disks.size() < n_disks && tries < 200; ++tries) {
            const double r = (4.0 + static_cast<double>(stream.below(7, counter))) * scale;
            const double cy = r + stream.uniform(counter++) * (static_cast<double>(size) - 2 * r);
            const double cx = r + stream.uniform(counter++) * (static_cast<double>(size) - 2 * r);
            if (task == SceneTask::kInstance) {
                // Keep instances apart so ground-truth objects never touch.
                bool clear = std::all_of(disks.begin(), disks.end(), [&](const Disk& d) {
                    return std::hypot(d.cy - cy, d.cx - cx) >= d.r + r + 3.0 * scale;
                });
                if (!clear)
                    continue;
            }
            disks.push_back({cy, cx, r});
        }

        std::vector<std::uint32_t> gt(n, 0);
        for (std::size_t y = 0; y < size; ++y) {
            for (std::size_t x = 0; x < size; ++x) {
                for (std::size_t k = 0; k < disks.size(); ++k) {
                    const double dy = static_cast<double>(y) + 0.5 - disks[k].cy;
                    const double dx = static_cast<double>(x) + 0.5 - disks[k].cx;
                    if (dy * dy + dx * dx <= disks[k].r * disks[k].r) {
                        gt[y * size + x] = task == SceneTask::kSemantic ? 1u : static_cast<std::uint32_t>(k + 1);
                        break;
                    }
                }
            }
        }
        const auto fg = static_cast<double>(std::count_if(gt.begin(), gt.end(), [](auto v) { return v != 0; }));
        const double fraction = fg / static_cast<double>(n);
        if (fraction < 0.05 || fraction > 0.6)
            continue;

        std::vector<double> pixels(n);
        const auto texture = stream.substream(1);
        for (std::size_t i = 0; i < n; ++i) {
            const double base = gt[i] != 0 ? kForeground : kBackground;
            pixels[i] = to_float32(base + kTextureSigma * texture.normal(i));
        }
        return SyntheticScene{image_id, LabelMap(size, size, std::move(gt), npy::Dtype::kU1),
                              ImagePatch(1, size, size, std::move(pixels), npy::Dtype::kF4, false)};
    }
    throw ValidationError(fmt::format("could not place a valid scene for image {}", image_id));
}

ModelOutput run_model(const ToyModel& model, SceneTask task, const ImagePatch& image) {
    const std::size_t h = image.height;
    const std::size_t w = image.width;
    const auto channel = std::span<const double>(image.values).first(h * w);
    const auto blurred = box_blur(channel, h, w, model.blur_radius);
    const auto local_mean = box_blur(channel, h, w, 1);

    // Low-pass evidence plus the model's response to high-frequency content,
    // which carries texture and noise but no signal. The per-pixel sign is a
    // fixed pattern shared by all toy models, so the term never sharpens
    // edges on average and equal parameters give equal outputs.
    const auto signs = rng::CounterStream::derive(0, rng::StreamTag::kModel);
    std::vector<double> score(h * w);
    for (std::size_t i = 0; i < score.size(); ++i) {
        const double sign = (signs.bits(i) & 1U) != 0 ? 1.0 : -1.0;
        score[i] = blurred[i] - 0.5 + sign * model.amplitude * kHighPassGain * std::abs(channel[i] - local_mean[i]);
    }

    std::vector<bool> mask(h * w);
    for (std::size_t i = 0; i < score.size(); ++i)
        mask[i] = score[i] > 0.0;

    if (task == SceneTask::kInstance) {
        auto ids = label_components(mask, h, w);
        const auto max_id = *std::max_element(ids.begin(), ids.end());
        return {LabelMap(h, w, std::move(ids), max_id > 0xFFFF ? npy::Dtype::kU4 : npy::Dtype::kU2), std::nullopt};
    }

    std::vector<std::uint32_t> labels(h * w);
    std::vector<double> probs(h * w);
    for (std::size_t i = 0; i < score.size(); ++i) {
        labels[i] = mask[i] ? 1u : 0u;
        probs[i] = to_float32(sigmoid(kLogitGain * score[i]));
    }
    return {LabelMap(h, w, std::move(labels), npy::Dtype::kU1),
            ProbMap(1, h, w, std::move(probs), npy::Dtype::kF4, false)};
}

double foreground_f1(const LabelMap& truth, const LabelMap& prediction) {
    if (!truth.same_shape(prediction))
        throw ValidationError("F1 needs maps of equal shape");
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool t = truth[i] != 0;
        const bool p = prediction[i] != 0;
        tp += t && p;
        fp += !t && p;
        fn += t && !p;
    }
    if (tp + fp + fn == 0)
        return 1.0;
    return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

StudySummary generate_study(const fs::path& folder, const StudyOptions& options) {
    if (options.n_models < 4)
        throw ValidationError("a synthetic study needs at least 4 models");
    if (options.n_images < 8)
        throw ValidationError("a synthetic study needs at least 8 images");
    if (options.image_size < 32)
        throw ValidationError("synthetic images must be at least 32 pixels wide");

    const bool default_models = !options.models.has_value();
    const std::vector<ToyModel> models = default_models ? default_ladder(options.n_models) : *options.models;
    if (models.size() != options.n_models)
        throw ValidationError("model list does not match n_models");
    const auto spec = study_perturbation(options);
    const Task manifest_task = options.task == SceneTask::kSemantic ? Task::kSemanticBinary : Task::kInstance;

    Manifest manifest;
    manifest.root = folder;
    manifest.dataset_id = fmt::format("synth-{}-s{}", to_string(options.task), options.seed);
    manifest.task = manifest_task;
    manifest.num_classes = manifest_task == Task::kInstance ? 0 : 2;
    for (const auto& m : models)
        manifest.model_ids.push_back(m.model_id);
    for (std::size_t i = 0; i < options.n_images; ++i)
        manifest.image_ids.push_back(fmt::format("img{:03}", i));
    manifest.perturbations.push_back(spec);

    std::vector<double> perf_cells(models.size() * options.n_images, 0.0);
    parallel_for(options.n_images, options.jobs, [&](std::size_t i) {
        const SyntheticScene scene = make_scene(options.task, i, options.seed, options.image_size);
        write_array(folder / "images" / (scene.image_id + ".npy"), scene.image);
        write_array(folder / "ground_truth" / (scene.image_id + ".npy"), scene.ground_truth);
        const auto perturbed = perturb::apply(spec, scene.image, scene.image_id);

        for (std::size_t j = 0; j < models.size(); ++j) {
            const fs::path dir = folder / "predictions" / models[j].model_id;
            const ModelOutput clean = run_model(models[j], options.task, scene.image);
            const ModelOutput pert = run_model(models[j], options.task, perturbed.image);
            write_array(dir / (scene.image_id + ".npy"), clean.labels);
            write_array(dir / (scene.image_id + "__" + spec.id + ".npy"), pert.labels);
            if (clean.probs) {
                write_array(dir / (scene.image_id + "_prob.npy"), *clean.probs);
                write_array(dir / (scene.image_id + "__" + spec.id + "_prob.npy"), *pert.probs);
            }
            perf_cells[j * options.n_images + i] = performance_of(options.task, scene.ground_truth, clean.labels);
        }
    });

    StudySummary summary;
    summary.models = models;
    std::map<std::string, double> performance;
    for (std::size_t j = 0; j < models.size(); ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < options.n_images; ++i)
            sum += perf_cells[j * options.n_images + i];
        const double mean = sum / static_cast<double>(options.n_images);
        summary.performance.emplace_back(models[j].model_id, mean);
        performance.emplace(models[j].model_id, mean);
    }
    if (default_models) {
        for (std::size_t j = 1; j < models.size(); ++j) {
            if (!(summary.performance[j].second < summary.performance[j - 1].second))
                throw ValidationError(fmt::format(
                    "quality ladder is not monotone: {} scores {} after {} scored {}", models[j].model_id,
                    summary.performance[j].second, models[j - 1].model_id, summary.performance[j - 1].second));
        }
    }
    manifest.performance = std::move(performance);

    for (const auto& m : models) {
        const fs::path dir = folder / "predictions" / m.model_id;
        for (const auto& image_id : manifest.image_ids) {
            PredictionEntry ref{m.model_id, image_id, std::nullopt, dir / (image_id + ".npy"), std::nullopt};
            PredictionEntry pert{m.model_id, image_id, spec.id, dir / (image_id + "__" + spec.id + ".npy"),
                                 std::nullopt};
            if (options.task == SceneTask::kSemantic) {
                ref.prob_path = dir / (image_id + "_prob.npy");
                pert.prob_path = dir / (image_id + "__" + spec.id + "_prob.npy");
            }
            manifest.predictions.push_back(std::move(ref));
            manifest.predictions.push_back(std::move(pert));
        }
    }
    summary.prediction_files = manifest.predictions.size();
    summary.manifest_path = folder / "manifest.json";
    write_file_atomic(summary.manifest_path, report::dump(manifest_to_json(manifest)));
    write_file_atomic(folder / "performance.csv", report::performance_to_csv(summary.performance));
    return summary;
}

stats::CorrelationReport run_study(const fs::path& folder, const RunConfig& overrides) {
    RunConfig config = overrides;
    config.manifest = folder / "manifest.json";
    if (config.out.empty())
        config.out = folder / "results";
    PipelineResult result = run_pipeline(config);
    if (!result.report)
        throw ValidationError(fmt::format("study at '{}' has no performance scores to evaluate", folder.string()));
    return *result.report;
}

} // namespace cte::synth
