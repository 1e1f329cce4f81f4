#include "cte/scoring.hpp"

#include "cte/errors.hpp"
#include "cte/tensor_io.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

namespace cte {

using consistency::Metric;

void check_metric_for_task(Metric metric, Task task) {
    const bool instance = task == Task::kInstance;
    if ((metric == Metric::kArs) != instance)
        throw ValidationError(fmt::format("metric '{}' is not applicable to task '{}' (ars is for instance tasks only)",
                                          consistency::to_string(metric), to_string(task)));
}

Metric default_metric(Task task) noexcept {
    return task == Task::kInstance ? Metric::kArs : Metric::kNhd;
}

StudyLayout layout_from_manifest(const Manifest& manifest) {
    StudyLayout layout;
    layout.dataset_id = manifest.dataset_id;
    layout.model_ids = manifest.model_ids;
    layout.image_ids = manifest.image_ids;
    for (const PredictionGroup& g : manifest.groups) {
        auto& perts = layout.expected[{manifest.model_ids[g.model_index], manifest.image_ids[g.image_index]}];
        for (std::size_t idx : g.perturbed)
            perts.push_back(*manifest.predictions[idx].perturbation);
    }
    return layout;
}

void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn) {
    std::vector<std::exception_ptr> errors(count);
    auto run = [&](std::size_t i) {
        try {
            fn(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(count)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            run(i);
            if (errors[i])
                std::rethrow_exception(errors[i]);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < count && !failed; i = next++) {
                    run(i);
                    if (errors[i])
                        failed = true;
                }
            });
        }
    }
    for (auto& e : errors) {
        if (e)
            std::rethrow_exception(e);
    }
}

namespace {

struct LoadedPrediction {
    LabelMap labels;
    std::optional<ProbMap> probs;
};

LoadedPrediction load_prediction(const Manifest& m, const PredictionEntry& e, bool need_probs) {
    LoadedPrediction out{read_label_map(e.path), std::nullopt};
    if (m.task != Task::kInstance)
        out.labels.check_class_count(m.num_classes);
    if (need_probs) {
        if (!e.prob_path)
            throw ValidationError(fmt::format("EI needs a probability map for (model '{}', image '{}', perturbation '{}')",
                                              e.model, e.image, e.perturbation.value_or("none")));
        out.probs = read_prob_map(*e.prob_path);
        if (out.probs->height() != out.labels.height() || out.probs->width() != out.labels.width())
            throw ValidationError(fmt::format("'{}' and '{}' differ in height/width", e.path.string(),
                                              e.prob_path->string()));
        if (m.task == Task::kSemanticMulticlass && out.probs->classes() != m.num_classes)
            throw ValidationError(fmt::format("'{}' has {} channels, manifest declares {} classes",
                                              e.prob_path->string(), out.probs->classes(), m.num_classes));
    }
    return out;
}

consistency::ConsistencyValue score_pair(const Manifest& m, const ScoringOptions& o, const LoadedPrediction& ref,
                                         const LoadedPrediction& pert) {
    switch (o.metric) {
    case Metric::kEi:
        return consistency::ei_consistency(*ref.probs, ref.labels, *pert.probs, pert.labels,
                                           {.per_class = o.per_class, .num_classes = m.num_classes});
    case Metric::kNhd:
        return consistency::nhd_consistency(ref.labels, pert.labels, m.num_classes, o.weighting);
    case Metric::kArs:
        try {
            return consistency::ars_consistency(ref.labels, pert.labels, o.alpha);
        } catch (const DegenerateReferenceError&) {
            // Nothing in the reference to disagree with: scored as fully
            // consistent and surfaced through the degenerate flag.
            return {.value = 1.0, .metric = Metric::kArs, .n_effective = 0, .degenerate = true};
        }
    }
    throw ValidationError("unknown metric");
}

} // namespace

ScoreTable score_manifest(const Manifest& manifest, const ScoringOptions& options) {
    check_metric_for_task(options.metric, manifest.task);
    if (!(options.alpha >= 0.0 && options.alpha <= 1.0))
        throw ValidationError(fmt::format("alpha must lie in [0, 1], got {}", options.alpha));
    if (options.per_class && options.metric != Metric::kEi)
        spdlog::info("--per-class only affects the ei metric; NHD is always per class");

    const bool need_probs = options.metric == Metric::kEi;
    std::vector<ScoreTable> per_group(manifest.groups.size());

    parallel_for(manifest.groups.size(), options.jobs, [&](std::size_t gi) {
        const PredictionGroup& g = manifest.groups[gi];
        const PredictionEntry& ref_entry = manifest.predictions[g.reference];
        const LoadedPrediction ref = load_prediction(manifest, ref_entry, need_probs);
        const auto flag = consistency::degenerate_output_flag(ref.labels, options.degenerate_epsilon);

        ScoreTable& rows = per_group[gi];
        for (std::size_t idx : g.perturbed) {
            const PredictionEntry& e = manifest.predictions[idx];
            const LoadedPrediction pert = load_prediction(manifest, e, need_probs);
            if (!pert.labels.same_shape(ref.labels))
                throw ValidationError(fmt::format("shape mismatch between '{}' and '{}'", ref_entry.path.string(),
                                                  e.path.string()));
            ScoreRow row{e.model, e.image, *e.perturbation, score_pair(manifest, options, ref, pert), std::nullopt};
            if (flag.flagged)
                row.warning = "degenerate reference: " + flag.reason;
            else if (row.score.degenerate)
                row.warning = "degenerate reference: no foreground to compare";
            rows.push_back(std::move(row));
        }
    });

    ScoreTable table;
    for (auto& rows : per_group)
        std::move(rows.begin(), rows.end(), std::back_inserter(table));
    return table;
}

} // namespace cte
