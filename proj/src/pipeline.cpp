#include "cte/pipeline.hpp"

#include "cte/errors.hpp"
#include "cte/fs_util.hpp"
#include "cte/perturb.hpp"
#include "cte/report.hpp"
#include "cte/tensor_io.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>

namespace cte {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void ensure_output_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw IoError(fmt::format("output directory '{}' is not writable", dir.string()));
}

void write_run_info(const fs::path& dir, const json& config) {
    auto now = std::chrono::system_clock::now();
    json info{{"started_utc", fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(now)))},
              {"config", config}};
    write_file_atomic(dir / "run_info.json", report::dump(info));
}

stats::PermutationOptions permutation_options(std::uint64_t seed) {
    stats::PermutationOptions opts;
    opts.seed = seed;
    return opts;
}

std::string scatter_title(std::string_view dataset_id, std::string_view metric) {
    if (dataset_id.empty())
        return metric.empty() ? std::string("CTE vs performance") : fmt::format("CTE-{} vs performance", metric);
    return fmt::format("{}: CTE-{} vs performance", dataset_id, metric);
}

} // namespace

PipelineResult run_pipeline(const RunConfig& config) {
    const Manifest manifest = load_manifest(config.manifest);
    PipelineResult result;
    result.metric = config.metric.value_or(default_metric(manifest.task));
    check_metric_for_task(result.metric, manifest.task);
    ensure_output_dir(config.out);

    ScoringOptions scoring{.metric = result.metric,
                           .per_class = config.per_class,
                           .alpha = config.alpha,
                           .weighting = config.weighting,
                           .degenerate_epsilon = config.degenerate_epsilon,
                           .jobs = config.jobs};
    result.scores = score_manifest(manifest, scoring);
    result.records = aggregate(result.scores, layout_from_manifest(manifest));
    result.ranking = rank(result.records);

    const std::string metric_name(consistency::to_string(result.metric));
    write_file_atomic(config.out / "scores.csv", report::scores_to_csv(result.scores));
    write_file_atomic(config.out / "ranking.json",
                      report::dump(report::ranking_to_json(manifest.dataset_id, metric_name, result.records,
                                                           result.ranking)));
    write_file_atomic(config.out / "ranking.csv", report::ranking_to_csv(result.records, result.ranking));

    for (const auto& rec : result.records) {
        for (const auto& w : rec.degenerate_warnings)
            spdlog::warn("model '{}': {}", rec.model_id, w);
    }

    if (manifest.performance) {
        stats::KeyedScores cte;
        for (std::size_t i = 0; i < result.ranking.order.size(); ++i)
            cte.emplace_back(result.ranking.order[i], result.ranking.scores[i]);
        stats::KeyedScores perf(manifest.performance->begin(), manifest.performance->end());
        result.report = stats::evaluate(cte, perf, permutation_options(config.seed));
        write_file_atomic(config.out / "report.json",
                          report::dump(report::report_to_json(manifest.dataset_id, metric_name, *result.report)));
        write_file_atomic(config.out / "scatter.svg",
                          report::render_scatter_svg(*result.report, scatter_title(manifest.dataset_id, metric_name)));
    } else {
        spdlog::info("manifest has no performance scores; evaluation skipped");
    }

    write_run_info(config.out, json{{"command", "pipeline"},
                                    {"manifest", config.manifest.string()},
                                    {"metric", metric_name},
                                    {"per_class", config.per_class},
                                    {"alpha", config.alpha},
                                    {"class_weighting", consistency::to_string(config.weighting)},
                                    {"seed", config.seed},
                                    {"jobs", config.jobs}});
    return result;
}

ScoreTable run_score(const RunConfig& config, const fs::path& out_csv) {
    const Manifest manifest = load_manifest(config.manifest);
    const auto metric = config.metric.value_or(default_metric(manifest.task));
    ScoreTable table = score_manifest(manifest, {.metric = metric,
                                                 .per_class = config.per_class,
                                                 .alpha = config.alpha,
                                                 .weighting = config.weighting,
                                                 .degenerate_epsilon = config.degenerate_epsilon,
                                                 .jobs = config.jobs});
    write_file_atomic(out_csv, report::scores_to_csv(table));
    return table;
}

Ranking run_rank(const fs::path& scores_csv, const fs::path& out_dir, std::string_view dataset_id) {
    const ScoreTable table = report::scores_from_csv(read_file_text(scores_csv));
    if (table.empty())
        throw ValidationError(fmt::format("'{}' holds no scores", scores_csv.string()));
    ensure_output_dir(out_dir);
    const StudyLayout layout = StudyLayout::infer(table, std::string(dataset_id));
    auto records = aggregate(table, layout);
    Ranking ranking = rank(records);
    const std::string metric(consistency::to_string(table.front().score.metric));
    write_file_atomic(out_dir / "ranking.json", report::dump(report::ranking_to_json(dataset_id, metric, records, ranking)));
    write_file_atomic(out_dir / "ranking.csv", report::ranking_to_csv(records, ranking));
    return ranking;
}

stats::CorrelationReport run_evaluate(const fs::path& ranking_csv, const fs::path& performance_csv,
                                      const fs::path& out_dir, std::uint64_t seed, std::string_view dataset_id,
                                      std::string_view metric) {
    auto cte = report::ranking_scores_from_csv(read_file_text(ranking_csv));
    auto perf = report::performance_from_csv(read_file_text(performance_csv));
    ensure_output_dir(out_dir);
    auto result = stats::evaluate(cte, perf, permutation_options(seed));
    write_file_atomic(out_dir / "report.json", report::dump(report::report_to_json(dataset_id, metric, result)));
    write_file_atomic(out_dir / "scatter.svg", report::render_scatter_svg(result, scatter_title(dataset_id, metric)));
    return result;
}

std::size_t run_perturb(const PerturbRun& run) {
    std::vector<fs::path> inputs;
    std::error_code ec;
    if (fs::is_directory(run.images, ec)) {
        for (const auto& entry : fs::directory_iterator(run.images)) {
            if (entry.is_regular_file() && entry.path().extension() == ".npy")
                inputs.push_back(entry.path());
        }
        std::sort(inputs.begin(), inputs.end());
    } else if (fs::is_regular_file(run.images, ec)) {
        inputs.push_back(run.images);
    } else {
        throw IoError(fmt::format("no images at '{}'", run.images.string()));
    }
    if (inputs.empty())
        throw ValidationError(fmt::format("no .npy images found in '{}'", run.images.string()));

    json spec_doc;
    try {
        spec_doc = json::parse(read_file_text(run.specs));
    } catch (const json::parse_error& e) {
        throw ValidationError(fmt::format("{}: invalid JSON: {}", run.specs.string(), e.what()));
    }
    const auto specs = perturb::specs_from_json(spec_doc);
    ensure_output_dir(run.out);

    json entries = json::array();
    std::size_t written = 0;
    for (const auto& spec : specs) {
        if (!spec.is_input_space()) {
            spdlog::info("perturbation '{}' is feature dropout; left to the inference harness", spec.id);
            continue;
        }
        for (const fs::path& input : inputs) {
            const std::string image_id = input.stem().string();
            const ImagePatch image = read_image(input);
            auto perturbed = perturb::apply(spec, image, image_id);
            const fs::path out_path = run.out / spec.id / (image_id + ".npy");
            write_array(out_path, perturbed.image);
            entries.push_back(json{{"image", image_id},
                                   {"source", input.filename().string()},
                                   {"perturbation", spec.id},
                                   {"kind", perturb::to_string(spec.kind)},
                                   {"strength", perturbed.strength},
                                   {"seed", spec.seed},
                                   {"output", out_path.lexically_relative(run.out).generic_string()}});
            ++written;
        }
    }
    write_file_atomic(run.out / "provenance.json",
                      report::dump(json{{"schema", report::kProvenanceSchema}, {"entries", std::move(entries)}}));
    return written;
}

} // namespace cte
