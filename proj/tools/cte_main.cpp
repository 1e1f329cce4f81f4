// cte: consistency-based transferability ranking for segmentation models.

#include "cte/errors.hpp"
#include "cte/pipeline.hpp"
#include "cte/rankstats.hpp"
#include "cte/synthlab.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>

namespace {

namespace fs = std::filesystem;

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("cte");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::info);
    if (const char* level = std::getenv("CTE_LOG"))
        spdlog::set_level(spdlog::level::from_str(level));
}

void print_ranking(const cte::Ranking& ranking) {
    for (std::size_t i = 0; i < ranking.order.size(); ++i)
        fmt::print("{:>3}  {:<24} {:.6f}\n", i + 1, ranking.order[i], ranking.scores[i]);
    for (const auto& group : ranking.tie_groups)
        fmt::print("tie: {}\n", fmt::join(group, ", "));
}

void print_report(const cte::stats::CorrelationReport& r) {
    auto line = [](const char* name, const cte::stats::Coefficient& c) {
        fmt::print("{:<14} {:+.4f}  p={:.4g} {}\n", name, c.value, c.p_value, cte::stats::significance(c.p_value));
    };
    fmt::print("n = {}\n", r.n);
    line("Kendall tau", r.kendall);
    line("Spearman rho", r.spearman);
    line("Pearson r", r.pearson);
}

struct ScoringFlags {
    std::string metric;
    bool per_class = false;
    double alpha = cte::consistency::kDefaultArsAlpha;
    std::string weighting = "union";
    double degenerate_eps = cte::consistency::kDefaultDegenerateEpsilon;
    unsigned jobs = 1;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--metric", metric, "Consistency metric: ei, nhd or ars (default: nhd for semantic, ars for instance)")
            ->check(CLI::IsMember({"ei", "nhd", "ars"}));
        cmd->add_flag("--per-class", per_class, "EI over per-class foreground unions instead of all pixels");
        cmd->add_option("--alpha", alpha, "ARS marginal weighting in [0, 1]")->check(CLI::Range(0.0, 1.0));
        cmd->add_option("--class-weighting", weighting, "Multiclass NHD weights: union or frequency")
            ->check(CLI::IsMember({"union", "frequency"}));
        cmd->add_option("--degenerate-eps", degenerate_eps, "Foreground fraction bound for the degenerate-output flag");
        cmd->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    }

    void apply(cte::RunConfig& config) const {
        if (!metric.empty())
            config.metric = cte::consistency::parse_metric(metric);
        config.per_class = per_class;
        config.alpha = alpha;
        config.weighting = cte::consistency::parse_weighting(weighting);
        config.degenerate_epsilon = degenerate_eps;
        config.jobs = jobs;
    }
};

} // namespace

int main(int argc, char** argv) {
    setup_logging();
    CLI::App app{"Consistency-based transferability ranking for segmentation models"};
    app.require_subcommand(1);

    // perturb
    cte::PerturbRun perturb_run;
    auto* perturb_cmd = app.add_subcommand("perturb", "Apply input-space perturbations to NPY images");
    perturb_cmd->add_option("--images", perturb_run.images, "NPY image or directory of NPY images")->required();
    perturb_cmd->add_option("--specs", perturb_run.specs, "JSON list of perturbation specs")->required();
    perturb_cmd->add_option("--out", perturb_run.out, "Output directory")->required();

    // score
    cte::RunConfig score_config;
    ScoringFlags score_flags;
    fs::path score_out;
    auto* score_cmd = app.add_subcommand("score", "Score every perturbed prediction of a manifest");
    score_cmd->add_option("--manifest", score_config.manifest, "Experiment manifest JSON")->required();
    score_cmd->add_option("--out", score_out, "Output directory (scores.csv)")->required();
    score_flags.add_to(score_cmd);

    // rank
    fs::path rank_scores;
    fs::path rank_out;
    std::string rank_dataset;
    auto* rank_cmd = app.add_subcommand("rank", "Aggregate a consistency CSV into a model ranking");
    rank_cmd->add_option("--scores", rank_scores, "Consistency CSV from `score`")->required();
    rank_cmd->add_option("--out", rank_out, "Output directory (ranking.json, ranking.csv)")->required();
    rank_cmd->add_option("--dataset", rank_dataset, "Dataset id recorded in the ranking");

    // evaluate
    fs::path eval_ranking;
    fs::path eval_performance;
    fs::path eval_out;
    std::string eval_dataset;
    std::string eval_metric;
    std::uint64_t eval_seed = cte::stats::kDefaultPermutationSeed;
    auto* eval_cmd = app.add_subcommand("evaluate", "Correlate a ranking with ground-truth performance");
    eval_cmd->add_option("--ranking", eval_ranking, "Ranking CSV from `rank`")->required();
    eval_cmd->add_option("--performance", eval_performance, "CSV with columns model,performance")->required();
    eval_cmd->add_option("--out", eval_out, "Output directory (report.json, scatter.svg)")->required();
    eval_cmd->add_option("--seed", eval_seed, "Seed for Monte-Carlo permutation p-values");
    eval_cmd->add_option("--dataset", eval_dataset, "Dataset id recorded in the report");
    eval_cmd->add_option("--metric", eval_metric, "Metric name recorded in the report");

    // synth
    cte::synth::StudyOptions synth_options;
    std::string synth_task = "semantic";
    fs::path synth_out;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic transfer study");
    synth_cmd->add_option("--task", synth_task, "semantic or instance")->check(CLI::IsMember({"semantic", "instance"}));
    synth_cmd->add_option("--models", synth_options.n_models, "Number of toy models (>= 4)");
    synth_cmd->add_option("--images", synth_options.n_images, "Number of scenes (>= 8)");
    synth_cmd->add_option("--seed", synth_options.seed, "Study seed");
    synth_cmd->add_option("--size", synth_options.image_size, "Scene width and height in pixels");
    synth_cmd->add_option("--jobs", synth_options.jobs, "Worker threads")->check(CLI::PositiveNumber);
    synth_cmd->add_option("--out", synth_out, "Study folder")->required();

    // pipeline
    cte::RunConfig pipe_config;
    ScoringFlags pipe_flags;
    auto* pipe_cmd = app.add_subcommand("pipeline", "score -> rank -> evaluate in one run");
    pipe_cmd->add_option("--manifest", pipe_config.manifest, "Experiment manifest JSON")->required();
    pipe_cmd->add_option("--out", pipe_config.out, "Output directory")->required();
    pipe_cmd->add_option("--seed", pipe_config.seed, "Seed for Monte-Carlo permutation p-values");
    pipe_flags.add_to(pipe_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return static_cast<int>(cte::ErrorClass::kValidation);
    }

    try {
        if (*perturb_cmd) {
            auto n = cte::run_perturb(perturb_run);
            fmt::print("wrote {} perturbed images to {}\n", n, perturb_run.out.string());
        } else if (*score_cmd) {
            score_flags.apply(score_config);
            auto table = cte::run_score(score_config, score_out / "scores.csv");
            fmt::print("scored {} cells -> {}\n", table.size(), (score_out / "scores.csv").string());
        } else if (*rank_cmd) {
            print_ranking(cte::run_rank(rank_scores, rank_out, rank_dataset));
        } else if (*eval_cmd) {
            print_report(cte::run_evaluate(eval_ranking, eval_performance, eval_out, eval_seed, eval_dataset, eval_metric));
        } else if (*synth_cmd) {
            synth_options.task = cte::synth::parse_scene_task(synth_task);
            auto summary = cte::synth::generate_study(synth_out, synth_options);
            fmt::print("study with {} models, {} images, {} prediction entries -> {}\n", summary.models.size(),
                       synth_options.n_images, summary.prediction_files, summary.manifest_path.string());
            for (const auto& [model, perf] : summary.performance)
                fmt::print("  {}  performance {:.4f}\n", model, perf);
        } else if (*pipe_cmd) {
            pipe_flags.apply(pipe_config);
            auto result = cte::run_pipeline(pipe_config);
            print_ranking(result.ranking);
            if (result.report)
                print_report(*result.report);
        }
    } catch (const cte::Error& e) {
        spdlog::error("{} error: {}", cte::to_string(e.error_class()), e.what());
        return e.exit_code();
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 0;
}
