#pragma once

#include "cte/aggregate.hpp"
#include "cte/manifest.hpp"
#include "cte/rankstats.hpp"
#include "cte/scoring.hpp"

#include <filesystem>
#include <optional>

namespace cte {

struct RunConfig {
    std::filesystem::path manifest;
    std::optional<consistency::Metric> metric;  // defaults from the task
    bool per_class = false;
    double alpha = consistency::kDefaultArsAlpha;
    consistency::NhdWeighting weighting = consistency::NhdWeighting::kUnionSize;
    double degenerate_epsilon = consistency::kDefaultDegenerateEpsilon;
    std::filesystem::path out;
    std::uint64_t seed = stats::kDefaultPermutationSeed;
    unsigned jobs = 1;
};

struct PipelineResult {
    consistency::Metric metric = consistency::Metric::kNhd;
    ScoreTable scores;
    std::vector<TransferRecord> records;
    Ranking ranking;
    std::optional<stats::CorrelationReport> report;  // only with performance scores
};

// score -> aggregate -> rank, then evaluate when the manifest carries
// performance scores. Writes scores.csv, ranking.json, ranking.csv and, when
// evaluated, report.json and scatter.svg into config.out; run metadata with
// a timestamp goes to the run_info.json sidecar.
PipelineResult run_pipeline(const RunConfig& config);

// `score` subcommand: writes the consistency CSV.
ScoreTable run_score(const RunConfig& config, const std::filesystem::path& out_csv);

// `rank` subcommand: consistency CSV in, ranking.json + ranking.csv out.
Ranking run_rank(const std::filesystem::path& scores_csv, const std::filesystem::path& out_dir,
                 std::string_view dataset_id);

// `evaluate` subcommand: ranking CSV + performance CSV in, report.json and
// scatter.svg out.
stats::CorrelationReport run_evaluate(const std::filesystem::path& ranking_csv,
                                      const std::filesystem::path& performance_csv,
                                      const std::filesystem::path& out_dir, std::uint64_t seed,
                                      std::string_view dataset_id = {}, std::string_view metric = {});

struct PerturbRun {
    std::filesystem::path images;  // one .npy file or a directory of them
    std::filesystem::path specs;   // JSON list of perturbation specs
    std::filesystem::path out;
};

// `perturb` subcommand: writes <out>/<spec id>/<image id>.npy for every
// input-space spec plus provenance.json recording the sampled strengths.
// Returns the number of perturbed images written.
std::size_t run_perturb(const PerturbRun& run);

} // namespace cte
