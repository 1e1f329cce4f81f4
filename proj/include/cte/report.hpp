#pragma once

// Serialisation of every artifact the toolkit writes. Key names and CSV
// headers are frozen per schema version; see schema/outputs.v1.json.

#include "cte/aggregate.hpp"
#include "cte/rankstats.hpp"

#include <json.hpp>

#include <string>
#include <string_view>
#include <vector>

namespace cte::report {

inline constexpr std::string_view kRankingSchema = "cte-ranking/1";
inline constexpr std::string_view kReportSchema = "cte-report/1";
inline constexpr std::string_view kProvenanceSchema = "cte-provenance/1";

inline constexpr std::string_view kScoresHeader = "model,image,perturbation,metric,value,n_effective,degenerate,warning";
inline constexpr std::string_view kRankingHeader = "rank,model,cte,n_images,warnings";
inline constexpr std::string_view kPerformanceHeader = "model,performance";

// Shortest text that parses back to the same double.
std::string format_double(double value);

std::vector<std::vector<std::string>> parse_csv(std::string_view text);
std::string csv_field(std::string_view field);

std::string scores_to_csv(const ScoreTable& table);
ScoreTable scores_from_csv(std::string_view text);

nlohmann::json ranking_to_json(std::string_view dataset_id, std::string_view metric,
                               const std::vector<TransferRecord>& records, const Ranking& ranking);
std::string ranking_to_csv(const std::vector<TransferRecord>& records, const Ranking& ranking);
// Reads (model, cte) pairs in rank order from a ranking CSV.
stats::KeyedScores ranking_scores_from_csv(std::string_view text);

std::string performance_to_csv(const stats::KeyedScores& performance);
stats::KeyedScores performance_from_csv(std::string_view text);

nlohmann::json report_to_json(std::string_view dataset_id, std::string_view metric,
                              const stats::CorrelationReport& report);

// CTE on the x axis, true performance on the y axis, one numbered point per
// model with a legend mapping numbers to model ids.
std::string render_scatter_svg(const stats::CorrelationReport& report, std::string_view title);

// Pretty-printed JSON with a trailing newline.
std::string dump(const nlohmann::json& doc);

} // namespace cte::report
