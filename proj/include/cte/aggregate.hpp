#pragma once

#include "cte/consistency.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cte {

// One scored (model, image, perturbation) cell.
struct ScoreRow {
    std::string model;
    std::string image;
    std::string perturbation;
    consistency::ConsistencyValue score;
    std::optional<std::string> warning;  // degenerate reference prediction, if any
};

using ScoreTable = std::vector<ScoreRow>;

// The cells a complete score table must contain.
struct StudyLayout {
    std::string dataset_id;
    std::vector<std::string> model_ids;
    std::vector<std::string> image_ids;
    // Expected perturbation ids per (model, image).
    std::map<std::pair<std::string, std::string>, std::vector<std::string>> expected;

    // Every (model, image) must carry the perturbations that appear for it in
    // the table, and every model must cover every image seen in the table.
    static StudyLayout infer(const ScoreTable& table, std::string dataset_id = {});
};

struct TransferRecord {
    std::string model_id;
    std::string dataset_id;
    std::vector<std::pair<std::string, double>> per_image;  // layout image order
    double cte = 0.0;
    std::size_t n_images = 0;
    std::vector<std::string> degenerate_warnings;
};

// Median with the midpoint rule for even counts. Throws on empty input.
double median(std::vector<double> values);

// Mean over perturbations per image, then median over images, per model.
// Records follow layout.model_ids. A missing or duplicated cell is a
// ValidationError naming the (model, image, perturbation) triple.
std::vector<TransferRecord> aggregate(const ScoreTable& table, const StudyLayout& layout);

struct Ranking {
    std::vector<std::string> order;  // descending cte, ties by model id
    std::vector<double> scores;      // aligned with order
    std::vector<std::vector<std::string>> tie_groups;  // groups of two or more equal scores
};

// Throws ValidationError with fewer than two records.
Ranking rank(std::span<const TransferRecord> records);

} // namespace cte
