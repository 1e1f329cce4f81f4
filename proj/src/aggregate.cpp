#include "cte/aggregate.hpp"

#include "cte/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <tuple>

namespace cte {

StudyLayout StudyLayout::infer(const ScoreTable& table, std::string dataset_id) {
    StudyLayout layout;
    layout.dataset_id = std::move(dataset_id);
    std::set<std::string> models;
    std::set<std::string> images;
    for (const ScoreRow& row : table) {
        if (models.insert(row.model).second)
            layout.model_ids.push_back(row.model);
        if (images.insert(row.image).second)
            layout.image_ids.push_back(row.image);
        auto& perts = layout.expected[{row.model, row.image}];
        if (std::find(perts.begin(), perts.end(), row.perturbation) == perts.end())
            perts.push_back(row.perturbation);
    }
    return layout;
}

double median(std::vector<double> values) {
    if (values.empty())
        throw ValidationError("median of an empty set");
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1)
        return upper;
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return std::midpoint(lower, upper);
}

std::vector<TransferRecord> aggregate(const ScoreTable& table, const StudyLayout& layout) {
    using Key = std::tuple<std::string, std::string, std::string>;
    std::map<Key, const ScoreRow*> cells;
    for (const ScoreRow& row : table) {
        if (std::isnan(row.score.value))
            throw ValidationError(fmt::format("NaN score for (model '{}', image '{}', perturbation '{}')", row.model,
                                              row.image, row.perturbation));
        if (!cells.emplace(Key{row.model, row.image, row.perturbation}, &row).second)
            throw ValidationError(fmt::format("duplicate score cell (model '{}', image '{}', perturbation '{}')",
                                              row.model, row.image, row.perturbation));
    }

    std::size_t expected_cells = 0;
    std::vector<TransferRecord> records;
    for (const std::string& model : layout.model_ids) {
        TransferRecord rec;
        rec.model_id = model;
        rec.dataset_id = layout.dataset_id;
        std::vector<double> image_means;
        for (const std::string& image : layout.image_ids) {
            auto it = layout.expected.find({model, image});
            if (it == layout.expected.end() || it->second.empty())
                throw ValidationError(
                    fmt::format("missing score cell (model '{}', image '{}', perturbation '*')", model, image));
            double sum = 0.0;
            std::optional<std::string> warning;
            for (const std::string& pert : it->second) {
                auto cell = cells.find(Key{model, image, pert});
                if (cell == cells.end())
                    throw ValidationError(fmt::format("missing score cell (model '{}', image '{}', perturbation '{}')",
                                                      model, image, pert));
                sum += cell->second->score.value;
                if (cell->second->warning && !warning)
                    warning = cell->second->warning;
                ++expected_cells;
            }
            const double mean = sum / static_cast<double>(it->second.size());
            rec.per_image.emplace_back(image, mean);
            image_means.push_back(mean);
            if (warning)
                rec.degenerate_warnings.push_back(fmt::format("image '{}': {}", image, *warning));
        }
        rec.n_images = image_means.size();
        rec.cte = median(std::move(image_means));
        records.push_back(std::move(rec));
    }
    if (expected_cells != cells.size()) {
        for (const auto& [key, row] : cells) {
            const auto& [model, image, pert] = key;
            auto it = layout.expected.find({model, image});
            bool known = std::find(layout.model_ids.begin(), layout.model_ids.end(), model) != layout.model_ids.end() &&
                         std::find(layout.image_ids.begin(), layout.image_ids.end(), image) != layout.image_ids.end() &&
                         it != layout.expected.end() &&
                         std::find(it->second.begin(), it->second.end(), pert) != it->second.end();
            if (!known)
                throw ValidationError(fmt::format(
                    "score cell (model '{}', image '{}', perturbation '{}') is not part of the study", model, image, pert));
        }
    }
    return records;
}

Ranking rank(std::span<const TransferRecord> records) {
    if (records.size() < 2)
        throw ValidationError("ranking needs at least two models");
    std::vector<const TransferRecord*> sorted;
    for (const auto& r : records)
        sorted.push_back(&r);
    std::stable_sort(sorted.begin(), sorted.end(), [](const TransferRecord* a, const TransferRecord* b) {
        if (a->cte != b->cte)
            return a->cte > b->cte;
        return a->model_id < b->model_id;
    });

    Ranking out;
    for (const TransferRecord* r : sorted) {
        out.order.push_back(r->model_id);
        out.scores.push_back(r->cte);
    }
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i + 1;
        while (j < sorted.size() && sorted[j]->cte == sorted[i]->cte)
            ++j;
        if (j - i >= 2)
            out.tie_groups.emplace_back(out.order.begin() + static_cast<std::ptrdiff_t>(i),
                                        out.order.begin() + static_cast<std::ptrdiff_t>(j));
        i = j;
    }
    return out;
}

} // namespace cte
