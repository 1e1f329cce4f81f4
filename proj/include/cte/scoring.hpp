#pragma once

#include "cte/aggregate.hpp"
#include "cte/consistency.hpp"
#include "cte/manifest.hpp"

#include <functional>

namespace cte {

struct ScoringOptions {
    consistency::Metric metric = consistency::Metric::kNhd;
    bool per_class = false;
    double alpha = consistency::kDefaultArsAlpha;
    consistency::NhdWeighting weighting = consistency::NhdWeighting::kUnionSize;
    double degenerate_epsilon = consistency::kDefaultDegenerateEpsilon;
    unsigned jobs = 1;
};

// ARS needs instance maps; EI and NHD need semantic maps.
void check_metric_for_task(consistency::Metric metric, Task task);

consistency::Metric default_metric(Task task) noexcept;

StudyLayout layout_from_manifest(const Manifest& manifest);

// Scores every perturbed prediction against its reference. Rows come out in
// manifest group order regardless of the number of workers.
ScoreTable score_manifest(const Manifest& manifest, const ScoringOptions& options);

// Runs fn(0..count-1) on up to `jobs` threads. If any call throws, the
// exception of the lowest failing index is rethrown after all workers stop.
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn);

} // namespace cte
