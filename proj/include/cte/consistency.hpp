#pragma once

// Consistency between an unperturbed (reference) prediction and a perturbed
// one. Higher is more consistent; 1.0 means the perturbation changed nothing.
//
//   EI   soft, semantic: mean over pixels of sqrt(conf_ref * conf_pert) where
//        the labels agree, 0 where they differ.
//   NHD  hard, semantic: 1 - (label flips / pixels) counted on the union of
//        the two foregrounds; per class for multiclass maps, then a weighted
//        average over classes.
//   ARS  instance: adapted Rand score of the perturbed labelling against the
//        reference, restricted to reference foreground.

#include "cte/arrays.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace cte::consistency {

enum class Metric { kEi, kNhd, kArs };

std::string_view to_string(Metric metric) noexcept;
Metric parse_metric(std::string_view text);

struct ConsistencyValue {
    double value = 0.0;
    Metric metric = Metric::kNhd;
    std::uint64_t n_effective = 0;  // pixels that contributed
    bool degenerate = false;        // nothing to compare (empty foreground)
};

struct EiOptions {
    // Restrict to the per-class pairwise unions (as NHD does) instead of all
    // pixels. Requires num_classes.
    bool per_class = false;
    std::uint32_t num_classes = 0;
};

ConsistencyValue ei_consistency(const ProbMap& ref_prob, const LabelMap& ref_labels, const ProbMap& pert_prob,
                                const LabelMap& pert_labels, const EiOptions& options = {});

enum class NhdWeighting {
    kUnionSize,       // weight = |union of the class in both maps|
    kClassFrequency,  // weight = mean pixel count of the class over both maps
};

std::string_view to_string(NhdWeighting weighting) noexcept;
NhdWeighting parse_weighting(std::string_view text);

// Classes 1..num_classes-1 are scored; background only counts through flips
// into or out of a foreground class. If no foreground exists in either map
// the result is 1.0 with `degenerate` set.
ConsistencyValue nhd_consistency(const LabelMap& ref, const LabelMap& pert, std::uint32_t num_classes,
                                 NhdWeighting weighting = NhdWeighting::kUnionSize);

inline constexpr double kDefaultArsAlpha = 0.5;

// Throws DegenerateReferenceError when the reference has no foreground.
// The value is unclamped.
ConsistencyValue ars_consistency(const LabelMap& ref, const LabelMap& pert, double alpha = kDefaultArsAlpha);

inline constexpr double kDefaultDegenerateEpsilon = 0.001;

struct DegenerateReport {
    bool flagged = false;
    double foreground_fraction = 0.0;
    std::string reason;
};

// Flags near-uniform outputs (almost all background or almost all
// foreground), which score as highly consistent regardless of quality.
DegenerateReport degenerate_output_flag(const LabelMap& ref, double epsilon = kDefaultDegenerateEpsilon);

} // namespace cte::consistency
