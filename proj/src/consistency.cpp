#include "cte/consistency.hpp"

#include "cte/errors.hpp"

#include <fmt/format.h>

#include <cmath>
#include <unordered_map>
#include <vector>

namespace cte::consistency {

std::string_view to_string(Metric metric) noexcept {
    switch (metric) {
    case Metric::kEi: return "ei";
    case Metric::kNhd: return "nhd";
    case Metric::kArs: return "ars";
    }
    return "";
}

Metric parse_metric(std::string_view text) {
    if (text == "ei") return Metric::kEi;
    if (text == "nhd") return Metric::kNhd;
    if (text == "ars") return Metric::kArs;
    throw ValidationError(fmt::format("unknown metric '{}' (expected ei, nhd or ars)", text));
}

std::string_view to_string(NhdWeighting weighting) noexcept {
    return weighting == NhdWeighting::kUnionSize ? "union" : "frequency";
}

NhdWeighting parse_weighting(std::string_view text) {
    if (text == "union") return NhdWeighting::kUnionSize;
    if (text == "frequency") return NhdWeighting::kClassFrequency;
    throw ValidationError(fmt::format("unknown class weighting '{}' (expected union or frequency)", text));
}

namespace {

void require_same_shape(const LabelMap& a, const LabelMap& b) {
    if (!a.same_shape(b))
        throw ValidationError(
            fmt::format("shape mismatch: {}x{} vs {}x{}", a.height(), a.width(), b.height(), b.width()));
}

void require_same_shape(const ProbMap& p, const LabelMap& l) {
    if (p.height() != l.height() || p.width() != l.width())
        throw ValidationError(fmt::format("shape mismatch between probability map {}x{} and label map {}x{}",
                                          p.height(), p.width(), l.height(), l.width()));
}

} // namespace

ConsistencyValue ei_consistency(const ProbMap& ref_prob, const LabelMap& ref_labels, const ProbMap& pert_prob,
                                const LabelMap& pert_labels, const EiOptions& options) {
    require_same_shape(ref_labels, pert_labels);
    require_same_shape(ref_prob, ref_labels);
    require_same_shape(pert_prob, pert_labels);

    const std::size_t n = ref_labels.size();
    ConsistencyValue out{.value = 0.0, .metric = Metric::kEi};

    if (!options.per_class) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (ref_labels[i] == pert_labels[i])
                sum += std::sqrt(ref_prob.confidence(i) * pert_prob.confidence(i));
        }
        out.value = sum / static_cast<double>(n);
        out.n_effective = n;
        return out;
    }

    if (options.num_classes < 2)
        throw ValidationError("per-class EI needs num_classes >= 2");
    ref_labels.check_class_count(options.num_classes);
    pert_labels.check_class_count(options.num_classes);

    // With union-size weights the per-class averages collapse to a single
    // sum over the foreground union: an agreeing pixel lies in exactly one
    // class union, a flipped pixel contributes 0 to each union it touches.
    double sum = 0.0;
    std::uint64_t union_total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t r = ref_labels[i];
        const std::uint32_t p = pert_labels[i];
        if (r == p) {
            if (r != 0) {
                sum += std::sqrt(ref_prob.confidence(i) * pert_prob.confidence(i));
                ++union_total;
            }
        } else {
            union_total += (r != 0) + (p != 0);
        }
    }
    out.n_effective = union_total;
    if (union_total == 0) {
        out.value = 1.0;
        out.degenerate = true;
        return out;
    }
    out.value = sum / static_cast<double>(union_total);
    return out;
}

ConsistencyValue nhd_consistency(const LabelMap& ref, const LabelMap& pert, std::uint32_t num_classes,
                                 NhdWeighting weighting) {
    require_same_shape(ref, pert);
    if (num_classes < 2)
        throw ValidationError("NHD needs num_classes >= 2");
    ref.check_class_count(num_classes);
    pert.check_class_count(num_classes);

    std::vector<std::uint64_t> union_size(num_classes, 0);
    std::vector<std::uint64_t> flips(num_classes, 0);
    std::vector<std::uint64_t> ref_count(num_classes, 0);
    std::vector<std::uint64_t> pert_count(num_classes, 0);

    for (std::size_t i = 0; i < ref.size(); ++i) {
        const std::uint32_t r = ref[i];
        const std::uint32_t p = pert[i];
        ++ref_count[r];
        ++pert_count[p];
        if (r == p) {
            ++union_size[r];
        } else {
            ++union_size[r];
            ++flips[r];
            ++union_size[p];
            ++flips[p];
        }
    }

    ConsistencyValue out{.value = 1.0, .metric = Metric::kNhd};
    double weighted = 0.0;
    double weight_total = 0.0;
    std::uint64_t n_eff = 0;
    for (std::uint32_t c = 1; c < num_classes; ++c) {
        if (union_size[c] == 0)
            continue;
        const double score = 1.0 - static_cast<double>(flips[c]) / static_cast<double>(union_size[c]);
        const double w = weighting == NhdWeighting::kUnionSize
                             ? static_cast<double>(union_size[c])
                             : 0.5 * static_cast<double>(ref_count[c] + pert_count[c]);
        weighted += w * score;
        weight_total += w;
        n_eff += union_size[c];
    }
    out.n_effective = n_eff;
    if (n_eff == 0) {
        out.degenerate = true;
        return out;
    }
    if (num_classes == 2) {
        // Single class: evaluate the flip fraction directly, no weighting round trip.
        out.value = 1.0 - static_cast<double>(flips[1]) / static_cast<double>(union_size[1]);
        return out;
    }
    out.value = weighted / weight_total;
    return out;
}

ConsistencyValue ars_consistency(const LabelMap& ref, const LabelMap& pert, double alpha) {
    require_same_shape(ref, pert);
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw ValidationError(fmt::format("ARS alpha must lie in [0, 1], got {}", alpha));

    // Joint counts over reference-foreground pixels. A perturbed label of 0
    // inside the reference foreground is an ordinary label here.
    std::unordered_map<std::uint64_t, std::uint64_t> joint;
    std::unordered_map<std::uint32_t, std::uint64_t> pert_marginal;
    std::unordered_map<std::uint32_t, std::uint64_t> ref_marginal;
    std::uint64_t n_r = 0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const std::uint32_t r = ref[i];
        if (r == 0)
            continue;
        const std::uint32_t p = pert[i];
        ++joint[(static_cast<std::uint64_t>(p) << 32) | r];
        ++pert_marginal[p];
        ++ref_marginal[r];
        ++n_r;
    }
    if (n_r == 0)
        throw DegenerateReferenceError("degenerate reference: no foreground pixels to restrict ARS to");

    // Probabilities are counts / n_r; the common 1/n_r^2 factor cancels.
    auto sum_sq = [](const auto& counts) {
        double s = 0.0;
        for (const auto& [key, c] : counts)
            s += static_cast<double>(c) * static_cast<double>(c);
        return s;
    };
    const double sum_p2 = sum_sq(joint);
    const double sum_s2 = sum_sq(pert_marginal);
    const double sum_t2 = sum_sq(ref_marginal);

    ConsistencyValue out{.metric = Metric::kArs, .n_effective = n_r};
    out.value = sum_p2 / (alpha * sum_s2 + (1.0 - alpha) * sum_t2);
    return out;
}

DegenerateReport degenerate_output_flag(const LabelMap& ref, double epsilon) {
    DegenerateReport report;
    report.foreground_fraction = static_cast<double>(ref.foreground_count()) / static_cast<double>(ref.size());
    if (report.foreground_fraction < epsilon) {
        report.flagged = true;
        report.reason = fmt::format("near-empty foreground ({:.4g} of pixels)", report.foreground_fraction);
    } else if (report.foreground_fraction > 1.0 - epsilon) {
        report.flagged = true;
        report.reason = fmt::format("near-total foreground ({:.4g} of pixels)", report.foreground_fraction);
    }
    return report;
}

} // namespace cte::consistency
