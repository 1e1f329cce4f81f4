#include "cte/rankstats.hpp"

#include "cte/errors.hpp"
#include "cte/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace cte::stats {

namespace {

void check_pair(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw ValidationError(fmt::format("correlation inputs differ in length ({} vs {})", x.size(), y.size()));
    if (x.size() < 2)
        throw ValidationError("correlation needs at least two observations");
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
            throw ValidationError("correlation inputs must be finite");
    }
}

int sign(double d) noexcept { return (d > 0.0) - (d < 0.0); }

// Each statistic is evaluated as f(x, y[perm]) for a permutation of y, with
// everything that does not depend on the pairing precomputed.
class KendallStatistic {
public:
    KendallStatistic(std::span<const double> x, std::span<const double> y) : n_(x.size()), y_(y.begin(), y.end()) {
        sx_.resize(n_ * n_);
        std::int64_t pairs = static_cast<std::int64_t>(n_ * (n_ - 1) / 2);
        std::int64_t ties_x = 0;
        std::int64_t ties_y = 0;
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = i + 1; j < n_; ++j) {
                sx_[i * n_ + j] = sign(x[i] - x[j]);
                ties_x += x[i] == x[j];
                ties_y += y[i] == y[j];
            }
        }
        if (ties_x == pairs || ties_y == pairs)
            throw UndefinedCorrelationError("Kendall tau undefined: an input is constant");
        // Tied-pair counts are invariant under permuting y.
        denom_ = std::sqrt(static_cast<double>(pairs - ties_x) * static_cast<double>(pairs - ties_y));
    }

    double operator()(std::span<const std::size_t> perm) const noexcept {
        std::int64_t s = 0;
        for (std::size_t i = 0; i < n_; ++i) {
            const double yi = y_[perm[i]];
            for (std::size_t j = i + 1; j < n_; ++j)
                s += sx_[i * n_ + j] * sign(yi - y_[perm[j]]);
        }
        return static_cast<double>(s) / denom_;
    }

private:
    std::size_t n_;
    std::vector<double> y_;
    std::vector<int> sx_;
    double denom_ = 1.0;
};

class PearsonStatistic {
public:
    PearsonStatistic(std::span<const double> x, std::span<const double> y, const char* name)
        : xc_(center(x)), yc_(center(y)) {
        double sxx = 0.0;
        double syy = 0.0;
        for (std::size_t i = 0; i < xc_.size(); ++i) {
            sxx += xc_[i] * xc_[i];
            syy += yc_[i] * yc_[i];
        }
        if (sxx == 0.0 || syy == 0.0)
            throw UndefinedCorrelationError(fmt::format("{} undefined: an input has zero variance", name));
        denom_ = std::sqrt(sxx) * std::sqrt(syy);
    }

    double operator()(std::span<const std::size_t> perm) const noexcept {
        double sxy = 0.0;
        for (std::size_t i = 0; i < xc_.size(); ++i)
            sxy += xc_[i] * yc_[perm[i]];
        return std::clamp(sxy / denom_, -1.0, 1.0);
    }

private:
    static std::vector<double> center(std::span<const double> v) {
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        std::vector<double> out(v.size());
        for (std::size_t i = 0; i < v.size(); ++i)
            out[i] = v[i] - mean;
        return out;
    }

    std::vector<double> xc_;
    std::vector<double> yc_;
    double denom_ = 1.0;
};

std::vector<std::size_t> identity(std::size_t n) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    return perm;
}

bool at_least_as_extreme(double candidate, double observed, Alternative alt) noexcept {
    if (alt == Alternative::kTwoSided)
        return std::abs(candidate) >= std::abs(observed) - kTieTolerance;
    return candidate >= observed - kTieTolerance;
}

template <typename Statistic>
Coefficient permutation_test(const Statistic& stat, std::size_t n, const PermutationOptions& options) {
    std::vector<std::size_t> perm = identity(n);
    Coefficient out;
    out.value = stat(perm);

    std::uint64_t hits = 0;
    if (n <= options.exact_max_n) {
        std::uint64_t total = 0;
        do {
            hits += at_least_as_extreme(stat(perm), out.value, options.alternative);
            ++total;
        } while (std::next_permutation(perm.begin(), perm.end()));
        out.exact = true;
        out.permutations = total;
        out.p_value = static_cast<double>(hits) / static_cast<double>(total);
        return out;
    }

    const auto stream = rng::CounterStream::derive(options.seed, rng::StreamTag::kPermutation);
    std::uint64_t counter = 0;
    for (std::size_t draw = 0; draw < options.monte_carlo_draws; ++draw) {
        // Fisher-Yates from the identity, so each draw is independent of the last.
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        for (std::size_t i = n - 1; i > 0; --i)
            std::swap(perm[i], perm[stream.below(i + 1, counter)]);
        hits += at_least_as_extreme(stat(perm), out.value, options.alternative);
    }
    out.exact = false;
    out.permutations = options.monte_carlo_draws;
    // The observed pairing counts as one draw.
    out.p_value = static_cast<double>(hits + 1) / static_cast<double>(options.monte_carlo_draws + 1);
    return out;
}

} // namespace

std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<std::size_t> order = identity(values.size());
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i + 1;
        while (j < order.size() && values[order[j]] == values[order[i]])
            ++j;
        // Positions i..j-1 share the mean of ranks i+1..j.
        const double r = static_cast<double>(i + 1 + j) / 2.0;
        for (std::size_t k = i; k < j; ++k)
            ranks[order[k]] = r;
        i = j;
    }
    return ranks;
}

double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y);
    return KendallStatistic(x, y)(identity(x.size()));
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y);
    auto rx = average_ranks(x);
    auto ry = average_ranks(y);
    return PearsonStatistic(rx, ry, "Spearman rho")(identity(x.size()));
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y);
    return PearsonStatistic(x, y, "Pearson r")(identity(x.size()));
}

Coefficient kendall_tau(std::span<const double> x, std::span<const double> y, const PermutationOptions& options) {
    check_pair(x, y);
    return permutation_test(KendallStatistic(x, y), x.size(), options);
}

Coefficient spearman(std::span<const double> x, std::span<const double> y, const PermutationOptions& options) {
    check_pair(x, y);
    auto rx = average_ranks(x);
    auto ry = average_ranks(y);
    return permutation_test(PearsonStatistic(rx, ry, "Spearman rho"), x.size(), options);
}

Coefficient pearson(std::span<const double> x, std::span<const double> y, const PermutationOptions& options) {
    check_pair(x, y);
    return permutation_test(PearsonStatistic(x, y, "Pearson r"), x.size(), options);
}

std::string_view significance(double p_value) noexcept {
    if (p_value < 0.01)
        return "**";
    if (p_value < 0.05)
        return "*";
    return "";
}

CorrelationReport evaluate(const KeyedScores& cte, const KeyedScores& performance, const PermutationOptions& options) {
    std::map<std::string, double> perf;
    for (const auto& [model, score] : performance) {
        if (!perf.emplace(model, score).second)
            throw ValidationError(fmt::format("duplicate model '{}' in performance scores", model));
    }
    std::map<std::string, double> seen;
    CorrelationReport report;
    for (const auto& [model, score] : cte) {
        if (!seen.emplace(model, score).second)
            throw ValidationError(fmt::format("duplicate model '{}' in CTE scores", model));
        auto it = perf.find(model);
        if (it == perf.end())
            throw ValidationError(fmt::format("model '{}' has a CTE score but no performance score", model));
        report.model_ids.push_back(model);
        report.cte.push_back(score);
        report.performance.push_back(it->second);
    }
    for (const auto& [model, score] : perf) {
        if (!seen.contains(model))
            throw ValidationError(fmt::format("model '{}' has a performance score but no CTE score", model));
    }
    if (report.model_ids.size() < 3)
        throw ValidationError("evaluation needs at least three models");

    report.n = report.model_ids.size();
    report.kendall = kendall_tau(report.cte, report.performance, options);
    report.spearman = spearman(report.cte, report.performance, options);
    report.pearson = pearson(report.cte, report.performance, options);
    report.tie_handling = "Kendall tau-b; Spearman on average ranks";
    const char* sided = options.alternative == Alternative::kTwoSided ? "two-sided" : "one-sided (greater)";
    if (report.n <= options.exact_max_n)
        report.p_value_method = fmt::format("{} permutation test, exact enumeration of {}! pairings", sided, report.n);
    else
        report.p_value_method = fmt::format("{} permutation test, {} Monte-Carlo pairings, seed {}", sided,
                                            options.monte_carlo_draws, options.seed);
    return report;
}

} // namespace cte::stats
