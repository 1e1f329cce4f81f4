#pragma once

// Kendall tau-b, Spearman rho and Pearson r with permutation-test p-values.
//
// p-values come from permuting y against x: full enumeration for n <= 8,
// otherwise Monte-Carlo draws from a fixed-seed counter stream, so a report
// is reproducible bit for bit on any machine.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cte::stats {

enum class Alternative {
    kTwoSided,  // |coef_perm| >= |coef_obs|
    kGreater,   // coef_perm >= coef_obs
};

inline constexpr std::uint64_t kDefaultPermutationSeed = 0x5EEDC7E5ULL;

// Statistic comparisons tolerate this much rounding noise so that
// permutations producing the same coefficient are counted consistently.
inline constexpr double kTieTolerance = 1e-12;

struct PermutationOptions {
    std::size_t exact_max_n = 8;
    std::size_t monte_carlo_draws = 100000;
    std::uint64_t seed = kDefaultPermutationSeed;
    Alternative alternative = Alternative::kTwoSided;
};

struct Coefficient {
    double value = 0.0;
    double p_value = 1.0;
    bool exact = true;             // full enumeration vs Monte Carlo
    std::uint64_t permutations = 0;
};

std::vector<double> average_ranks(std::span<const double> values);

// Statistics alone. Each throws UndefinedCorrelationError when an input has
// no variation, and ValidationError on length mismatch or n < 2.
double kendall_tau_b(std::span<const double> x, std::span<const double> y);
double spearman_rho(std::span<const double> x, std::span<const double> y);
double pearson_r(std::span<const double> x, std::span<const double> y);

Coefficient kendall_tau(std::span<const double> x, std::span<const double> y, const PermutationOptions& options = {});
Coefficient spearman(std::span<const double> x, std::span<const double> y, const PermutationOptions& options = {});
Coefficient pearson(std::span<const double> x, std::span<const double> y, const PermutationOptions& options = {});

// "**" for p < 0.01, "*" for p < 0.05, empty otherwise.
std::string_view significance(double p_value) noexcept;

struct CorrelationReport {
    std::size_t n = 0;
    Coefficient kendall;
    Coefficient spearman;
    Coefficient pearson;
    std::vector<std::string> model_ids;  // order of the cte input
    std::vector<double> cte;
    std::vector<double> performance;
    std::string tie_handling;
    std::string p_value_method;
};

using KeyedScores = std::vector<std::pair<std::string, double>>;

// Aligns both score sets by model id. Throws ValidationError on duplicate or
// mismatched keys and when fewer than three models are given.
CorrelationReport evaluate(const KeyedScores& cte, const KeyedScores& performance,
                           const PermutationOptions& options = {});

} // namespace cte::stats
