// Acceptance gate. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include "cte/aggregate.hpp"
#include "cte/consistency.hpp"
#include "cte/errors.hpp"
#include "cte/fs_util.hpp"
#include "cte/npy.hpp"
#include "cte/perturb.hpp"
#include "cte/pipeline.hpp"
#include "cte/rankstats.hpp"
#include "cte/synthlab.hpp"
#include "cte/tensor_io.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

using namespace cte;
using cte::testing::TempDir;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    std::string name;
    double time_limit_s;  // 0 means no limit
    std::function<Outcome()> run;
};

LabelMap row(std::vector<std::uint32_t> v) {
    const std::size_t n = v.size();
    return LabelMap(1, n, std::move(v));
}

ProbMap certain(const LabelMap& labels, std::size_t classes) {
    std::vector<double> v(classes * labels.size(), 0.0);
    for (std::size_t i = 0; i < labels.size(); ++i)
        v[labels[i] * labels.size() + i] = 1.0;
    return ProbMap(classes, labels.height(), labels.width(), std::move(v));
}

Outcome ars_oracle() {
    std::mt19937_64 gen(2024);
    const double alphas[] = {0.0, 0.25, 0.5, 1.0};
    double worst = 0.0;
    int pairs = 0;
    while (pairs < 1000) {
        const std::size_t h = 1 + gen() % 8;
        const std::size_t w = 1 + gen() % 8;
        const LabelMap ref = cte::testing::random_labels(gen, h, w, 5);
        const LabelMap pert = cte::testing::random_labels(gen, h, w, 5);
        if (ref.foreground_count() == 0)
            continue;
        const double alpha = alphas[gen() % 4];
        const double got = consistency::ars_consistency(ref, pert, alpha).value;
        worst = std::max(worst, std::abs(got - oracle::ars_pairs(ref, pert, alpha)));
        ++pairs;
    }
    return {worst <= 1e-12, fmt::format("{} pairs, max |diff| {:.3g}", pairs, worst)};
}

Outcome nhd_iou() {
    std::mt19937_64 gen(2025);
    double worst_binary = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const std::size_t h = 1 + gen() % 16;
        const std::size_t w = 1 + gen() % 16;
        const LabelMap a = cte::testing::random_labels(gen, h, w, 1);
        const LabelMap b = cte::testing::random_labels(gen, h, w, 1);
        worst_binary = std::max(worst_binary,
                                std::abs(consistency::nhd_consistency(a, b, 2).value - oracle::binary_iou(a, b)));
    }
    double worst_multi = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const std::size_t h = 1 + gen() % 16;
        const std::size_t w = 1 + gen() % 16;
        const LabelMap a = cte::testing::random_labels(gen, h, w, 2);
        const LabelMap b = cte::testing::random_labels(gen, h, w, 2);
        worst_multi = std::max(worst_multi,
                               std::abs(consistency::nhd_consistency(a, b, 3).value - oracle::nhd_per_class(a, b, 3)));
    }
    return {worst_binary <= 1e-12 && worst_multi <= 1e-12,
            fmt::format("1000 binary pairs max |diff| {:.3g}; 1000 3-class pairs max |diff| {:.3g}", worst_binary,
                        worst_multi)};
}

Outcome ei_cases() {
    const LabelMap l = row({0, 1, 1, 0, 1});
    const bool identical = consistency::ei_consistency(certain(l, 2), l, certain(l, 2), l).value == 1.0;
    const LabelMap f = row({1, 0, 0, 1, 0});
    const bool flipped = consistency::ei_consistency(certain(l, 2), l, certain(f, 2), f).value == 0.0;
    const ProbMap rp(3, 1, 2, {0.05, 0.05, 0.9, 0.9, 0.05, 0.05});
    const ProbMap pp(3, 1, 2, {0.3, 0.1, 0.4, 0.2, 0.3, 0.7});
    const double hand = consistency::ei_consistency(rp, row({1, 1}), pp, row({1, 2})).value;
    const bool hand_ok = hand == std::sqrt(0.9 * 0.4) / 2.0 && std::abs(hand - 0.3) <= 1e-15;

    std::mt19937_64 gen(2026);
    int violations = 0;
    for (int i = 0; i < 10000; ++i) {
        const std::size_t classes = 2 + gen() % 3;
        const std::size_t h = 1 + gen() % 8;
        const std::size_t w = 1 + gen() % 8;
        const ProbMap a = cte::testing::random_probs(gen, classes, h, w);
        const ProbMap b = cte::testing::random_probs(gen, classes, h, w);
        const LabelMap la = cte::testing::argmax_labels(a);
        const LabelMap lb = cte::testing::argmax_labels(b);
        const double v = consistency::ei_consistency(a, la, b, lb).value;
        if (!(v >= 0.0 && v <= 1.0 && v <= oracle::agreement_fraction(la, lb)))
            ++violations;
    }
    return {identical && flipped && hand_ok && violations == 0,
            fmt::format("identical={} flipped={} two-pixel={:.17g}; fuzz violations {}/10000", identical, flipped,
                        hand, violations)};
}

Outcome correlation_oracle() {
    std::mt19937_64 gen(2027);
    int cases = 0;
    int mismatches = 0;
    for (std::size_t n = 2; n <= 6; ++n) {
        for (int iter = 0; iter < 60; ++iter) {
            std::vector<double> x(n);
            std::vector<double> y(n);
            const int levels = iter % 3 == 0 ? 3 : 1000;
            for (std::size_t i = 0; i < n; ++i) {
                x[i] = static_cast<double>(gen() % levels) / 7.0;
                y[i] = static_cast<double>(gen() % levels) / 7.0;
            }
            stats::Coefficient k;
            try {
                k = stats::kendall_tau(x, y);
            } catch (const UndefinedCorrelationError&) {
                continue;
            }
            const auto s = stats::spearman(x, y);
            const auto p = stats::pearson(x, y);
            const auto ko = oracle::permutation_test(x, y, oracle::kendall, stats::kTieTolerance);
            const auto so = oracle::permutation_test(x, y, oracle::spearman, stats::kTieTolerance);
            const auto po = oracle::permutation_test(x, y, oracle::pearson, stats::kTieTolerance);
            const bool ok = k.value == ko.value && k.p_value == ko.p() && std::abs(s.value - so.value) <= 1e-12 &&
                            s.p_value == so.p() && std::abs(p.value - po.value) <= 1e-12 && p.p_value == po.p();
            mismatches += !ok;
            ++cases;
        }
    }
    const double tau = stats::kendall_tau_b(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 2, 4, 3});
    return {mismatches == 0 && tau == 2.0 / 3.0 && cases > 150,
            fmt::format("{} cases n=2..6, {} mismatches; n=4 example tau={:.17g}", cases, mismatches, tau)};
}

ScoreRow cell(std::string model, std::string image, double v) {
    ScoreRow r;
    r.model = std::move(model);
    r.image = std::move(image);
    r.perturbation = "p";
    r.score.value = v;
    return r;
}

Outcome aggregation() {
    const ScoreTable hand = {cell("m", "x", 0.8), cell("m", "y", 0.4)};
    const double cte = aggregate(hand, StudyLayout::infer(hand))[0].cte;
    // 0.6 itself is not representable; the result must be the correctly
    // rounded midpoint of the two stored values, one ulp from the literal.
    const bool hand_ok = cte == std::midpoint(0.8, 0.4) && std::abs(cte - 0.6) <= std::numeric_limits<double>::epsilon();

    std::mt19937_64 gen(2028);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int failures = 0;
    for (int iter = 0; iter < 1000; ++iter) {
        const std::size_t images = 1 + gen() % 15;
        const std::size_t perts = 1 + gen() % 3;
        ScoreTable t;
        for (std::size_t i = 0; i < images; ++i)
            for (std::size_t k = 0; k < perts; ++k) {
                ScoreRow r = cell("m", "i" + std::to_string(i), u(gen));
                r.perturbation = "p" + std::to_string(k);
                t.push_back(r);
            }
        const StudyLayout layout = StudyLayout::infer(t);
        const auto before = aggregate(t, layout)[0];
        auto means = before.per_image;
        std::sort(means.begin(), means.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
        for (std::size_t k = 0; k < (images - 1) / 2; ++k)
            for (auto& r : t)
                if (r.image == means[k].first)
                    r.score.value = -1e300;
        failures += aggregate(t, layout)[0].cte != before.cte;
    }
    return {hand_ok && failures == 0,
            fmt::format("{{0.8, 0.4}} -> {:.17g}; robustness failures {}/1000", cte, failures)};
}

Outcome perturbation() {
    std::vector<double> v(256 * 256);
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = static_cast<double>(i % 251) / 250.0;
    const ImagePatch x(1, 256, 256, v);

    perturb::PerturbationSpec spec;
    spec.id = "g";
    spec.kind = perturb::Kind::kGauss;
    spec.strength = {0.1, 0.1};
    spec.seed = 42;
    const auto a = npy::serialize(to_npy(perturb::apply(spec, x, "img").image));
    const auto b = npy::serialize(to_npy(perturb::apply(spec, x, "img").image));
    const bool deterministic = a == b;

    const ImagePatch y = perturb::apply(spec, x, "img").image;
    double mean = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
        mean += y.values[i] - v[i];
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
        var += (y.values[i] - v[i] - mean) * (y.values[i] - v[i] - mean);
    const double sd = std::sqrt(var / static_cast<double>(v.size() - 1));

    const bool identity = perturb::apply_gauss(x, 0.0, rng::CounterStream(1)) == x &&
                          perturb::apply_brightness(x, 0.0) == x && perturb::apply_contrast(x, 1.0) == x &&
                          perturb::apply_gamma(x, 1.0) == x;
    return {deterministic && std::abs(sd - 0.1) <= 0.005 && identity,
            fmt::format("byte-identical={} sd={:.5f} identity-limits={}", deterministic, sd, identity)};
}

Outcome synthetic(synth::SceneTask task, double bar) {
    TempDir dir("cte-accept");
    synth::StudyOptions opts;
    opts.task = task;
    opts.seed = 7;
    opts.jobs = 1;
    synth::generate_study(dir / "main", opts);
    const double tau = synth::run_study(dir / "main").kendall.value;

    std::string panel;
    bool all_positive = true;
    for (std::uint64_t seed : synth::kSeedPanel) {
        opts.seed = seed;
        const fs::path folder = dir / ("seed" + std::to_string(seed));
        synth::generate_study(folder, opts);
        const double t = synth::run_study(folder).kendall.value;
        all_positive = all_positive && t > 0.0;
        panel += fmt::format("{}{:.2f}", panel.empty() ? "" : " ", t);
    }
    return {tau >= bar && all_positive, fmt::format("seed 7 tau={:.4f} (bar {}); panel [{}]", tau, bar, panel)};
}

Outcome idempotent() {
    TempDir dir("cte-accept");
    synth::StudyOptions opts;
    opts.n_models = 5;
    opts.n_images = 8;
    const auto summary = synth::generate_study(dir / "study", opts);
    RunConfig cfg;
    cfg.manifest = summary.manifest_path;
    cfg.out = dir / "out";
    run_pipeline(cfg);
    const std::string ranking = read_file_text(dir / "out/ranking.json");
    const std::string report = read_file_text(dir / "out/report.json");
    run_pipeline(cfg);
    const bool same = ranking == read_file_text(dir / "out/ranking.json") &&
                      report == read_file_text(dir / "out/report.json");
    return {same, fmt::format("ranking.json {} bytes, report.json {} bytes, identical={}", ranking.size(),
                              report.size(), same)};
}

} // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"ars-oracle-equivalence", 10.0, ars_oracle},
        {"nhd-equals-iou", 5.0, nhd_iou},
        {"ei-hand-cases-and-bounds", 0.0, ei_cases},
        {"correlation-oracle", 30.0, correlation_oracle},
        {"aggregation", 0.0, aggregation},
        {"perturbation-determinism-moments", 0.0, perturbation},
        {"synthetic-semantic-end-to-end", 60.0, [] { return synthetic(synth::SceneTask::kSemantic, 0.8); }},
        {"synthetic-instance-end-to-end", 60.0, [] { return synthetic(synth::SceneTask::kInstance, 0.6); }},
        {"idempotent-pipeline", 0.0, idempotent},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out = {false, fmt::format("exception: {}", e.what())};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::string timing = fmt::format("{:.2f} s", secs);
        if (c.time_limit_s > 0.0) {
            timing += fmt::format(" < {} s", c.time_limit_s);
            if (secs >= c.time_limit_s) {
                out.pass = false;
                timing += " EXCEEDED";
            }
        }
        failed += !out.pass;
        fmt::print("{} {:<34} {} [{}]\n", out.pass ? "PASS" : "FAIL", c.name, out.detail, timing);
    }
    fmt::print("{} of {} criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
    return failed == 0 ? 0 : 1;
}
