#include "cte/errors.hpp"
#include "cte/report.hpp"

#include <gtest/gtest.h>

#include <json.hpp>

#include <cmath>
#include <random>

using namespace cte;
using namespace cte::report;

namespace {

ScoreRow cell(std::string model, std::string image, std::string pert, double v) {
    ScoreRow r;
    r.model = std::move(model);
    r.image = std::move(image);
    r.perturbation = std::move(pert);
    r.score.value = v;
    r.score.metric = consistency::Metric::kNhd;
    r.score.n_effective = 17;
    return r;
}

} // namespace

TEST(Csv, FormatDoubleRoundTrips) {
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const double v = u(gen) * std::pow(10.0, static_cast<double>(gen() % 20) - 10.0);
        EXPECT_EQ(std::stod(format_double(v)), v);
    }
    EXPECT_EQ(format_double(0.6), "0.6");
    EXPECT_EQ(format_double(1.0), "1");
}

TEST(Csv, QuotingRoundTrip) {
    EXPECT_EQ(csv_field("plain"), "plain");
    EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    const auto rows = parse_csv("x,\"a,b\",\"q\"\"q\"\r\n1,,3\n");
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"x", "a,b", "q\"q"}));
    EXPECT_EQ(rows[1], (std::vector<std::string>{"1", "", "3"}));
    EXPECT_THROW(parse_csv("\"open"), ValidationError);
}

TEST(Csv, ScoresRoundTrip) {
    ScoreTable t = {cell("m,1", "img \"0\"", "g", 0.1 + 0.2), cell("m2", "img1", "g", -0.25)};
    t[1].score.degenerate = true;
    t[1].warning = "near-empty foreground (0 of pixels)";
    const std::string csv = scores_to_csv(t);
    EXPECT_EQ(csv.substr(0, kScoresHeader.size()), kScoresHeader);
    const ScoreTable back = scores_from_csv(csv);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].model, "m,1");
    EXPECT_EQ(back[0].image, "img \"0\"");
    EXPECT_EQ(back[0].score.value, 0.1 + 0.2);
    EXPECT_EQ(back[0].score.n_effective, 17u);
    EXPECT_TRUE(back[1].score.degenerate);
    EXPECT_EQ(back[1].warning, t[1].warning);
    EXPECT_FALSE(back[0].warning.has_value());
    EXPECT_EQ(scores_to_csv(back), csv);
}

TEST(Csv, BadScoresRejected) {
    EXPECT_THROW(scores_from_csv("wrong,header\n"), ValidationError);
    const std::string h(kScoresHeader);
    EXPECT_THROW(scores_from_csv(h + "\na,b,c,nhd,notanumber,1,0,\n"), ValidationError);
    EXPECT_THROW(scores_from_csv(h + "\na,b,c,nhd,0.5,1,2,\n"), ValidationError);
    EXPECT_THROW(scores_from_csv(h + "\na,b,c,nhd,0.5\n"), ValidationError);
}

TEST(Csv, PerformanceRoundTrip) {
    const stats::KeyedScores perf = {{"b", 0.5}, {"a", 1.0 / 3.0}};
    EXPECT_EQ(performance_from_csv(performance_to_csv(perf)), perf);
}

TEST(Json, RankingDocument) {
    std::vector<TransferRecord> recs(2);
    recs[0].model_id = "a";
    recs[0].cte = 0.4;
    recs[0].n_images = 1;
    recs[0].per_image = {{"x", 0.4}};
    recs[1].model_id = "b";
    recs[1].cte = 0.9;
    recs[1].n_images = 1;
    recs[1].per_image = {{"x", 0.9}};
    const Ranking r = rank(recs);
    const auto doc = ranking_to_json("ds", "nhd", recs, r);
    EXPECT_EQ(doc["schema"], kRankingSchema);
    EXPECT_EQ(doc["models"][0]["model"], "b");
    EXPECT_EQ(doc["models"][0]["rank"], 1);
    EXPECT_EQ(doc["models"][1]["per_image"][0]["image"], "x");
    EXPECT_TRUE(doc["tie_groups"].empty());

    const auto scores = ranking_scores_from_csv(ranking_to_csv(recs, r));
    EXPECT_EQ(scores, (stats::KeyedScores{{"b", 0.9}, {"a", 0.4}}));
}

TEST(Json, ReportDocumentAndSvg) {
    const auto rep = stats::evaluate({{"a", 0.9}, {"b", 0.5}, {"c", 0.1}}, {{"a", 0.8}, {"b", 0.6}, {"c", 0.7}});
    const auto doc = report_to_json("ds", "ei", rep);
    EXPECT_EQ(doc["schema"], kReportSchema);
    for (const char* key : {"kendall_tau", "spearman_rho", "pearson_r"}) {
        ASSERT_TRUE(doc.contains(key)) << key;
        EXPECT_TRUE(doc[key].contains("value"));
        EXPECT_TRUE(doc[key].contains("p_value"));
        EXPECT_TRUE(doc[key].contains("significance"));
    }
    EXPECT_EQ(doc["n"], 3);
    const std::string svg = render_scatter_svg(rep, "demo <study>");
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_NE(svg.find("demo &lt;study&gt;"), std::string::npos);
    EXPECT_NE(svg.find(">3: c<"), std::string::npos);
    EXPECT_EQ(dump(doc).back(), '\n');
}
