#include "cte/report.hpp"

#include "cte/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

namespace cte::report {

using nlohmann::json;

std::string format_double(double value) {
    if (std::isnan(value))
        return "nan";
    if (std::isinf(value))
        return value > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& text, std::size_t line) {
    if (text == "inf") return std::numeric_limits<double>::infinity();
    if (text == "-inf") return -std::numeric_limits<double>::infinity();
    double value = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw ValidationError(fmt::format("line {}: '{}' is not a number", line, text));
    return value;
}

std::uint64_t parse_uint(const std::string& text, std::size_t line) {
    std::uint64_t value = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw ValidationError(fmt::format("line {}: '{}' is not a non-negative integer", line, text));
    return value;
}

std::vector<std::vector<std::string>> rows_after_header(std::string_view text, std::string_view header) {
    auto rows = parse_csv(text);
    if (rows.empty())
        throw ValidationError(fmt::format("empty CSV, expected header '{}'", header));
    auto expected = parse_csv(header).front();
    // Extra trailing columns are tolerated; the frozen prefix is not.
    if (rows.front().size() < expected.size() ||
        !std::equal(expected.begin(), expected.end(), rows.front().begin()))
        throw ValidationError(fmt::format("unexpected CSV header, expected '{}'", header));
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() < expected.size())
            throw ValidationError(fmt::format("line {}: expected {} columns, found {}", i + 1, expected.size(),
                                              rows[i].size()));
    }
    rows.erase(rows.begin());
    return rows;
}

json coefficient_json(const stats::Coefficient& c) {
    return json{{"value", c.value},
                {"p_value", c.p_value},
                {"significance", stats::significance(c.p_value)},
                {"p_value_exact", c.exact},
                {"permutations", c.permutations}};
}

std::string xml_escape(std::string_view text) {
    std::string out;
    for (char c : text) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

} // namespace

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool row_has_content = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        switch (c) {
        case '"':
            quoted = true;
            row_has_content = true;
            break;
        case ',':
            row.push_back(std::move(field));
            field.clear();
            row_has_content = true;
            break;
        case '\r':
            break;
        case '\n':
            if (row_has_content || !field.empty()) {
                row.push_back(std::move(field));
                rows.push_back(std::move(row));
            }
            field.clear();
            row.clear();
            row_has_content = false;
            break;
        default:
            field += c;
            row_has_content = true;
        }
    }
    if (quoted)
        throw ValidationError("unterminated quoted CSV field");
    if (row_has_content || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string csv_field(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos)
        return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"')
            out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string scores_to_csv(const ScoreTable& table) {
    std::string out(kScoresHeader);
    out += '\n';
    for (const ScoreRow& r : table) {
        out += fmt::format("{},{},{},{},{},{},{},{}\n", csv_field(r.model), csv_field(r.image),
                           csv_field(r.perturbation), consistency::to_string(r.score.metric),
                           format_double(r.score.value), r.score.n_effective, r.score.degenerate ? 1 : 0,
                           csv_field(r.warning.value_or("")));
    }
    return out;
}

ScoreTable scores_from_csv(std::string_view text) {
    ScoreTable table;
    std::size_t line = 1;
    for (auto& f : rows_after_header(text, kScoresHeader)) {
        ++line;
        ScoreRow r;
        r.model = f[0];
        r.image = f[1];
        r.perturbation = f[2];
        r.score.metric = consistency::parse_metric(f[3]);
        r.score.value = parse_double(f[4], line);
        r.score.n_effective = parse_uint(f[5], line);
        if (f[6] != "0" && f[6] != "1")
            throw ValidationError(fmt::format("line {}: degenerate column must be 0 or 1", line));
        r.score.degenerate = f[6] == "1";
        if (!f[7].empty())
            r.warning = f[7];
        if (!table.empty() && table.front().score.metric != r.score.metric)
            throw ValidationError(fmt::format("line {}: scores mix metrics", line));
        table.push_back(std::move(r));
    }
    return table;
}

json ranking_to_json(std::string_view dataset_id, std::string_view metric, const std::vector<TransferRecord>& records,
                     const Ranking& ranking) {
    json models = json::array();
    for (std::size_t i = 0; i < ranking.order.size(); ++i) {
        auto it = std::find_if(records.begin(), records.end(),
                               [&](const TransferRecord& r) { return r.model_id == ranking.order[i]; });
        json per_image = json::array();
        for (const auto& [image, value] : it->per_image)
            per_image.push_back(json{{"image", image}, {"mean_consistency", value}});
        models.push_back(json{{"rank", i + 1},
                              {"model", it->model_id},
                              {"cte", it->cte},
                              {"n_images", it->n_images},
                              {"per_image", std::move(per_image)},
                              {"degenerate_warnings", it->degenerate_warnings}});
    }
    return json{{"schema", kRankingSchema},
                {"dataset_id", dataset_id},
                {"metric", metric},
                {"models", std::move(models)},
                {"tie_groups", ranking.tie_groups}};
}

std::string ranking_to_csv(const std::vector<TransferRecord>& records, const Ranking& ranking) {
    std::string out(kRankingHeader);
    out += '\n';
    for (std::size_t i = 0; i < ranking.order.size(); ++i) {
        auto it = std::find_if(records.begin(), records.end(),
                               [&](const TransferRecord& r) { return r.model_id == ranking.order[i]; });
        out += fmt::format("{},{},{},{},{}\n", i + 1, csv_field(it->model_id), format_double(it->cte), it->n_images,
                           it->degenerate_warnings.size());
    }
    return out;
}

stats::KeyedScores ranking_scores_from_csv(std::string_view text) {
    stats::KeyedScores out;
    std::size_t line = 1;
    for (auto& f : rows_after_header(text, kRankingHeader)) {
        ++line;
        out.emplace_back(f[1], parse_double(f[2], line));
    }
    return out;
}

std::string performance_to_csv(const stats::KeyedScores& performance) {
    std::string out(kPerformanceHeader);
    out += '\n';
    for (const auto& [model, score] : performance)
        out += fmt::format("{},{}\n", csv_field(model), format_double(score));
    return out;
}

stats::KeyedScores performance_from_csv(std::string_view text) {
    stats::KeyedScores out;
    std::size_t line = 1;
    for (auto& f : rows_after_header(text, kPerformanceHeader)) {
        ++line;
        out.emplace_back(f[0], parse_double(f[1], line));
    }
    return out;
}

json report_to_json(std::string_view dataset_id, std::string_view metric, const stats::CorrelationReport& report) {
    json models = json::array();
    for (std::size_t i = 0; i < report.n; ++i)
        models.push_back(
            json{{"model", report.model_ids[i]}, {"cte", report.cte[i]}, {"performance", report.performance[i]}});
    return json{{"schema", kReportSchema},
                {"dataset_id", dataset_id},
                {"metric", metric},
                {"n", report.n},
                {"kendall_tau", coefficient_json(report.kendall)},
                {"spearman_rho", coefficient_json(report.spearman)},
                {"pearson_r", coefficient_json(report.pearson)},
                {"models", std::move(models)},
                {"method", json{{"tie_handling", report.tie_handling}, {"p_value", report.p_value_method}}}};
}

std::string render_scatter_svg(const stats::CorrelationReport& report, std::string_view title) {
    constexpr double kWidth = 640;
    constexpr double kHeight = 480;
    constexpr double kLeft = 70;
    constexpr double kRight = 190;
    constexpr double kTop = 50;
    constexpr double kBottom = 60;
    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;

    auto padded = [](const std::vector<double>& v) {
        auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        double a = *lo;
        double b = *hi;
        double pad = (b - a) * 0.08;
        if (pad == 0.0)
            pad = std::max(std::abs(a) * 0.05, 0.01);
        return std::pair{a - pad, b + pad};
    };
    const auto [x0, x1] = padded(report.cte);
    const auto [y0, y1] = padded(report.performance);
    auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * plot_w; };
    auto py = [&](double y) { return kTop + plot_h - (y - y0) / (y1 - y0) * plot_h; };

    std::string svg = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
        "font-family=\"sans-serif\" font-size=\"12\">\n"
        "<rect width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n",
        kWidth, kHeight);
    svg += fmt::format("<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
                       kLeft + plot_w / 2, xml_escape(title));
    svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", kLeft,
                       kTop, plot_w, plot_h);
    for (int t = 0; t <= 4; ++t) {
        const double fx = x0 + (x1 - x0) * t / 4.0;
        const double fy = y0 + (y1 - y0) * t / 4.0;
        svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{:.3f}</text>\n", px(fx),
                           kTop + plot_h + 18, fx);
        svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.3f}</text>\n", kLeft - 6,
                           py(fy) + 4, fy);
    }
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">CTE</text>\n", kLeft + plot_w / 2,
                       kHeight - 15);
    svg += fmt::format("<text x=\"18\" y=\"{:.1f}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.1f})\">"
                       "Performance</text>\n",
                       kTop + plot_h / 2, kTop + plot_h / 2);
    for (std::size_t i = 0; i < report.n; ++i) {
        const double cx = px(report.cte[i]);
        const double cy = py(report.performance[i]);
        svg += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"5\" fill=\"#2a6fb0\"/>\n", cx, cy);
        svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\">{}</text>\n", cx + 7, cy - 7, i + 1);
        svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">{}: {}</text>\n", kWidth - kRight + 15,
                           kTop + 14.0 * static_cast<double>(i + 1), i + 1, xml_escape(report.model_ids[i]));
    }
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">K&#964; = {:.2f} {}</text>\n", kWidth - kRight + 15,
                       kTop + plot_h - 28, report.kendall.value, stats::significance(report.kendall.p_value));
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">S&#961; = {:.2f} {}</text>\n", kWidth - kRight + 15,
                       kTop + plot_h - 14, report.spearman.value, stats::significance(report.spearman.p_value));
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">Pr = {:.2f} {}</text>\n", kWidth - kRight + 15,
                       kTop + plot_h, report.pearson.value, stats::significance(report.pearson.p_value));
    svg += "</svg>\n";
    return svg;
}

std::string dump(const json& doc) {
    return doc.dump(2) + "\n";
}

} // namespace cte::report
