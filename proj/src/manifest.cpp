#include "cte/manifest.hpp"

#include "cte/errors.hpp"
#include "cte/fs_util.hpp"

#include <fmt/format.h>

#include <set>
#include <tuple>
#include <unordered_map>

namespace cte {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Task task) noexcept {
    switch (task) {
    case Task::kSemanticBinary: return "semantic-binary";
    case Task::kSemanticMulticlass: return "semantic-multiclass";
    case Task::kInstance: return "instance";
    }
    return "";
}

Task parse_task(std::string_view text) {
    for (Task t : {Task::kSemanticBinary, Task::kSemanticMulticlass, Task::kInstance}) {
        if (to_string(t) == text)
            return t;
    }
    throw ValidationError(fmt::format("unknown task '{}' (expected semantic-binary, semantic-multiclass or instance)", text));
}

namespace {

std::vector<std::string> unique_ids(const json& doc, const char* key) {
    const json& list = doc.at(key);
    if (!list.is_array() || list.empty())
        throw ValidationError(fmt::format("manifest '{}' must be a non-empty array", key));
    std::vector<std::string> ids;
    std::set<std::string> seen;
    for (const json& item : list) {
        auto id = item.get<std::string>();
        if (id.empty())
            throw ValidationError(fmt::format("manifest '{}' contains an empty id", key));
        if (!seen.insert(id).second)
            throw ValidationError(fmt::format("duplicate id '{}' in manifest '{}'", id, key));
        ids.push_back(std::move(id));
    }
    return ids;
}

std::unordered_map<std::string, std::size_t> index_of(const std::vector<std::string>& ids) {
    std::unordered_map<std::string, std::size_t> out;
    for (std::size_t i = 0; i < ids.size(); ++i)
        out.emplace(ids[i], i);
    return out;
}

fs::path resolve(const fs::path& base, const std::string& rel) {
    fs::path p(rel);
    return p.is_absolute() ? p : base / p;
}

void require_file(const fs::path& path, const PredictionEntry& e) {
    std::error_code ec;
    if (!fs::is_regular_file(path, ec))
        throw IoError(fmt::format("dangling file reference '{}' for (model '{}', image '{}', perturbation '{}')",
                                  path.string(), e.model, e.image, e.perturbation.value_or("none")));
}

} // namespace

Manifest parse_manifest(const json& doc, const fs::path& base_dir, const ManifestOptions& options) {
    if (!doc.is_object())
        throw ValidationError("manifest must be a JSON object");
    Manifest m;
    m.root = base_dir;
    try {
        m.dataset_id = doc.at("dataset_id").get<std::string>();
        m.task = parse_task(doc.at("task").get<std::string>());
        switch (m.task) {
        case Task::kSemanticBinary:
            m.num_classes = doc.value("num_classes", 2u);
            if (m.num_classes != 2)
                throw ValidationError("semantic-binary manifests need num_classes = 2");
            break;
        case Task::kSemanticMulticlass:
            m.num_classes = doc.at("num_classes").get<std::uint32_t>();
            if (m.num_classes < 2)
                throw ValidationError("semantic-multiclass manifests need num_classes >= 2");
            break;
        case Task::kInstance:
            m.num_classes = 0;
            break;
        }
        m.model_ids = unique_ids(doc, "models");
        m.image_ids = unique_ids(doc, "images");

        std::set<std::string> spec_ids;
        for (const json& item : doc.at("perturbations")) {
            auto spec = perturb::spec_from_json(item);
            if (!spec_ids.insert(spec.id).second)
                throw ValidationError(fmt::format("duplicate perturbation id '{}'", spec.id));
            m.perturbations.push_back(std::move(spec));
        }
        if (m.perturbations.empty())
            throw ValidationError("manifest declares no perturbations");

        for (const json& item : doc.at("predictions")) {
            PredictionEntry e;
            e.model = item.at("model").get<std::string>();
            e.image = item.at("image").get<std::string>();
            const json& pert = item.at("perturbation");
            if (!pert.is_null())
                e.perturbation = pert.get<std::string>();
            e.path = resolve(base_dir, item.at("path").get<std::string>());
            if (item.contains("prob_path") && !item.at("prob_path").is_null())
                e.prob_path = resolve(base_dir, item.at("prob_path").get<std::string>());
            m.predictions.push_back(std::move(e));
        }

        if (doc.contains("performance") && !doc.at("performance").is_null()) {
            std::map<std::string, double> perf;
            for (const auto& [k, v] : doc.at("performance").items())
                perf.emplace(k, v.get<double>());
            m.performance = std::move(perf);
        }
    } catch (const json::exception& e) {
        throw ValidationError(fmt::format("manifest schema error: {}", e.what()));
    }

    const auto model_index = index_of(m.model_ids);
    const auto image_index = index_of(m.image_ids);
    std::set<std::string> spec_ids;
    for (const auto& s : m.perturbations)
        spec_ids.insert(s.id);

    m.groups.resize(m.model_ids.size() * m.image_ids.size());
    std::vector<bool> has_reference(m.groups.size(), false);
    std::set<std::tuple<std::string, std::string, std::string>> keys;

    for (std::size_t i = 0; i < m.predictions.size(); ++i) {
        const PredictionEntry& e = m.predictions[i];
        auto mi = model_index.find(e.model);
        if (mi == model_index.end())
            throw ValidationError(fmt::format("prediction references unknown model '{}'", e.model));
        auto ii = image_index.find(e.image);
        if (ii == image_index.end())
            throw ValidationError(fmt::format("prediction references unknown image '{}'", e.image));
        if (e.perturbation && !spec_ids.contains(*e.perturbation))
            throw ValidationError(fmt::format("prediction references unknown perturbation '{}'", *e.perturbation));
        // A null perturbation is keyed by the empty string, which no spec id can be.
        if (!keys.emplace(e.model, e.image, e.perturbation.value_or("")).second)
            throw ValidationError(fmt::format("duplicate prediction key (model '{}', image '{}', perturbation '{}')",
                                              e.model, e.image, e.perturbation.value_or("none")));
        if (options.check_files) {
            require_file(e.path, e);
            if (e.prob_path)
                require_file(*e.prob_path, e);
        }

        std::size_t g = mi->second * m.image_ids.size() + ii->second;
        PredictionGroup& group = m.groups[g];
        group.model_index = mi->second;
        group.image_index = ii->second;
        if (e.is_reference()) {
            group.reference = i;
            has_reference[g] = true;
        } else {
            group.perturbed.push_back(i);
        }
    }

    for (std::size_t g = 0; g < m.groups.size(); ++g) {
        const std::string& model = m.model_ids[g / m.image_ids.size()];
        const std::string& image = m.image_ids[g % m.image_ids.size()];
        if (!has_reference[g])
            throw ValidationError(
                fmt::format("missing unperturbed reference prediction for (model '{}', image '{}')", model, image));
        if (m.groups[g].perturbed.empty())
            throw ValidationError(fmt::format("no perturbed prediction for (model '{}', image '{}')", model, image));
    }

    if (m.performance) {
        for (const auto& [model, score] : *m.performance) {
            if (!model_index.contains(model))
                throw ValidationError(fmt::format("performance score for unknown model '{}'", model));
        }
        for (const auto& model : m.model_ids) {
            if (!m.performance->contains(model))
                throw ValidationError(fmt::format("performance score missing for model '{}'", model));
        }
    }
    return m;
}

Manifest load_manifest(const fs::path& path, const ManifestOptions& options) {
    std::string text = read_file_text(path);
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(fmt::format("{}: invalid JSON: {}", path.string(), e.what()));
    }
    fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
    return parse_manifest(doc, base, options);
}

json manifest_to_json(const Manifest& m) {
    auto rel = [&](const fs::path& p) { return p.lexically_relative(m.root).generic_string(); };
    json doc;
    doc["dataset_id"] = m.dataset_id;
    doc["task"] = to_string(m.task);
    doc["num_classes"] = m.num_classes;
    doc["models"] = m.model_ids;
    doc["images"] = m.image_ids;
    doc["perturbations"] = json::array();
    for (const auto& s : m.perturbations)
        doc["perturbations"].push_back(perturb::spec_to_json(s));
    doc["predictions"] = json::array();
    for (const auto& e : m.predictions) {
        json item{{"model", e.model},
                  {"image", e.image},
                  {"perturbation", e.perturbation ? json(*e.perturbation) : json(nullptr)},
                  {"path", rel(e.path)}};
        if (e.prob_path)
            item["prob_path"] = rel(*e.prob_path);
        doc["predictions"].push_back(std::move(item));
    }
    if (m.performance)
        doc["performance"] = *m.performance;
    return doc;
}

} // namespace cte
