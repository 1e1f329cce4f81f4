#include "cte/perturb.hpp"

#include "cte/errors.hpp"

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include <cmath>

namespace cte::perturb {

using nlohmann::json;

std::string_view to_string(Kind kind) noexcept {
    switch (kind) {
    case Kind::kGauss: return "gauss";
    case Kind::kBrightness: return "brightness";
    case Kind::kContrast: return "contrast";
    case Kind::kGamma: return "gamma";
    case Kind::kFeatureDropout: return "feature-dropout";
    }
    return "";
}

std::string_view to_string(Placement placement) noexcept {
    switch (placement) {
    case Placement::kInput: return "input";
    case Placement::kAllLayers: return "all-layers";
    case Placement::kBottleneck: return "bottleneck";
    case Placement::kBottleneckSkips: return "bottleneck+skips";
    }
    return "";
}

Kind parse_kind(std::string_view text) {
    for (Kind k : {Kind::kGauss, Kind::kBrightness, Kind::kContrast, Kind::kGamma, Kind::kFeatureDropout}) {
        if (to_string(k) == text)
            return k;
    }
    throw ValidationError(fmt::format("unknown perturbation kind '{}'", text));
}

Placement parse_placement(std::string_view text) {
    for (Placement p : {Placement::kInput, Placement::kAllLayers, Placement::kBottleneck, Placement::kBottleneckSkips}) {
        if (to_string(p) == text)
            return p;
    }
    throw ValidationError(fmt::format("unknown placement '{}'", text));
}

void PerturbationSpec::validate() const {
    auto fail = [&](std::string_view why) {
        throw ValidationError(fmt::format("perturbation '{}' ({}): {}", id, to_string(kind), why));
    };
    if (id.empty())
        fail("id must not be empty");
    if (!std::isfinite(strength.lo) || !std::isfinite(strength.hi))
        fail("strength range must be finite");
    if (strength.lo > strength.hi)
        fail("strength range needs lo <= hi");
    switch (kind) {
    case Kind::kGauss:
    case Kind::kBrightness:
        if (strength.lo < 0.0)
            fail("strength must be non-negative");
        break;
    case Kind::kContrast:
    case Kind::kGamma:
        if (strength.lo <= 0.0)
            fail("strength must be positive");
        break;
    case Kind::kFeatureDropout:
        if (!(strength.lo > 0.0 && strength.hi < 1.0))
            fail("dropout rate range must satisfy 0 < lo <= hi < 1");
        break;
    }
    if (is_input_space() && placement != Placement::kInput)
        fail("input-space perturbations must use placement 'input'");
    if (!is_input_space() && placement == Placement::kInput)
        fail("feature dropout needs a layer placement");
}

PerturbationSpec spec_from_json(const json& j) {
    if (!j.is_object())
        throw ValidationError("perturbation spec must be a JSON object");
    PerturbationSpec spec;
    try {
        spec.id = j.at("id").get<std::string>();
        spec.kind = parse_kind(j.at("kind").get<std::string>());
        const json& range = j.at("strength_range");
        if (!range.is_array() || range.size() != 2)
            throw ValidationError(fmt::format("perturbation '{}': strength_range must be [lo, hi]", spec.id));
        spec.strength = {range[0].get<double>(), range[1].get<double>()};
        if (j.contains("placement"))
            spec.placement = parse_placement(j.at("placement").get<std::string>());
        else
            spec.placement = spec.is_input_space() ? Placement::kInput : Placement::kBottleneck;
        spec.seed = j.value("seed", std::uint64_t{0});
    } catch (const json::exception& e) {
        throw ValidationError(fmt::format("invalid perturbation spec: {}", e.what()));
    }
    spec.validate();
    return spec;
}

json spec_to_json(const PerturbationSpec& spec) {
    return json{{"id", spec.id},
                {"kind", to_string(spec.kind)},
                {"strength_range", {spec.strength.lo, spec.strength.hi}},
                {"placement", to_string(spec.placement)},
                {"seed", spec.seed}};
}

std::vector<PerturbationSpec> specs_from_json(const json& j) {
    const json& list = j.is_object() && j.contains("perturbations") ? j.at("perturbations") : j;
    if (!list.is_array())
        throw ValidationError("expected a JSON array of perturbation specs");
    std::vector<PerturbationSpec> specs;
    for (const json& item : list)
        specs.push_back(spec_from_json(item));
    return specs;
}

double sample_strength(const PerturbationSpec& spec, std::string_view image_id) {
    if (spec.strength.lo == spec.strength.hi)
        return spec.strength.lo;
    double u = rng::CounterStream::derive(spec.seed, rng::StreamTag::kStrength, image_id).uniform(0);
    return spec.strength.lo + (spec.strength.hi - spec.strength.lo) * u;
}

rng::CounterStream noise_stream(const PerturbationSpec& spec, std::string_view image_id) noexcept {
    return rng::CounterStream::derive(spec.seed, rng::StreamTag::kNoise, image_id);
}

ImagePatch apply_gauss(const ImagePatch& x, double sigma, const rng::CounterStream& noise) {
    ImagePatch out = x;
    if (sigma == 0.0)
        return out;
    // Element i always draws normal(i): i.i.d. over all channels and pixels.
    for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] += sigma * noise.normal(i);
    return out;
}

ImagePatch apply_brightness(const ImagePatch& x, double theta) {
    ImagePatch out = x;
    for (double& v : out.values)
        v += theta;
    return out;
}

ImagePatch apply_contrast(const ImagePatch& x, double theta) {
    if (!(theta > 0.0))
        throw ValidationError("contrast factor must be positive");
    ImagePatch out = x;
    if (theta == 1.0)
        return out;
    const double mu = x.mean();
    for (double& v : out.values)
        v = mu + theta * (v - mu);
    return out;
}

ImagePatch apply_gamma(const ImagePatch& x, double gamma) {
    if (!(gamma > 0.0))
        throw ValidationError("gamma must be positive");
    ImagePatch out = x;
    std::size_t clamped = 0;
    for (double& v : out.values) {
        if (v < 0.0) {
            v = 0.0;
            ++clamped;
        }
    }
    if (clamped > 0)
        spdlog::warn("gamma correction: clamped {} negative input values to 0", clamped);
    if (gamma == 1.0)
        return out;
    for (double& v : out.values)
        v = std::pow(v, gamma);
    return out;
}

Perturbed apply(const PerturbationSpec& spec, const ImagePatch& x, std::string_view image_id) {
    spec.validate();
    const double strength = sample_strength(spec, image_id);
    switch (spec.kind) {
    case Kind::kGauss: return {apply_gauss(x, strength, noise_stream(spec, image_id)), strength};
    case Kind::kBrightness: return {apply_brightness(x, strength), strength};
    case Kind::kContrast: return {apply_contrast(x, strength), strength};
    case Kind::kGamma: return {apply_gamma(x, strength), strength};
    case Kind::kFeatureDropout: break;
    }
    throw ValidationError(
        fmt::format("perturbation '{}' is feature dropout; it is executed by the inference harness, not here", spec.id));
}

} // namespace cte::perturb
