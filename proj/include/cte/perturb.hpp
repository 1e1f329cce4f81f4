#pragma once

#include "cte/arrays.hpp"
#include "cte/rng.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cte::perturb {

enum class Kind { kGauss, kBrightness, kContrast, kGamma, kFeatureDropout };

// Where a perturbation acts. Input-space kinds always act on the input;
// the remaining placements only apply to feature dropout, which is executed
// by an external inference harness.
enum class Placement { kInput, kAllLayers, kBottleneck, kBottleneckSkips };

std::string_view to_string(Kind kind) noexcept;
std::string_view to_string(Placement placement) noexcept;
Kind parse_kind(std::string_view text);
Placement parse_placement(std::string_view text);

struct StrengthRange {
    double lo = 0.0;
    double hi = 0.0;

    friend bool operator==(const StrengthRange&, const StrengthRange&) = default;
};

// One declarative perturbation. The strength is the noise sigma (gauss),
// the additive shift (brightness), the contrast factor, the gamma exponent,
// or the channel drop rate (feature dropout).
struct PerturbationSpec {
    std::string id;
    Kind kind = Kind::kGauss;
    StrengthRange strength;
    Placement placement = Placement::kInput;
    std::uint64_t seed = 0;

    bool is_input_space() const noexcept { return kind != Kind::kFeatureDropout; }

    // Throws ValidationError when a range or placement invariant is broken.
    void validate() const;

    friend bool operator==(const PerturbationSpec&, const PerturbationSpec&) = default;
};

PerturbationSpec spec_from_json(const nlohmann::json& j);
nlohmann::json spec_to_json(const PerturbationSpec& spec);
std::vector<PerturbationSpec> specs_from_json(const nlohmann::json& j);

double sample_strength(const PerturbationSpec& spec, std::string_view image_id);

rng::CounterStream noise_stream(const PerturbationSpec& spec, std::string_view image_id) noexcept;

ImagePatch apply_gauss(const ImagePatch& x, double sigma, const rng::CounterStream& noise);
ImagePatch apply_brightness(const ImagePatch& x, double theta);
ImagePatch apply_contrast(const ImagePatch& x, double theta);
ImagePatch apply_gamma(const ImagePatch& x, double gamma);

struct Perturbed {
    ImagePatch image;
    double strength = 0.0;
};

// Samples the strength for (spec, image) and applies the transformation.
// Feature-dropout specs are rejected: they run inside the model.
Perturbed apply(const PerturbationSpec& spec, const ImagePatch& x, std::string_view image_id);

} // namespace cte::perturb
