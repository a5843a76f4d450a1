#include "fde/common.hpp"

namespace fde {

const char* feature_name(Feature f) {
    switch (f) {
        case Feature::co2: return "co2";
        case Feature::temperature: return "temperature";
        case Feature::humidity: return "humidity";
        case Feature::pressure: return "pressure";
        case Feature::pir: return "pir";
    }
    return "unknown";
}

std::optional<Feature> feature_from_name(std::string_view name) {
    for (Feature f : kAllFeatures) {
        if (name == feature_name(f)) return f;
    }
    return std::nullopt;
}

Feature require_feature(std::string_view name) {
    auto f = feature_from_name(name);
    if (!f) throw ConfigError("unknown feature name: " + std::string(name));
    return *f;
}

}  // namespace fde
