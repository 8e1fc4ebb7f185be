#include "seedrefine/types.hpp"

#include <cmath>
#include <sstream>

namespace seedrefine {

namespace {

std::string loc(const char* what, int c, int y, int x, float v) {
    std::ostringstream os;
    os << what << " at (c=" << c << ", y=" << y << ", x=" << x << "): " << v;
    return os.str();
}

}  // namespace

ValidationReport validate(const ScoreMap& map) {
    if (map.classes < 1 || map.height < 1 || map.width < 1)
        return ValidationReport::fail("ScoreMap: non-positive shape");
    if (map.values.size() != static_cast<size_t>(map.classes) * map.plane_size())
        return ValidationReport::fail("ScoreMap: value count does not match shape");
    for (int c = 0; c < map.classes; ++c)
        for (int y = 0; y < map.height; ++y)
            for (int x = 0; x < map.width; ++x) {
                const float v = map.at(c, y, x);
                if (!std::isfinite(v))
                    return ValidationReport::fail(loc("ScoreMap: non-finite value", c, y, x, v));
                if (map.probabilistic && (v < 0.0f || v > 1.0f))
                    return ValidationReport::fail(
                        loc("ScoreMap: probabilistic value outside [0,1]", c, y, x, v));
            }
    return ValidationReport::pass();
}

ValidationReport validate(const FeatureStack& stack) {
    if (stack.empty()) return ValidationReport::fail("FeatureStack: no layers");
    for (size_t l = 0; l < stack.layers.size(); ++l) {
        const FeatureLayer& layer = stack.layers[l];
        if (layer.channels < 1 || layer.height < 1 || layer.width < 1)
            return ValidationReport::fail("FeatureStack: layer " + std::to_string(l) +
                                          " has non-positive shape");
        if (layer.values.size() != static_cast<size_t>(layer.channels) * layer.plane_size())
            return ValidationReport::fail("FeatureStack: layer " + std::to_string(l) +
                                          " value count does not match shape");
        for (int c = 0; c < layer.channels; ++c)
            for (int y = 0; y < layer.height; ++y)
                for (int x = 0; x < layer.width; ++x) {
                    const float v = layer.at(c, y, x);
                    if (!std::isfinite(v))
                        return ValidationReport::fail(
                            "FeatureStack: layer " + std::to_string(l) + ", " +
                            loc("non-finite value", c, y, x, v));
                }
    }
    return ValidationReport::pass();
}

ValidationReport validate(const LabelMask& mask, int num_classes) {
    if (mask.height < 1 || mask.width < 1)
        return ValidationReport::fail("LabelMask: non-positive shape");
    if (mask.labels.size() != static_cast<size_t>(mask.height) * mask.width)
        return ValidationReport::fail("LabelMask: label count does not match shape");
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x) {
            const int32_t v = mask.at(y, x);
            if (v != kIgnoreLabel && (v < 0 || v > num_classes)) {
                std::ostringstream os;
                os << "LabelMask: label " << v << " outside {-1,0.." << num_classes
                   << "} at (y=" << y << ", x=" << x << ")";
                return ValidationReport::fail(os.str());
            }
        }
    return ValidationReport::pass();
}

ValidationReport validate(const RgbImage& image) {
    if (image.height < 1 || image.width < 1)
        return ValidationReport::fail("RgbImage: non-positive shape");
    if (image.values.size() != 3 * image.plane_size())
        return ValidationReport::fail("RgbImage: value count does not match shape");
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < image.height; ++y)
            for (int x = 0; x < image.width; ++x) {
                const float v = image.at(c, y, x);
                if (!std::isfinite(v))
                    return ValidationReport::fail(loc("RgbImage: non-finite value", c, y, x, v));
                if (v < 0.0f || v > 1.0f)
                    return ValidationReport::fail(
                        loc("RgbImage: intensity outside [0,1]", c, y, x, v));
            }
    return ValidationReport::pass();
}

}  // namespace seedrefine
