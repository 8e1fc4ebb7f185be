#pragma once

#include <cassert>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace seedrefine {

inline constexpr int kIgnoreLabel = -1;

/// Per-class score planes, channel-major: value(c,y,x) = values[(c*height+y)*width+x].
/// A C-channel map stores foreground class c+1 in channel c; a (C+1)-channel map
/// (decoder-style) stores background in channel 0 and class k in channel k.
struct ScoreMap {
    int classes = 0;
    int height = 0;
    int width = 0;
    bool probabilistic = false;
    std::vector<float> values;

    ScoreMap() = default;
    ScoreMap(int classes_, int height_, int width_, bool probabilistic_ = false)
        : classes(classes_), height(height_), width(width_), probabilistic(probabilistic_),
          values(static_cast<size_t>(classes_) * height_ * width_, 0.0f) {}

    size_t plane_size() const { return static_cast<size_t>(height) * width; }
    size_t size() const { return values.size(); }

    float& at(int c, int y, int x) {
        assert(c >= 0 && c < classes && y >= 0 && y < height && x >= 0 && x < width);
        return values[(static_cast<size_t>(c) * height + y) * width + x];
    }
    float at(int c, int y, int x) const {
        assert(c >= 0 && c < classes && y >= 0 && y < height && x >= 0 && x < width);
        return values[(static_cast<size_t>(c) * height + y) * width + x];
    }
    std::span<float> plane(int c) {
        return {values.data() + static_cast<size_t>(c) * plane_size(), plane_size()};
    }
    std::span<const float> plane(int c) const {
        return {values.data() + static_cast<size_t>(c) * plane_size(), plane_size()};
    }

    bool same_shape(const ScoreMap& o) const {
        return classes == o.classes && height == o.height && width == o.width;
    }
};

/// One feature map: channels x height x width, channel-major like ScoreMap.
struct FeatureLayer {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<float> values;

    FeatureLayer() = default;
    FeatureLayer(int channels_, int height_, int width_)
        : channels(channels_), height(height_), width(width_),
          values(static_cast<size_t>(channels_) * height_ * width_, 0.0f) {}

    size_t plane_size() const { return static_cast<size_t>(height) * width; }
    float& at(int c, int y, int x) {
        return values[(static_cast<size_t>(c) * height + y) * width + x];
    }
    float at(int c, int y, int x) const {
        return values[(static_cast<size_t>(c) * height + y) * width + x];
    }
};

/// Ordered stack of feature layers (deepest first by convention; order only
/// matters for reporting). Layers are resampled to a common grid before any
/// correlation is computed.
struct FeatureStack {
    std::vector<FeatureLayer> layers;

    bool empty() const { return layers.empty(); }
    size_t size() const { return layers.size(); }
    int total_channels() const {
        int n = 0;
        for (const auto& l : layers) n += l.channels;
        return n;
    }
};

/// Integer per-pixel labels: -1 ignore, 0 background, 1..C foreground.
struct LabelMask {
    int height = 0;
    int width = 0;
    std::vector<int32_t> labels;

    LabelMask() = default;
    LabelMask(int height_, int width_, int32_t fill = 0)
        : height(height_), width(width_), labels(static_cast<size_t>(height_) * width_, fill) {}

    int32_t& at(int y, int x) { return labels[static_cast<size_t>(y) * width + x]; }
    int32_t at(int y, int x) const { return labels[static_cast<size_t>(y) * width + x]; }
    size_t size() const { return labels.size(); }
};

/// RGB intensities in [0,1], channel-major: 3 x height x width.
struct RgbImage {
    int height = 0;
    int width = 0;
    std::vector<float> values;

    RgbImage() = default;
    RgbImage(int height_, int width_)
        : height(height_), width(width_), values(static_cast<size_t>(3) * height_ * width_, 0.0f) {}

    size_t plane_size() const { return static_cast<size_t>(height) * width; }
    float& at(int c, int y, int x) {
        return values[(static_cast<size_t>(c) * height + y) * width + x];
    }
    float at(int c, int y, int x) const {
        return values[(static_cast<size_t>(c) * height + y) * width + x];
    }
};

/// Boolean membership grid for the propagation window W.
struct WindowMask {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> member;

    WindowMask() = default;
    WindowMask(int height_, int width_, bool fill = false)
        : height(height_), width(width_),
          member(static_cast<size_t>(height_) * width_, fill ? 1 : 0) {}

    bool at(int y, int x) const { return member[static_cast<size_t>(y) * width + x] != 0; }
    void set(int y, int x, bool v) { member[static_cast<size_t>(y) * width + x] = v ? 1 : 0; }
};

/// Result of validate(): pass, or the first violated invariant with its location.
struct ValidationReport {
    bool ok = true;
    std::string message;  // empty on pass

    static ValidationReport pass() { return {}; }
    static ValidationReport fail(std::string msg) { return {false, std::move(msg)}; }
};

ValidationReport validate(const ScoreMap& map);
ValidationReport validate(const FeatureStack& stack);
/// num_classes = C; labels must lie in {-1} or {0..C}.
ValidationReport validate(const LabelMask& mask, int num_classes);
ValidationReport validate(const RgbImage& image);

}  // namespace seedrefine
