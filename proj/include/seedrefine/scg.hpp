#pragma once

#include <vector>

#include "seedrefine/config.hpp"
#include "seedrefine/types.hpp"

namespace seedrefine {

/// Pairwise pixel-to-pixel correlation over a (height x width) grid, stored as an
/// hw x hw row-major matrix between flattened pixel indices.
struct CorrelationVolume {
    int height = 0;
    int width = 0;
    std::vector<float> values;  // hw*hw, values[p*hw + q]

    CorrelationVolume() = default;
    CorrelationVolume(int height_, int width_)
        : height(height_), width(width_),
          values(static_cast<size_t>(height_) * width_ * height_ * width_, 0.0f) {}

    int pixel_count() const { return height * width; }
    float at(int p, int q) const {
        return values[static_cast<size_t>(p) * pixel_count() + q];
    }
    std::span<const float> row(int p) const {
        return {values.data() + static_cast<size_t>(p) * pixel_count(),
                static_cast<size_t>(pixel_count())};
    }
};

/// First-order self-correlation: SC1[p,q] = max(0, cos(f_p, f_q)), cosine
/// denominators clamped below by epsilon (zero vectors yield 0 similarity).
/// Symmetric with unit diagonal for nonzero features.
CorrelationVolume first_order_sc(const FeatureLayer& layer, float epsilon);

/// Second-order self-correlation: SC2[p,q] = mnmx_q( avg_k cos(f_p,f_k)*cos(f_k,f_q) ),
/// min-max normalized along q per row p. Raw cosines inside the average (no ReLU).
CorrelationVolume second_order_sc(const FeatureLayer& layer, float epsilon);

/// Layer-averaged elementwise max of first- and second-order correlations.
/// All layers must share (height, width); an empty stack is an error.
CorrelationVolume hsc(const FeatureStack& stack, float epsilon);

/// Mean of the volume rows indexed by pixel_set, reshaped to (height, width).
/// An empty set yields an all-zero grid.
std::vector<float> k_scg(const CorrelationVolume& volume, const std::vector<int>& pixel_set);

/// Refine a CAM with the feature self-correlations: per class, average the
/// correlation rows of high-activation pixels (> delta_h) minus those of
/// low-activation pixels (< delta_l), ReLU, then min-max normalize. Layers are
/// bilinearly resampled to the CAM grid and the CAM is per-class normalized first.
ScoreMap scg_refine(const ScoreMap& cam, const FeatureStack& stack, const PipelineConfig& cfg);

}  // namespace seedrefine
