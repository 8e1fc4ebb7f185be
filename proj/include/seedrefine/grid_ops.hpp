#pragma once

#include <span>
#include <vector>

#include "seedrefine/types.hpp"

namespace seedrefine {

/// Min-max normalize one contiguous slice in place: min -> 0, max -> 1.
/// A constant slice (max == min) maps to all zeros.
void minmax_normalize_slice(std::span<float> slice);

/// Min-max normalize a row-major rows x cols grid along `axis`
/// (0 = down each column, 1 = across each row). Constant slices map to zeros.
std::vector<float> minmax_normalize(std::span<const float> grid, int rows, int cols, int axis);

/// Normalize every class plane of `map` independently and mark it probabilistic.
void minmax_normalize_per_class(ScoreMap& map);

/// Bilinear resample (align-corners) of a single plane.
void resize_bilinear_plane(std::span<const float> src, int src_h, int src_w,
                           std::span<float> dst, int dst_h, int dst_w);

FeatureLayer resize_bilinear(const FeatureLayer& layer, int dst_h, int dst_w);
RgbImage resize_bilinear(const RgbImage& image, int dst_h, int dst_w);

/// Nearest-neighbor resample of an integer mask (pixel-center mapping).
LabelMask resize_nearest(const LabelMask& mask, int dst_h, int dst_w);

/// Window of pixels where any class of `map` is strictly positive.
WindowMask positive_window(const ScoreMap& map);

}  // namespace seedrefine
