#pragma once

#include <vector>

#include "seedrefine/config.hpp"
#include "seedrefine/types.hpp"

namespace seedrefine {

/// One sample entering the mixer: its image, EP-refined decoder map ((C+1)
/// channels), and refined seed map (C channels), all on the same grid.
struct MixItem {
    RgbImage image;
    ScoreMap ep;
    ScoreMap rs;
};

struct MixedSample {
    RgbImage image;        // src pixels where fg, dst elsewhere
    ScoreMap seg_target;   // pasted EP maps
    ScoreMap rs_target;    // pasted seed maps
    int source = -1;       // index whose foreground was pasted
    int destination = -1;  // index supplying the rest
};

/// Union of foreground activations: true where any class channel c >= 1 exceeds
/// delta_fg. Returns an h*w boolean grid.
std::vector<uint8_t> foreground_union(const ScoreMap& ep, const PipelineConfig& cfg);

/// Per-pixel selection src/dst by fg, broadcast over channels; the building block
/// of paste(). Buffers must be whole multiples of plane_size.
std::vector<float> masked_combine(std::span<const float> src, std::span<const float> dst,
                                  std::span<const uint8_t> fg, size_t plane_size);

/// Hard composition: every output pixel of every field is copied from src where
/// fg is set and from dst elsewhere (no blending).
MixedSample paste(const MixItem& src, const MixItem& dst, const std::vector<uint8_t>& fg);

/// Partner index for each of B samples, drawn uniformly from the others by a
/// dedicated seeded stream. partners[i] != i always.
std::vector<int> mix_partners(int batch_size, uint64_t seed);

/// paste(item_i, item_partner(i), foreground_union(item_i.ep)) for every i.
std::vector<MixedSample> mix_batch(const std::vector<MixItem>& batch, uint64_t seed,
                                   const PipelineConfig& cfg);

}  // namespace seedrefine
