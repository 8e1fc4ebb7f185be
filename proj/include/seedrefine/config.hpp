#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace seedrefine {

/// All thresholds, iteration counts, neighborhood sets, and seeds; one struct so a
/// run is a pure function of (inputs, config, seed).
struct PipelineConfig {
    // Certainty thresholds for pseudo-label filtering.
    float delta_fg = 0.55f;
    float delta_bg = 0.10f;

    // High/low activation thresholds for the self-correlation refinement.
    float delta_h = 0.70f;
    float delta_l = 0.05f;

    // Pixel-adaptive propagation.
    int pamr_iterations = 10;
    std::vector<int> pamr_dilations = {1, 2, 4, 8};
    int pamr_sigma_window = 5;      // odd
    float pamr_sigma_sq_floor = 1e-4f;  // lower clamp on sigma^2 of [0,1] intensities

    // Edge extraction / superpixels.
    float canny_low = 10.0f;
    float canny_high = 100.0f;
    int ccl_connectivity = 4;  // 4 or 8

    // Numerical guard for cosine denominators and log arguments.
    float epsilon = 1e-6f;

    uint64_t rng_seed = 0;

    // Correlation volumes are materialized up to this many pixels; larger inputs
    // are processed row by row.
    int scg_max_volume_pixels = 4096;

    /// Throws std::invalid_argument on the first violated invariant
    /// (delta_bg < delta_fg, delta_l < delta_h, canny_low < canny_high, ...).
    void check() const;
};

/// Parse `key = value` lines (UTF-8, '#' comments) over `base`; unknown keys throw.
PipelineConfig parse_config_text(const std::string& text, PipelineConfig base = {});

/// Render a config as the same key = value format.
std::string config_to_text(const PipelineConfig& cfg);

}  // namespace seedrefine
