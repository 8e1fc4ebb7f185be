#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "seedrefine/config.hpp"
#include "seedrefine/types.hpp"

namespace seedrefine {

enum class IoCode {
    open_failed,
    bad_magic,
    bad_rank,
    truncated,
    bad_value,
    write_failed,
};

class IoError : public std::runtime_error {
public:
    IoError(IoCode code_, const std::string& message) : std::runtime_error(message), code(code_) {}
    IoCode code;
};

/// In-memory form of an .sft file: magic "SFT1", u8 rank in {2,3,4}, rank u32
/// little-endian dims, then row-major float32 little-endian payload.
struct Tensor {
    std::vector<uint32_t> dims;
    std::vector<float> values;

    size_t element_count() const;
};

Tensor read_tensor(const std::filesystem::path& path);
void write_tensor(const Tensor& tensor, const std::filesystem::path& path);

ScoreMap tensor_to_scoremap(const Tensor& tensor);           // rank 3: (C, h, w)
Tensor tensor_from_scoremap(const ScoreMap& map);
FeatureStack tensor_to_stack(const Tensor& tensor);          // rank 3 or rank 4 (L, U, h, w)
Tensor tensor_from_stack(const FeatureStack& stack);         // uniform channel count required
std::vector<float> tensor_to_grid(const Tensor& tensor, int& height, int& width);  // rank 2

/// 8-bit PNG codecs. Masks are single-channel with 255 as the ignore sentinel;
/// images are RGB scaled to [0,1]. If `num_classes` is given, mask values above
/// it (other than 255) raise bad_value.
LabelMask read_mask_png(const std::filesystem::path& path,
                        std::optional<int> num_classes = std::nullopt);
void write_mask_png(const LabelMask& mask, const std::filesystem::path& path);
RgbImage read_image_png(const std::filesystem::path& path);
void write_image_png(const RgbImage& image, const std::filesystem::path& path);

PipelineConfig load_config_file(const std::filesystem::path& path, PipelineConfig base = {});

/// Write-to-temp-then-rename, so failed writes never leave partial outputs.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace seedrefine
