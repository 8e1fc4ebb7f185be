#include "seedrefine/io.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace seedrefine {

namespace fs = std::filesystem;

size_t Tensor::element_count() const {
    size_t n = 1;
    for (uint32_t d : dims) n *= d;
    return n;
}

namespace {

constexpr char kMagic[4] = {'S', 'F', 'T', '1'};

void append_u32le(std::string& out, uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

uint32_t read_u32le(const unsigned char* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

std::string read_file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError(IoCode::open_failed, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Temp-file-then-rename writer shared by every binary format.
void write_bytes_atomic(const fs::path& path, const std::string& bytes) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError(IoCode::write_failed, "cannot open " + tmp.string() + " for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            out.close();
            std::error_code ec;
            fs::remove(tmp, ec);
            throw IoError(IoCode::write_failed, "failed writing " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError(IoCode::write_failed, "failed renaming onto " + path.string());
    }
}

}  // namespace

Tensor read_tensor(const fs::path& path) {
    const std::string bytes = read_file_bytes(path);
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    if (bytes.size() < 5)
        throw IoError(IoCode::truncated, path.string() + ": header truncated (expected at least 5 bytes, found " +
                                             std::to_string(bytes.size()) + ")");
    if (std::memcmp(p, kMagic, 4) != 0)
        throw IoError(IoCode::bad_magic, path.string() + ": bad magic (expected \"SFT1\")");
    const int rank = p[4];
    if (rank < 2 || rank > 4)
        throw IoError(IoCode::bad_rank,
                      path.string() + ": rank " + std::to_string(rank) + " outside {2,3,4}");
    const size_t header = 5 + 4 * static_cast<size_t>(rank);
    if (bytes.size() < header)
        throw IoError(IoCode::truncated, path.string() + ": dims truncated (expected " +
                                             std::to_string(header) + " bytes, found " +
                                             std::to_string(bytes.size()) + ")");
    Tensor t;
    t.dims.resize(rank);
    for (int i = 0; i < rank; ++i) {
        t.dims[i] = read_u32le(p + 5 + 4 * i);
        if (t.dims[i] == 0)
            throw IoError(IoCode::bad_value, path.string() + ": zero dimension");
    }
    const size_t payload = 4 * t.element_count();
    if (bytes.size() != header + payload)
        throw IoError(IoCode::truncated, path.string() + ": payload size mismatch (expected " +
                                             std::to_string(header + payload) + " bytes, found " +
                                             std::to_string(bytes.size()) + ")");
    t.values.resize(t.element_count());
    for (size_t i = 0; i < t.values.size(); ++i) {
        const uint32_t bits = read_u32le(p + header + 4 * i);
        float f;
        std::memcpy(&f, &bits, 4);
        t.values[i] = f;
    }
    return t;
}

void write_tensor(const Tensor& tensor, const fs::path& path) {
    if (tensor.dims.size() < 2 || tensor.dims.size() > 4)
        throw IoError(IoCode::bad_rank, "write_tensor: rank outside {2,3,4}");
    if (tensor.values.size() != tensor.element_count())
        throw IoError(IoCode::bad_value, "write_tensor: payload does not match dims");
    std::string bytes;
    bytes.reserve(5 + 4 * tensor.dims.size() + 4 * tensor.values.size());
    bytes.append(kMagic, 4);
    bytes.push_back(static_cast<char>(tensor.dims.size()));
    for (uint32_t d : tensor.dims) append_u32le(bytes, d);
    for (float f : tensor.values) {
        uint32_t bits;
        std::memcpy(&bits, &f, 4);
        append_u32le(bytes, bits);
    }
    write_bytes_atomic(path, bytes);
}

ScoreMap tensor_to_scoremap(const Tensor& tensor) {
    if (tensor.dims.size() != 3)
        throw IoError(IoCode::bad_rank, "expected a rank-3 tensor (classes, height, width)");
    ScoreMap map(static_cast<int>(tensor.dims[0]), static_cast<int>(tensor.dims[1]),
                 static_cast<int>(tensor.dims[2]));
    map.values = tensor.values;
    return map;
}

Tensor tensor_from_scoremap(const ScoreMap& map) {
    Tensor t;
    t.dims = {static_cast<uint32_t>(map.classes), static_cast<uint32_t>(map.height),
              static_cast<uint32_t>(map.width)};
    t.values = map.values;
    return t;
}

FeatureStack tensor_to_stack(const Tensor& tensor) {
    FeatureStack stack;
    if (tensor.dims.size() == 3) {
        FeatureLayer layer(static_cast<int>(tensor.dims[0]), static_cast<int>(tensor.dims[1]),
                           static_cast<int>(tensor.dims[2]));
        layer.values = tensor.values;
        stack.layers.push_back(std::move(layer));
        return stack;
    }
    if (tensor.dims.size() != 4)
        throw IoError(IoCode::bad_rank, "expected rank 3 (one layer) or rank 4 (layer stack)");
    const size_t per_layer = static_cast<size_t>(tensor.dims[1]) * tensor.dims[2] * tensor.dims[3];
    for (uint32_t l = 0; l < tensor.dims[0]; ++l) {
        FeatureLayer layer(static_cast<int>(tensor.dims[1]), static_cast<int>(tensor.dims[2]),
                           static_cast<int>(tensor.dims[3]));
        std::copy(tensor.values.begin() + l * per_layer,
                  tensor.values.begin() + (l + 1) * per_layer, layer.values.begin());
        stack.layers.push_back(std::move(layer));
    }
    return stack;
}

Tensor tensor_from_stack(const FeatureStack& stack) {
    if (stack.empty()) throw IoError(IoCode::bad_value, "tensor_from_stack: no layers");
    const FeatureLayer& first = stack.layers.front();
    for (const auto& l : stack.layers)
        if (l.channels != first.channels || l.height != first.height || l.width != first.width)
            throw IoError(IoCode::bad_value,
                          "tensor_from_stack: rank-4 files need uniform layer shapes");
    Tensor t;
    t.dims = {static_cast<uint32_t>(stack.size()), static_cast<uint32_t>(first.channels),
              static_cast<uint32_t>(first.height), static_cast<uint32_t>(first.width)};
    t.values.reserve(t.element_count());
    for (const auto& l : stack.layers)
        t.values.insert(t.values.end(), l.values.begin(), l.values.end());
    return t;
}

std::vector<float> tensor_to_grid(const Tensor& tensor, int& height, int& width) {
    if (tensor.dims.size() != 2)
        throw IoError(IoCode::bad_rank, "expected a rank-2 tensor (height, width)");
    height = static_cast<int>(tensor.dims[0]);
    width = static_cast<int>(tensor.dims[1]);
    return tensor.values;
}

// ---------------------------------------------------------------------------
// PNG
// ---------------------------------------------------------------------------

namespace {

struct PngReadCtx {
    const unsigned char* data;
    size_t size;
    size_t pos;
};

void png_read_from_memory(png_structp png, png_bytep out, png_size_t n) {
    auto* ctx = static_cast<PngReadCtx*>(png_get_io_ptr(png));
    if (ctx->pos + n > ctx->size) png_error(png, "read past end of buffer");
    std::memcpy(out, ctx->data + ctx->pos, n);
    ctx->pos += n;
}

void png_write_to_string(png_structp png, png_bytep data, png_size_t n) {
    auto* out = static_cast<std::string*>(png_get_io_ptr(png));
    out->append(reinterpret_cast<const char*>(data), n);
}

void png_flush_noop(png_structp) {}

// Decode an 8-bit PNG into gray (1 channel) or RGB (3 channels) rows.
std::vector<unsigned char> decode_png(const fs::path& path, bool want_rgb, int& height,
                                      int& width) {
    const std::string bytes = read_file_bytes(path);
    if (bytes.size() < 8 || png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8))
        throw IoError(IoCode::bad_magic, path.string() + ": not a PNG file");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError(IoCode::open_failed, "libpng initialization failed");
    }
    std::vector<unsigned char> pixels;
    std::vector<png_bytep> rows;
    PngReadCtx ctx{reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), 0};
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError(IoCode::truncated, path.string() + ": PNG decode failed");
    }
    png_set_read_fn(png, &ctx, png_read_from_memory);
    png_read_info(png, info);

    width = static_cast<int>(png_get_image_width(png, info));
    height = static_cast<int>(png_get_image_height(png, info));
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);

    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (want_rgb) {
        if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
            png_set_gray_to_rgb(png);
    } else {
        if (color != PNG_COLOR_TYPE_GRAY)
            png_error(png, "mask PNG must be single-channel grayscale");
    }
    png_read_update_info(png, info);

    const int channels = want_rgb ? 3 : 1;
    pixels.resize(static_cast<size_t>(height) * width * channels);
    rows.resize(height);
    for (int y = 0; y < height; ++y)
        rows[y] = pixels.data() + static_cast<size_t>(y) * width * channels;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return pixels;
}

void encode_png(const fs::path& path, const std::vector<unsigned char>& pixels, int height,
                int width, bool rgb) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError(IoCode::write_failed, "libpng initialization failed");
    }
    std::string bytes;
    std::vector<png_bytep> rows(height);
    const int channels = rgb ? 3 : 1;
    for (int y = 0; y < height; ++y)
        rows[y] = const_cast<png_bytep>(pixels.data() + static_cast<size_t>(y) * width * channels);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError(IoCode::write_failed, path.string() + ": PNG encode failed");
    }
    png_set_write_fn(png, &bytes, png_write_to_string, png_flush_noop);
    png_set_IHDR(png, info, width, height, 8,
                 rgb ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    write_bytes_atomic(path, bytes);
}

}  // namespace

LabelMask read_mask_png(const fs::path& path, std::optional<int> num_classes) {
    int h = 0, w = 0;
    const std::vector<unsigned char> pixels = decode_png(path, false, h, w);
    LabelMask mask(h, w);
    for (size_t p = 0; p < pixels.size(); ++p) {
        const unsigned char v = pixels[p];
        if (v == 255) {
            mask.labels[p] = kIgnoreLabel;
        } else {
            if (num_classes && v > *num_classes)
                throw IoError(IoCode::bad_value,
                              path.string() + ": mask value " + std::to_string(v) +
                                  " outside 0.." + std::to_string(*num_classes));
            mask.labels[p] = v;
        }
    }
    return mask;
}

void write_mask_png(const LabelMask& mask, const fs::path& path) {
    std::vector<unsigned char> pixels(mask.labels.size());
    for (size_t p = 0; p < mask.labels.size(); ++p) {
        const int32_t v = mask.labels[p];
        if (v == kIgnoreLabel) pixels[p] = 255;
        else if (v >= 0 && v < 255) pixels[p] = static_cast<unsigned char>(v);
        else throw IoError(IoCode::bad_value, "write_mask_png: label " + std::to_string(v) +
                                                  " not representable");
    }
    encode_png(path, pixels, mask.height, mask.width, false);
}

RgbImage read_image_png(const fs::path& path) {
    int h = 0, w = 0;
    const std::vector<unsigned char> pixels = decode_png(path, true, h, w);
    RgbImage image(h, w);
    const size_t plane = image.plane_size();
    for (size_t p = 0; p < plane; ++p)
        for (int c = 0; c < 3; ++c)
            image.values[static_cast<size_t>(c) * plane + p] = pixels[p * 3 + c] / 255.0f;
    return image;
}

void write_image_png(const RgbImage& image, const fs::path& path) {
    const size_t plane = image.plane_size();
    std::vector<unsigned char> pixels(plane * 3);
    for (size_t p = 0; p < plane; ++p)
        for (int c = 0; c < 3; ++c) {
            const float v = image.values[static_cast<size_t>(c) * plane + p];
            const int q = static_cast<int>(v * 255.0f + 0.5f);
            pixels[p * 3 + c] = static_cast<unsigned char>(std::clamp(q, 0, 255));
        }
    encode_png(path, pixels, image.height, image.width, true);
}

PipelineConfig load_config_file(const fs::path& path, PipelineConfig base) {
    return parse_config_text(read_file_bytes(path), base);
}

void write_text_atomic(const fs::path& path, const std::string& content) {
    write_bytes_atomic(path, content);
}

}  // namespace seedrefine
