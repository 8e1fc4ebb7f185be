#include "seedrefine/grid_ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace seedrefine {

void minmax_normalize_slice(std::span<float> slice) {
    if (slice.empty()) return;
    float mn = slice[0], mx = slice[0];
    for (float v : slice) {
        mn = std::min(mn, v);
        mx = std::max(mx, v);
    }
    if (mx == mn) {
        std::fill(slice.begin(), slice.end(), 0.0f);
        return;
    }
    const double range = static_cast<double>(mx) - static_cast<double>(mn);
    for (float& v : slice) v = static_cast<float>((static_cast<double>(v) - mn) / range);
}

std::vector<float> minmax_normalize(std::span<const float> grid, int rows, int cols, int axis) {
    if (rows < 0 || cols < 0 || grid.size() != static_cast<size_t>(rows) * cols)
        throw std::invalid_argument("minmax_normalize: grid size does not match rows*cols");
    if (axis != 0 && axis != 1) throw std::invalid_argument("minmax_normalize: axis must be 0 or 1");
    std::vector<float> out(grid.begin(), grid.end());
    if (axis == 1) {
        for (int r = 0; r < rows; ++r)
            minmax_normalize_slice({out.data() + static_cast<size_t>(r) * cols,
                                    static_cast<size_t>(cols)});
    } else {
        std::vector<float> col(static_cast<size_t>(rows));
        for (int c = 0; c < cols; ++c) {
            for (int r = 0; r < rows; ++r) col[r] = out[static_cast<size_t>(r) * cols + c];
            minmax_normalize_slice(col);
            for (int r = 0; r < rows; ++r) out[static_cast<size_t>(r) * cols + c] = col[r];
        }
    }
    return out;
}

void minmax_normalize_per_class(ScoreMap& map) {
    for (int c = 0; c < map.classes; ++c) minmax_normalize_slice(map.plane(c));
    map.probabilistic = true;
}

void resize_bilinear_plane(std::span<const float> src, int src_h, int src_w,
                           std::span<float> dst, int dst_h, int dst_w) {
    if (src.size() != static_cast<size_t>(src_h) * src_w ||
        dst.size() != static_cast<size_t>(dst_h) * dst_w)
        throw std::invalid_argument("resize_bilinear_plane: buffer size mismatch");
    const double sy = dst_h > 1 ? static_cast<double>(src_h - 1) / (dst_h - 1) : 0.0;
    const double sx = dst_w > 1 ? static_cast<double>(src_w - 1) / (dst_w - 1) : 0.0;
    for (int y = 0; y < dst_h; ++y) {
        const double fy = y * sy;
        const int y0 = std::min(static_cast<int>(fy), src_h - 1);
        const int y1 = std::min(y0 + 1, src_h - 1);
        const double wy = fy - y0;
        for (int x = 0; x < dst_w; ++x) {
            const double fx = x * sx;
            const int x0 = std::min(static_cast<int>(fx), src_w - 1);
            const int x1 = std::min(x0 + 1, src_w - 1);
            const double wx = fx - x0;
            const double v00 = src[static_cast<size_t>(y0) * src_w + x0];
            const double v01 = src[static_cast<size_t>(y0) * src_w + x1];
            const double v10 = src[static_cast<size_t>(y1) * src_w + x0];
            const double v11 = src[static_cast<size_t>(y1) * src_w + x1];
            const double top = v00 + (v01 - v00) * wx;
            const double bot = v10 + (v11 - v10) * wx;
            dst[static_cast<size_t>(y) * dst_w + x] = static_cast<float>(top + (bot - top) * wy);
        }
    }
}

FeatureLayer resize_bilinear(const FeatureLayer& layer, int dst_h, int dst_w) {
    if (layer.height == dst_h && layer.width == dst_w) return layer;
    FeatureLayer out(layer.channels, dst_h, dst_w);
    for (int c = 0; c < layer.channels; ++c) {
        std::span<const float> src{layer.values.data() + static_cast<size_t>(c) * layer.plane_size(),
                                   layer.plane_size()};
        std::span<float> dst{out.values.data() + static_cast<size_t>(c) * out.plane_size(),
                             out.plane_size()};
        resize_bilinear_plane(src, layer.height, layer.width, dst, dst_h, dst_w);
    }
    return out;
}

RgbImage resize_bilinear(const RgbImage& image, int dst_h, int dst_w) {
    if (image.height == dst_h && image.width == dst_w) return image;
    RgbImage out(dst_h, dst_w);
    for (int c = 0; c < 3; ++c) {
        std::span<const float> src{image.values.data() + static_cast<size_t>(c) * image.plane_size(),
                                   image.plane_size()};
        std::span<float> dst{out.values.data() + static_cast<size_t>(c) * out.plane_size(),
                             out.plane_size()};
        resize_bilinear_plane(src, image.height, image.width, dst, dst_h, dst_w);
    }
    return out;
}

LabelMask resize_nearest(const LabelMask& mask, int dst_h, int dst_w) {
    if (mask.height == dst_h && mask.width == dst_w) return mask;
    LabelMask out(dst_h, dst_w);
    for (int y = 0; y < dst_h; ++y) {
        int sy = static_cast<int>((y + 0.5) * mask.height / dst_h);
        sy = std::clamp(sy, 0, mask.height - 1);
        for (int x = 0; x < dst_w; ++x) {
            int sx = static_cast<int>((x + 0.5) * mask.width / dst_w);
            sx = std::clamp(sx, 0, mask.width - 1);
            out.at(y, x) = mask.at(sy, sx);
        }
    }
    return out;
}

WindowMask positive_window(const ScoreMap& map) {
    WindowMask w(map.height, map.width, false);
    for (int c = 0; c < map.classes; ++c)
        for (int y = 0; y < map.height; ++y)
            for (int x = 0; x < map.width; ++x)
                if (map.at(c, y, x) > 0.0f) w.set(y, x, true);
    return w;
}

}  // namespace seedrefine
