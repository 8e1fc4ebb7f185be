#include "seedrefine/edgepredict.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace seedrefine {

size_t EdgeMap::count() const {
    return static_cast<size_t>(std::count(edge.begin(), edge.end(), uint8_t{1}));
}

namespace {

constexpr double kGaussianSigma = 1.4;

std::vector<double> gaussian5x5() {
    std::vector<double> k(25);
    double sum = 0.0;
    for (int y = -2; y <= 2; ++y)
        for (int x = -2; x <= 2; ++x) {
            const double v = std::exp(-(x * x + y * y) / (2.0 * kGaussianSigma * kGaussianSigma));
            k[(y + 2) * 5 + (x + 2)] = v;
            sum += v;
        }
    for (double& v : k) v /= sum;
    return k;
}

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

}  // namespace

EdgeMap canny(const std::vector<float>& gray, int height, int width, float low, float high) {
    if (!(low < high)) throw std::invalid_argument("canny: low threshold must be < high");
    if (gray.size() != static_cast<size_t>(height) * width)
        throw std::invalid_argument("canny: grid size does not match shape");
    const int h = height, w = width;
    const size_t plane = static_cast<size_t>(h) * w;

    // Gaussian smoothing, replicate-padded.
    static const std::vector<double> kernel = gaussian5x5();
    std::vector<double> smooth(plane);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int dy = -2; dy <= 2; ++dy)
                for (int dx = -2; dx <= 2; ++dx) {
                    const int yy = clampi(y + dy, 0, h - 1);
                    const int xx = clampi(x + dx, 0, w - 1);
                    acc += kernel[(dy + 2) * 5 + (dx + 2)] * gray[static_cast<size_t>(yy) * w + xx];
                }
            smooth[static_cast<size_t>(y) * w + x] = acc;
        }

    // Sobel gradients.
    std::vector<double> mag(plane);
    std::vector<uint8_t> dir(plane);  // 0: E-W, 1: NE-SW, 2: N-S, 3: NW-SE
    auto s = [&](int y, int x) { return smooth[static_cast<size_t>(clampi(y, 0, h - 1)) * w +
                                               clampi(x, 0, w - 1)]; };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double gx = (s(y - 1, x + 1) + 2.0 * s(y, x + 1) + s(y + 1, x + 1)) -
                              (s(y - 1, x - 1) + 2.0 * s(y, x - 1) + s(y + 1, x - 1));
            const double gy = (s(y + 1, x - 1) + 2.0 * s(y + 1, x) + s(y + 1, x + 1)) -
                              (s(y - 1, x - 1) + 2.0 * s(y - 1, x) + s(y - 1, x + 1));
            mag[static_cast<size_t>(y) * w + x] = std::hypot(gx, gy);
            double angle = std::atan2(gy, gx) * 180.0 / M_PI;
            if (angle < 0.0) angle += 180.0;
            uint8_t d;
            if (angle < 22.5 || angle >= 157.5) d = 0;
            else if (angle < 67.5) d = 1;
            else if (angle < 112.5) d = 2;
            else d = 3;
            dir[static_cast<size_t>(y) * w + x] = d;
        }

    // Non-maximum suppression along the quantized gradient direction; the tie
    // goes to the earlier pixel (strict > against the first neighbor).
    auto m = [&](int y, int x) { return mag[static_cast<size_t>(clampi(y, 0, h - 1)) * w +
                                            clampi(x, 0, w - 1)]; };
    std::vector<double> thin(plane, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const size_t p = static_cast<size_t>(y) * w + x;
            double n1, n2;
            switch (dir[p]) {
                case 0: n1 = m(y, x - 1); n2 = m(y, x + 1); break;
                case 1: n1 = m(y + 1, x - 1); n2 = m(y - 1, x + 1); break;
                case 2: n1 = m(y - 1, x); n2 = m(y + 1, x); break;
                default: n1 = m(y - 1, x - 1); n2 = m(y + 1, x + 1); break;
            }
            if (mag[p] > n1 && mag[p] >= n2) thin[p] = mag[p];
        }

    // Hysteresis: BFS from strong pixels through weak ones, 8-connected.
    EdgeMap out(h, w);
    std::vector<uint8_t> weak(plane, 0);
    std::vector<size_t> stack;
    for (size_t p = 0; p < plane; ++p) {
        if (thin[p] > high) {
            out.edge[p] = 1;
            stack.push_back(p);
        } else if (thin[p] > low) {
            weak[p] = 1;
        }
    }
    while (!stack.empty()) {
        const size_t p = stack.back();
        stack.pop_back();
        const int y = static_cast<int>(p / w), x = static_cast<int>(p % w);
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                if (dy == 0 && dx == 0) continue;
                const int yy = y + dy, xx = x + dx;
                if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                const size_t q = static_cast<size_t>(yy) * w + xx;
                if (weak[q] && !out.edge[q]) {
                    out.edge[q] = 1;
                    stack.push_back(q);
                }
            }
    }
    return out;
}

SuperpixelLabels connected_components(const EdgeMap& edges, int connectivity) {
    if (connectivity != 4 && connectivity != 8)
        throw std::invalid_argument("connected_components: connectivity must be 4 or 8");
    const int h = edges.height, w = edges.width;
    SuperpixelLabels out;
    out.height = h;
    out.width = w;
    out.id.assign(static_cast<size_t>(h) * w, -1);

    static const int off4[4][2] = {{-1, 0}, {0, -1}, {0, 1}, {1, 0}};
    static const int off8[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1},
                                   {0, 1},   {1, -1}, {1, 0},  {1, 1}};
    const auto* off = connectivity == 4 ? off4 : off8;
    const int n_off = connectivity;

    std::vector<size_t> stack;
    int next_id = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const size_t p = static_cast<size_t>(y) * w + x;
            if (edges.edge[p] || out.id[p] != -1) continue;
            out.id[p] = next_id;
            stack.push_back(p);
            while (!stack.empty()) {
                const size_t q = stack.back();
                stack.pop_back();
                const int qy = static_cast<int>(q / w), qx = static_cast<int>(q % w);
                for (int o = 0; o < n_off; ++o) {
                    const int yy = qy + off[o][0], xx = qx + off[o][1];
                    if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                    const size_t r = static_cast<size_t>(yy) * w + xx;
                    if (!edges.edge[r] && out.id[r] == -1) {
                        out.id[r] = next_id;
                        stack.push_back(r);
                    }
                }
            }
            ++next_id;
        }
    out.count = next_id;
    return out;
}

ScoreMap ep_refine(const ScoreMap& dec, const PipelineConfig& cfg) {
    if (!dec.probabilistic)
        throw std::invalid_argument("ep_refine: input map must be probabilistic");
    if (dec.classes < 2)
        throw std::invalid_argument("ep_refine: expected background plus foreground channels");
    const int h = dec.height, w = dec.width;
    const size_t plane = dec.plane_size();

    // Confidence grid in [0,255] and per-pixel certainty from the absolute
    // probabilities: argmax class above delta_fg, background below delta_bg.
    std::vector<float> conf(plane);
    std::vector<int32_t> certain_label(plane, -1);
    for (size_t p = 0; p < plane; ++p) {
        float best = dec.values[p];
        int best_c = 0;
        for (int c = 1; c < dec.classes; ++c) {
            const float v = dec.values[static_cast<size_t>(c) * plane + p];
            if (v > best) {
                best = v;
                best_c = c;
            }
        }
        conf[p] = best * 255.0f;
        if (best > cfg.delta_fg) certain_label[p] = best_c;
        else if (best < cfg.delta_bg) certain_label[p] = 0;
    }

    const EdgeMap edges = canny(conf, h, w, cfg.canny_low, cfg.canny_high);
    const SuperpixelLabels sp = connected_components(edges, cfg.ccl_connectivity);

    // Majority certain class per superpixel, ties to the smaller class index.
    std::vector<std::vector<int64_t>> votes(sp.count, std::vector<int64_t>(dec.classes, 0));
    for (size_t p = 0; p < plane; ++p)
        if (sp.id[p] >= 0 && certain_label[p] >= 0) ++votes[sp.id[p]][certain_label[p]];

    std::vector<int32_t> winner(sp.count, -1);
    for (int s = 0; s < sp.count; ++s) {
        int64_t best = 0;
        for (int c = 0; c < dec.classes; ++c)
            if (votes[s][c] > best) {
                best = votes[s][c];
                winner[s] = c;
            }
    }

    ScoreMap out = dec;
    for (size_t p = 0; p < plane; ++p) {
        if (certain_label[p] >= 0) continue;           // certain pixels are untouched
        if (sp.id[p] < 0) continue;                     // edge pixels take no part
        const int32_t c_win = winner[sp.id[p]];
        if (c_win < 0) continue;                        // no certain pixel to vote with
        for (int c = 0; c < dec.classes; ++c)
            out.values[static_cast<size_t>(c) * plane + p] = (c == c_win) ? 1.0f : 0.0f;
    }
    out.probabilistic = true;
    return out;
}

}  // namespace seedrefine
