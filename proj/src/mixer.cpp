#include "seedrefine/mixer.hpp"

#include <stdexcept>

#include "seedrefine/rng.hpp"

namespace seedrefine {

std::vector<uint8_t> foreground_union(const ScoreMap& ep, const PipelineConfig& cfg) {
    if (!ep.probabilistic)
        throw std::invalid_argument("foreground_union: input map must be probabilistic");
    const size_t plane = ep.plane_size();
    std::vector<uint8_t> fg(plane, 0);
    for (int c = 1; c < ep.classes; ++c) {
        const std::span<const float> values = ep.plane(c);
        for (size_t p = 0; p < plane; ++p)
            if (values[p] > cfg.delta_fg) fg[p] = 1;
    }
    return fg;
}

std::vector<float> masked_combine(std::span<const float> src, std::span<const float> dst,
                                  std::span<const uint8_t> fg, size_t plane_size) {
    if (src.size() != dst.size() || plane_size == 0 || src.size() % plane_size != 0 ||
        fg.size() != plane_size)
        throw std::invalid_argument("masked_combine: buffer sizes do not agree");
    std::vector<float> out(src.size());
    const size_t channels = src.size() / plane_size;
    for (size_t c = 0; c < channels; ++c) {
        const size_t base = c * plane_size;
        for (size_t p = 0; p < plane_size; ++p)
            out[base + p] = fg[p] ? src[base + p] : dst[base + p];
    }
    return out;
}

namespace {

void check_item(const MixItem& item, const char* which) {
    if (item.ep.height != item.image.height || item.ep.width != item.image.width ||
        item.rs.height != item.image.height || item.rs.width != item.image.width)
        throw std::invalid_argument(std::string("paste: ") + which +
                                    " item fields do not share one (height, width)");
}

}  // namespace

MixedSample paste(const MixItem& src, const MixItem& dst, const std::vector<uint8_t>& fg) {
    check_item(src, "source");
    check_item(dst, "destination");
    if (src.image.height != dst.image.height || src.image.width != dst.image.width ||
        src.ep.classes != dst.ep.classes || src.rs.classes != dst.rs.classes)
        throw std::invalid_argument("paste: source and destination shapes do not match");
    const size_t plane = src.image.plane_size();
    if (fg.size() != plane)
        throw std::invalid_argument("paste: foreground grid size does not match the items");

    MixedSample out;
    out.image.height = src.image.height;
    out.image.width = src.image.width;
    out.image.values = masked_combine(src.image.values, dst.image.values, fg, plane);

    out.seg_target = src.ep;
    out.seg_target.values = masked_combine(src.ep.values, dst.ep.values, fg, plane);
    out.seg_target.probabilistic = src.ep.probabilistic && dst.ep.probabilistic;

    out.rs_target = src.rs;
    out.rs_target.values = masked_combine(src.rs.values, dst.rs.values, fg, plane);
    out.rs_target.probabilistic = src.rs.probabilistic && dst.rs.probabilistic;
    return out;
}

std::vector<int> mix_partners(int batch_size, uint64_t seed) {
    if (batch_size < 2) throw std::invalid_argument("mix_partners: batch size must be >= 2");
    SplitMix64 rng(seed);
    std::vector<int> partners(batch_size);
    for (int i = 0; i < batch_size; ++i) {
        const int k = static_cast<int>(rng.next_below(static_cast<uint64_t>(batch_size - 1)));
        partners[i] = k >= i ? k + 1 : k;
    }
    return partners;
}

std::vector<MixedSample> mix_batch(const std::vector<MixItem>& batch, uint64_t seed,
                                   const PipelineConfig& cfg) {
    const int b = static_cast<int>(batch.size());
    if (b < 2) throw std::invalid_argument("mix_batch: batch size must be >= 2");
    const std::vector<int> partners = mix_partners(b, seed);
    std::vector<MixedSample> out;
    out.reserve(batch.size());
    for (int i = 0; i < b; ++i) {
        const std::vector<uint8_t> fg = foreground_union(batch[i].ep, cfg);
        MixedSample sample = paste(batch[i], batch[partners[i]], fg);
        sample.source = i;
        sample.destination = partners[i];
        out.push_back(std::move(sample));
    }
    return out;
}

}  // namespace seedrefine
