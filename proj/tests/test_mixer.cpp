#include <doctest.h>

#include <random>
#include <set>
#include <stdexcept>

#include "seedrefine/mixer.hpp"
#include "test_util.hpp"

using namespace seedrefine;
using testutil::random_image;
using testutil::random_map;

namespace {

MixItem random_item(std::mt19937& rng, int classes, int h, int w) {
    MixItem item;
    item.image = random_image(rng, h, w);
    item.ep = random_map(rng, classes + 1, h, w, true);
    item.rs = random_map(rng, classes, h, w, true);
    return item;
}

}  // namespace

TEST_CASE("foreground_union is empty for an all-background one-hot map") {
    PipelineConfig cfg;
    ScoreMap ep(3, 4, 4, true);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) ep.at(0, y, x) = 1.0f;
    for (uint8_t v : foreground_union(ep, cfg)) CHECK(v == 0);
}

TEST_CASE("foreground_union marks exactly a one-hot class region") {
    PipelineConfig cfg;
    ScoreMap ep(3, 4, 4, true);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) ep.at(0, y, x) = 1.0f;
    for (int y = 1; y < 3; ++y)
        for (int x = 1; x < 3; ++x) {
            ep.at(0, y, x) = 0.0f;
            ep.at(2, y, x) = 1.0f;
        }
    const auto fg = foreground_union(ep, cfg);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x)
            CHECK((fg[y * 4 + x] != 0) == (y >= 1 && y < 3 && x >= 1 && x < 3));
}

TEST_CASE("foreground_union matches the per-pixel oracle and is monotone in delta_fg") {
    PipelineConfig cfg;
    std::mt19937 rng(61);
    const ScoreMap ep = random_map(rng, 4, 6, 6, true);
    const auto fg = foreground_union(ep, cfg);
    const size_t plane = ep.plane_size();
    for (size_t p = 0; p < plane; ++p) {
        bool expected = false;
        for (int c = 1; c < 4; ++c)
            expected |= ep.values[static_cast<size_t>(c) * plane + p] > cfg.delta_fg;
        CHECK((fg[p] != 0) == expected);
    }
    PipelineConfig higher = cfg;
    higher.delta_fg = 0.8f;
    const auto fg_high = foreground_union(ep, higher);
    for (size_t p = 0; p < plane; ++p)
        if (fg_high[p]) CHECK(fg[p]);
}

TEST_CASE("paste with a full or empty mask returns one source verbatim") {
    std::mt19937 rng(62);
    const MixItem a = random_item(rng, 2, 5, 5);
    const MixItem b = random_item(rng, 2, 5, 5);

    const MixedSample all_src = paste(a, b, std::vector<uint8_t>(25, 1));
    CHECK(all_src.image.values == a.image.values);
    CHECK(all_src.seg_target.values == a.ep.values);
    CHECK(all_src.rs_target.values == a.rs.values);

    const MixedSample all_dst = paste(a, b, std::vector<uint8_t>(25, 0));
    CHECK(all_dst.image.values == b.image.values);
    CHECK(all_dst.seg_target.values == b.ep.values);
    CHECK(all_dst.rs_target.values == b.rs.values);
}

TEST_CASE("paste selects each pixel from exactly one input") {
    std::mt19937 rng(63);
    const MixItem a = random_item(rng, 3, 6, 6);
    const MixItem b = random_item(rng, 3, 6, 6);
    std::vector<uint8_t> fg(36);
    for (size_t p = 0; p < fg.size(); ++p) fg[p] = (p / 6 + p % 6) % 2;  // checkerboard
    const MixedSample mixed = paste(a, b, fg);
    const size_t plane = 36;
    for (size_t c = 0; c < 3; ++c)
        for (size_t p = 0; p < plane; ++p) {
            const float got = mixed.image.values[c * plane + p];
            const float want = fg[p] ? a.image.values[c * plane + p] : b.image.values[c * plane + p];
            CHECK(got == want);
        }
    for (size_t i = 0; i < mixed.rs_target.values.size(); ++i) {
        const size_t p = i % plane;
        CHECK(mixed.rs_target.values[i] ==
              (fg[p] ? a.rs.values[i] : b.rs.values[i]));
    }
}

TEST_CASE("paste rejects shape mismatches") {
    std::mt19937 rng(64);
    const MixItem a = random_item(rng, 2, 5, 5);
    const MixItem b = random_item(rng, 2, 4, 5);
    CHECK_THROWS_AS(paste(a, b, std::vector<uint8_t>(25, 1)), std::invalid_argument);
}

TEST_CASE("mix_partners: B=2 forces the swap and never self-pairs") {
    const auto partners = mix_partners(2, 99);
    CHECK(partners[0] == 1);
    CHECK(partners[1] == 0);
    for (int b = 2; b <= 8; ++b)
        for (uint64_t seed = 0; seed < 30; ++seed) {
            const auto p = mix_partners(b, seed);
            for (int i = 0; i < b; ++i) {
                CHECK(p[i] != i);
                CHECK(p[i] >= 0);
                CHECK(p[i] < b);
            }
        }
    CHECK_THROWS_AS(mix_partners(1, 0), std::invalid_argument);
}

TEST_CASE("mix_batch is deterministic per seed") {
    PipelineConfig cfg;
    std::mt19937 rng(65);
    std::vector<MixItem> batch;
    for (int i = 0; i < 4; ++i) batch.push_back(random_item(rng, 2, 5, 5));
    const auto a = mix_batch(batch, 1234, cfg);
    const auto b = mix_batch(batch, 1234, cfg);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].source == b[i].source);
        CHECK(a[i].destination == b[i].destination);
        CHECK(a[i].image.values == b[i].image.values);
        CHECK(a[i].seg_target.values == b[i].seg_target.values);
        CHECK(a[i].rs_target.values == b[i].rs_target.values);
    }
}

TEST_CASE("mix_batch conserves one-hot foreground classes") {
    PipelineConfig cfg;
    std::mt19937 rng(66);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<MixItem> batch;
        for (int i = 0; i < 4; ++i) batch.push_back(random_item(rng, 3, 6, 6));
        const auto mixed = mix_batch(batch, trial, cfg);
        for (const auto& sample : mixed) {
            const ScoreMap& seg = sample.seg_target;
            const size_t plane = seg.plane_size();
            auto one_hot_classes = [plane](const ScoreMap& m) {
                std::set<int> cls;
                for (int c = 1; c < m.classes; ++c)
                    for (size_t p = 0; p < plane; ++p)
                        if (m.values[static_cast<size_t>(c) * plane + p] == 1.0f) cls.insert(c);
                return cls;
            };
            const std::set<int> present = one_hot_classes(seg);
            std::set<int> allowed = one_hot_classes(batch[sample.source].ep);
            for (int c : one_hot_classes(batch[sample.destination].ep)) allowed.insert(c);
            for (int c : present) CHECK(allowed.count(c) == 1);
        }
    }
}

TEST_CASE("mix_batch requires at least two items") {
    PipelineConfig cfg;
    std::mt19937 rng(67);
    std::vector<MixItem> batch;
    batch.push_back(random_item(rng, 2, 4, 4));
    CHECK_THROWS_AS(mix_batch(batch, 0, cfg), std::invalid_argument);
}
