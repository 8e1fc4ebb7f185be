#include <doctest.h>

#include <algorithm>
#include <random>

#include "seedrefine/eval.hpp"
#include "test_util.hpp"

using namespace seedrefine;

namespace {

LabelMask random_mask(std::mt19937& rng, int h, int w, int classes, bool allow_ignore) {
    LabelMask mask(h, w);
    std::uniform_int_distribution<int> dist(allow_ignore ? -1 : 0, classes);
    for (auto& v : mask.labels) v = dist(rng);
    return mask;
}

ConfusionTally random_tally(std::mt19937& rng, int classes) {
    ConfusionTally tally(classes);
    std::uniform_int_distribution<int> dist(0, 40);
    for (int c = 0; c <= classes; ++c) {
        tally.tp[c] = dist(rng);
        tally.fp[c] = dist(rng);
        tally.fn[c] = dist(rng);
    }
    return tally;
}

}  // namespace

TEST_CASE("accumulate: a perfect prediction has zero FP and FN") {
    std::mt19937 rng(71);
    const LabelMask truth = random_mask(rng, 6, 6, 3, false);
    ConfusionTally tally(3);
    accumulate(truth, truth, tally);
    for (int c = 0; c <= 3; ++c) {
        CHECK(tally.fp[c] == 0);
        CHECK(tally.fn[c] == 0);
    }
    CHECK(miou(tally) == doctest::Approx(1.0));
}

TEST_CASE("accumulate skips fully ignored truth") {
    std::mt19937 rng(72);
    const LabelMask pred = random_mask(rng, 4, 4, 3, false);
    const LabelMask truth(4, 4, kIgnoreLabel);
    ConfusionTally tally(3);
    accumulate(pred, truth, tally);
    for (int c = 0; c <= 3; ++c) {
        CHECK(tally.tp[c] == 0);
        CHECK(tally.fp[c] == 0);
        CHECK(tally.fn[c] == 0);
    }
}

TEST_CASE("accumulate matches a per-pixel counting oracle") {
    std::mt19937 rng(73);
    for (int trial = 0; trial < 20; ++trial) {
        const LabelMask pred = random_mask(rng, 4, 4, 3, false);
        const LabelMask truth = random_mask(rng, 4, 4, 3, true);
        ConfusionTally tally(3);
        accumulate(pred, truth, tally);
        ConfusionTally expected(3);
        for (size_t p = 0; p < truth.labels.size(); ++p) {
            const int32_t t = truth.labels[p];
            if (t == kIgnoreLabel) continue;
            const int32_t g = pred.labels[p];
            if (g == t) ++expected.tp[t];
            else {
                ++expected.fp[g];
                ++expected.fn[t];
            }
        }
        CHECK(tally.tp == expected.tp);
        CHECK(tally.fp == expected.fp);
        CHECK(tally.fn == expected.fn);
    }
}

TEST_CASE("miou of a fully disjoint prediction is zero") {
    // Every class-1 truth pixel is predicted class 2 and vice versa.
    LabelMask truth(2, 2, 1);
    truth.at(1, 0) = 2;
    truth.at(1, 1) = 2;
    LabelMask pred(2, 2, 2);
    pred.at(1, 0) = 1;
    pred.at(1, 1) = 1;
    ConfusionTally tally(2);
    accumulate(pred, truth, tally);
    CHECK(miou(tally) == doctest::Approx(0.0));
}

TEST_CASE("miou averages the included class IoUs") {
    ConfusionTally tally(2);
    tally.tp[1] = 1;
    tally.fp[1] = 1;  // IoU 0.5
    tally.tp[2] = 5;  // IoU 1.0
    CHECK(miou(tally) == doctest::Approx(0.75));
}

TEST_CASE("miou + fp_rate + fn_rate is one on random tallies") {
    std::mt19937 rng(74);
    for (int trial = 0; trial < 50; ++trial) {
        const ConfusionTally tally = random_tally(rng, 4);
        const auto [fp_rate, fn_rate] = fp_fn_rates(tally);
        CHECK(std::abs(miou(tally) + fp_rate + fn_rate - 1.0) <= 1e-9);
        CHECK(miou(tally) >= 0.0);
        CHECK(miou(tally) <= 1.0);
    }
}

TEST_CASE("fp_fn_rates of a perfect prediction are zero") {
    ConfusionTally tally(2);
    tally.tp[0] = 10;
    tally.tp[1] = 3;
    const auto [fp_rate, fn_rate] = fp_fn_rates(tally);
    CHECK(fp_rate == 0.0);
    CHECK(fn_rate == 0.0);
}

TEST_CASE("fp_fn_rates match the direct-formula oracle") {
    std::mt19937 rng(75);
    for (int trial = 0; trial < 20; ++trial) {
        const ConfusionTally tally = random_tally(rng, 3);
        const auto [fp_rate, fn_rate] = fp_fn_rates(tally);
        double fp_sum = 0.0, fn_sum = 0.0;
        int n = 0;
        for (int c = 0; c <= 3; ++c) {
            const int64_t denom = tally.tp[c] + tally.fp[c] + tally.fn[c];
            if (denom == 0) continue;
            fp_sum += static_cast<double>(tally.fp[c]) / denom;
            fn_sum += static_cast<double>(tally.fn[c]) / denom;
            ++n;
        }
        CHECK(fp_rate == doctest::Approx(n ? fp_sum / n : 0.0).epsilon(1e-12));
        CHECK(fn_rate == doctest::Approx(n ? fn_sum / n : 0.0).epsilon(1e-12));
    }
}

TEST_CASE("miou is invariant under class id permutation") {
    ConfusionTally tally(3);
    tally.tp = {4, 7, 0, 9};
    tally.fp = {1, 0, 3, 2};
    tally.fn = {0, 2, 5, 1};
    ConfusionTally permuted(3);
    const int perm[4] = {2, 0, 3, 1};
    for (int c = 0; c <= 3; ++c) {
        permuted.tp[perm[c]] = tally.tp[c];
        permuted.fp[perm[c]] = tally.fp[c];
        permuted.fn[perm[c]] = tally.fn[c];
    }
    CHECK(miou(tally) == doctest::Approx(miou(permuted)).epsilon(1e-12));
}

TEST_CASE("accumulate is order-independent and tallies merge") {
    std::mt19937 rng(76);
    std::vector<std::pair<LabelMask, LabelMask>> pairs;
    for (int i = 0; i < 8; ++i)
        pairs.emplace_back(random_mask(rng, 5, 5, 3, false), random_mask(rng, 5, 5, 3, true));

    ConfusionTally forward(3), backward(3);
    for (const auto& [pred, truth] : pairs) accumulate(pred, truth, forward);
    for (auto it = pairs.rbegin(); it != pairs.rend(); ++it)
        accumulate(it->first, it->second, backward);
    CHECK(forward.tp == backward.tp);
    CHECK(forward.fp == backward.fp);
    CHECK(forward.fn == backward.fn);

    ConfusionTally left(3), right(3);
    for (size_t i = 0; i < pairs.size(); ++i)
        accumulate(pairs[i].first, pairs[i].second, i < 4 ? left : right);
    left.merge(right);
    CHECK(left.tp == forward.tp);
    CHECK(left.fp == forward.fp);
    CHECK(left.fn == forward.fn);
}

TEST_CASE("prediction ignore pixels count as background") {
    LabelMask pred(1, 2, kIgnoreLabel);
    LabelMask truth(1, 2, 0);
    truth.at(0, 1) = 1;
    ConfusionTally tally(1);
    accumulate(pred, truth, tally);
    CHECK(tally.tp[0] == 1);  // -1 -> background matches truth 0
    CHECK(tally.fn[1] == 1);
    CHECK(tally.fp[0] == 1);
}

TEST_CASE("mask helpers commit scores to labels") {
    ScoreMap map(2, 1, 3, true);
    map.at(0, 0, 0) = 0.6f;         // class 1
    map.at(1, 0, 1) = 0.05f;        // below threshold -> background
    map.at(0, 0, 2) = 0.3f;
    map.at(1, 0, 2) = 0.3f;         // tie -> smaller class index
    const LabelMask mask = argmax_mask(map, 0.1f);
    CHECK(mask.at(0, 0) == 1);
    CHECK(mask.at(0, 1) == 0);
    CHECK(mask.at(0, 2) == 1);

    ScoreMap dec(3, 1, 2, true);
    dec.at(2, 0, 0) = 0.9f;
    dec.at(0, 0, 1) = 0.9f;
    const LabelMask dmask = decoder_mask(dec);
    CHECK(dmask.at(0, 0) == 2);
    CHECK(dmask.at(0, 1) == 0);

    LabelMask with_ignore(1, 2, kIgnoreLabel);
    with_ignore.at(0, 1) = 2;
    const LabelMask resolved = resolve_ignore(with_ignore);
    CHECK(resolved.at(0, 0) == 0);
    CHECK(resolved.at(0, 1) == 2);
}
