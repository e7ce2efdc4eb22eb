// Copyright 2026 the svitt authors
// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "svitt/pruning.hpp"
#include "svitt/rng.hpp"

using namespace svitt::pruning;

TEST_CASE("keep count is ceil(qN)") {
    CHECK(keep_count(0.7, 784) == 549);
    CHECK(keep_count(0.1, 270) == 27);
    CHECK(keep_count(1.0, 5) == 5);
    CHECK(keep_count(0.5, 1) == 1);
    CHECK(keep_count(0.5, 0) == 0);
    CHECK_THROWS_AS(keep_count(0.0, 4), std::invalid_argument);
    CHECK_THROWS_AS(keep_count(1.5, 4), std::invalid_argument);
}

TEST_CASE("select_top keeps the highest scores in original order") {
    auto d = select_top({0.1, 0.5, 0.3, 0.4}, 0.5);
    CHECK(d.kept_indices == std::vector<std::size_t>{1, 3});
    CHECK(d.keep_rate == 0.5);
    CHECK(d.scores.size() == 4);
}

TEST_CASE("score ties break toward the lowest index") {
    auto d = select_top({0.2, 0.2, 0.2, 0.2}, 0.5);
    CHECK(d.kept_indices == std::vector<std::size_t>{0, 1});
    d = select_top({0.1, 0.3, 0.3, 0.1}, 0.25);
    CHECK(d.kept_indices == std::vector<std::size_t>{1});
}

TEST_CASE("kept indices are always sorted and sized ceil(qN)") {
    svitt::Rng rng(5);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 1 + rng.below(300);
        const double q = 0.05 + 0.95 * rng.uniform();
        std::vector<double> scores(n);
        for (auto& s : scores) s = rng.gaussian();
        auto d = select_top(scores, q);
        CHECK(d.kept_indices.size() == keep_count(q, n));
        for (std::size_t i = 0; i + 1 < d.kept_indices.size(); ++i)
            CHECK(d.kept_indices[i] < d.kept_indices[i + 1]);
        // every kept score >= every dropped score
        double min_kept = 1e300;
        for (auto k : d.kept_indices) min_kept = std::min(min_kept, scores[k]);
        std::vector<bool> kept(n, false);
        for (auto k : d.kept_indices) kept[k] = true;
        for (std::size_t i = 0; i < n; ++i)
            if (!kept[i]) CHECK(scores[i] <= min_kept);
    }
}

TEST_CASE("prune schedule validation") {
    PruneSchedule s;
    s.visual_layers = {4, 7, 10};
    s.visual_keep_rates = {0.7, 0.7, 0.7};
    s.multimodal_keep_rate = 0.1;
    CHECK_NOTHROW(s.validate(12));
    CHECK_THROWS_AS(s.validate(9), std::invalid_argument);  // layer 10 out of range

    PruneSchedule bad = s;
    bad.visual_layers = {4, 4, 10};
    CHECK_THROWS_AS(bad.validate(12), std::invalid_argument);
    bad = s;
    bad.visual_keep_rates = {0.7, 0.0, 0.7};
    CHECK_THROWS_AS(bad.validate(12), std::invalid_argument);
    bad = s;
    bad.visual_keep_rates = {0.7, 0.7};
    CHECK_THROWS_AS(bad.validate(12), std::invalid_argument);
    bad = s;
    bad.multimodal_keep_rate = 1.2;
    CHECK_THROWS_AS(bad.validate(12), std::invalid_argument);
}

TEST_CASE("rate_at returns 1 for non-pruning layers") {
    PruneSchedule s;
    s.visual_layers = {2, 4};
    s.visual_keep_rates = {0.5, 0.25};
    CHECK(s.rate_at(2) == 0.5);
    CHECK(s.rate_at(4) == 0.25);
    CHECK(s.rate_at(1) == 1.0);
    CHECK(s.rate_at(3) == 1.0);
}

TEST_CASE("keep-mask CSV rows enumerate the grid in t,h,w order") {
    const std::vector<bool> kept = {true, false, false, true};
    CHECK(keep_mask_csv_rows(3, 1, 2, 2, kept) ==
          "3,0,0,0,1\n3,0,0,1,0\n3,0,1,0,0\n3,0,1,1,1\n");
    CHECK_THROWS_AS(keep_mask_csv_rows(1, 2, 2, 2, kept), std::invalid_argument);
}
