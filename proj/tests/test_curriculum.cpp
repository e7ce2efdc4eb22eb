// Copyright 2026 the svitt authors
// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "svitt/curriculum.hpp"

using namespace svitt;
using namespace svitt::curriculum;

namespace {

// the published three-stage expansion: T doubles, q_v shrinks, the
// per-frame connectivity (K_l+K_r)/T shrinks
Schedule reference_schedule() {
    Schedule s;
    Stage a;
    a.frames = 4;
    a.k_local = 1;
    a.k_random = 3;
    a.block = 56;
    a.visual_keep = 0.7;
    a.multimodal_keep = 0.1;
    Stage b = a;
    b.frames = 8;
    b.visual_keep = 0.6;
    Stage c = a;
    c.frames = 16;
    c.visual_keep = 0.5;
    s.stages = {a, b, c};
    return s;
}

}  // namespace

TEST_CASE("schedule json parsing") {
    const char* text = R"([
      {"frames": 4, "k_local": 1, "k_random": 3, "block": 56,
       "visual_keep": 0.7, "multimodal_keep": 0.1, "steps": 100, "lr": 1e-4},
      {"frames": 8, "visual_keep": 0.6}
    ])";
    auto s = parse_schedule(text);
    REQUIRE(s.stages.size() == 2);
    CHECK(s.stages[0].steps == 100);
    CHECK(s.stages[1].frames == 8);
    CHECK(s.stages[1].k_random == 3);  // default
    CHECK_THROWS_AS(parse_schedule("nope"), std::invalid_argument);
    CHECK_THROWS_AS(parse_schedule("[]"), std::invalid_argument);
    CHECK_THROWS_AS(parse_schedule(R"([{"visual_keep": 1.5}])"), std::invalid_argument);
}

TEST_CASE("the reference expansion schedule is accepted") {
    CHECK(validate_schedule(reference_schedule()).empty());
}

TEST_CASE("each monotonicity violation is reported under its identifier") {
    auto s = reference_schedule();
    s.stages[1].frames = 4;  // not strictly growing
    auto v = validate_schedule(s);
    REQUIRE(v.size() >= 1);
    CHECK(v[0].rule == "frames-nonincreasing");
    CHECK(v[0].from_stage == 0);
    CHECK(v[0].to_stage == 1);

    s = reference_schedule();
    s.stages[2].visual_keep = 0.9;  // q_v grows
    v = validate_schedule(s);
    REQUIRE(v.size() == 1);
    CHECK(v[0].rule == "keep-rate-increasing");
    CHECK(v[0].from_stage == 1);

    s = reference_schedule();
    s.stages[1].k_random = 9;  // (K_l+K_r)/T grows from 1 to 10/8
    v = validate_schedule(s);
    REQUIRE(v.size() == 1);
    CHECK(v[0].rule == "connectivity-increasing");

    // equality on the connectivity ratio is allowed (non-strict)
    s = reference_schedule();
    s.stages[1].k_random = 7;  // 8/8 == 4/4
    CHECK(validate_schedule(s).empty());
}

TEST_CASE("stage sparsity reproduces the integer edge accounting") {
    encoder::ModelConfig cfg;
    cfg.frames = 4;
    cfg.visual_depth = 12;
    cfg.text_depth = 12;
    cfg.multimodal_depth = 3;
    cfg.frame_size = 112;
    cfg.patch = 8;  // 14x14 grid, 784 regional tokens
    cfg.dim = 768;
    cfg.heads = 12;
    cfg.text_len = 31;  // 32 rows with cls
    cfg.sparsity.enabled = true;
    cfg.sparsity.k_local = 1;
    cfg.sparsity.k_random = 3;
    cfg.sparsity.block = 56;
    cfg.prune.visual_layers = {4, 7, 10};
    cfg.prune.visual_keep_rates = {0.7, 0.7, 0.7};
    cfg.prune.multimodal_keep_rate = 0.1;
    CHECK(stage_sparsity(cfg) == doctest::Approx(1.0 - 1464224.0 / 7470060.0).epsilon(1e-9));
}

TEST_CASE("expansion interpolates positions and copies everything else") {
    encoder::ModelConfig cfg;
    cfg.frames = 2;
    cfg.frame_size = 16;
    cfg.patch = 8;
    cfg.dim = 16;
    cfg.heads = 2;
    cfg.visual_depth = 2;
    cfg.text_depth = 2;
    cfg.multimodal_depth = 1;
    cfg.text_len = 8;
    encoder::Model src(cfg, 55);

    Stage next;
    next.frames = 4;
    next.k_local = 1;
    next.k_random = 1;
    next.block = 4;
    next.visual_keep = 0.5;
    next.multimodal_keep = 0.5;
    next.prune_layers = {1};
    auto dst = expand_model(src, next, 2);

    CHECK(dst.config().frames == 4);
    CHECK(dst.config().stage == 2);
    CHECK(dst.config().sparsity.enabled);
    CHECK(dst.params().all().size() == src.params().all().size());

    // non-positional parameters are bit-exact copies
    const auto& w_src = src.params().get("visual.L0.q.w").value;
    const auto& w_dst = dst.params().get("visual.L0.q.w").value;
    for (std::size_t i = 0; i < w_src.numel(); ++i) CHECK(w_src[i] == w_dst[i]);

    // visual.pos rows follow the frame map (0,0,1,1) over hw=4
    const auto& pos_src = src.params().get("visual.pos").value;
    const auto& pos_dst = dst.params().get("visual.pos").value;
    REQUIRE(pos_dst.rows() == 4 * 4 + 1);
    const std::size_t map[] = {0, 0, 1, 1};
    for (std::size_t j = 0; j < 16; ++j) CHECK(pos_dst.at(0, j) == pos_src.at(0, j));
    for (std::size_t t = 0; t < 4; ++t)
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 16; ++j)
                CHECK(pos_dst.at(1 + t * 4 + i, j) == pos_src.at(1 + map[t] * 4 + i, j));

    // relpos tables widen from 2T-1 = 3 to 7 temporal slices
    const auto& r_src = src.params().get("visual.L0.relpos").value;
    const auto& r_dst = dst.params().get("visual.L0.relpos").value;
    CHECK(r_dst.cols() == r_src.cols() / 3 * 7);

    // the expanded model runs at the new length
    grad::Tape tape;
    encoder::ForwardPlan plan;
    Tensor clip({4, 16, 16, 3});
    auto fwd = dst.visual_forward(tape, clip, plan);
    CHECK(tape.val(fwd.z).cols() == 16);

    Stage shrink;
    shrink.frames = 1;
    CHECK_THROWS_AS(expand_model(src, shrink, 2), std::invalid_argument);
}
