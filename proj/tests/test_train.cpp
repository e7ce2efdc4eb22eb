// Copyright 2026 the svitt authors
// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "svitt/checkpoint.hpp"
#include "svitt/data.hpp"
#include "svitt/train.hpp"

using namespace svitt;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is.good());
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

encoder::ModelConfig tiny_config() {
    encoder::ModelConfig cfg;
    cfg.frames = 2;
    cfg.frame_size = 32;  // matches the synthetic corpus
    cfg.patch = 8;        // 4x4 grid, 32 regional tokens
    cfg.dim = 16;
    cfg.heads = 2;
    cfg.visual_depth = 2;
    cfg.text_depth = 2;
    cfg.multimodal_depth = 1;
    cfg.text_len = 8;
    return cfg;
}

// one shared corpus for the whole suite (16 clips, 4 frames, 32x32)
const std::string& corpus_dir() {
    static std::string dir = [] {
        fs::path p = fs::temp_directory_path() / "svitt_train_corpus";
        fs::remove_all(p);
        data::generate_corpus(p.string(), 16, 4, 1234);
        return p.string();
    }();
    return dir;
}

fs::path scratch(const char* name) {
    fs::path p = fs::temp_directory_path() / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("metrics serialize to the fixed csv layout") {
    train::StepMetrics m;
    m.step = 3;
    m.total = 1.5;
    m.vtc = 0.5;
    m.vtm = 0.25;
    m.mlm = 0.75;
    m.lr = 0.0001;
    CHECK(train::metrics_csv({m}) ==
          "step,loss_total,loss_vtc,loss_vtm,loss_mlm,lr\n3,1.5,0.5,0.25,0.75,0.0001\n");
    CHECK(train::metrics_csv({}) == "step,loss_total,loss_vtc,loss_vtm,loss_mlm,lr\n");
}

TEST_CASE("a short run reduces the training loss") {
    auto out = scratch("svitt_train_short");
    encoder::Model model(tiny_config(), 7);
    train::StageRunConfig rc;
    rc.steps = 30;
    rc.batch = 4;
    rc.lr = 2e-3;
    rc.warmup = 5;
    auto res = train::train_stage(model, corpus_dir(), rc, 42, (out / "m.csv").string(),
                                  (out / "m.ckpt").string());
    REQUIRE(res.ok);
    REQUIRE(res.metrics.size() == 30);
    auto mean = [&](std::size_t lo, std::size_t hi) {
        double s = 0;
        for (std::size_t i = lo; i < hi; ++i) s += res.metrics[i].total;
        return s / static_cast<double>(hi - lo);
    };
    CHECK(mean(25, 30) < mean(0, 5));
    for (const auto& m : res.metrics) {
        CHECK(std::isfinite(m.total));
        CHECK(m.total == doctest::Approx(m.vtc + m.vtm + m.mlm).epsilon(1e-9));
        CHECK(m.vtc >= 0.0);
        CHECK(m.vtm >= 0.0);
        CHECK(m.mlm >= 0.0);
    }
    // artifacts exist and the csv matches the in-memory metrics
    CHECK(slurp(out / "m.csv") == train::metrics_csv(res.metrics));
    auto reloaded = checkpoint::load((out / "m.ckpt").string());
    CHECK(reloaded.config().dim == 16);
}

TEST_CASE("identical seeds give byte-identical metrics and checkpoints") {
    auto out = scratch("svitt_train_det");
    for (int run = 0; run < 2; ++run) {
        encoder::Model model(tiny_config(), 99);
        train::StageRunConfig rc;
        rc.steps = 6;
        rc.batch = 3;
        rc.lr = 1e-3;
        rc.warmup = 2;
        const auto tag = std::to_string(run);
        auto res = train::train_stage(model, corpus_dir(), rc, 777,
                                      (out / ("m" + tag + ".csv")).string(),
                                      (out / ("m" + tag + ".ckpt")).string());
        REQUIRE(res.ok);
    }
    CHECK(slurp(out / "m0.csv") == slurp(out / "m1.csv"));
    CHECK(slurp(out / "m0.ckpt") == slurp(out / "m1.ckpt"));
    CHECK(slurp(out / "m0.csv").substr(0, 5) == "step,");
}

TEST_CASE("zero learning rate leaves every parameter untouched") {
    auto out = scratch("svitt_train_lr0");
    encoder::Model model(tiny_config(), 13);
    std::map<std::string, std::vector<double>> before;
    for (const auto& [name, p] : model.params().all()) before[name] = p->value.data;
    train::StageRunConfig rc;
    rc.steps = 3;
    rc.batch = 2;
    rc.lr = 0.0;
    rc.warmup = 0;
    auto res = train::train_stage(model, corpus_dir(), rc, 5, (out / "m.csv").string(),
                                  (out / "m.ckpt").string());
    REQUIRE(res.ok);
    for (const auto& [name, p] : model.params().all()) {
        const auto& old = before.at(name);
        for (std::size_t i = 0; i < old.size(); ++i) CHECK(p->value[i] == old[i]);
    }
}

TEST_CASE("training rejects corpora the model cannot consume") {
    auto out = scratch("svitt_train_bad");
    auto cfg = tiny_config();
    cfg.frames = 8;  // corpus only has 4 frames per clip
    encoder::Model model(cfg, 1);
    train::StageRunConfig rc;
    CHECK_THROWS_AS(train::train_stage(model, corpus_dir(), rc, 1, (out / "a.csv").string(),
                                       (out / "a.ckpt").string()),
                    std::invalid_argument);
}

TEST_CASE("a poisoned parameter aborts the run with a saved checkpoint") {
    auto out = scratch("svitt_train_nan");
    encoder::Model model(tiny_config(), 3);
    model.params().get("visual.cls").value[0] = std::numeric_limits<double>::quiet_NaN();
    train::StageRunConfig rc;
    rc.steps = 4;
    rc.batch = 2;
    auto res = train::train_stage(model, corpus_dir(), rc, 11, (out / "m.csv").string(),
                                  (out / "m.ckpt").string());
    CHECK_FALSE(res.ok);
    CHECK(!res.error.empty());
    CHECK(res.metrics.empty());  // it failed before completing a step
    CHECK(fs::exists(out / "m.ckpt"));
    CHECK(fs::exists(out / "m.csv"));
}

TEST_CASE("retrieval recalls are monotone percentages") {
    encoder::Model model(tiny_config(), 21);
    auto res = train::evaluate_retrieval(model, corpus_dir(), 8);
    CHECK(res.r1 >= 0.0);
    CHECK(res.r1 <= res.r5);
    CHECK(res.r5 <= res.r10);
    CHECK(res.r10 <= 100.0);
    CHECK(res.mean == doctest::Approx((res.r1 + res.r5 + res.r10) / 3.0));
    REQUIRE(res.ranking.size() == 16);
    for (const auto& order : res.ranking) {
        REQUIRE(order.size() == 16);
        CHECK(std::set<std::size_t>(order.begin(), order.end()).size() == 16);
    }
    // same seed, same result
    auto res2 = train::evaluate_retrieval(model, corpus_dir(), 8);
    CHECK(res.r1 == res2.r1);
    CHECK(res.ranking == res2.ranking);
}

TEST_CASE("the temporal probe needs at least two frames") {
    auto cfg = tiny_config();
    cfg.frames = 1;
    encoder::Model model(cfg, 2);
    CHECK_THROWS_AS(train::temporal_probe(model, corpus_dir(), 4), std::invalid_argument);

    encoder::Model ok_model(tiny_config(), 2);
    auto probe = train::temporal_probe(ok_model, corpus_dir(), 4);
    CHECK(probe.delta == doctest::Approx(probe.normal.mean - probe.shuffled.mean));
}

TEST_CASE("mask export lists every prune site with the right keep counts") {
    auto cfg = tiny_config();
    cfg.prune.visual_layers = {1};
    cfg.prune.visual_keep_rates = {0.5};
    cfg.prune.multimodal_keep_rate = 0.5;
    encoder::Model model(cfg, 17);

    Rng rng(55);
    Tensor clip({2, 32, 32, 3});
    for (auto& v : clip.data) v = rng.uniform() - 0.5;

    const auto csv = train::export_masks(model, clip, 9);
    CHECK(csv.substr(0, 25) == "layer,frame,row,col,kept\n");
    std::map<int, int> kept, rows;
    std::map<int, std::set<std::string>> kept_cells;
    std::istringstream is(csv);
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
        int layer, frame, row, col, k;
        REQUIRE(std::sscanf(line.c_str(), "%d,%d,%d,%d,%d", &layer, &frame, &row, &col, &k) == 5);
        ++rows[layer];
        kept[layer] += k;
        if (k) kept_cells[layer].insert(std::to_string(frame) + "," + std::to_string(row) +
                                        "," + std::to_string(col));
    }
    // one record per grid cell at each site: the visual prune at layer 1 and
    // the cross-modal prune reported as layer visual_depth + 1
    REQUIRE(rows.size() == 2);
    CHECK(rows[1] == 32);
    CHECK(rows[3] == 32);
    CHECK(kept[1] == 16);  // ceil(0.5 * 32)
    CHECK(kept[3] == 8);   // ceil(0.5 * 16) of the surviving tokens
    // the cross-modal survivors are a subset of the visual survivors
    for (const auto& cell : kept_cells[3]) CHECK(kept_cells[1].count(cell) == 1);

    CHECK(train::export_masks(model, clip, 9) == csv);

    encoder::Model unpruned(tiny_config(), 17);
    CHECK_THROWS_AS(train::export_masks(unpruned, clip, 9), std::invalid_argument);
}
