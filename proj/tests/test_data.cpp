// Copyright 2026 the svitt authors
// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "svitt/data.hpp"
#include "svitt/png.hpp"

using namespace svitt;
using namespace svitt::data;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is.good());
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

struct TempDir {
    fs::path path;
    explicit TempDir(const char* name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("png round-trips arbitrary rgb images") {
    TempDir tmp("svitt_png_test");
    fs::create_directories(tmp.path);
    png::Image img;
    img.width = 13;
    img.height = 7;
    img.rgb.resize(13 * 7 * 3);
    for (std::size_t i = 0; i < img.rgb.size(); ++i)
        img.rgb[i] = static_cast<std::uint8_t>((i * 37 + 11) & 0xff);
    const auto p = (tmp.path / "t.png").string();
    png::write_rgb(p, img);
    auto back = png::read_rgb(p);
    CHECK(back.width == 13);
    CHECK(back.height == 7);
    CHECK(back.rgb == img.rgb);
    CHECK_THROWS(png::read_rgb((tmp.path / "missing.png").string()));
}

TEST_CASE("vocabulary is small and captions tokenize reversibly") {
    const auto vocab = vocabulary();
    CHECK(vocab.size() <= 256);
    CHECK(vocab[kPadId] == "<pad>");
    CHECK(vocab[kMaskId] == "<mask>");
    ClipLabels l;
    l.color = 2;
    l.shape = 1;
    l.direction = 4;
    l.speed = 1;
    CHECK(caption_for(l) == "the blue circle moves left quickly");
    auto ids = tokenize(caption_for(l));
    std::string round;
    for (auto id : ids) round += (round.empty() ? "" : " ") + vocab[id];
    CHECK(round == caption_for(l));
    CHECK_THROWS_AS(tokenize("the purple dodecahedron"), std::invalid_argument);
}

TEST_CASE("still clips have motion-free captions") {
    ClipLabels l;
    l.still = true;
    const auto cap = caption_for(l);
    CHECK(cap == "the red square stays still");
    for (const char* motion : {"moves", "left", "right", "up", "down", "slowly", "quickly"})
        CHECK(cap.find(motion) == std::string::npos);
}

TEST_CASE("toroidal clip translation is exact and invertible") {
    Tensor clip({2, 4, 4, 3});
    for (std::size_t i = 0; i < clip.data.size(); ++i) clip.data[i] = static_cast<double>(i);
    const Tensor shifted = translate_clip(clip, 3, 1);
    // multiset of values is preserved and the inverse shift restores the clip
    std::multiset<double> a(clip.data.begin(), clip.data.end());
    std::multiset<double> b(shifted.data.begin(), shifted.data.end());
    CHECK(a == b);
    CHECK(translate_clip(shifted, 1, 3).data == clip.data);
    CHECK(translate_clip(clip, 0, 0).data == clip.data);
    // pixel (y=0, x=0) lands at (y=1, x=3)
    for (std::size_t c = 0; c < 3; ++c)
        CHECK(shifted.data[((0 * 4 + 1) * 4 + 3) * 3 + c] == clip.data[c]);
    CHECK_THROWS_AS(translate_clip(Tensor({4, 4}), 1, 1), std::invalid_argument);
}

TEST_CASE("reversed captions flip the direction word and nothing else") {
    ClipLabels l;
    l.color = 2;
    l.shape = 1;
    l.direction = 4;  // left
    l.speed = 1;
    const auto ids = tokenize(caption_for(l));
    const auto rev = reversed_direction_tokens(ids);
    ClipLabels opp = l;
    opp.direction = 0;  // right
    CHECK(rev == tokenize(caption_for(opp)));
    CHECK(reversed_direction_tokens(rev) == ids);
    ClipLabels still;
    still.still = true;
    const auto still_ids = tokenize(caption_for(still));
    CHECK(reversed_direction_tokens(still_ids) == still_ids);
}

TEST_CASE("rendering: stills repeat, movers translate with wraparound") {
    ClipLabels still;
    still.still = true;
    CHECK(render_frame(still, 0, 32, 5, 5) == render_frame(still, 9, 32, 5, 5));

    ClipLabels mover;
    mover.direction = 0;  // right
    mover.speed = 1;      // fast
    const auto f0 = render_frame(mover, 0, 32, 5, 5);
    const auto f1 = render_frame(mover, 1, 32, 5, 5);
    CHECK(f0 != f1);
    // frame 1 equals frame 0 shifted right by 12 pixels
    bool shifted = true;
    for (std::size_t y = 0; y < 32 && shifted; ++y)
        for (std::size_t x = 0; x < 32 && shifted; ++x)
            for (int c = 0; c < 3; ++c)
                if (f1[(y * 32 + (x + 12) % 32) * 3 + c] != f0[(y * 32 + x) * 3 + c])
                    shifted = false;
    CHECK(shifted);
    // on the 32-pixel torus both speeds visit the same positions over 8
    // frames (4*8 and 12*8 are both multiples of 32): the unordered frame
    // set cannot reveal the speed word, only the frame order can
    ClipLabels slow = mover;
    slow.speed = 0;
    std::set<std::vector<std::uint8_t>> slow_set, fast_set;
    for (std::size_t t = 0; t < 8; ++t) {
        slow_set.insert(render_frame(slow, t, 32, 5, 5));
        fast_set.insert(render_frame(mover, t, 32, 5, 5));
    }
    CHECK(slow_set == fast_set);
    CHECK(slow_set.size() == 8);
    // wrapping keeps the sprite mass constant
    std::size_t lit0 = 0, lit20 = 0;
    const auto f20 = render_frame(mover, 20, 32, 30, 30);
    for (std::size_t i = 0; i < f0.size(); i += 3) {
        lit0 += f0[i] != 0;
        lit20 += f20[i] != 0;
    }
    CHECK(lit0 == 64);
    CHECK(lit20 == 64);
}

TEST_CASE("corpus generation is byte-deterministic per seed") {
    TempDir a("svitt_corpus_a"), b("svitt_corpus_b"), c("svitt_corpus_c");
    auto ma = generate_corpus(a.path.string(), 6, 4, 123);
    generate_corpus(b.path.string(), 6, 4, 123);
    generate_corpus(c.path.string(), 6, 4, 124);
    CHECK(ma.clips.size() == 6);
    CHECK(slurp(a.path / "manifest.json") == slurp(b.path / "manifest.json"));
    CHECK(slurp(a.path / "clip_0003" / "frame_02.png") ==
          slurp(b.path / "clip_0003" / "frame_02.png"));
    CHECK(slurp(a.path / "manifest.json") != slurp(c.path / "manifest.json"));
    // count check: n clips, T frames each, plus the manifest
    std::size_t files = 0;
    for (auto& e : fs::recursive_directory_iterator(a.path))
        files += e.is_regular_file();
    CHECK(files == 6 * 4 + 1);
}

TEST_CASE("manifest round-trips through load_manifest") {
    TempDir tmp("svitt_corpus_rt");
    auto gen = generate_corpus(tmp.path.string(), 5, 3, 9);
    auto man = load_manifest(tmp.path.string());
    REQUIRE(man.clips.size() == 5);
    CHECK(man.frames == 3);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(man.clips[i].caption == gen.clips[i].caption);
        CHECK(man.clips[i].tokens == gen.clips[i].tokens);
        CHECK(man.clips[i].labels.color == gen.clips[i].labels.color);
        CHECK(man.clips[i].labels.still == gen.clips[i].labels.still);
    }
    CHECK_THROWS(load_manifest("/nonexistent/dir"));
}

TEST_CASE("distinct corpora never repeat a label combination") {
    TempDir tmp("svitt_corpus_distinct");
    auto man = generate_corpus(tmp.path.string(), 140, 2, 4, true);
    std::set<std::string> captions;
    for (const auto& c : man.clips) captions.insert(c.caption);
    CHECK(captions.size() == 140);
    TempDir tmp2("svitt_corpus_too_many");
    CHECK_THROWS_AS(generate_corpus(tmp2.path.string(), kDistinctLabelCombos + 1, 2, 4, true),
                    std::invalid_argument);
}

TEST_CASE("frame sampling picks one index per contiguous chunk") {
    Rng rng(5);
    CHECK(sample_frames(4, 4, rng) == std::vector<std::size_t>{0, 1, 2, 3});
    for (int rep = 0; rep < 100; ++rep) {
        auto s = sample_frames(8, 4, rng);
        REQUIRE(s.size() == 4);
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(s[i] >= 2 * i);
            CHECK(s[i] < 2 * (i + 1));
        }
    }
    CHECK_THROWS_AS(sample_frames(3, 4, rng), std::invalid_argument);
    // reproducible under a fixed seed
    Rng r1(9), r2(9);
    CHECK(sample_frames(17, 5, r1) == sample_frames(17, 5, r2));
}

TEST_CASE("clips load as T x H x W x C tensors in [-0.5, 0.5]") {
    TempDir tmp("svitt_corpus_load");
    auto man = generate_corpus(tmp.path.string(), 2, 4, 8);
    auto clip = load_clip(tmp.path.string(), man.clips[0], {0, 2});
    CHECK(clip.shape == std::vector<std::size_t>{2, 32, 32, 3});
    double lo = 1, hi = -1;
    for (auto v : clip.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(lo >= -0.5);
    CHECK(hi <= 0.5);
    CHECK(hi > 0.0);  // the sprite is brighter than the background
}
