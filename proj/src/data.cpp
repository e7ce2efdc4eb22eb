// Copyright 2026 the svitt authors
// SPDX-License-Identifier: Apache-2.0
#include "svitt/data.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "svitt/png.hpp"

namespace svitt::data {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kColors[] = {"red", "green", "blue", "yellow"};
const char* kShapes[] = {"square", "circle", "triangle"};
// counterclockwise from "right" (screen coordinates: y grows downward)
const char* kDirections[] = {"right", "upright", "up",   "upleft",
                             "left",  "downleft", "down", "downright"};
const int kDx[] = {1, 1, 0, -1, -1, -1, 0, 1};
const int kDy[] = {0, -1, -1, -1, 0, 1, 1, 1};
const std::uint8_t kRgb[][3] = {{220, 40, 40}, {40, 200, 60}, {50, 90, 230}, {230, 220, 50}};

constexpr std::size_t kSprite = 8;
// Both speeds step in multiples of 4, so on a 32-pixel torus an 8-frame clip
// visits the same set of positions at either speed (4*8 = 32 = one wrap,
// 12*8 = 96 = three wraps over the same residues). The speed word in the
// caption is therefore recoverable only from the frame-to-frame displacement,
// never from the unordered set of frames — this is what gives the
// shuffled-frame temporal probe a testable signal.
constexpr int kSlow = 4, kFast = 12;

}  // namespace

std::vector<std::string> vocabulary() {
    std::vector<std::string> v = {"<pad>", "<mask>", "the",     "moves", "stays",
                                  "still", "slowly", "quickly", "turns"};
    for (auto c : kColors) v.push_back(c);
    for (auto s : kShapes) v.push_back(s);
    for (auto d : kDirections) v.push_back(d);
    return v;
}

std::vector<std::size_t> tokenize(const std::string& caption) {
    static const std::map<std::string, std::size_t> index = [] {
        std::map<std::string, std::size_t> m;
        const auto v = vocabulary();
        for (std::size_t i = 0; i < v.size(); ++i) m[v[i]] = i;
        return m;
    }();
    std::vector<std::size_t> out;
    std::istringstream is(caption);
    std::string word;
    while (is >> word) {
        auto it = index.find(word);
        if (it == index.end()) throw std::invalid_argument("tokenize: unknown word: " + word);
        out.push_back(it->second);
    }
    return out;
}

std::string caption_for(const ClipLabels& l) {
    std::ostringstream os;
    os << "the " << kColors[l.color] << " " << kShapes[l.shape];
    if (l.transition)
        os << " turns " << kColors[l.color2];
    else if (l.still)
        os << " stays still";
    else
        os << " moves " << kDirections[l.direction] << " "
           << (l.speed == 0 ? "slowly" : "quickly");
    return os.str();
}

std::vector<std::uint8_t> render_frame(const ClipLabels& l, std::size_t frame_index,
                                       std::size_t size, std::size_t start_x,
                                       std::size_t start_y, std::size_t transition_frame) {
    std::vector<std::uint8_t> rgb(size * size * 3, 0);
    const std::size_t color =
        (l.transition && frame_index >= transition_frame) ? l.color2 : l.color;
    const int speed = (l.still || l.transition) ? 0 : (l.speed == 0 ? kSlow : kFast);
    const long long step = static_cast<long long>(frame_index) * speed;
    const long long n = static_cast<long long>(size);
    const long long ox = ((static_cast<long long>(start_x) + kDx[l.direction] * step) % n + n) % n;
    const long long oy = ((static_cast<long long>(start_y) + kDy[l.direction] * step) % n + n) % n;
    const double c = (kSprite - 1) / 2.0;
    for (std::size_t py = 0; py < kSprite; ++py)
        for (std::size_t px = 0; px < kSprite; ++px) {
            bool on = true;
            if (l.shape == 1) {  // circle
                const double dx = px - c, dy = py - c;
                on = dx * dx + dy * dy <= c * c + 0.5;
            } else if (l.shape == 2) {  // triangle, apex up
                const std::size_t half = py / 2;
                on = px >= (kSprite / 2 - 1 - half) && px <= (kSprite / 2 + half);
            }
            if (!on) continue;
            const std::size_t x = static_cast<std::size_t>((ox + px) % n);
            const std::size_t y = static_cast<std::size_t>((oy + py) % n);
            for (int ch = 0; ch < 3; ++ch) rgb[(y * size + x) * 3 + ch] = kRgb[color][ch];
        }
    return rgb;
}

namespace {

ClipLabels labels_from_combo(std::size_t combo) {
    ClipLabels l;
    l.color = combo % 4;
    combo /= 4;
    l.shape = combo % 3;
    combo /= 3;
    const std::size_t motion = combo;  // 0..19; 16 = still, 17..19 = transition
    if (motion == 16) {
        l.still = true;
    } else if (motion >= 17) {
        l.transition = true;
        l.color2 = (l.color + 1 + (motion - 17)) % 4;
    } else {
        l.direction = motion % 8;
        l.speed = motion / 8;
    }
    return l;
}

}  // namespace

Manifest generate_corpus(const std::string& out_dir, std::size_t n_clips, std::size_t frames,
                         std::uint64_t seed, bool distinct) {
    if (n_clips == 0) throw std::invalid_argument("corpus: n_clips must be >= 1");
    if (frames == 0) throw std::invalid_argument("corpus: frames must be >= 1");
    if (distinct && n_clips > kDistinctLabelCombos)
        throw std::invalid_argument("corpus: not enough distinct label combinations");
    const std::size_t size = 32;
    fs::create_directories(out_dir);

    Rng rng(seed);
    std::vector<std::size_t> combos;
    if (distinct) {
        std::vector<std::size_t> all(kDistinctLabelCombos);
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        combos = rng.sample_without_replacement(all.size(), n_clips);
    }

    Manifest man;
    man.frames = frames;
    man.size = size;
    json jclips = json::array();
    for (std::size_t i = 0; i < n_clips; ++i) {
        ClipMeta meta;
        meta.labels =
            labels_from_combo(distinct ? combos[i] : rng.below(kDistinctLabelCombos));
        meta.caption = caption_for(meta.labels);
        meta.tokens = tokenize(meta.caption);
        char buf[32];
        std::snprintf(buf, sizeof(buf), "clip_%04zu", i);
        meta.dir = buf;
        const std::size_t sx = rng.below(size), sy = rng.below(size);
        fs::create_directories(fs::path(out_dir) / meta.dir);
        for (std::size_t f = 0; f < frames; ++f) {
            png::Image img;
            img.width = img.height = size;
            img.rgb = render_frame(meta.labels, f, size, sx, sy, frames / 2);
            std::snprintf(buf, sizeof(buf), "frame_%02zu.png", f);
            png::write_rgb((fs::path(out_dir) / meta.dir / buf).string(), img);
        }
        jclips.push_back({{"dir", meta.dir},
                          {"caption", meta.caption},
                          {"tokens", meta.tokens},
                          {"color", meta.labels.color},
                          {"shape", meta.labels.shape},
                          {"direction", meta.labels.direction},
                          {"speed", meta.labels.speed},
                          {"color2", meta.labels.color2},
                          {"still", meta.labels.still},
                          {"transition", meta.labels.transition}});
        man.clips.push_back(std::move(meta));
    }
    json root = {{"frames", frames}, {"size", size}, {"clips", jclips}};
    std::ofstream os(fs::path(out_dir) / "manifest.json");
    os << root.dump(1) << "\n";
    if (!os) throw std::runtime_error("corpus: manifest write failed");
    return man;
}

Manifest load_manifest(const std::string& dir) {
    std::ifstream is(fs::path(dir) / "manifest.json");
    if (!is) throw std::runtime_error("corpus: missing manifest in " + dir);
    json root = json::parse(is);
    Manifest man;
    man.frames = root.at("frames").get<std::size_t>();
    man.size = root.at("size").get<std::size_t>();
    for (const auto& c : root.at("clips")) {
        ClipMeta meta;
        meta.dir = c.at("dir").get<std::string>();
        meta.caption = c.at("caption").get<std::string>();
        meta.tokens = c.at("tokens").get<std::vector<std::size_t>>();
        meta.labels.color = c.at("color").get<std::size_t>();
        meta.labels.shape = c.at("shape").get<std::size_t>();
        meta.labels.direction = c.at("direction").get<std::size_t>();
        meta.labels.speed = c.at("speed").get<std::size_t>();
        meta.labels.color2 = c.at("color2").get<std::size_t>();
        meta.labels.still = c.at("still").get<bool>();
        meta.labels.transition = c.at("transition").get<bool>();
        man.clips.push_back(std::move(meta));
    }
    return man;
}

std::vector<std::size_t> sample_frames(std::size_t f_frames, std::size_t t_target, Rng& rng) {
    if (f_frames < t_target) throw std::invalid_argument("sample_frames: F < T");
    std::vector<std::size_t> out(t_target);
    for (std::size_t i = 0; i < t_target; ++i) {
        const std::size_t lo = i * f_frames / t_target;
        const std::size_t hi = (i + 1) * f_frames / t_target;
        out[i] = lo + rng.below(hi - lo);
    }
    return out;
}

Tensor load_clip(const std::string& root, const ClipMeta& meta,
                 const std::vector<std::size_t>& frame_indices) {
    std::vector<double> values;
    std::size_t size = 0;
    for (std::size_t fi : frame_indices) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "frame_%02zu.png", fi);
        const auto img = png::read_rgb((fs::path(root) / meta.dir / buf).string());
        size = img.width;
        for (auto b : img.rgb) values.push_back(b / 255.0 - 0.5);
    }
    Tensor clip({frame_indices.size(), size, size, 3});
    clip.data = std::move(values);
    return clip;
}

Tensor translate_clip(const Tensor& clip, std::size_t dx, std::size_t dy) {
    if (clip.rank() != 4) throw std::invalid_argument("translate_clip: expected a {T,H,W,C} clip");
    const std::size_t t_n = clip.shape[0], h = clip.shape[1], w = clip.shape[2],
                      c_n = clip.shape[3];
    Tensor out(clip.shape);
    for (std::size_t t = 0; t < t_n; ++t)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) {
                const std::size_t src = ((t * h + y) * w + x) * c_n;
                const std::size_t dst = ((t * h + (y + dy) % h) * w + (x + dx) % w) * c_n;
                for (std::size_t c = 0; c < c_n; ++c) out.data[dst + c] = clip.data[src + c];
            }
    return out;
}

std::vector<std::size_t> reversed_caption_tokens(const std::vector<std::size_t>& tokens) {
    // direction words occupy the last 8 vocabulary slots, counterclockwise
    // from "right", so the opposite direction is 4 slots away (mod 8)
    static const std::size_t dir_base = vocabulary().size() - 8;
    static const std::size_t turns_id = tokenize("turns")[0];
    static const std::size_t color_base = tokenize(kColors[0])[0];
    auto out = tokens;
    if (std::find(out.begin(), out.end(), turns_id) != out.end()) {
        // transition caption: played backwards, the clip turns from the
        // second color to the first, so the two color words swap places
        std::vector<std::size_t> color_pos;
        for (std::size_t i = 0; i < out.size(); ++i)
            if (out[i] >= color_base && out[i] < color_base + 4) color_pos.push_back(i);
        if (color_pos.size() == 2) std::swap(out[color_pos[0]], out[color_pos[1]]);
        return out;
    }
    for (auto& t : out)
        if (t >= dir_base && t < dir_base + 8) t = dir_base + ((t - dir_base + 4) % 8);
    return out;
}

}  // namespace svitt::data
