// Copyright 2026 the svitt authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "svitt/rng.hpp"
#include "svitt/tensor.hpp"

namespace svitt::data {

// Token-id conventions shared by the corpus and the text encoder.
inline constexpr std::size_t kPadId = 0;
inline constexpr std::size_t kMaskId = 1;

std::vector<std::string> vocabulary();  // id -> word (0 = <pad>, 1 = <mask>)
std::vector<std::size_t> tokenize(const std::string& caption);

// Label space of the sprite clips: 4 colors x 3 shapes, with 20 motion
// classes (8 directions x 2 speeds, still, or a color transition to one of
// the 3 other colors) -> 240 distinct combinations. Transition clips stay
// in place and switch from `color` to `color2` halfway through the clip,
// so their caption ("the red square turns blue") is decidable only from
// the temporal order of the frames — a single frame, or any unordered set
// of frames, is compatible with both transition directions.
struct ClipLabels {
    std::size_t color = 0;      // red green blue yellow
    std::size_t shape = 0;      // square circle triangle
    std::size_t direction = 0;  // 0..7 counterclockwise from "right"; unused when still
    std::size_t speed = 0;      // 0 slow, 1 fast
    std::size_t color2 = 0;     // transition target color; unused otherwise
    bool still = false;
    bool transition = false;
};
inline constexpr std::size_t kDistinctLabelCombos = 4 * 3 * (8 * 2 + 1 + 3);

std::string caption_for(const ClipLabels& labels);

struct ClipMeta {
    std::string dir;  // relative to the corpus root
    std::string caption;
    std::vector<std::size_t> tokens;
    ClipLabels labels;
};

struct Manifest {
    std::size_t frames = 0;
    std::size_t size = 0;  // square frame side
    std::vector<ClipMeta> clips;
};

// Writes <out_dir>/clip_NNNN/frame_NN.png plus <out_dir>/manifest.json.
// distinct=true draws each clip's labels without repetition (n must then be
// <= kDistinctLabelCombos). Byte-identical output for a fixed seed.
Manifest generate_corpus(const std::string& out_dir, std::size_t n_clips, std::size_t frames,
                         std::uint64_t seed, bool distinct = false);

Manifest load_manifest(const std::string& dir);

// One frame index uniformly from each of T contiguous chunks of [0, F);
// strictly increasing. F < T throws std::invalid_argument.
std::vector<std::size_t> sample_frames(std::size_t f_frames, std::size_t t_target, Rng& rng);

// Flat T x H x W x C tensor with values in [-0.5, 0.5].
Tensor load_clip(const std::string& root, const ClipMeta& meta,
                 const std::vector<std::size_t>& frame_indices);

// Rasterize one frame directly (used by generate_corpus and tests).
// Transition clips show `color` before `transition_frame` and `color2` from
// it onward; generate_corpus passes frames/2.
std::vector<std::uint8_t> render_frame(const ClipLabels& labels, std::size_t frame_index,
                                       std::size_t size, std::size_t start_x, std::size_t start_y,
                                       std::size_t transition_frame = 4);

// Toroidal spatial shift of every frame of a {T,H,W,C} clip. Exact
// (lossless) because the renderer wraps sprites around the frame edges, and
// label-preserving because captions never mention position.
Tensor translate_clip(const Tensor& clip, std::size_t dx, std::size_t dy);

// Caption tokens after reversing the clip's frame order: direction words
// map to their opposites and the two color words of a transition caption
// swap places; all other tokens are unchanged.
std::vector<std::size_t> reversed_caption_tokens(const std::vector<std::size_t>& tokens);

}  // namespace svitt::data
