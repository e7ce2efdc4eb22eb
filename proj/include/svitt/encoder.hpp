// Copyright 2026 the svitt authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "svitt/attention.hpp"
#include "svitt/grad.hpp"
#include "svitt/optim.hpp"
#include "svitt/pruning.hpp"
#include "svitt/tensor.hpp"
#include "svitt/topology.hpp"

namespace svitt::encoder {

struct SparsityConfig {
    bool enabled = false;
    std::size_t k_local = 1;
    std::size_t k_random = 3;
    std::size_t block = 56;
    topology::OrderScheme order = topology::OrderScheme::standard;
};

struct ModelConfig {
    std::size_t frames = 4;
    std::size_t frame_size = 32;  // square frames
    std::size_t channels = 3;
    std::size_t patch = 8;
    std::size_t dim = 64;
    std::size_t heads = 4;
    std::size_t visual_depth = 6;
    std::size_t text_depth = 4;
    std::size_t multimodal_depth = 2;  // last layers of the text stack
    std::size_t text_len = 16;
    std::size_t vocab = 256;
    std::size_t ffn_ratio = 4;
    SparsityConfig sparsity;
    pruning::PruneSchedule prune;
    std::size_t stage = 1;  // curriculum stage metadata

    std::size_t grid_h() const { return frame_size / patch; }
    std::size_t grid_w() const { return frame_size / patch; }
    std::size_t tokens_per_frame() const { return grid_h() * grid_w(); }
    std::size_t n_regional() const { return frames * tokens_per_frame(); }
    std::size_t head_dim() const { return dim / heads; }
    std::size_t ffn_dim() const { return dim * ffn_ratio; }
    std::size_t rel_table_size() const {
        return (2 * frames - 1) * (2 * grid_h() - 1) * (2 * grid_w() - 1);
    }

    void validate() const;
    std::string to_json() const;
    static ModelConfig from_json(const std::string& json_text);
};

// Alive rows of the visual token sequence; row 0 is always cls.
struct TokenSequence {
    grad::Var emb;                              // n_alive x d
    std::vector<attention::GridCoord> coords;   // per row; row 0 has no coord
    std::vector<std::size_t> orig_index;        // per regional row: row-major grid index
};

// ---- positional-embedding machinery ----

// 0-based source frame for each of T2 target frames under the nearest-
// neighbor rule floor(t * T1/T2 + 1/2) with 1-based t, clamped to [1, T1].
std::vector<std::size_t> temporal_nn_map(std::size_t t1, std::size_t t2);

// (H*W+1) x d table -> (T*H*W+1) x d by duplicating along time; row 0 = cls.
Tensor inflate_pos_embed(const Tensor& p, std::size_t t_frames, std::size_t hw);

// (T1*H*W+1) x d -> (T2*H*W+1) x d via temporal_nn_map; cls row copied.
Tensor interpolate_pos_embed(const Tensor& p, std::size_t t1, std::size_t t2, std::size_t hw);

// (2H-1)(2W-1) single-slice table -> (2T-1)(2H-1)(2W-1) by duplication.
Tensor inflate_rel_pos_bias(const Tensor& r, std::size_t t_frames);

// heads x (2T1-1)*S table -> heads x (2T2-1)*S via temporal_nn_map on slices.
Tensor interpolate_rel_pos_bias(const Tensor& r, std::size_t t1, std::size_t t2);

// ---- forward plumbing ----

// Per-pass structural state: the seed for random-edge sampling and, when
// pinned, keep decisions reused across repeated evaluations (finite
// differences, mask export).
struct ForwardPlan {
    std::uint64_t edge_seed = 0;
    bool pin_decisions = false;
    std::vector<std::vector<std::size_t>> pinned_visual;
    std::optional<std::vector<std::size_t>> pinned_multimodal;
};

struct VisualForward {
    grad::Var z;           // 1 x d, L2-normalized joint embedding
    TokenSequence tokens;  // final (post final layernorm)
    std::vector<pruning::KeepDecision> keeps;                // one per prune layer
    std::vector<std::vector<bool>> keep_masks;               // per prune layer, over the grid
};

struct TextForward {
    grad::Var z;       // 1 x d, L2-normalized joint embedding
    grad::Var hidden;  // n_text x d after the text-only layers (pre multimodal)
    std::size_t n_rows = 0;  // cls + token rows
};

struct MultimodalForward {
    grad::Var y;        // 1 x d multimodal cls output (post final layernorm)
    grad::Var hidden;   // n_text x d post final layernorm
    std::optional<pruning::KeepDecision> keep;  // cross-modal prune decision
};

class Model {
   public:
    Model(ModelConfig cfg, std::uint64_t seed);
    explicit Model(ModelConfig cfg);  // uninitialized parameters (for loading)

    const ModelConfig& config() const { return cfg_; }
    ModelConfig& config() { return cfg_; }
    grad::ParamStore& params() { return params_; }
    const grad::ParamStore& params() const { return params_; }

    // clip: flat T*H*W*C tensor, frame-major then row-major (t, y, x, c)
    VisualForward visual_forward(grad::Tape& tape, const Tensor& clip, ForwardPlan& plan) const;
    TextForward text_forward(grad::Tape& tape, const std::vector<std::size_t>& token_ids) const;
    MultimodalForward multimodal_forward(grad::Tape& tape, const TokenSequence& visual,
                                         grad::Var text_hidden, std::size_t n_text_rows,
                                         ForwardPlan& plan) const;

    // video-text matching probability (1 x 1, in (0,1))
    grad::Var vtm_head(grad::Tape& tape, grad::Var y) const;
    // vocabulary logits for the given rows of the multimodal hidden state
    grad::Var mlm_logits(grad::Tape& tape, grad::Var hidden, std::vector<std::size_t> rows) const;
    // contrastive temperature tau as a 1 x 1 var (clamped learnable scalar)
    grad::Var temperature(grad::Tape& tape) const;
    void clamp_temperature();

    // patch-flattening used by visual_forward (exposed for tests):
    // result is n_regional x (patch*patch*channels), row-major (t, h, w)
    Tensor tokenize_patches(const Tensor& clip) const;

   private:
    struct AttnOut {
        grad::Var out;
        std::vector<double> cls_scores;  // head-averaged Eq.10 scores over regional keys
    };
    AttnOut self_attention(grad::Tape& tape, grad::Var x, const std::string& prefix,
                           grad::KeyMaskPtr mask,
                           const std::vector<attention::GridCoord>* coords,
                           bool want_cls_scores) const;
    grad::Var ffn(grad::Tape& tape, grad::Var x, const std::string& prefix) const;

    ModelConfig cfg_;
    mutable grad::ParamStore params_;
};

}  // namespace svitt::encoder
