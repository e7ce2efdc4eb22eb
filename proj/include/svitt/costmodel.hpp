// Copyright 2026 the svitt authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace svitt::costmodel {

// Stack dimensions for the analytic accounting. Defaults are the full-scale
// dims (BEiT-B visual encoder, BERT-B text encoder, 224x224 @ patch 16).
struct Dims {
    std::size_t visual_depth = 12;      // L_v
    std::size_t multimodal_depth = 3;   // L_m
    std::size_t frames = 4;             // T
    std::size_t grid_h = 14;
    std::size_t grid_w = 14;
    std::size_t text_len = 32;          // N_t (text rows incl. cls)
    std::size_t text_depth = 12;        // text-only + multimodal layers
    std::size_t dim = 768;
    std::size_t heads = 12;
    std::size_t ffn_ratio = 4;
    std::size_t patch_in = 768;         // patch-projection input features

    std::size_t n_regional() const { return frames * grid_h * grid_w; }
    std::size_t n_visual() const { return n_regional() + 1; }  // N_v incl. cls
};

struct SparseSpec {
    bool edges = false;       // block-sparse visual attention
    std::size_t k_local = 1;
    std::size_t k_random = 3;
    std::size_t block = 56;
    bool nodes = false;       // token pruning
    std::vector<std::size_t> prune_layers = {4, 7, 10};  // 1-based
    double visual_keep = 1.0;      // q_v at each prune layer
    double multimodal_keep = 1.0;  // q_m after multimodal layer 1
};

struct CostReport {
    std::vector<std::uint64_t> visual_layer_edges;      // one per visual layer
    std::vector<std::uint64_t> multimodal_layer_edges;  // cross-attn, per layer
    std::vector<std::size_t> visual_tokens;             // N_v^(l), incl. cls
    std::uint64_t total_edges = 0;
    std::uint64_t dense_edges = 0;
    double sparsity = 0.0;   // 1 - total/dense
    double gflops = 0.0;
    std::uint64_t activation_bytes = 0;  // per sample

    std::string to_json() const;
    std::string to_table() const;
};

// Per-layer visual token counts under the prune schedule (incl. cls).
std::vector<std::size_t> visual_token_counts(const Dims& dims, const SparseSpec& sparse);

// Edge counts via the per-layer formulas: dense N^2, block-sparse
// N·(K_l+K_r)·G, cross-attention N_m·N_t. `exact` instead enumerates the
// realized block topology (boundary clipping, last-block padding).
CostReport edge_profile(const Dims& dims, const SparseSpec& sparse, bool exact = false);

// GFLOPs for one clip+caption forward pass. Convention: projections, FFN and
// patch embedding at 1 MAC = 2 FLOPs; attention score and apply at 1 FLOP per
// multiply per edge (d each); softmax at 5 FLOPs per edge.
double flops_estimate(const Dims& dims, const SparseSpec& sparse);

// Activations retained for backward, f32, per sample, times batch.
std::uint64_t memory_estimate(const Dims& dims, const SparseSpec& sparse, std::size_t batch);

// Full report (edges + FLOPs + memory for batch 1).
CostReport cost_report(const Dims& dims, const SparseSpec& sparse);

}  // namespace svitt::costmodel
