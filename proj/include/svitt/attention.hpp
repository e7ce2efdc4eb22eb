// Copyright 2026 the svitt authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <vector>

#include "svitt/tensor.hpp"
#include "svitt/topology.hpp"

namespace svitt::attention {

// Grid coordinate of a token; cls carries no coordinate.
struct GridCoord {
    int t = -1, h = -1, w = -1;
    bool is_cls() const { return t < 0; }
};

// Learned relative position bias. One flat table per head with shape
// (2T-1) x (2H-1) x (2W-1); the lookup offset is (t'-t, h'-h, w'-w).
// Pairs involving the class token contribute zero bias.
struct RelPosBias {
    std::size_t t_dim = 1, h_dim = 1, w_dim = 1;
    std::vector<Tensor> tables;  // one per head, numel (2T-1)(2H-1)(2W-1)

    std::size_t table_size() const { return (2 * t_dim - 1) * (2 * h_dim - 1) * (2 * w_dim - 1); }
    // flat table index for a (query, key) pair, or -1 when cls is involved
    long long index(const GridCoord& q, const GridCoord& k) const;
    double lookup(std::size_t head, const GridCoord& q, const GridCoord& k) const;
};

struct AttentionInputs {
    Tensor q;  // n_q x d
    Tensor k;  // n_k x d
    Tensor v;  // n_k x d
    std::size_t n_heads = 1;
    double scale = 1.0;  // 1 / sqrt(d_h)
    // grid coords, required only when bias is used
    std::vector<GridCoord> q_coords;
    std::vector<GridCoord> k_coords;
};

// Multi-head scaled-dot-product attention over all keys; output n_q x d.
Tensor dense_attention(const AttentionInputs& in, const RelPosBias* bias = nullptr);

// Attention restricted to the token-level edges of `edges` (sequence index 0
// is cls). Softmax normalizes only over permitted keys.
Tensor sparse_attention(const AttentionInputs& in, const topology::EdgeSet& edges,
                        const RelPosBias* bias = nullptr);

// As sparse_attention but with an explicit per-query allowed-key list.
Tensor masked_attention(const AttentionInputs& in,
                        const std::vector<std::vector<std::size_t>>& allowed,
                        const RelPosBias* bias = nullptr);

// Head-averaged softmax attention of the cls query (row 0 of q) over the N
// regional keys (rows 1..N of k). The cls-to-cls logit is excluded from the
// normalization. Result has length N and sums to 1.
std::vector<double> extract_cls_attention(const AttentionInputs& in);

// Same score rule for an arbitrary single query row over all key rows.
std::vector<double> softmax_scores(const Tensor& query_row, const Tensor& keys,
                                   std::size_t n_heads, double scale);

}  // namespace svitt::attention
