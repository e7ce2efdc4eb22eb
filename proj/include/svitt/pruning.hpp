// Copyright 2026 the svitt authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace svitt::pruning {

// Result of one top-k keep step over N regional tokens. Indices are into the
// pre-prune regional sequence (cls excluded) and strictly increasing.
struct KeepDecision {
    std::vector<std::size_t> kept_indices;
    double keep_rate = 1.0;
    std::vector<double> scores;
};

// Layers (1-based) at which pruning applies, with one keep rate per layer.
struct PruneSchedule {
    std::vector<std::size_t> visual_layers;
    std::vector<double> visual_keep_rates;
    double multimodal_keep_rate = 1.0;  // applied once, after multimodal layer 1

    bool has_visual() const { return !visual_layers.empty(); }
    void validate(std::size_t visual_depth) const;
    // keep rate at a given visual layer, or 1 when the layer does not prune
    double rate_at(std::size_t layer) const;
};

// ceil(q * n) kept tokens
std::size_t keep_count(double q, std::size_t n);

// Top-⌈qN⌉ regional tokens by score; ties broken by lowest index; original
// order preserved. Scores length defines N.
KeepDecision select_top(const std::vector<double>& scores, double q);

// CSV rows "layer,frame,row,col,kept" over a T x H x W token grid. `kept` is
// a keep flag per surviving original grid index.
std::string keep_mask_csv_rows(std::size_t layer, std::size_t t_dim, std::size_t h_dim,
                               std::size_t w_dim, const std::vector<bool>& kept);

}  // namespace svitt::pruning
