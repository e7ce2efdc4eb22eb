// Copyright 2026 the svitt authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "svitt/encoder.hpp"

namespace svitt::curriculum {

// One stage of the temporal sparse-expansion schedule.
struct Stage {
    std::size_t frames = 4;
    std::size_t k_local = 1;
    std::size_t k_random = 3;
    std::size_t block = 56;
    double visual_keep = 1.0;      // q_v
    double multimodal_keep = 1.0;  // q_m
    std::vector<std::size_t> prune_layers;
    std::size_t steps = 0;
    double lr = 1e-4;
};

struct Schedule {
    std::vector<Stage> stages;
};

Schedule parse_schedule(const std::string& json_text);

// One record per violated monotonicity constraint between consecutive stages.
// `rule` is a stable machine-readable identifier:
//   frames-nonincreasing      (frame count must strictly grow)
//   keep-rate-increasing      (q_v must not grow)
//   connectivity-increasing   ((K_l + K_r) / T must not grow)
struct Violation {
    std::string rule;
    std::size_t from_stage = 0;  // 0-based index of the earlier stage
    std::size_t to_stage = 0;
    std::string detail;
};

std::vector<Violation> validate_schedule(const Schedule& sched);

// New model for the next stage: positional tables expanded along time by
// nearest-neighbor interpolation, everything else copied bit-exactly.
encoder::Model expand_model(const encoder::Model& src, const Stage& next, std::size_t stage_index);

// Fraction of dense attention edges removed at a stage, computed from exact
// integer edge counts for the given model dimensions.
double stage_sparsity(const encoder::ModelConfig& cfg);

}  // namespace svitt::curriculum
