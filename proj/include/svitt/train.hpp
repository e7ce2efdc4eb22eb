// Copyright 2026 the svitt authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "svitt/data.hpp"
#include "svitt/encoder.hpp"

namespace svitt::train {

struct StageRunConfig {
    std::size_t steps = 200;
    std::size_t batch = 8;
    double lr = 3e-4;
    std::size_t warmup = 20;
    double mask_prob = 0.15;
};

struct StepMetrics {
    std::size_t step = 0;
    double total = 0, vtc = 0, vtm = 0, mlm = 0, lr = 0;
};

struct StageResult {
    std::vector<StepMetrics> metrics;
    bool ok = true;
    std::string error;
};

// Header + one row per step, doubles at full round-trip precision.
std::string metrics_csv(const std::vector<StepMetrics>& metrics);

// Optimizes the model in place over the corpus at data_dir. Writes the metric
// CSV and a checkpoint; on a non-finite loss the checkpoint holds the
// last-good parameters and ok is false.
StageResult train_stage(encoder::Model& model, const std::string& data_dir,
                        const StageRunConfig& cfg, std::uint64_t seed,
                        const std::string& csv_path, const std::string& ckpt_path);

struct RetrievalResult {
    double r1 = 0, r5 = 0, r10 = 0, mean = 0;  // percentages
    std::vector<std::vector<std::size_t>> ranking;  // per caption, best first
};

// Text-to-video retrieval by joint-space cosine over every clip in data_dir.
RetrievalResult evaluate_retrieval(encoder::Model& model, const std::string& data_dir,
                                   std::uint64_t seed, bool shuffle_frames = false);

struct ProbeResult {
    RetrievalResult normal;
    RetrievalResult shuffled;
    double delta = 0;  // mean recall, normal - shuffled
};

// Frame-order sensitivity probe; throws std::invalid_argument when T == 1.
ProbeResult temporal_probe(encoder::Model& model, const std::string& data_dir,
                           std::uint64_t seed);

// CSV keep-masks ("layer,frame,row,col,kept") for every prune site on one
// clip; throws std::invalid_argument when pruning is disabled.
std::string export_masks(encoder::Model& model, const Tensor& clip, std::uint64_t seed);

}  // namespace svitt::train
