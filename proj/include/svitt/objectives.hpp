// Copyright 2026 the svitt authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "svitt/grad.hpp"
#include "svitt/rng.hpp"

namespace svitt::objectives {

// Symmetric contrastive loss over a batch of B paired embeddings.
// video_z and text_z are B x d rows (unit norm expected but not enforced);
// tau is a 1 x 1 positive temperature. Sum over the batch of both
// directions' InfoNCE terms; B == 1 gives exactly zero.
grad::Var vtc_loss(grad::Tape& tape, grad::Var video_z, grad::Var text_z, grad::Var tau);

// Binary cross-entropy for matching probabilities. pos/neg are 1 x 1
// probabilities in (0,1); values outside throw std::invalid_argument.
grad::Var vtm_pair_loss(grad::Tape& tape, grad::Var pos_prob, grad::Var neg_prob);

// Cross-entropy of the masked positions' vocabulary logits, summed.
grad::Var mlm_loss(grad::Tape& tape, grad::Var logits, std::vector<std::size_t> targets);

// Which text positions get masked and what they originally held.
struct MaskPlan {
    std::vector<std::size_t> positions;  // indices into the token sequence
    std::vector<std::size_t> originals;  // original token ids
};

// Replace ~mask_prob of the tokens with mask_id (at least one position when
// the sequence is non-empty). Mutates `tokens` in place.
MaskPlan apply_mlm_mask(std::vector<std::size_t>& tokens, std::size_t mask_id, double mask_prob,
                        Rng& rng);

// In-batch negative index for query i: uniform over the other B-1 rows.
std::size_t draw_negative(std::size_t i, std::size_t batch, Rng& rng);

}  // namespace svitt::objectives
