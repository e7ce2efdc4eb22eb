// Copyright 2026 the svitt authors
// SPDX-License-Identifier: Apache-2.0
#include "svitt/objectives.hpp"

#include <cmath>
#include <stdexcept>

namespace svitt::objectives {

using grad::Tape;
using grad::Var;

Var vtc_loss(Tape& tape, Var video_z, Var text_z, Var tau) {
    const std::size_t b = tape.val(video_z).rows();
    if (tape.val(text_z).rows() != b)
        throw std::invalid_argument("vtc: batch sizes differ");
    Var sims = tape.matmul(video_z, tape.transpose(text_z));
    Var inv_tau = tape.exp(tape.scale(tape.log(tau), -1.0));
    Var logits = tape.mul_scalar(sims, inv_tau);
    Var diag2 = tape.scale(tape.sum(tape.diag(logits)), 2.0);
    Var lse_v2t = tape.sum(tape.logsumexp_rows(logits));
    Var lse_t2v = tape.sum(tape.logsumexp_rows(tape.transpose(logits)));
    return tape.sub(tape.add(lse_v2t, lse_t2v), diag2);
}

Var vtm_pair_loss(Tape& tape, Var pos_prob, Var neg_prob) {
    for (Var p : {pos_prob, neg_prob}) {
        const double v = tape.val(p)[0];
        // non-finite values pass through as a non-finite loss so callers can
        // take their numeric-failure path instead of a usage error
        if (std::isfinite(v) && !(v > 0.0 && v < 1.0))
            throw std::invalid_argument("vtm: probability outside (0,1)");
    }
    // -log p_pos - log(1 - p_neg)
    Var one = tape.input(Tensor::scalar(1.0));
    Var lp = tape.log(pos_prob);
    Var ln = tape.log(tape.sub(one, neg_prob));
    return tape.scale(tape.add(lp, ln), -1.0);
}

Var mlm_loss(Tape& tape, Var logits, std::vector<std::size_t> targets) {
    if (tape.val(logits).rows() != targets.size())
        throw std::invalid_argument("mlm: target count != logit rows");
    return tape.softmax_cross_entropy_sum(logits, std::move(targets));
}

MaskPlan apply_mlm_mask(std::vector<std::size_t>& tokens, std::size_t mask_id, double mask_prob,
                        Rng& rng) {
    MaskPlan plan;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (rng.uniform() < mask_prob) {
            plan.positions.push_back(i);
            plan.originals.push_back(tokens[i]);
            tokens[i] = mask_id;
        }
    }
    if (plan.positions.empty() && !tokens.empty()) {
        const std::size_t i = rng.below(tokens.size());
        plan.positions.push_back(i);
        plan.originals.push_back(tokens[i]);
        tokens[i] = mask_id;
    }
    return plan;
}

std::size_t draw_negative(std::size_t i, std::size_t batch, Rng& rng) {
    if (batch < 2) throw std::invalid_argument("negative sampling needs batch >= 2");
    std::size_t j = rng.below(batch - 1);
    if (j >= i) ++j;
    return j;
}

}  // namespace svitt::objectives
