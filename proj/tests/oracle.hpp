// Copyright 2026 the svitt authors
// SPDX-License-Identifier: Apache-2.0
//
// Independent reference implementations used to pin test expectations. Plain
// loops over Tensor data only; no shared code with the tape-based model
// beyond the raw parameter values.
#pragma once

#include <vector>

#include "svitt/encoder.hpp"
#include "svitt/tensor.hpp"

namespace oracle {

// dense multi-head attention with optional additive bias matrix (n x n)
svitt::Tensor dense_attention(const svitt::Tensor& q, const svitt::Tensor& k,
                              const svitt::Tensor& v, std::size_t heads, double scale,
                              const svitt::Tensor* bias = nullptr);

// full dense visual encoder forward (no sparsity, no pruning, standard token
// order): returns the 1 x d L2-normalized cls embedding
svitt::Tensor visual_embed(const svitt::encoder::Model& model, const svitt::Tensor& clip);

// dense text encoder forward: 1 x d L2-normalized cls embedding
svitt::Tensor text_embed(const svitt::encoder::Model& model,
                         const std::vector<std::size_t>& token_ids);

}  // namespace oracle
