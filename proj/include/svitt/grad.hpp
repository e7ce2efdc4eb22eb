// Copyright 2026 the svitt authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "svitt/tensor.hpp"

namespace svitt::grad {

// A learnable tensor plus its gradient accumulator and optimizer moments.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
    Tensor m, v;  // adaptive-moment state
    void zero_grad() {
        grad = Tensor(value.shape);
    }
};

struct Var {
    std::size_t id = static_cast<std::size_t>(-1);
    bool valid() const { return id != static_cast<std::size_t>(-1); }
};

// Per-query allowed-key lists for masked softmax. Shared so that one mask can
// back many heads/layers.
using KeyMask = std::vector<std::vector<std::size_t>>;
using KeyMaskPtr = std::shared_ptr<const KeyMask>;

// One forward pass worth of recorded operations. Nodes only reference earlier
// nodes, so reverse creation order is a reverse topological order.
class Tape {
   public:
    Var input(Tensor v);
    Var param(Parameter& p);  // backward() accumulates into p.grad

    const Tensor& val(Var v) const { return nodes_[v.id].value; }
    const Tensor& grad(Var v) const { return nodes_[v.id].grad; }
    std::size_t size() const { return nodes_.size(); }

    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);               // elementwise
    Var add_rowvec(Var a, Var bias);     // bias is 1 x cols
    Var scale(Var a, double c);
    Var mul_scalar(Var a, Var s);        // s is 1 x 1
    Var matmul(Var a, Var b);
    Var transpose(Var a);
    Var gather_rows(Var a, std::vector<std::size_t> idx);
    Var concat_rows(const std::vector<Var>& parts);
    Var slice_cols(Var a, std::size_t start, std::size_t len);
    Var concat_cols(const std::vector<Var>& parts);
    Var layernorm(Var x, Var gamma, Var beta, double eps = 1e-6);
    Var gelu(Var x);
    Var sigmoid(Var x);
    Var log(Var x);
    Var exp(Var x);
    Var l2_normalize_rows(Var x, double eps = 1e-12);
    Var sum(Var x);                      // 1 x 1
    Var diag(Var x);                     // n x n -> n x 1
    Var logsumexp_rows(Var x);           // n x m -> n x 1
    // softmax over permitted keys per row; masked entries are exactly zero.
    // mask == nullptr means every key is permitted.
    Var masked_softmax_rows(Var logits, KeyMaskPtr mask);
    // out(i,j) = idx(i,j) < 0 ? 0 : table[idx(i,j)]; table is a flat 1 x M row
    Var bias_lookup(Var table, std::shared_ptr<const std::vector<long long>> idx,
                    std::size_t rows, std::size_t cols);
    // sum over rows of cross-entropy -log softmax(logits)[target]
    Var softmax_cross_entropy_sum(Var logits, std::vector<std::size_t> targets);

    void backward(Var loss);

   private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::function<void(Tape&, std::size_t)> back;  // empty for leaves
        Parameter* bound = nullptr;
    };
    Var push(Tensor value, std::function<void(Tape&, std::size_t)> back);
    Tensor& grad_mut(std::size_t id) { return nodes_[id].grad; }

    std::vector<Node> nodes_;
};

}  // namespace svitt::grad
