// Copyright 2026 the svitt authors
// SPDX-License-Identifier: Apache-2.0
#include "svitt/attention.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace svitt::attention {

long long RelPosBias::index(const GridCoord& q, const GridCoord& k) const {
    if (q.is_cls() || k.is_cls()) return -1;
    const long long dt = k.t - q.t + static_cast<long long>(t_dim) - 1;
    const long long dh = k.h - q.h + static_cast<long long>(h_dim) - 1;
    const long long dw = k.w - q.w + static_cast<long long>(w_dim) - 1;
    const long long sh = 2 * static_cast<long long>(h_dim) - 1;
    const long long sw = 2 * static_cast<long long>(w_dim) - 1;
    return (dt * sh + dh) * sw + dw;
}

double RelPosBias::lookup(std::size_t head, const GridCoord& q, const GridCoord& k) const {
    const long long idx = index(q, k);
    if (idx < 0) return 0.0;
    if (static_cast<std::size_t>(idx) >= tables[head].numel())
        throw std::out_of_range("RelPosBias: offset outside table");
    return tables[head][static_cast<std::size_t>(idx)];
}

namespace {

void check_inputs(const AttentionInputs& in) {
    if (in.k.rows() != in.v.rows())
        throw std::invalid_argument("attention: K and V row counts differ");
    if (in.q.cols() != in.k.cols())
        throw std::invalid_argument("attention: Q and K widths differ");
    if (in.n_heads == 0 || in.q.cols() % in.n_heads != 0)
        throw std::invalid_argument("attention: head count must divide embedding dim");
}

// allowed == nullptr means all keys are permitted for every query
Tensor attention_impl(const AttentionInputs& in,
                      const std::vector<std::vector<std::size_t>>* allowed,
                      const RelPosBias* bias) {
    check_inputs(in);
    const std::size_t n_q = in.q.rows(), n_k = in.k.rows();
    const std::size_t d = in.q.cols(), d_h = d / in.n_heads;
    if (bias) {
        if (in.q_coords.size() != n_q || in.k_coords.size() != n_k)
            throw std::invalid_argument("attention: bias requires grid coords");
        if (bias->tables.size() != in.n_heads)
            throw std::invalid_argument("attention: bias table count != heads");
    }
    if (allowed && allowed->size() != n_q)
        throw std::invalid_argument("attention: allowed-key list size != n_q");

    Tensor out({n_q, d});
    std::vector<double> logits(n_k), weights(n_k);
    for (std::size_t head = 0; head < in.n_heads; ++head) {
        const std::size_t off = head * d_h;
        for (std::size_t i = 0; i < n_q; ++i) {
            const std::vector<std::size_t>* keys = allowed ? &(*allowed)[i] : nullptr;
            const std::size_t n_allowed = keys ? keys->size() : n_k;
            if (n_allowed == 0)
                throw std::runtime_error("sparse_attention: query " + std::to_string(i) +
                                         " has no permitted keys");
            double max_logit = -std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < n_allowed; ++a) {
                const std::size_t j = keys ? (*keys)[a] : a;
                double dot = 0.0;
                for (std::size_t c = 0; c < d_h; ++c) dot += in.q.at(i, off + c) * in.k.at(j, off + c);
                dot *= in.scale;
                if (bias) dot += bias->lookup(head, in.q_coords[i], in.k_coords[j]);
                logits[a] = dot;
                if (dot > max_logit) max_logit = dot;
            }
            double denom = 0.0;
            for (std::size_t a = 0; a < n_allowed; ++a) {
                weights[a] = std::exp(logits[a] - max_logit);
                denom += weights[a];
            }
            for (std::size_t a = 0; a < n_allowed; ++a) {
                const std::size_t j = keys ? (*keys)[a] : a;
                const double w = weights[a] / denom;
                for (std::size_t c = 0; c < d_h; ++c) out.at(i, off + c) += w * in.v.at(j, off + c);
            }
        }
    }
    return out;
}

}  // namespace

Tensor dense_attention(const AttentionInputs& in, const RelPosBias* bias) {
    return attention_impl(in, nullptr, bias);
}

Tensor sparse_attention(const AttentionInputs& in, const topology::EdgeSet& edges,
                        const RelPosBias* bias) {
    if (edges.layout.n_tokens + 1 != in.q.rows() || edges.layout.n_tokens + 1 != in.k.rows())
        throw std::invalid_argument("sparse_attention: edge layout inconsistent with sequence");
    const auto allowed = topology::token_adjacency(edges);
    return attention_impl(in, &allowed, bias);
}

Tensor masked_attention(const AttentionInputs& in,
                        const std::vector<std::vector<std::size_t>>& allowed,
                        const RelPosBias* bias) {
    return attention_impl(in, &allowed, bias);
}

std::vector<double> softmax_scores(const Tensor& query_row, const Tensor& keys,
                                   std::size_t n_heads, double scale) {
    const std::size_t d = keys.cols(), n_k = keys.rows();
    if (query_row.numel() != d) throw std::invalid_argument("softmax_scores: width mismatch");
    if (n_heads == 0 || d % n_heads != 0)
        throw std::invalid_argument("softmax_scores: head count must divide dim");
    const std::size_t d_h = d / n_heads;
    std::vector<double> scores(n_k, 0.0), logits(n_k);
    for (std::size_t head = 0; head < n_heads; ++head) {
        const std::size_t off = head * d_h;
        double max_logit = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n_k; ++j) {
            double dot = 0.0;
            for (std::size_t c = 0; c < d_h; ++c) dot += query_row[off + c] * keys.at(j, off + c);
            logits[j] = dot * scale;
            max_logit = std::max(max_logit, logits[j]);
        }
        double denom = 0.0;
        for (std::size_t j = 0; j < n_k; ++j) denom += std::exp(logits[j] - max_logit);
        for (std::size_t j = 0; j < n_k; ++j)
            scores[j] += std::exp(logits[j] - max_logit) / denom;
    }
    for (auto& s : scores) s /= static_cast<double>(n_heads);
    return scores;
}

std::vector<double> extract_cls_attention(const AttentionInputs& in) {
    check_inputs(in);
    if (in.k.rows() < 2) {
        if (in.k.rows() == 1) throw std::invalid_argument("extract_cls_attention: no regional keys");
    }
    const std::size_t n_regional = in.k.rows() - 1;
    // keys 1..N only; the cls-to-cls logit is excluded from normalization
    Tensor regional({n_regional, in.k.cols()});
    for (std::size_t j = 0; j < n_regional; ++j)
        for (std::size_t c = 0; c < in.k.cols(); ++c) regional.at(j, c) = in.k.at(j + 1, c);
    Tensor cls_row({1, in.q.cols()});
    for (std::size_t c = 0; c < in.q.cols(); ++c) cls_row[c] = in.q.at(0, c);
    return softmax_scores(cls_row, regional, in.n_heads, in.scale);
}

}  // namespace svitt::attention
