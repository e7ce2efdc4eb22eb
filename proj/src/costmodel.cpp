// Copyright 2026 the svitt authors
// SPDX-License-Identifier: Apache-2.0
#include "svitt/costmodel.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "svitt/topology.hpp"

namespace svitt::costmodel {

namespace {

std::size_t ceil_keep(double q, std::size_t n) {
    return static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
}

}  // namespace

std::vector<std::size_t> visual_token_counts(const Dims& dims, const SparseSpec& sparse) {
    std::vector<std::size_t> counts(dims.visual_depth);
    std::size_t regional = dims.n_regional();
    std::size_t next_prune = 0;
    for (std::size_t layer = 1; layer <= dims.visual_depth; ++layer) {
        counts[layer - 1] = regional + 1;
        if (sparse.nodes && next_prune < sparse.prune_layers.size() &&
            layer == sparse.prune_layers[next_prune]) {
            regional = ceil_keep(sparse.visual_keep, regional);
            ++next_prune;
        }
    }
    return counts;
}

CostReport edge_profile(const Dims& dims, const SparseSpec& sparse, bool exact) {
    CostReport r;
    r.visual_tokens = visual_token_counts(dims, sparse);
    for (std::size_t layer = 0; layer < dims.visual_depth; ++layer) {
        const std::uint64_t n = r.visual_tokens[layer];
        std::uint64_t e;
        if (!sparse.edges) {
            e = n * n;
        } else if (exact) {
            auto edges = topology::make_edge_set(n - 1, sparse.block, sparse.k_local,
                                                 sparse.k_random, layer);
            e = topology::count_edges(edges);
        } else {
            e = n * (sparse.k_local + sparse.k_random) * sparse.block;
        }
        r.visual_layer_edges.push_back(e);
        r.total_edges += e;
    }
    // multimodal cross-attention: text queries over the surviving visual keys
    std::size_t regional = r.visual_tokens.back() - 1;
    if (sparse.nodes && !sparse.prune_layers.empty() &&
        sparse.prune_layers.back() == dims.visual_depth)
        regional = ceil_keep(sparse.visual_keep, regional);
    for (std::size_t layer = 1; layer <= dims.multimodal_depth; ++layer) {
        const std::uint64_t e =
            static_cast<std::uint64_t>(dims.text_len) * (regional + 1);
        r.multimodal_layer_edges.push_back(e);
        r.total_edges += e;
        if (layer == 1 && sparse.nodes && sparse.multimodal_keep < 1.0)
            regional = ceil_keep(sparse.multimodal_keep, regional);
    }
    const std::uint64_t nv = dims.n_visual();
    r.dense_edges = dims.visual_depth * nv * nv +
                    dims.multimodal_depth * static_cast<std::uint64_t>(dims.text_len) * nv;
    r.sparsity = 1.0 - static_cast<double>(r.total_edges) / static_cast<double>(r.dense_edges);
    if (!sparse.edges && !sparse.nodes) r.sparsity = 0.0;
    return r;
}

double flops_estimate(const Dims& dims, const SparseSpec& sparse) {
    const CostReport edges = edge_profile(dims, sparse);
    const double d = static_cast<double>(dims.dim);
    const double proj_per_token = 12.0 * d * d * 2.0;  // qkvo (4d^2) + ffn (8d^2) MACs

    double flops = static_cast<double>(dims.n_regional()) *
                   static_cast<double>(dims.patch_in) * d * 2.0;  // patch embedding
    for (std::size_t layer = 0; layer < dims.visual_depth; ++layer) {
        flops += static_cast<double>(edges.visual_tokens[layer]) * proj_per_token;
        flops += static_cast<double>(edges.visual_layer_edges[layer]) * (d + 5.0);
    }
    // text stack (self-attention always dense over N_t rows)
    const double nt = static_cast<double>(dims.text_len);
    flops += static_cast<double>(dims.text_depth) * (nt * proj_per_token + nt * nt * (d + 5.0));
    // cross-attention: q/out projections on text rows, k/v on visual keys
    for (std::size_t layer = 0; layer < dims.multimodal_depth; ++layer) {
        const double nm = static_cast<double>(edges.multimodal_layer_edges[layer]) / nt;
        flops += nt * 2.0 * d * d * 2.0;
        flops += nm * 2.0 * d * d * 2.0;
        flops += static_cast<double>(edges.multimodal_layer_edges[layer]) * (d + 5.0);
    }
    return flops / 1e9;
}

std::uint64_t memory_estimate(const Dims& dims, const SparseSpec& sparse, std::size_t batch) {
    if (batch == 0) return 0;
    const CostReport edges = edge_profile(dims, sparse);
    const std::uint64_t d = dims.dim;
    // retained per layer: per-head attention matrices plus ~13 d-wide
    // intermediate activations per token (residuals, ln stats, qkv, ffn)
    std::uint64_t elems = 0;
    for (std::size_t layer = 0; layer < dims.visual_depth; ++layer) {
        elems += dims.heads * edges.visual_layer_edges[layer];
        elems += 13 * static_cast<std::uint64_t>(edges.visual_tokens[layer]) * d;
    }
    const std::uint64_t nt = dims.text_len;
    elems += dims.text_depth * (dims.heads * nt * nt + 13 * nt * d);
    for (std::size_t layer = 0; layer < dims.multimodal_depth; ++layer) {
        const std::uint64_t nm = edges.multimodal_layer_edges[layer] / nt;
        elems += dims.heads * edges.multimodal_layer_edges[layer];
        elems += 4 * nm * d;  // cross-attention k/v and their inputs
    }
    return batch * elems * 4;  // f32
}

CostReport cost_report(const Dims& dims, const SparseSpec& sparse) {
    CostReport r = edge_profile(dims, sparse);
    r.gflops = flops_estimate(dims, sparse);
    r.activation_bytes = memory_estimate(dims, sparse, 1);
    return r;
}

std::string CostReport::to_json() const {
    nlohmann::json j;
    j["visual_layer_edges"] = visual_layer_edges;
    j["multimodal_layer_edges"] = multimodal_layer_edges;
    j["visual_tokens"] = visual_tokens;
    j["total_edges"] = total_edges;
    j["dense_edges"] = dense_edges;
    j["sparsity"] = sparsity;
    j["gflops"] = gflops;
    j["activation_bytes"] = activation_bytes;
    return j.dump(2);
}

std::string CostReport::to_table() const {
    std::ostringstream os;
    os << "layer  tokens  edges\n";
    for (std::size_t i = 0; i < visual_layer_edges.size(); ++i)
        os << "v" << (i + 1) << "  " << visual_tokens[i] << "  " << visual_layer_edges[i]
           << "\n";
    for (std::size_t i = 0; i < multimodal_layer_edges.size(); ++i)
        os << "m" << (i + 1) << "  -  " << multimodal_layer_edges[i] << "\n";
    os << "total edges: " << total_edges << " (dense " << dense_edges << ")\n";
    os << "sparsity: " << sparsity << "\n";
    os << "gflops: " << gflops << "\n";
    os << "activation bytes/sample: " << activation_bytes << "\n";
    return os.str();
}

}  // namespace svitt::costmodel
