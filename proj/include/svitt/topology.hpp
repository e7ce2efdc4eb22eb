// Copyright 2026 the svitt authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "svitt/rng.hpp"

namespace svitt::topology {

// Block chunking of the N regional tokens. The class token is never part of
// a block; it only participates through global edges.
struct BlockLayout {
    std::size_t n_tokens = 0;   // N, regional tokens only
    std::size_t block_size = 0; // G
    std::size_t n_blocks = 0;   // ceil(N / G)
    std::size_t pad = 0;        // padding slots in the last block

    // live (non-padding) tokens in block k
    std::size_t live(std::size_t k) const {
        return (k + 1 == n_blocks) ? block_size - pad : block_size;
    }
    std::size_t block_of(std::size_t token) const { return token / block_size; }
};

BlockLayout chunk_blocks(std::size_t n_tokens, std::size_t block_size);

// Block-level attention adjacency: local window of K_l blocks, K_r random
// blocks outside the window, optional class-token global edges.
struct EdgeSet {
    BlockLayout layout;
    std::size_t k_local = 1;   // K_l (odd); radius = (K_l - 1) / 2
    std::size_t radius = 0;
    bool has_global = true;
    // random_neighbors[k]: sorted, duplicate-free block indices with |k'-k| > radius
    std::vector<std::vector<std::size_t>> random_neighbors;

    std::size_t local_lo(std::size_t k) const { return k > radius ? k - radius : 0; }
    std::size_t local_hi(std::size_t k) const {  // inclusive
        std::size_t hi = k + radius;
        return hi >= layout.n_blocks ? layout.n_blocks - 1 : hi;
    }
};

std::vector<std::pair<std::size_t, std::size_t>> build_local_edges(const BlockLayout& layout,
                                                                   std::size_t k_local);
std::vector<std::vector<std::size_t>> build_random_edges(const BlockLayout& layout,
                                                         std::size_t k_local, std::size_t k_random,
                                                         std::uint64_t seed);
// directed token-level edge count linking cls with N regional tokens: 2N + 1
std::uint64_t build_global_edges(std::size_t n_tokens);

EdgeSet make_edge_set(std::size_t n_tokens, std::size_t block_size, std::size_t k_local,
                      std::size_t k_random, std::uint64_t seed, bool with_global = true);

// Exact directed token-level edge count (padding excluded, global included
// when present). Closed-form; tests compare it against brute-force
// enumeration over the adjacency.
std::uint64_t count_edges(const EdgeSet& edges);

// Token-level adjacency over sequence indices 0..N (0 = cls, 1..N regional).
// allowed[q] is the sorted list of permitted key indices for query q.
std::vector<std::vector<std::size_t>> token_adjacency(const EdgeSet& edges);

// One line per block: "block_k: [n0 n1 ...]" (local window then random).
std::string debug_dump(const EdgeSet& edges);

enum class OrderScheme { standard, morton, hilbert };
OrderScheme order_scheme_from_string(const std::string& s);

// Bijection over the T*H*W regional token grid. to_position[i] gives the
// position of row-major token i in the reordered sequence; to_token is the
// inverse.
struct TokenOrder {
    OrderScheme scheme = OrderScheme::standard;
    std::vector<std::size_t> to_position;
    std::vector<std::size_t> to_token;
};

TokenOrder reorder_tokens(std::size_t t_dim, std::size_t h_dim, std::size_t w_dim,
                          OrderScheme scheme);

}  // namespace svitt::topology
