// Copyright 2026 the svitt authors
// SPDX-License-Identifier: Apache-2.0
#include "svitt/topology.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace svitt::topology {

BlockLayout chunk_blocks(std::size_t n_tokens, std::size_t block_size) {
    if (n_tokens == 0 || block_size == 0)
        throw std::invalid_argument("chunk_blocks: n_tokens and block_size must be >= 1");
    BlockLayout layout;
    layout.n_tokens = n_tokens;
    layout.block_size = block_size;
    layout.n_blocks = (n_tokens + block_size - 1) / block_size;
    layout.pad = layout.n_blocks * block_size - n_tokens;
    return layout;
}

std::vector<std::pair<std::size_t, std::size_t>> build_local_edges(const BlockLayout& layout,
                                                                   std::size_t k_local) {
    if (k_local == 0 || k_local % 2 == 0)
        throw std::invalid_argument("build_local_edges: K_l must be odd and >= 1");
    const std::size_t radius = (k_local - 1) / 2;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t k = 0; k < layout.n_blocks; ++k) {
        const std::size_t lo = k > radius ? k - radius : 0;
        const std::size_t hi = std::min(k + radius, layout.n_blocks - 1);
        for (std::size_t k2 = lo; k2 <= hi; ++k2) pairs.emplace_back(k, k2);
    }
    return pairs;
}

std::vector<std::vector<std::size_t>> build_random_edges(const BlockLayout& layout,
                                                         std::size_t k_local, std::size_t k_random,
                                                         std::uint64_t seed) {
    if (k_local == 0 || k_local % 2 == 0)
        throw std::invalid_argument("build_random_edges: K_l must be odd and >= 1");
    const std::size_t radius = (k_local - 1) / 2;
    Rng rng(seed);
    std::vector<std::vector<std::size_t>> neighbors(layout.n_blocks);
    for (std::size_t k = 0; k < layout.n_blocks; ++k) {
        // candidates: blocks outside the local window
        std::vector<std::size_t> candidates;
        for (std::size_t k2 = 0; k2 < layout.n_blocks; ++k2) {
            const std::size_t dist = k2 > k ? k2 - k : k - k2;
            if (dist > radius) candidates.push_back(k2);
        }
        const std::size_t take = std::min(k_random, candidates.size());
        auto picks = rng.sample_without_replacement(candidates.size(), take);
        for (auto p : picks) neighbors[k].push_back(candidates[p]);
    }
    return neighbors;
}

std::uint64_t build_global_edges(std::size_t n_tokens) {
    return 2ull * n_tokens + 1ull;
}

EdgeSet make_edge_set(std::size_t n_tokens, std::size_t block_size, std::size_t k_local,
                      std::size_t k_random, std::uint64_t seed, bool with_global) {
    EdgeSet e;
    e.layout = chunk_blocks(n_tokens, block_size);
    if (k_local == 0 || k_local % 2 == 0)
        throw std::invalid_argument("make_edge_set: K_l must be odd and >= 1");
    e.k_local = k_local;
    e.radius = (k_local - 1) / 2;
    e.has_global = with_global;
    e.random_neighbors = build_random_edges(e.layout, k_local, k_random, seed);
    return e;
}

std::uint64_t count_edges(const EdgeSet& e) {
    const auto& layout = e.layout;
    std::uint64_t total = 0;
    for (std::size_t k = 0; k < layout.n_blocks; ++k) {
        std::uint64_t keys = 0;
        for (std::size_t k2 = e.local_lo(k); k2 <= e.local_hi(k); ++k2) keys += layout.live(k2);
        for (auto k2 : e.random_neighbors[k]) keys += layout.live(k2);
        total += static_cast<std::uint64_t>(layout.live(k)) * keys;
    }
    if (e.has_global) total += build_global_edges(layout.n_tokens);
    return total;
}

std::vector<std::vector<std::size_t>> token_adjacency(const EdgeSet& e) {
    const auto& layout = e.layout;
    const std::size_t n = layout.n_tokens;
    std::vector<std::vector<std::size_t>> allowed(n + 1);

    // per-block key lists, shared by all queries in the block
    for (std::size_t k = 0; k < layout.n_blocks; ++k) {
        std::vector<std::size_t> key_blocks;
        for (std::size_t k2 = e.local_lo(k); k2 <= e.local_hi(k); ++k2) key_blocks.push_back(k2);
        key_blocks.insert(key_blocks.end(), e.random_neighbors[k].begin(),
                          e.random_neighbors[k].end());
        std::sort(key_blocks.begin(), key_blocks.end());
        key_blocks.erase(std::unique(key_blocks.begin(), key_blocks.end()), key_blocks.end());

        std::vector<std::size_t> keys;
        if (e.has_global) keys.push_back(0);  // cls
        for (auto k2 : key_blocks) {
            const std::size_t lo = k2 * layout.block_size;
            const std::size_t hi = std::min(lo + layout.block_size, n);  // skip padding
            for (std::size_t t = lo; t < hi; ++t) keys.push_back(t + 1);
        }
        const std::size_t q_lo = k * layout.block_size;
        const std::size_t q_hi = std::min(q_lo + layout.block_size, n);
        for (std::size_t q = q_lo; q < q_hi; ++q) allowed[q + 1] = keys;
    }
    if (e.has_global) {
        allowed[0].resize(n + 1);
        for (std::size_t j = 0; j <= n; ++j) allowed[0][j] = j;
    }
    return allowed;
}

std::string debug_dump(const EdgeSet& e) {
    std::ostringstream os;
    for (std::size_t k = 0; k < e.layout.n_blocks; ++k) {
        os << "block_" << k << ": [";
        bool first = true;
        for (std::size_t k2 = e.local_lo(k); k2 <= e.local_hi(k); ++k2) {
            os << (first ? "" : " ") << k2;
            first = false;
        }
        for (auto k2 : e.random_neighbors[k]) {
            os << (first ? "" : " ") << k2;
            first = false;
        }
        os << "]\n";
    }
    return os.str();
}

OrderScheme order_scheme_from_string(const std::string& s) {
    if (s == "standard") return OrderScheme::standard;
    if (s == "morton") return OrderScheme::morton;
    if (s == "hilbert") return OrderScheme::hilbert;
    throw std::invalid_argument("unsupported token order scheme: " + s);
}

namespace {

// Morton code interleaving h (least significant), then w, then t.
std::uint64_t morton_code(std::uint64_t t, std::uint64_t h, std::uint64_t w) {
    std::uint64_t code = 0;
    for (int b = 0; b < 21; ++b) {
        code |= ((h >> b) & 1ull) << (3 * b);
        code |= ((w >> b) & 1ull) << (3 * b + 1);
        code |= ((t >> b) & 1ull) << (3 * b + 2);
    }
    return code;
}

// xy position of step d on a Hilbert curve over an n x n grid (n power of 2)
void hilbert_d2xy(std::size_t n, std::uint64_t d, std::size_t& x, std::size_t& y) {
    x = y = 0;
    std::uint64_t t = d;
    for (std::size_t s = 1; s < n; s *= 2) {
        const std::size_t rx = 1 & (t / 2);
        const std::size_t ry = 1 & (t ^ rx);
        if (ry == 0) {
            if (rx == 1) {
                x = s - 1 - x;
                y = s - 1 - y;
            }
            std::swap(x, y);
        }
        x += s * rx;
        y += s * ry;
        t /= 4;
    }
}

}  // namespace

TokenOrder reorder_tokens(std::size_t t_dim, std::size_t h_dim, std::size_t w_dim,
                          OrderScheme scheme) {
    if (t_dim == 0 || h_dim == 0 || w_dim == 0)
        throw std::invalid_argument("reorder_tokens: grid dims must be >= 1");
    const std::size_t n = t_dim * h_dim * w_dim;
    TokenOrder order;
    order.scheme = scheme;
    order.to_token.reserve(n);

    switch (scheme) {
        case OrderScheme::standard:
            for (std::size_t i = 0; i < n; ++i) order.to_token.push_back(i);
            break;
        case OrderScheme::morton: {
            std::vector<std::pair<std::uint64_t, std::size_t>> keyed;
            keyed.reserve(n);
            for (std::size_t t = 0; t < t_dim; ++t)
                for (std::size_t h = 0; h < h_dim; ++h)
                    for (std::size_t w = 0; w < w_dim; ++w)
                        keyed.emplace_back(morton_code(t, h, w), (t * h_dim + h) * w_dim + w);
            std::stable_sort(keyed.begin(), keyed.end(),
                             [](const auto& a, const auto& b) { return a.first < b.first; });
            for (const auto& [_, idx] : keyed) order.to_token.push_back(idx);
            break;
        }
        case OrderScheme::hilbert: {
            // per-frame 2D Hilbert over the smallest covering power-of-2 square;
            // off-grid curve steps are skipped, frames are concatenated
            std::size_t side = 1;
            while (side < h_dim || side < w_dim) side *= 2;
            std::vector<std::size_t> frame_order;
            for (std::uint64_t d = 0; d < static_cast<std::uint64_t>(side) * side; ++d) {
                std::size_t h, w;
                hilbert_d2xy(side, d, h, w);
                if (h < h_dim && w < w_dim) frame_order.push_back(h * w_dim + w);
            }
            for (std::size_t t = 0; t < t_dim; ++t)
                for (auto f : frame_order) order.to_token.push_back(t * h_dim * w_dim + f);
            break;
        }
    }
    order.to_position.assign(n, 0);
    for (std::size_t pos = 0; pos < n; ++pos) order.to_position[order.to_token[pos]] = pos;
    return order;
}

}  // namespace svitt::topology
