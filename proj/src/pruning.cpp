// Copyright 2026 the svitt authors
// SPDX-License-Identifier: Apache-2.0
#include "svitt/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace svitt::pruning {

void PruneSchedule::validate(std::size_t visual_depth) const {
    if (visual_layers.size() != visual_keep_rates.size())
        throw std::invalid_argument("prune schedule: layer/rate count mismatch");
    for (std::size_t i = 0; i < visual_layers.size(); ++i) {
        if (visual_layers[i] == 0 || visual_layers[i] > visual_depth)
            throw std::invalid_argument("prune schedule: layer index out of range");
        if (i > 0 && visual_layers[i] <= visual_layers[i - 1])
            throw std::invalid_argument("prune schedule: layers must be strictly increasing");
        if (visual_keep_rates[i] <= 0.0 || visual_keep_rates[i] > 1.0)
            throw std::invalid_argument("prune schedule: keep rate must be in (0,1]");
    }
    if (multimodal_keep_rate <= 0.0 || multimodal_keep_rate > 1.0)
        throw std::invalid_argument("prune schedule: multimodal keep rate must be in (0,1]");
}

double PruneSchedule::rate_at(std::size_t layer) const {
    for (std::size_t i = 0; i < visual_layers.size(); ++i)
        if (visual_layers[i] == layer) return visual_keep_rates[i];
    return 1.0;
}

std::size_t keep_count(double q, std::size_t n) {
    if (q <= 0.0 || q > 1.0) throw std::invalid_argument("keep_count: q must be in (0,1]");
    if (n == 0) return 0;
    return static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
}

KeepDecision select_top(const std::vector<double>& scores, double q) {
    const std::size_t n = scores.size();
    const std::size_t m = keep_count(q, n);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    // descending by score, ties toward the lowest index
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    order.resize(m);
    std::sort(order.begin(), order.end());
    KeepDecision d;
    d.kept_indices = std::move(order);
    d.keep_rate = q;
    d.scores = scores;
    return d;
}

std::string keep_mask_csv_rows(std::size_t layer, std::size_t t_dim, std::size_t h_dim,
                               std::size_t w_dim, const std::vector<bool>& kept) {
    if (kept.size() != t_dim * h_dim * w_dim)
        throw std::invalid_argument("keep_mask_csv_rows: mask size != grid volume");
    std::ostringstream os;
    std::size_t i = 0;
    for (std::size_t t = 0; t < t_dim; ++t)
        for (std::size_t h = 0; h < h_dim; ++h)
            for (std::size_t w = 0; w < w_dim; ++w, ++i)
                os << layer << ',' << t << ',' << h << ',' << w << ',' << (kept[i] ? 1 : 0) << '\n';
    return os.str();
}

}  // namespace svitt::pruning
