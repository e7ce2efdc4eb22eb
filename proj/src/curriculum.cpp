// Copyright 2026 the svitt authors
// SPDX-License-Identifier: Apache-2.0
#include "svitt/curriculum.hpp"

#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "svitt/costmodel.hpp"

namespace svitt::curriculum {

using nlohmann::json;

Schedule parse_schedule(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("schedule: bad json: ") + e.what());
    }
    const json& arr = j.is_array() ? j : j.at("stages");
    if (!arr.is_array() || arr.empty())
        throw std::invalid_argument("schedule: needs a non-empty stage array");
    Schedule sched;
    for (const auto& s : arr) {
        Stage st;
        st.frames = s.value("frames", std::size_t{4});
        st.k_local = s.value("k_local", std::size_t{1});
        st.k_random = s.value("k_random", std::size_t{3});
        st.block = s.value("block", std::size_t{56});
        st.visual_keep = s.value("visual_keep", 1.0);
        st.multimodal_keep = s.value("multimodal_keep", 1.0);
        if (s.contains("prune_layers"))
            st.prune_layers = s.at("prune_layers").get<std::vector<std::size_t>>();
        st.steps = s.value("steps", std::size_t{0});
        st.lr = s.value("lr", 1e-4);
        if (st.frames == 0) throw std::invalid_argument("schedule: frames must be >= 1");
        if (!(st.visual_keep > 0.0 && st.visual_keep <= 1.0) ||
            !(st.multimodal_keep > 0.0 && st.multimodal_keep <= 1.0))
            throw std::invalid_argument("schedule: keep rates must be in (0,1]");
        sched.stages.push_back(st);
    }
    return sched;
}

std::vector<Violation> validate_schedule(const Schedule& sched) {
    std::vector<Violation> out;
    auto detail = [](double a, double b) {
        std::ostringstream os;
        os << a << " -> " << b;
        return os.str();
    };
    for (std::size_t i = 0; i + 1 < sched.stages.size(); ++i) {
        const Stage& a = sched.stages[i];
        const Stage& b = sched.stages[i + 1];
        if (b.frames <= a.frames)
            out.push_back({"frames-nonincreasing", i, i + 1,
                           detail(static_cast<double>(a.frames),
                                  static_cast<double>(b.frames))});
        if (b.visual_keep > a.visual_keep)
            out.push_back({"keep-rate-increasing", i, i + 1,
                           detail(a.visual_keep, b.visual_keep)});
        const double conn_a = static_cast<double>(a.k_local + a.k_random) /
                              static_cast<double>(a.frames);
        const double conn_b = static_cast<double>(b.k_local + b.k_random) /
                              static_cast<double>(b.frames);
        if (conn_b > conn_a)
            out.push_back({"connectivity-increasing", i, i + 1, detail(conn_a, conn_b)});
    }
    return out;
}

encoder::Model expand_model(const encoder::Model& src, const Stage& next,
                            std::size_t stage_index) {
    const encoder::ModelConfig& old_cfg = src.config();
    if (next.frames < old_cfg.frames)
        throw std::invalid_argument("expand: target frame count below source");

    encoder::ModelConfig cfg = old_cfg;
    cfg.frames = next.frames;
    cfg.stage = stage_index;
    cfg.sparsity.enabled = true;
    cfg.sparsity.k_local = next.k_local;
    cfg.sparsity.k_random = next.k_random;
    cfg.sparsity.block = next.block;
    cfg.prune.visual_layers = next.prune_layers;
    cfg.prune.visual_keep_rates.assign(next.prune_layers.size(), next.visual_keep);
    cfg.prune.multimodal_keep_rate = next.multimodal_keep;
    cfg.validate();

    encoder::Model dst(cfg);
    const std::size_t hw = old_cfg.tokens_per_frame();
    for (const auto& [name, p] : src.params().all()) {
        if (name == "visual.pos") {
            auto& np = dst.params().create(name, {cfg.n_regional() + 1, cfg.dim});
            np.value = encoder::interpolate_pos_embed(p->value, old_cfg.frames, cfg.frames, hw);
        } else if (name.size() > 7 && name.substr(name.size() - 7) == ".relpos") {
            auto& np = dst.params().create(name, {cfg.heads, cfg.rel_table_size()});
            np.value =
                encoder::interpolate_rel_pos_bias(p->value, old_cfg.frames, cfg.frames);
        } else {
            auto& np = dst.params().create(name, p->value.shape);
            np.value = p->value;
        }
    }
    return dst;
}

double stage_sparsity(const encoder::ModelConfig& cfg) {
    costmodel::Dims dims;
    dims.visual_depth = cfg.visual_depth;
    dims.multimodal_depth = cfg.multimodal_depth;
    dims.frames = cfg.frames;
    dims.grid_h = cfg.grid_h();
    dims.grid_w = cfg.grid_w();
    dims.text_len = cfg.text_len + 1;  // cls row included in the edge accounting
    dims.text_depth = cfg.text_depth;
    dims.dim = cfg.dim;
    dims.heads = cfg.heads;
    dims.ffn_ratio = cfg.ffn_ratio;
    costmodel::SparseSpec sparse;
    sparse.edges = cfg.sparsity.enabled;
    sparse.k_local = cfg.sparsity.k_local;
    sparse.k_random = cfg.sparsity.k_random;
    sparse.block = cfg.sparsity.block;
    sparse.nodes = cfg.prune.has_visual() || cfg.prune.multimodal_keep_rate < 1.0;
    sparse.prune_layers = cfg.prune.visual_layers;
    sparse.visual_keep =
        cfg.prune.visual_keep_rates.empty() ? 1.0 : cfg.prune.visual_keep_rates.front();
    sparse.multimodal_keep = cfg.prune.multimodal_keep_rate;
    return costmodel::edge_profile(dims, sparse).sparsity;
}

}  // namespace svitt::curriculum
