// Copyright 2026 the svitt authors
// SPDX-License-Identifier: Apache-2.0
#include "svitt/encoder.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace svitt::encoder {

using grad::Tape;
using grad::Var;
using nlohmann::json;

void ModelConfig::validate() const {
    if (frames == 0 || frame_size == 0 || channels == 0 || patch == 0)
        throw std::invalid_argument("config: dims must be >= 1");
    if (frame_size % patch != 0)
        throw std::invalid_argument("config: frame size not divisible by patch size");
    if (dim == 0 || heads == 0 || dim % heads != 0)
        throw std::invalid_argument("config: head count must divide embedding dim");
    if (visual_depth == 0 || text_depth == 0)
        throw std::invalid_argument("config: encoder depth must be >= 1");
    if (multimodal_depth >= text_depth)
        throw std::invalid_argument("config: multimodal depth must be < text depth");
    if (text_len == 0 || vocab < 4) throw std::invalid_argument("config: bad text dims");
    if (sparsity.enabled) {
        if (sparsity.k_local == 0 || sparsity.k_local % 2 == 0)
            throw std::invalid_argument("config: K_l must be odd and >= 1");
        if (sparsity.block == 0) throw std::invalid_argument("config: block size must be >= 1");
    }
    prune.validate(visual_depth);
}

std::string ModelConfig::to_json() const {
    json j;
    j["frames"] = frames;
    j["frame_size"] = frame_size;
    j["channels"] = channels;
    j["patch"] = patch;
    j["dim"] = dim;
    j["heads"] = heads;
    j["visual_depth"] = visual_depth;
    j["text_depth"] = text_depth;
    j["multimodal_depth"] = multimodal_depth;
    j["text_len"] = text_len;
    j["vocab"] = vocab;
    j["ffn_ratio"] = ffn_ratio;
    j["stage"] = stage;
    if (sparsity.enabled) {
        const char* order = sparsity.order == topology::OrderScheme::standard ? "standard"
                            : sparsity.order == topology::OrderScheme::morton ? "morton"
                                                                              : "hilbert";
        j["sparsity"] = {{"k_local", sparsity.k_local},
                         {"k_random", sparsity.k_random},
                         {"block", sparsity.block},
                         {"order", order}};
    }
    if (prune.has_visual() || prune.multimodal_keep_rate < 1.0) {
        j["prune"] = {{"visual_layers", prune.visual_layers},
                      {"visual_keep", prune.visual_keep_rates},
                      {"multimodal_keep", prune.multimodal_keep_rate}};
    }
    return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: bad json: ") + e.what());
    }
    ModelConfig c;
    auto get = [&](const char* key, auto& out) {
        if (j.contains(key)) out = j.at(key).template get<std::decay_t<decltype(out)>>();
    };
    get("frames", c.frames);
    get("frame_size", c.frame_size);
    get("channels", c.channels);
    get("patch", c.patch);
    get("dim", c.dim);
    get("heads", c.heads);
    get("visual_depth", c.visual_depth);
    get("text_depth", c.text_depth);
    get("multimodal_depth", c.multimodal_depth);
    get("text_len", c.text_len);
    get("vocab", c.vocab);
    get("ffn_ratio", c.ffn_ratio);
    get("stage", c.stage);
    if (j.contains("sparsity") && !j.at("sparsity").is_null()) {
        const auto& s = j.at("sparsity");
        c.sparsity.enabled = true;
        c.sparsity.k_local = s.value("k_local", std::size_t{1});
        c.sparsity.k_random = s.value("k_random", std::size_t{3});
        c.sparsity.block = s.value("block", std::size_t{56});
        c.sparsity.order =
            topology::order_scheme_from_string(s.value("order", std::string("standard")));
    }
    if (j.contains("prune") && !j.at("prune").is_null()) {
        const auto& p = j.at("prune");
        if (p.contains("visual_layers"))
            c.prune.visual_layers = p.at("visual_layers").get<std::vector<std::size_t>>();
        if (p.contains("visual_keep"))
            c.prune.visual_keep_rates = p.at("visual_keep").get<std::vector<double>>();
        c.prune.multimodal_keep_rate = p.value("multimodal_keep", 1.0);
    }
    c.validate();
    return c;
}

std::vector<std::size_t> temporal_nn_map(std::size_t t1, std::size_t t2) {
    if (t1 == 0 || t2 == 0) throw std::invalid_argument("temporal_nn_map: T must be >= 1");
    std::vector<std::size_t> map(t2);
    for (std::size_t t = 1; t <= t2; ++t) {
        const double raw = std::floor(static_cast<double>(t) * static_cast<double>(t1) /
                                          static_cast<double>(t2) +
                                      0.5);
        long long src = static_cast<long long>(raw);
        if (src < 1) src = 1;
        if (src > static_cast<long long>(t1)) src = static_cast<long long>(t1);
        map[t - 1] = static_cast<std::size_t>(src - 1);
    }
    return map;
}

Tensor inflate_pos_embed(const Tensor& p, std::size_t t_frames, std::size_t hw) {
    if (p.rows() != hw + 1) throw std::invalid_argument("inflate_pos_embed: bad table height");
    const std::size_t d = p.cols();
    Tensor out({t_frames * hw + 1, d});
    for (std::size_t j = 0; j < d; ++j) out.at(0, j) = p.at(0, j);
    for (std::size_t t = 0; t < t_frames; ++t)
        for (std::size_t i = 0; i < hw; ++i)
            for (std::size_t j = 0; j < d; ++j) out.at(1 + t * hw + i, j) = p.at(1 + i, j);
    return out;
}

Tensor interpolate_pos_embed(const Tensor& p, std::size_t t1, std::size_t t2, std::size_t hw) {
    if (p.rows() != t1 * hw + 1)
        throw std::invalid_argument("interpolate_pos_embed: bad table height");
    const std::size_t d = p.cols();
    const auto map = temporal_nn_map(t1, t2);
    Tensor out({t2 * hw + 1, d});
    for (std::size_t j = 0; j < d; ++j) out.at(0, j) = p.at(0, j);
    for (std::size_t t = 0; t < t2; ++t)
        for (std::size_t i = 0; i < hw; ++i)
            for (std::size_t j = 0; j < d; ++j)
                out.at(1 + t * hw + i, j) = p.at(1 + map[t] * hw + i, j);
    return out;
}

Tensor inflate_rel_pos_bias(const Tensor& r, std::size_t t_frames) {
    const std::size_t s = r.numel();
    Tensor out({(2 * t_frames - 1) * s});
    for (std::size_t t = 0; t < 2 * t_frames - 1; ++t)
        for (std::size_t i = 0; i < s; ++i) out[t * s + i] = r[i];
    return out;
}

Tensor interpolate_rel_pos_bias(const Tensor& r, std::size_t t1, std::size_t t2) {
    const std::size_t heads = r.rows();
    const std::size_t slices1 = 2 * t1 - 1, slices2 = 2 * t2 - 1;
    if (r.cols() % slices1 != 0)
        throw std::invalid_argument("interpolate_rel_pos_bias: bad table width");
    const std::size_t s = r.cols() / slices1;
    const auto map = temporal_nn_map(slices1, slices2);
    Tensor out({heads, slices2 * s});
    for (std::size_t h = 0; h < heads; ++h)
        for (std::size_t t = 0; t < slices2; ++t)
            for (std::size_t i = 0; i < s; ++i) out.at(h, t * s + i) = r.at(h, map[t] * s + i);
    return out;
}

// ---- model ----

namespace {

void gaussian_init(Tensor& t, Rng& rng, double std_dev) {
    for (auto& v : t.data) v = rng.gaussian() * std_dev;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr double kTauInit = 0.07;
constexpr double kTauMin = 0.001;
constexpr double kTauMax = 0.5;

}  // namespace

Model::Model(ModelConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

Model::Model(ModelConfig cfg, std::uint64_t seed) : Model(std::move(cfg)) {
    Rng rng(mix_seed(seed, 0xC0FFEE));
    const std::size_t d = cfg_.dim;
    const double w_std = 0.02;

    // variance-preserving init for projections so content survives depth;
    // embedding tables stay at a small fixed scale
    auto linear = [&](const std::string& name, std::size_t in, std::size_t out) {
        gaussian_init(params_.create(name + ".w", {in, out}).value, rng,
                      1.0 / std::sqrt(static_cast<double>(in)));
        params_.create(name + ".b", {1, out});
    };
    auto norm = [&](const std::string& name) {
        auto& g = params_.create(name + ".g", {1, d});
        for (auto& v : g.value.data) v = 1.0;
        params_.create(name + ".b", {1, d});
    };
    auto block = [&](const std::string& p, bool relpos) {
        norm(p + ".ln1");
        linear(p + ".q", d, d);
        linear(p + ".k", d, d);
        linear(p + ".v", d, d);
        linear(p + ".o", d, d);
        if (relpos)
            gaussian_init(params_.create(p + ".relpos", {cfg_.heads, cfg_.rel_table_size()}).value,
                          rng, w_std);
        norm(p + ".ln2");
        linear(p + ".ffn1", d, cfg_.ffn_dim());
        linear(p + ".ffn2", cfg_.ffn_dim(), d);
    };

    linear("visual.patch", cfg_.patch * cfg_.patch * cfg_.channels, d);
    gaussian_init(params_.create("visual.cls", {1, d}).value, rng, w_std);
    // spatiotemporal coordinates start at a scale comparable to patch content
    // so order-sensitive attention features are reachable early in training;
    // dims 0-2 additionally carry explicit linear (t, h, w) coordinates so
    // products of temporal and spatial position are one nonlinearity away
    auto& pos = params_.create("visual.pos", {cfg_.n_regional() + 1, d}).value;
    gaussian_init(pos, rng, 0.1);
    const auto centered = [](std::size_t i, std::size_t n) {
        return n > 1 ? 2.0 * static_cast<double>(i) / static_cast<double>(n - 1) - 1.0 : 0.0;
    };
    for (std::size_t t = 0; t < cfg_.frames; ++t)
        for (std::size_t h = 0; h < cfg_.grid_h(); ++h)
            for (std::size_t w = 0; w < cfg_.grid_w(); ++w) {
                const std::size_t row = 1 + t * cfg_.tokens_per_frame() + h * cfg_.grid_w() + w;
                pos.at(row, 0) += 0.3 * centered(t, cfg_.frames);
                pos.at(row, 1) += 0.3 * centered(h, cfg_.grid_h());
                pos.at(row, 2) += 0.3 * centered(w, cfg_.grid_w());
            }
    for (std::size_t l = 0; l < cfg_.visual_depth; ++l)
        block("visual.L" + std::to_string(l), true);
    norm("visual.ln_f");
    linear("visual.proj", d, d);

    gaussian_init(params_.create("text.tok", {cfg_.vocab, d}).value, rng, w_std);
    gaussian_init(params_.create("text.cls", {1, d}).value, rng, w_std);
    gaussian_init(params_.create("text.pos", {cfg_.text_len + 1, d}).value, rng, w_std);
    for (std::size_t l = 0; l < cfg_.text_depth; ++l) {
        const std::string p = "text.L" + std::to_string(l);
        block(p, false);
        if (l + cfg_.multimodal_depth >= cfg_.text_depth) {
            norm(p + ".xln");
            linear(p + ".xq", d, d);
            linear(p + ".xk", d, d);
            linear(p + ".xv", d, d);
            linear(p + ".xo", d, d);
        }
    }
    norm("text.ln_f");
    linear("text.proj", d, d);
    norm("mm.ln_f");
    linear("vtm", d, 1);
    linear("mlm", d, cfg_.vocab);
    params_.create("logit_tau", {1, 1}).value[0] = std::log(kTauInit);
}

Tensor Model::tokenize_patches(const Tensor& clip) const {
    const std::size_t t_dim = cfg_.frames, hw = cfg_.frame_size, c_dim = cfg_.channels;
    const std::size_t p = cfg_.patch, gh = cfg_.grid_h(), gw = cfg_.grid_w();
    if (clip.numel() != t_dim * hw * hw * c_dim)
        throw std::invalid_argument("tokenize: clip size != T*H*W*C");
    Tensor out({cfg_.n_regional(), p * p * c_dim});
    std::size_t row = 0;
    for (std::size_t t = 0; t < t_dim; ++t)
        for (std::size_t by = 0; by < gh; ++by)
            for (std::size_t bx = 0; bx < gw; ++bx, ++row) {
                std::size_t col = 0;
                for (std::size_t y = 0; y < p; ++y)
                    for (std::size_t x = 0; x < p; ++x)
                        for (std::size_t c = 0; c < c_dim; ++c, ++col)
                            out.at(row, col) =
                                clip[((t * hw + by * p + y) * hw + bx * p + x) * c_dim + c];
            }
    return out;
}

Model::AttnOut Model::self_attention(Tape& tape, Var x, const std::string& prefix,
                                     grad::KeyMaskPtr mask,
                                     const std::vector<attention::GridCoord>* coords,
                                     bool want_cls_scores) const {
    const std::size_t d = cfg_.dim, heads = cfg_.heads, d_h = cfg_.head_dim();
    const std::size_t n = tape.val(x).rows();
    const double scale = 1.0 / std::sqrt(static_cast<double>(d_h));

    Var h = tape.layernorm(x, tape.param(params_.get(prefix + ".ln1.g")),
                           tape.param(params_.get(prefix + ".ln1.b")));
    auto proj = [&](const char* which) {
        return tape.add_rowvec(
            tape.matmul(h, tape.param(params_.get(prefix + "." + which + ".w"))),
            tape.param(params_.get(prefix + "." + which + ".b")));
    };
    Var q = proj("q"), k = proj("k"), v = proj("v");

    // relative-position bias index map over the current alive coords
    std::shared_ptr<std::vector<long long>> bias_idx;
    Var relpos{};
    const bool use_bias = coords != nullptr && params_.has(prefix + ".relpos");
    if (use_bias) {
        attention::RelPosBias proto;
        proto.t_dim = cfg_.frames;
        proto.h_dim = cfg_.grid_h();
        proto.w_dim = cfg_.grid_w();
        bias_idx = std::make_shared<std::vector<long long>>(n * n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                (*bias_idx)[i * n + j] = proto.index((*coords)[i], (*coords)[j]);
        relpos = tape.param(params_.get(prefix + ".relpos"));
    }

    AttnOut result;
    std::vector<Var> head_outs;
    std::vector<double> score_acc;
    for (std::size_t head = 0; head < heads; ++head) {
        Var qh = tape.slice_cols(q, head * d_h, d_h);
        Var kh = tape.slice_cols(k, head * d_h, d_h);
        Var vh = tape.slice_cols(v, head * d_h, d_h);
        Var logits = tape.scale(tape.matmul(qh, tape.transpose(kh)), scale);
        if (use_bias) {
            Var head_table = tape.gather_rows(relpos, {head});
            logits = tape.add(logits, tape.bias_lookup(head_table, bias_idx, n, n));
        }
        if (want_cls_scores && n > 1) {
            // Eq.10 pruning score: softmax of the cls-query logits over the
            // regional keys only (cls-to-cls excluded), averaged over heads
            const Tensor& lv = tape.val(logits);
            double mx = lv.at(0, 1);
            for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, lv.at(0, j));
            double denom = 0.0;
            for (std::size_t j = 1; j < n; ++j) denom += std::exp(lv.at(0, j) - mx);
            if (score_acc.empty()) score_acc.assign(n - 1, 0.0);
            for (std::size_t j = 1; j < n; ++j)
                score_acc[j - 1] += std::exp(lv.at(0, j) - mx) / denom;
        }
        Var probs = tape.masked_softmax_rows(logits, mask);
        head_outs.push_back(tape.matmul(probs, vh));
    }
    if (!score_acc.empty())
        for (auto& s : score_acc) s /= static_cast<double>(heads);
    result.cls_scores = std::move(score_acc);
    result.out = tape.add_rowvec(
        tape.matmul(tape.concat_cols(head_outs), tape.param(params_.get(prefix + ".o.w"))),
        tape.param(params_.get(prefix + ".o.b")));
    (void)d;
    return result;
}

Var Model::ffn(Tape& tape, Var x, const std::string& prefix) const {
    Var h = tape.layernorm(x, tape.param(params_.get(prefix + ".ln2.g")),
                           tape.param(params_.get(prefix + ".ln2.b")));
    Var f = tape.add_rowvec(tape.matmul(h, tape.param(params_.get(prefix + ".ffn1.w"))),
                            tape.param(params_.get(prefix + ".ffn1.b")));
    f = tape.gelu(f);
    f = tape.add_rowvec(tape.matmul(f, tape.param(params_.get(prefix + ".ffn2.w"))),
                        tape.param(params_.get(prefix + ".ffn2.b")));
    return tape.add(x, f);
}

VisualForward Model::visual_forward(Tape& tape, const Tensor& clip, ForwardPlan& plan) const {
    const std::size_t d = cfg_.dim;
    const std::size_t gh = cfg_.grid_h(), gw = cfg_.grid_w(), tpf = cfg_.tokens_per_frame();

    Tensor patches = tokenize_patches(clip);
    const auto order = topology::reorder_tokens(cfg_.frames, gh, gw, cfg_.sparsity.order);

    // sequence order: cls, then regional tokens in (possibly reordered) order
    const std::size_t n0 = cfg_.n_regional();
    Tensor ordered({n0, patches.cols()});
    std::vector<attention::GridCoord> coords(n0 + 1);
    std::vector<std::size_t> orig_index(n0);
    std::vector<std::size_t> pos_rows(n0 + 1);
    pos_rows[0] = 0;
    for (std::size_t pos = 0; pos < n0; ++pos) {
        const std::size_t tok = order.to_token[pos];
        for (std::size_t j = 0; j < patches.cols(); ++j) ordered.at(pos, j) = patches.at(tok, j);
        orig_index[pos] = tok;
        pos_rows[pos + 1] = tok + 1;
        coords[pos + 1] = {static_cast<int>(tok / tpf), static_cast<int>((tok % tpf) / gw),
                           static_cast<int>(tok % gw)};
    }

    Var embedded = tape.add_rowvec(
        tape.matmul(tape.input(std::move(ordered)), tape.param(params_.get("visual.patch.w"))),
        tape.param(params_.get("visual.patch.b")));
    Var x = tape.concat_rows({tape.param(params_.get("visual.cls")), embedded});
    x = tape.add(x, tape.gather_rows(tape.param(params_.get("visual.pos")), pos_rows));

    VisualForward fwd;
    std::size_t prune_idx = 0;
    for (std::size_t layer = 1; layer <= cfg_.visual_depth; ++layer) {
        const std::string prefix = "visual.L" + std::to_string(layer - 1);
        const std::size_t n_reg = coords.size() - 1;

        grad::KeyMaskPtr mask;
        if (cfg_.sparsity.enabled) {
            auto edges = topology::make_edge_set(n_reg, cfg_.sparsity.block, cfg_.sparsity.k_local,
                                                 cfg_.sparsity.k_random,
                                                 mix_seed(plan.edge_seed, layer));
            mask = std::make_shared<const grad::KeyMask>(topology::token_adjacency(edges));
        }
        const double q_rate = cfg_.prune.rate_at(layer);
        const bool prunes = q_rate < 1.0;
        AttnOut attn = self_attention(tape, x, prefix, mask, &coords, prunes);
        x = tape.add(x, attn.out);

        if (prunes) {
            pruning::KeepDecision keep;
            if (plan.pin_decisions && prune_idx < plan.pinned_visual.size()) {
                keep.kept_indices = plan.pinned_visual[prune_idx];
                keep.keep_rate = q_rate;
                keep.scores = attn.cls_scores;
            } else {
                keep = pruning::select_top(attn.cls_scores, q_rate);
                if (plan.pin_decisions) plan.pinned_visual.push_back(keep.kept_indices);
            }
            ++prune_idx;

            std::vector<std::size_t> rows{0};
            std::vector<attention::GridCoord> new_coords{coords[0]};
            std::vector<std::size_t> new_orig;
            for (auto i : keep.kept_indices) {
                rows.push_back(i + 1);
                new_coords.push_back(coords[i + 1]);
                new_orig.push_back(orig_index[i]);
            }
            x = tape.gather_rows(x, rows);
            coords = std::move(new_coords);

            std::vector<bool> grid_mask(n0, false);
            for (auto oi : new_orig) grid_mask[oi] = true;
            fwd.keep_masks.push_back(std::move(grid_mask));
            fwd.keeps.push_back(std::move(keep));
            orig_index = std::move(new_orig);
        }
        x = ffn(tape, x, prefix);
    }

    x = tape.layernorm(x, tape.param(params_.get("visual.ln_f.g")),
                       tape.param(params_.get("visual.ln_f.b")));
    Var cls = tape.gather_rows(x, {0});
    Var z = tape.add_rowvec(tape.matmul(cls, tape.param(params_.get("visual.proj.w"))),
                            tape.param(params_.get("visual.proj.b")));
    fwd.z = tape.l2_normalize_rows(z);
    fwd.tokens.emb = x;
    fwd.tokens.coords = std::move(coords);
    fwd.tokens.orig_index = std::move(orig_index);
    (void)d;
    return fwd;
}

TextForward Model::text_forward(Tape& tape, const std::vector<std::size_t>& token_ids) const {
    if (token_ids.size() > cfg_.text_len)
        throw std::invalid_argument("text_forward: sequence longer than text_len");
    for (auto id : token_ids)
        if (id >= cfg_.vocab) throw std::invalid_argument("text_forward: out-of-vocab token id");

    std::vector<std::size_t> pos_rows{0};
    for (std::size_t i = 0; i < token_ids.size(); ++i) pos_rows.push_back(i + 1);

    Var tok = tape.gather_rows(tape.param(params_.get("text.tok")), token_ids);
    Var x = tape.concat_rows({tape.param(params_.get("text.cls")), tok});
    x = tape.add(x, tape.gather_rows(tape.param(params_.get("text.pos")), pos_rows));

    const std::size_t text_only = cfg_.text_depth - cfg_.multimodal_depth;
    for (std::size_t l = 0; l < text_only; ++l) {
        const std::string prefix = "text.L" + std::to_string(l);
        x = tape.add(x, self_attention(tape, x, prefix, nullptr, nullptr, false).out);
        x = ffn(tape, x, prefix);
    }

    TextForward fwd;
    fwd.hidden = x;
    fwd.n_rows = token_ids.size() + 1;
    Var pooled = tape.layernorm(x, tape.param(params_.get("text.ln_f.g")),
                                tape.param(params_.get("text.ln_f.b")));
    Var cls = tape.gather_rows(pooled, {0});
    Var z = tape.add_rowvec(tape.matmul(cls, tape.param(params_.get("text.proj.w"))),
                            tape.param(params_.get("text.proj.b")));
    fwd.z = tape.l2_normalize_rows(z);
    return fwd;
}

MultimodalForward Model::multimodal_forward(Tape& tape, const TokenSequence& visual,
                                            grad::Var text_hidden, std::size_t n_text_rows,
                                            ForwardPlan& plan) const {
    if (!visual.emb.valid() || tape.val(visual.emb).rows() == 0)
        throw std::invalid_argument("multimodal_forward: empty visual sequence");
    const std::size_t d = cfg_.dim, heads = cfg_.heads, d_h = cfg_.head_dim();
    const double scale = 1.0 / std::sqrt(static_cast<double>(d_h));

    Var x = text_hidden;
    Var vis = visual.emb;
    MultimodalForward fwd;

    const std::size_t text_only = cfg_.text_depth - cfg_.multimodal_depth;
    for (std::size_t i = 0; i < cfg_.multimodal_depth; ++i) {
        const std::string prefix = "text.L" + std::to_string(text_only + i);
        x = tape.add(x, self_attention(tape, x, prefix, nullptr, nullptr, false).out);

        // text-to-video cross attention
        Var hq = tape.layernorm(x, tape.param(params_.get(prefix + ".xln.g")),
                                tape.param(params_.get(prefix + ".xln.b")));
        Var q = tape.add_rowvec(tape.matmul(hq, tape.param(params_.get(prefix + ".xq.w"))),
                                tape.param(params_.get(prefix + ".xq.b")));
        Var k = tape.add_rowvec(tape.matmul(vis, tape.param(params_.get(prefix + ".xk.w"))),
                                tape.param(params_.get(prefix + ".xk.b")));
        Var v = tape.add_rowvec(tape.matmul(vis, tape.param(params_.get(prefix + ".xv.w"))),
                                tape.param(params_.get(prefix + ".xv.b")));
        std::vector<Var> head_outs;
        std::vector<double> score_acc;
        const std::size_t n_vis = tape.val(vis).rows();
        const bool prune_here = i == 0 && cfg_.prune.multimodal_keep_rate < 1.0 && n_vis > 1;
        for (std::size_t head = 0; head < heads; ++head) {
            Var qh = tape.slice_cols(q, head * d_h, d_h);
            Var kh = tape.slice_cols(k, head * d_h, d_h);
            Var vh = tape.slice_cols(v, head * d_h, d_h);
            Var logits = tape.scale(tape.matmul(qh, tape.transpose(kh)), scale);
            if (prune_here) {
                // Eq.12 score: text-cls attention over the regional visual keys
                const Tensor& lv = tape.val(logits);
                double mx = lv.at(0, 1);
                for (std::size_t j = 1; j < n_vis; ++j) mx = std::max(mx, lv.at(0, j));
                double denom = 0.0;
                for (std::size_t j = 1; j < n_vis; ++j) denom += std::exp(lv.at(0, j) - mx);
                if (score_acc.empty()) score_acc.assign(n_vis - 1, 0.0);
                for (std::size_t j = 1; j < n_vis; ++j)
                    score_acc[j - 1] += std::exp(lv.at(0, j) - mx) / denom;
            }
            Var probs = tape.masked_softmax_rows(logits, nullptr);
            head_outs.push_back(tape.matmul(probs, vh));
        }
        Var xattn = tape.add_rowvec(
            tape.matmul(tape.concat_cols(head_outs), tape.param(params_.get(prefix + ".xo.w"))),
            tape.param(params_.get(prefix + ".xo.b")));
        x = tape.add(x, xattn);

        if (prune_here) {
            for (auto& s : score_acc) s /= static_cast<double>(heads);
            pruning::KeepDecision keep;
            if (plan.pin_decisions && plan.pinned_multimodal) {
                keep.kept_indices = *plan.pinned_multimodal;
                keep.keep_rate = cfg_.prune.multimodal_keep_rate;
                keep.scores = score_acc;
            } else {
                keep = pruning::select_top(score_acc, cfg_.prune.multimodal_keep_rate);
                if (plan.pin_decisions) plan.pinned_multimodal = keep.kept_indices;
            }
            std::vector<std::size_t> rows{0};
            for (auto idx : keep.kept_indices) rows.push_back(idx + 1);
            vis = tape.gather_rows(vis, rows);
            fwd.keep = std::move(keep);
        }
        x = ffn(tape, x, prefix);
    }

    x = tape.layernorm(x, tape.param(params_.get("mm.ln_f.g")),
                       tape.param(params_.get("mm.ln_f.b")));
    fwd.hidden = x;
    fwd.y = tape.gather_rows(x, {0});
    (void)d;
    (void)n_text_rows;
    return fwd;
}

Var Model::vtm_head(Tape& tape, Var y) const {
    Var s = tape.add_rowvec(tape.matmul(y, tape.param(params_.get("vtm.w"))),
                            tape.param(params_.get("vtm.b")));
    return tape.sigmoid(s);
}

Var Model::mlm_logits(Tape& tape, Var hidden, std::vector<std::size_t> rows) const {
    Var picked = tape.gather_rows(hidden, std::move(rows));
    return tape.add_rowvec(tape.matmul(picked, tape.param(params_.get("mlm.w"))),
                           tape.param(params_.get("mlm.b")));
}

Var Model::temperature(Tape& tape) const {
    return tape.exp(tape.param(params_.get("logit_tau")));
}

void Model::clamp_temperature() {
    auto& p = params_.get("logit_tau");
    const double lo = std::log(kTauMin), hi = std::log(kTauMax);
    if (p.value[0] < lo) p.value[0] = lo;
    if (p.value[0] > hi) p.value[0] = hi;
}

}  // namespace svitt::encoder
