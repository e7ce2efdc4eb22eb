// Copyright 2026 the svitt authors
// SPDX-License-Identifier: Apache-2.0
#include "svitt/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "svitt/checkpoint.hpp"
#include "svitt/objectives.hpp"
#include "svitt/optim.hpp"
#include "svitt/pruning.hpp"

namespace svitt::train {

using grad::Tape;
using grad::Var;

namespace {

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed ^ (0x9e3779b97f4a7c15ULL * (salt + 1));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void append(std::string& out, const char* fmt, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), fmt, v);
    out += buf;
}

}  // namespace

std::string metrics_csv(const std::vector<StepMetrics>& metrics) {
    std::string out = "step,loss_total,loss_vtc,loss_vtm,loss_mlm,lr\n";
    for (const auto& m : metrics) {
        out += std::to_string(m.step);
        for (double v : {m.total, m.vtc, m.vtm, m.mlm, m.lr}) append(out, ",%.10g", v);
        out += "\n";
    }
    return out;
}

StageResult train_stage(encoder::Model& model, const std::string& data_dir,
                        const StageRunConfig& cfg, std::uint64_t seed,
                        const std::string& csv_path, const std::string& ckpt_path) {
    const auto man = data::load_manifest(data_dir);
    if (man.clips.empty()) throw std::invalid_argument("train: empty corpus");
    if (man.frames < model.config().frames)
        throw std::invalid_argument("train: corpus frames < model frames");
    const std::size_t batch = std::min(cfg.batch, man.clips.size());
    if (batch < 2) throw std::invalid_argument("train: need batch >= 2 for contrastive loss");

    Rng rng(mix(seed, 0x7261696e));
    grad::AdamW opt;
    StageResult result;

    // clips that share appearance with clip i but differ only in motion
    // (opposite direction, other speed, still vs moving, or the reversed
    // color transition); pairing them inside a batch gives the contrastive
    // loss hard negatives that static appearance cues cannot separate
    const auto is_twin = [](const data::ClipLabels& a, const data::ClipLabels& b) {
        if (a.shape != b.shape) return false;
        if (a.transition || b.transition) {
            // the reversed pair (colors swapped) or the still clip a
            // transition impersonates in one of its halves
            if (a.transition && b.transition)
                return a.color == b.color2 && a.color2 == b.color;
            const auto& t = a.transition ? a : b;
            const auto& s = a.transition ? b : a;
            return s.still && (s.color == t.color || s.color == t.color2);
        }
        if (a.color != b.color) return false;
        const bool opposite = !a.still && !b.still && a.speed == b.speed &&
                              (a.direction + 4) % 8 == b.direction;
        const bool other_speed =
            !a.still && !b.still && a.direction == b.direction && a.speed != b.speed;
        return opposite || other_speed || a.still != b.still;
    };
    // twins that differ from the anchor only through the temporal order of
    // the frames are the hardest negatives: opposite-direction movers and
    // reversed color transitions
    const auto is_order_twin = [](const data::ClipLabels& a, const data::ClipLabels& b) {
        if (a.transition || b.transition)
            return a.transition && b.transition && a.color == b.color2 && a.color2 == b.color;
        return !a.still && !b.still && a.speed == b.speed &&
               (a.direction + 4) % 8 == b.direction;
    };
    std::vector<std::vector<std::size_t>> motion_twins(man.clips.size());
    std::vector<std::size_t> opposite_counts(man.clips.size(), 0);
    for (std::size_t i = 0; i < man.clips.size(); ++i) {
        const auto& a = man.clips[i].labels;
        for (std::size_t j = 0; j < man.clips.size(); ++j)
            if (i != j && is_twin(a, man.clips[j].labels)) motion_twins[i].push_back(j);
        // keep the hardest negatives at the front and bias sampling to them
        std::stable_partition(motion_twins[i].begin(), motion_twins[i].end(),
                              [&](std::size_t j) { return is_order_twin(a, man.clips[j].labels); });
        for (std::size_t j : motion_twins[i])
            opposite_counts[i] += is_order_twin(a, man.clips[j].labels);
    }

    auto flush = [&](const std::string& why) {
        std::ofstream os(csv_path);
        os << metrics_csv(result.metrics);
        checkpoint::save(model, ckpt_path);
        if (!why.empty()) {
            result.ok = false;
            result.error = why;
        }
    };

    for (std::size_t step = 0; step < cfg.steps; ++step) {
        // sample a batch of distinct clips, pairing anchors with a motion
        // twin whenever the corpus provides one
        const auto anchors = rng.sample_without_replacement(man.clips.size(), batch);
        std::vector<std::size_t> picks;
        for (std::size_t a : anchors) {
            if (picks.size() == batch) break;
            if (std::find(picks.begin(), picks.end(), a) != picks.end()) continue;
            picks.push_back(a);
            if (picks.size() == batch || motion_twins[a].empty()) continue;
            const std::size_t span = (opposite_counts[a] > 0 && rng.below(2) == 0)
                                         ? opposite_counts[a]
                                         : motion_twins[a].size();
            const std::size_t twin = motion_twins[a][rng.below(span)];
            if (std::find(picks.begin(), picks.end(), twin) == picks.end())
                picks.push_back(twin);
        }
        Tape tape;
        std::vector<Var> zv_rows, zt_rows;
        std::vector<encoder::VisualForward> visuals;
        std::vector<Var> text_hiddens;
        std::vector<std::size_t> text_rows;
        std::vector<std::vector<std::size_t>> batch_tokens;
        for (std::size_t b = 0; b < batch; ++b) {
            const auto& meta = man.clips[picks[b]];
            auto idx = data::sample_frames(man.frames, model.config().frames, rng);
            std::vector<std::size_t> tokens = meta.tokens;
            // label-preserving augmentations: reversing time flips the
            // direction word (or the transition colors), and toroidal
            // translation is caption-neutral; both remove clip-identity
            // shortcuts from the contrastive task
            if (!meta.labels.still && rng.below(2) == 1) {
                std::reverse(idx.begin(), idx.end());
                tokens = data::reversed_caption_tokens(tokens);
            }
            Tensor clip = data::load_clip(data_dir, meta, idx);
            const std::size_t dy = rng.below(clip.shape[1]), dx = rng.below(clip.shape[2]);
            clip = data::translate_clip(clip, dx, dy);
            encoder::ForwardPlan plan;
            plan.edge_seed = rng.next();
            visuals.push_back(model.visual_forward(tape, clip, plan));
            zv_rows.push_back(visuals.back().z);
            auto text = model.text_forward(tape, tokens);
            zt_rows.push_back(text.z);
            text_hiddens.push_back(text.hidden);
            text_rows.push_back(text.n_rows);
            batch_tokens.push_back(std::move(tokens));
        }
        Var tau = model.temperature(tape);
        Var vtc = objectives::vtc_loss(tape, tape.concat_rows(zv_rows),
                                       tape.concat_rows(zt_rows), tau);
        vtc = tape.scale(vtc, 1.0 / (2.0 * static_cast<double>(batch)));

        std::vector<Var> vtm_terms, mlm_terms;
        std::size_t masked_total = 0;
        for (std::size_t b = 0; b < batch; ++b) {
            encoder::ForwardPlan mm_plan;  // no visual prune decisions inside
            auto pos =
                model.multimodal_forward(tape, visuals[b].tokens, text_hiddens[b],
                                         text_rows[b], mm_plan);
            const std::size_t neg_b = objectives::draw_negative(b, batch, rng);
            encoder::ForwardPlan neg_plan;
            auto neg =
                model.multimodal_forward(tape, visuals[neg_b].tokens, text_hiddens[b],
                                         text_rows[b], neg_plan);
            vtm_terms.push_back(objectives::vtm_pair_loss(
                tape, model.vtm_head(tape, pos.y), model.vtm_head(tape, neg.y)));

            std::vector<std::size_t> masked = batch_tokens[b];
            const auto mask =
                objectives::apply_mlm_mask(masked, data::kMaskId, cfg.mask_prob, rng);
            auto masked_text = model.text_forward(tape, masked);
            encoder::ForwardPlan mlm_plan;
            auto mm = model.multimodal_forward(tape, visuals[b].tokens, masked_text.hidden,
                                               masked_text.n_rows, mlm_plan);
            std::vector<std::size_t> rows;
            for (auto p : mask.positions) rows.push_back(p + 1);  // cls offset
            Var logits = model.mlm_logits(tape, mm.hidden, rows);
            mlm_terms.push_back(objectives::mlm_loss(tape, logits, mask.originals));
            masked_total += mask.positions.size();
        }
        Var vtm = vtm_terms[0];
        for (std::size_t i = 1; i < vtm_terms.size(); ++i) vtm = tape.add(vtm, vtm_terms[i]);
        vtm = tape.scale(vtm, 1.0 / (2.0 * static_cast<double>(batch)));
        Var mlm = mlm_terms[0];
        for (std::size_t i = 1; i < mlm_terms.size(); ++i) mlm = tape.add(mlm, mlm_terms[i]);
        mlm = tape.scale(mlm, 1.0 / static_cast<double>(masked_total));
        Var total = tape.add(tape.add(vtc, vtm), mlm);

        StepMetrics m;
        m.step = step;
        m.vtc = tape.val(vtc)[0];
        m.vtm = tape.val(vtm)[0];
        m.mlm = tape.val(mlm)[0];
        m.total = tape.val(total)[0];
        m.lr = grad::cosine_lr(cfg.lr, step, cfg.warmup, cfg.steps);
        if (!std::isfinite(m.total)) {
            flush("non-finite loss at step " + std::to_string(step));
            return result;
        }
        model.params().zero_grads();
        tape.backward(total);
        if (!opt.step(model.params(), m.lr)) {
            flush("non-finite gradient at step " + std::to_string(step));
            return result;
        }
        model.clamp_temperature();
        result.metrics.push_back(m);
    }
    flush("");
    return result;
}

namespace {

// joint embeddings for the whole corpus; one tape per clip, forward only
void embed_corpus(encoder::Model& model, const std::string& data_dir,
                  const data::Manifest& man, std::uint64_t seed, bool shuffle_frames,
                  Tensor& zv, Tensor& zt) {
    const std::size_t d = model.config().dim;
    zv = Tensor({man.clips.size(), d});
    zt = Tensor({man.clips.size(), d});
    for (std::size_t i = 0; i < man.clips.size(); ++i) {
        Rng rng(mix(seed, i));
        auto idx = data::sample_frames(man.frames, model.config().frames, rng);
        if (shuffle_frames) {
            for (std::size_t k = idx.size(); k > 1; --k)
                std::swap(idx[k - 1], idx[rng.below(k)]);
        }
        const Tensor clip = data::load_clip(data_dir, man.clips[i], idx);
        Tape tape;
        encoder::ForwardPlan plan;
        plan.edge_seed = mix(seed, 0xe000 + i);
        auto v = model.visual_forward(tape, clip, plan);
        auto t = model.text_forward(tape, man.clips[i].tokens);
        for (std::size_t j = 0; j < d; ++j) {
            zv.at(i, j) = tape.val(v.z)[j];
            zt.at(i, j) = tape.val(t.z)[j];
        }
    }
}

}  // namespace

RetrievalResult evaluate_retrieval(encoder::Model& model, const std::string& data_dir,
                                   std::uint64_t seed, bool shuffle_frames) {
    const auto man = data::load_manifest(data_dir);
    if (man.clips.empty()) throw std::invalid_argument("eval: empty corpus");
    Tensor zv, zt;
    embed_corpus(model, data_dir, man, seed, shuffle_frames, zv, zt);

    const std::size_t n = man.clips.size();
    RetrievalResult res;
    std::size_t hit1 = 0, hit5 = 0, hit10 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::vector<double> sim(n);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < zv.cols(); ++k) sim[j] += zt.at(i, k) * zv.at(j, k);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return sim[a] > sim[b]; });
        const std::size_t rank =
            std::find(order.begin(), order.end(), i) - order.begin();
        hit1 += rank < 1;
        hit5 += rank < 5;
        hit10 += rank < 10;
        res.ranking.push_back(std::move(order));
    }
    res.r1 = 100.0 * hit1 / n;
    res.r5 = 100.0 * hit5 / n;
    res.r10 = 100.0 * hit10 / n;
    res.mean = (res.r1 + res.r5 + res.r10) / 3.0;
    return res;
}

ProbeResult temporal_probe(encoder::Model& model, const std::string& data_dir,
                           std::uint64_t seed) {
    if (model.config().frames < 2)
        throw std::invalid_argument("probe: undefined for single-frame models");
    ProbeResult res;
    res.normal = evaluate_retrieval(model, data_dir, seed, false);
    res.shuffled = evaluate_retrieval(model, data_dir, seed, true);
    res.delta = res.normal.mean - res.shuffled.mean;
    return res;
}

std::string export_masks(encoder::Model& model, const Tensor& clip, std::uint64_t seed) {
    const auto& cfg = model.config();
    if (!cfg.prune.has_visual() && cfg.prune.multimodal_keep_rate >= 1.0)
        throw std::invalid_argument("export-masks: pruning disabled");
    Tape tape;
    encoder::ForwardPlan plan;
    plan.edge_seed = mix(seed, 0x6d61736b);
    plan.pin_decisions = true;
    auto fwd = model.visual_forward(tape, clip, plan);

    std::string out = "layer,frame,row,col,kept\n";
    for (std::size_t i = 0; i < fwd.keep_masks.size(); ++i)
        out += pruning::keep_mask_csv_rows(cfg.prune.visual_layers[i], cfg.frames, cfg.grid_h(),
                                           cfg.grid_w(), fwd.keep_masks[i]);
    if (cfg.prune.multimodal_keep_rate < 1.0) {
        // run the multimodal stack against an all-pad caption to realize the
        // cross-modal prune decision for this clip
        std::vector<std::size_t> pads(cfg.text_len, 0);
        auto text = model.text_forward(tape, pads);
        auto mm = model.multimodal_forward(tape, fwd.tokens, text.hidden, text.n_rows, plan);
        std::vector<bool> grid(cfg.n_regional(), false);
        if (mm.keep)
            for (auto k : mm.keep->kept_indices) grid[fwd.tokens.orig_index[k]] = true;
        out += pruning::keep_mask_csv_rows(cfg.visual_depth + 1, cfg.frames, cfg.grid_h(),
                                           cfg.grid_w(), grid);
    }
    return out;
}

}  // namespace svitt::train
