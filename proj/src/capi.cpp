// Copyright 2026 the svitt authors
// SPDX-License-Identifier: Apache-2.0
#include "svitt.h"

#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "svitt/checkpoint.hpp"
#include "svitt/costmodel.hpp"
#include "svitt/curriculum.hpp"
#include "svitt/data.hpp"
#include "svitt/encoder.hpp"
#include "svitt/train.hpp"

using nlohmann::json;

struct svitt_model {
    svitt::encoder::Model impl;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

template <typename Fn>
svitt_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const std::invalid_argument& e) {
        g_last_error = e.what();
        return SVITT_ERR_INVALID;
    } catch (const json::exception& e) {
        g_last_error = e.what();
        return SVITT_ERR_INVALID;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return SVITT_ERR_IO;
    }
}

svitt::train::StageRunConfig parse_stage_run(const char* stage_json) {
    svitt::train::StageRunConfig cfg;
    if (stage_json == nullptr || *stage_json == '\0') return cfg;
    const json j = json::parse(stage_json);
    cfg.steps = j.value("steps", cfg.steps);
    cfg.batch = j.value("batch", cfg.batch);
    cfg.lr = j.value("lr", cfg.lr);
    cfg.warmup = j.value("warmup", cfg.warmup);
    cfg.mask_prob = j.value("mask_prob", cfg.mask_prob);
    return cfg;
}

json retrieval_json(const svitt::train::RetrievalResult& r) {
    return {{"r1", r.r1}, {"r5", r.r5}, {"r10", r.r10}, {"mean", r.mean}};
}

}  // namespace

extern "C" {

const char* svitt_last_error(void) { return g_last_error.c_str(); }

void svitt_string_free(char* s) { std::free(s); }

svitt_status svitt_model_create(const char* config_json, uint64_t seed, svitt_model** out) {
    return guarded([&] {
        if (out == nullptr) throw std::invalid_argument("null output pointer");
        auto cfg = svitt::encoder::ModelConfig::from_json(
            config_json && *config_json ? config_json : "{}");
        *out = new svitt_model{svitt::encoder::Model(cfg, seed)};
        return SVITT_OK;
    });
}

svitt_status svitt_model_load(const char* ckpt_path, svitt_model** out) {
    return guarded([&] {
        if (out == nullptr || ckpt_path == nullptr)
            throw std::invalid_argument("null argument");
        *out = new svitt_model{svitt::checkpoint::load(ckpt_path)};
        return SVITT_OK;
    });
}

svitt_status svitt_model_save(const svitt_model* model, const char* ckpt_path) {
    return guarded([&] {
        if (model == nullptr || ckpt_path == nullptr)
            throw std::invalid_argument("null argument");
        svitt::checkpoint::save(model->impl, ckpt_path);
        return SVITT_OK;
    });
}

svitt_status svitt_model_config(const svitt_model* model, char** json_out) {
    return guarded([&] {
        if (model == nullptr || json_out == nullptr)
            throw std::invalid_argument("null argument");
        *json_out = dup_string(model->impl.config().to_json());
        return SVITT_OK;
    });
}

void svitt_model_free(svitt_model* model) { delete model; }

svitt_status svitt_generate_corpus(const char* out_dir, size_t n_clips, size_t frames,
                                   uint64_t seed, int distinct_labels) {
    return guarded([&] {
        if (out_dir == nullptr) throw std::invalid_argument("null output dir");
        svitt::data::generate_corpus(out_dir, n_clips, frames, seed, distinct_labels != 0);
        return SVITT_OK;
    });
}

svitt_status svitt_train_stage(svitt_model* model, const char* data_dir, const char* stage_json,
                               uint64_t seed, const char* metrics_csv_path,
                               const char* ckpt_out_path) {
    return guarded([&] {
        if (model == nullptr || data_dir == nullptr || metrics_csv_path == nullptr ||
            ckpt_out_path == nullptr)
            throw std::invalid_argument("null argument");
        const auto cfg = parse_stage_run(stage_json);
        const auto res = svitt::train::train_stage(model->impl, data_dir, cfg, seed,
                                                   metrics_csv_path, ckpt_out_path);
        if (!res.ok) {
            g_last_error = res.error;
            return SVITT_ERR_NUMERIC;
        }
        return SVITT_OK;
    });
}

svitt_status svitt_evaluate(svitt_model* model, const char* data_dir, uint64_t seed,
                            int shuffle_frames, char** json_out) {
    return guarded([&] {
        if (model == nullptr || data_dir == nullptr || json_out == nullptr)
            throw std::invalid_argument("null argument");
        const auto res = svitt::train::evaluate_retrieval(model->impl, data_dir, seed,
                                                          shuffle_frames != 0);
        *json_out = dup_string(retrieval_json(res).dump(2));
        return SVITT_OK;
    });
}

svitt_status svitt_probe(svitt_model* model, const char* data_dir, uint64_t seed,
                         char** json_out) {
    return guarded([&] {
        if (model == nullptr || data_dir == nullptr || json_out == nullptr)
            throw std::invalid_argument("null argument");
        const auto res = svitt::train::temporal_probe(model->impl, data_dir, seed);
        const json j = {{"normal", retrieval_json(res.normal)},
                        {"shuffled", retrieval_json(res.shuffled)},
                        {"delta", res.delta}};
        *json_out = dup_string(j.dump(2));
        return SVITT_OK;
    });
}

svitt_status svitt_expand(const char* ckpt_in, const char* stage_json, size_t stage_index,
                          const char* ckpt_out) {
    return guarded([&] {
        if (ckpt_in == nullptr || stage_json == nullptr || ckpt_out == nullptr)
            throw std::invalid_argument("null argument");
        const auto sched =
            svitt::curriculum::parse_schedule(std::string("[") + stage_json + "]");
        const auto src = svitt::checkpoint::load(ckpt_in);
        const auto dst =
            svitt::curriculum::expand_model(src, sched.stages.at(0), stage_index);
        svitt::checkpoint::save(dst, ckpt_out);
        return SVITT_OK;
    });
}

svitt_status svitt_validate_schedule(const char* schedule_json, char** json_out) {
    return guarded([&] {
        if (schedule_json == nullptr || json_out == nullptr)
            throw std::invalid_argument("null argument");
        const auto sched = svitt::curriculum::parse_schedule(schedule_json);
        json arr = json::array();
        for (const auto& v : svitt::curriculum::validate_schedule(sched))
            arr.push_back({{"rule", v.rule},
                           {"from_stage", v.from_stage},
                           {"to_stage", v.to_stage},
                           {"detail", v.detail}});
        *json_out = dup_string(arr.dump(2));
        return SVITT_OK;
    });
}

svitt_status svitt_cost_report(const char* config_json, int full_scale, char** json_out,
                               char** table_out) {
    return guarded([&] {
        svitt::costmodel::Dims dims;
        if (!full_scale) {
            // desk-scale defaults matching encoder::ModelConfig
            const svitt::encoder::ModelConfig mc;
            dims.visual_depth = mc.visual_depth;
            dims.multimodal_depth = mc.multimodal_depth;
            dims.frames = mc.frames;
            dims.grid_h = mc.grid_h();
            dims.grid_w = mc.grid_w();
            dims.text_len = mc.text_len + 1;
            dims.text_depth = mc.text_depth;
            dims.dim = mc.dim;
            dims.heads = mc.heads;
            dims.patch_in = mc.patch * mc.patch * mc.channels;
        }
        svitt::costmodel::SparseSpec sparse;
        if (config_json != nullptr && *config_json != '\0') {
            const json j = json::parse(config_json);
            dims.visual_depth = j.value("visual_depth", dims.visual_depth);
            dims.multimodal_depth = j.value("multimodal_depth", dims.multimodal_depth);
            dims.frames = j.value("frames", dims.frames);
            dims.grid_h = j.value("grid_h", dims.grid_h);
            dims.grid_w = j.value("grid_w", dims.grid_w);
            dims.text_len = j.value("text_len", dims.text_len);
            dims.text_depth = j.value("text_depth", dims.text_depth);
            dims.dim = j.value("dim", dims.dim);
            dims.heads = j.value("heads", dims.heads);
            dims.patch_in = j.value("patch_in", dims.patch_in);
            if (j.contains("sparse")) {
                const json& s = j.at("sparse");
                sparse.edges = s.value("edges", false);
                sparse.k_local = s.value("k_local", sparse.k_local);
                sparse.k_random = s.value("k_random", sparse.k_random);
                sparse.block = s.value("block", sparse.block);
                sparse.nodes = s.value("nodes", false);
                if (s.contains("prune_layers"))
                    sparse.prune_layers = s.at("prune_layers").get<std::vector<std::size_t>>();
                sparse.visual_keep = s.value("visual_keep", sparse.visual_keep);
                sparse.multimodal_keep = s.value("multimodal_keep", sparse.multimodal_keep);
            }
        }
        const auto report = svitt::costmodel::cost_report(dims, sparse);
        if (json_out != nullptr) *json_out = dup_string(report.to_json());
        if (table_out != nullptr) *table_out = dup_string(report.to_table());
        return SVITT_OK;
    });
}

svitt_status svitt_export_masks(svitt_model* model, const char* data_dir, size_t clip_index,
                                uint64_t seed, char** csv_out) {
    return guarded([&] {
        if (model == nullptr || data_dir == nullptr || csv_out == nullptr)
            throw std::invalid_argument("null argument");
        const auto man = svitt::data::load_manifest(data_dir);
        if (clip_index >= man.clips.size())
            throw std::invalid_argument("clip index out of range");
        svitt::Rng rng(seed);
        const auto idx = svitt::data::sample_frames(man.frames, model->impl.config().frames, rng);
        const auto clip = svitt::data::load_clip(data_dir, man.clips[clip_index], idx);
        *csv_out = dup_string(svitt::train::export_masks(model->impl, clip, seed));
        return SVITT_OK;
    });
}

}  // extern "C"
