/* Copyright 2026 the svitt authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the sparse video-text transformer library. All functions
 * return svitt_status; on failure svitt_last_error() describes the problem
 * (thread-local). Strings returned through char** are heap-allocated and must
 * be released with svitt_string_free().
 */
#ifndef SVITT_H_
#define SVITT_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum svitt_status {
    SVITT_OK = 0,
    SVITT_ERR_INVALID = 1, /* bad config / arguments */
    SVITT_ERR_NUMERIC = 2, /* non-finite loss or gradients */
    SVITT_ERR_IO = 3       /* file system / format errors */
} svitt_status;

typedef struct svitt_model svitt_model;

const char* svitt_last_error(void);
void svitt_string_free(char* s);

/* model lifecycle */
svitt_status svitt_model_create(const char* config_json, uint64_t seed, svitt_model** out);
svitt_status svitt_model_load(const char* ckpt_path, svitt_model** out);
svitt_status svitt_model_save(const svitt_model* model, const char* ckpt_path);
svitt_status svitt_model_config(const svitt_model* model, char** json_out);
void svitt_model_free(svitt_model* model);

/* synthetic corpus: clip directories of PNG frames plus manifest.json */
svitt_status svitt_generate_corpus(const char* out_dir, size_t n_clips, size_t frames,
                                   uint64_t seed, int distinct_labels);

/* one curriculum stage of optimization; stage_json keys: steps, batch, lr,
 * warmup, mask_prob (all optional) */
svitt_status svitt_train_stage(svitt_model* model, const char* data_dir, const char* stage_json,
                               uint64_t seed, const char* metrics_csv_path,
                               const char* ckpt_out_path);

/* retrieval metrics as JSON {"r1":..,"r5":..,"r10":..,"mean":..} */
svitt_status svitt_evaluate(svitt_model* model, const char* data_dir, uint64_t seed,
                            int shuffle_frames, char** json_out);

/* frame-order probe: {"normal":{...},"shuffled":{...},"delta":..} */
svitt_status svitt_probe(svitt_model* model, const char* data_dir, uint64_t seed,
                         char** json_out);

/* expand a checkpoint to the next curriculum stage (longer clips) */
svitt_status svitt_expand(const char* ckpt_in, const char* stage_json, size_t stage_index,
                          const char* ckpt_out);

/* schedule validation; json_out lists violations as
 * [{"rule":..,"from_stage":..,"to_stage":..,"detail":..}] (empty = valid) */
svitt_status svitt_validate_schedule(const char* schedule_json, char** json_out);

/* analytic cost accounting; config_json keys: frames, visual_depth,
 * multimodal_depth, grid_h, grid_w, text_len, text_depth, dim, heads,
 * patch_in, sparse{edges,k_local,k_random,block,nodes,prune_layers,
 * visual_keep,multimodal_keep}. full_scale != 0 starts from the full-scale
 * defaults instead of the desk-scale ones. */
svitt_status svitt_cost_report(const char* config_json, int full_scale, char** json_out,
                               char** table_out);

/* keep-mask CSV for one corpus clip ("layer,frame,row,col,kept") */
svitt_status svitt_export_masks(svitt_model* model, const char* data_dir, size_t clip_index,
                                uint64_t seed, char** csv_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SVITT_H_ */
