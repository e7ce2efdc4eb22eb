// Copyright 2026 the svitt authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end; everything goes through the C API in svitt.h.
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "svitt.h"

namespace {

namespace fs = std::filesystem;

int exit_code(svitt_status st) {
    switch (st) {
        case SVITT_OK: return 0;
        case SVITT_ERR_INVALID: return 2;
        case SVITT_ERR_NUMERIC: return 3;
        default: return 1;
    }
}

int fail(svitt_status st) {
    std::cerr << "error: " << svitt_last_error() << "\n";
    return exit_code(st);
}

std::string read_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) {
        std::cerr << "error: cannot read " << path << "\n";
        std::exit(2);
    }
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

void print_and_free(char* s) {
    std::cout << s;
    if (*s && s[std::strlen(s) - 1] != '\n') std::cout << "\n";
    svitt_string_free(s);
}

struct ModelHandle {
    svitt_model* ptr = nullptr;
    ~ModelHandle() { svitt_model_free(ptr); }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sparse video-text transformer toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".";
    std::uint64_t seed = 0;
    app.add_option("--config", config_path, "JSON config file")->expected(1);
    app.add_option("--seed", seed, "RNG seed");
    app.add_option("--out", out_dir, "output directory");

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic sprite-clip corpus");
    std::size_t gen_n = 64, gen_frames = 16;
    bool gen_distinct = false;
    gen->add_option("--n", gen_n, "number of clips");
    gen->add_option("--frames", gen_frames, "frames per clip");
    gen->add_flag("--distinct", gen_distinct, "draw label combinations without repetition");

    // train
    auto* train = app.add_subcommand("train", "run one curriculum stage of pretraining");
    std::string train_data, train_ckpt_in, train_stage_json;
    train->add_option("--data", train_data, "corpus directory")->required();
    train->add_option("--ckpt-in", train_ckpt_in, "checkpoint to resume from");
    train->add_option("--stage", train_stage_json,
                      "stage JSON (steps, batch, lr, warmup, mask_prob)");

    // expand
    auto* expand = app.add_subcommand("expand", "expand a checkpoint to a longer-clip stage");
    std::string exp_ckpt_in, exp_stage;
    std::size_t exp_index = 2;
    expand->add_option("--ckpt-in", exp_ckpt_in, "source checkpoint")->required();
    expand->add_option("--stage", exp_stage, "target stage JSON")->required();
    expand->add_option("--stage-index", exp_index, "stage number stored in the config");

    // eval / probe
    auto* eval = app.add_subcommand("eval", "text-to-video retrieval metrics");
    auto* probe = app.add_subcommand("probe", "frame-order sensitivity probe");
    std::string eval_ckpt, eval_data;
    for (auto* cmd : {eval, probe}) {
        cmd->add_option("--ckpt", eval_ckpt, "model checkpoint")->required();
        cmd->add_option("--data", eval_data, "corpus directory")->required();
    }

    // cost
    auto* cost = app.add_subcommand("cost", "analytic edge/FLOP/memory accounting");
    bool full_scale = false;
    bool cost_json_only = false;
    cost->add_flag("--full-scale", full_scale, "use full-scale stack dimensions");
    cost->add_flag("--json", cost_json_only, "emit JSON only");

    // export-masks
    auto* masks = app.add_subcommand("export-masks", "keep-mask CSV for one clip");
    std::string mask_ckpt, mask_data;
    std::size_t mask_clip = 0;
    masks->add_option("--ckpt", mask_ckpt, "model checkpoint")->required();
    masks->add_option("--data", mask_data, "corpus directory")->required();
    masks->add_option("--clip", mask_clip, "clip index");

    // validate-schedule
    auto* vs = app.add_subcommand("validate-schedule", "check curriculum monotonicity");

    CLI11_PARSE(app, argc, argv);

    const std::string config =
        config_path.empty() ? std::string() : read_file(config_path);
    fs::create_directories(out_dir);

    if (gen->parsed()) {
        const auto st = svitt_generate_corpus(out_dir.c_str(), gen_n, gen_frames, seed,
                                              gen_distinct ? 1 : 0);
        if (st != SVITT_OK) return fail(st);
        std::cout << "wrote " << gen_n << " clips to " << out_dir << "\n";
        return 0;
    }

    if (train->parsed()) {
        ModelHandle m;
        svitt_status st;
        if (!train_ckpt_in.empty())
            st = svitt_model_load(train_ckpt_in.c_str(), &m.ptr);
        else
            st = svitt_model_create(config.c_str(), seed, &m.ptr);
        if (st != SVITT_OK) return fail(st);
        const std::string csv = (fs::path(out_dir) / "metrics.csv").string();
        const std::string ckpt = (fs::path(out_dir) / "model.ckpt").string();
        st = svitt_train_stage(m.ptr, train_data.c_str(), train_stage_json.c_str(), seed,
                               csv.c_str(), ckpt.c_str());
        if (st != SVITT_OK) return fail(st);
        std::cout << "wrote " << csv << " and " << ckpt << "\n";
        return 0;
    }

    if (expand->parsed()) {
        const std::string ckpt = (fs::path(out_dir) / "model.ckpt").string();
        const auto st =
            svitt_expand(exp_ckpt_in.c_str(), exp_stage.c_str(), exp_index, ckpt.c_str());
        if (st != SVITT_OK) return fail(st);
        std::cout << "wrote " << ckpt << "\n";
        return 0;
    }

    if (eval->parsed() || probe->parsed()) {
        ModelHandle m;
        auto st = svitt_model_load(eval_ckpt.c_str(), &m.ptr);
        if (st != SVITT_OK) return fail(st);
        char* out = nullptr;
        st = eval->parsed() ? svitt_evaluate(m.ptr, eval_data.c_str(), seed, 0, &out)
                            : svitt_probe(m.ptr, eval_data.c_str(), seed, &out);
        if (st != SVITT_OK) return fail(st);
        print_and_free(out);
        return 0;
    }

    if (cost->parsed()) {
        char* jout = nullptr;
        char* tout = nullptr;
        const auto st =
            svitt_cost_report(config.c_str(), full_scale ? 1 : 0, &jout, &tout);
        if (st != SVITT_OK) return fail(st);
        print_and_free(jout);
        if (!cost_json_only) print_and_free(tout);
        else svitt_string_free(tout);
        return 0;
    }

    if (masks->parsed()) {
        ModelHandle m;
        auto st = svitt_model_load(mask_ckpt.c_str(), &m.ptr);
        if (st != SVITT_OK) return fail(st);
        char* csv = nullptr;
        st = svitt_export_masks(m.ptr, mask_data.c_str(), mask_clip, seed, &csv);
        if (st != SVITT_OK) return fail(st);
        const std::string path = (fs::path(out_dir) / "masks.csv").string();
        std::ofstream os(path);
        os << csv;
        svitt_string_free(csv);
        std::cout << "wrote " << path << "\n";
        return 0;
    }

    if (vs->parsed()) {
        if (config.empty()) {
            std::cerr << "error: validate-schedule needs --config\n";
            return 2;
        }
        char* out = nullptr;
        const auto st = svitt_validate_schedule(config.c_str(), &out);
        if (st != SVITT_OK) return fail(st);
        const bool clean = std::string(out) == "[]";
        print_and_free(out);
        return clean ? 0 : 2;
    }
    return 2;
}
