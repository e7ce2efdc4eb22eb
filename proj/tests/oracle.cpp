// Copyright 2026 the svitt authors
// SPDX-License-Identifier: Apache-2.0
#include "oracle.hpp"

#include <cmath>

namespace oracle {

using svitt::Tensor;

namespace {

Tensor layernorm(const Tensor& x, const Tensor& g, const Tensor& b) {
    Tensor out({x.rows(), x.cols()});
    const std::size_t d = x.cols();
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double mean = 0;
        for (std::size_t j = 0; j < d; ++j) mean += x.at(i, j);
        mean /= d;
        double var = 0;
        for (std::size_t j = 0; j < d; ++j) var += (x.at(i, j) - mean) * (x.at(i, j) - mean);
        var /= d;
        const double inv = 1.0 / std::sqrt(var + 1e-6);
        for (std::size_t j = 0; j < d; ++j)
            out.at(i, j) = (x.at(i, j) - mean) * inv * g[j] + b[j];
    }
    return out;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    Tensor out = svitt::matmul(x, w);
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) out.at(i, j) += b[j];
    return out;
}

Tensor gelu(const Tensor& x) {
    Tensor out = x;
    for (auto& v : out.data) v = 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0)));
    return out;
}

Tensor l2_normalize(const Tensor& x) {
    Tensor out = x;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double ss = 0;
        for (std::size_t j = 0; j < x.cols(); ++j) ss += x.at(i, j) * x.at(i, j);
        const double inv = 1.0 / std::sqrt(ss + 1e-12);
        for (std::size_t j = 0; j < x.cols(); ++j) out.at(i, j) *= inv;
    }
    return out;
}

const Tensor& P(const svitt::encoder::Model& m, const std::string& name) {
    return m.params().get(name).value;
}

Tensor attn_block(const svitt::encoder::Model& m, const std::string& prefix, const Tensor& x,
                  const std::vector<svitt::attention::GridCoord>* coords) {
    const auto& cfg = m.config();
    Tensor h = layernorm(x, P(m, prefix + ".ln1.g"), P(m, prefix + ".ln1.b"));
    Tensor q = linear(h, P(m, prefix + ".q.w"), P(m, prefix + ".q.b"));
    Tensor k = linear(h, P(m, prefix + ".k.w"), P(m, prefix + ".k.b"));
    Tensor v = linear(h, P(m, prefix + ".v.w"), P(m, prefix + ".v.b"));
    const std::size_t n = x.rows(), heads = cfg.heads, d_h = cfg.head_dim();
    const double scale = 1.0 / std::sqrt(static_cast<double>(d_h));

    svitt::attention::RelPosBias bias;
    const bool use_bias = coords != nullptr && m.params().has(prefix + ".relpos");
    if (use_bias) {
        bias.t_dim = cfg.frames;
        bias.h_dim = cfg.grid_h();
        bias.w_dim = cfg.grid_w();
    }

    Tensor out({n, cfg.dim});
    for (std::size_t head = 0; head < heads; ++head) {
        const std::size_t off = head * d_h;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> logits(n);
            double mx = -1e300;
            for (std::size_t j = 0; j < n; ++j) {
                double dot = 0;
                for (std::size_t c = 0; c < d_h; ++c)
                    dot += q.at(i, off + c) * k.at(j, off + c);
                dot *= scale;
                if (use_bias) {
                    const long long idx = bias.index((*coords)[i], (*coords)[j]);
                    if (idx >= 0)
                        dot += P(m, prefix + ".relpos")
                                   .at(head, static_cast<std::size_t>(idx));
                }
                logits[j] = dot;
                mx = std::max(mx, dot);
            }
            double denom = 0;
            for (auto& l : logits) denom += std::exp(l - mx);
            for (std::size_t j = 0; j < n; ++j) {
                const double w = std::exp(logits[j] - mx) / denom;
                for (std::size_t c = 0; c < d_h; ++c)
                    out.at(i, off + c) += w * v.at(j, off + c);
            }
        }
    }
    Tensor proj = linear(out, P(m, prefix + ".o.w"), P(m, prefix + ".o.b"));
    for (std::size_t i = 0; i < proj.numel(); ++i) proj[i] += x[i];
    return proj;
}

Tensor ffn_block(const svitt::encoder::Model& m, const std::string& prefix, const Tensor& x) {
    Tensor h = layernorm(x, P(m, prefix + ".ln2.g"), P(m, prefix + ".ln2.b"));
    Tensor f = gelu(linear(h, P(m, prefix + ".ffn1.w"), P(m, prefix + ".ffn1.b")));
    Tensor o = linear(f, P(m, prefix + ".ffn2.w"), P(m, prefix + ".ffn2.b"));
    for (std::size_t i = 0; i < o.numel(); ++i) o[i] += x[i];
    return o;
}

}  // namespace

Tensor dense_attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads,
                       double scale, const Tensor* bias) {
    const std::size_t n_q = q.rows(), n_k = k.rows(), d = q.cols(), d_h = d / heads;
    Tensor out({n_q, d});
    for (std::size_t head = 0; head < heads; ++head) {
        const std::size_t off = head * d_h;
        for (std::size_t i = 0; i < n_q; ++i) {
            std::vector<double> logits(n_k);
            double mx = -1e300;
            for (std::size_t j = 0; j < n_k; ++j) {
                double dot = 0;
                for (std::size_t c = 0; c < d_h; ++c) dot += q.at(i, off + c) * k.at(j, off + c);
                dot *= scale;
                if (bias) dot += bias->at(i, j);
                logits[j] = dot;
                mx = std::max(mx, dot);
            }
            double denom = 0;
            for (auto& l : logits) denom += std::exp(l - mx);
            for (std::size_t j = 0; j < n_k; ++j) {
                const double w = std::exp(logits[j] - mx) / denom;
                for (std::size_t c = 0; c < d_h; ++c) out.at(i, off + c) += w * v.at(j, off + c);
            }
        }
    }
    return out;
}

Tensor visual_embed(const svitt::encoder::Model& m, const Tensor& clip) {
    const auto& cfg = m.config();
    Tensor patches = m.tokenize_patches(clip);
    Tensor x({cfg.n_regional() + 1, cfg.dim});
    Tensor emb = linear(patches, P(m, "visual.patch.w"), P(m, "visual.patch.b"));
    const Tensor& cls = P(m, "visual.cls");
    const Tensor& pos = P(m, "visual.pos");
    for (std::size_t j = 0; j < cfg.dim; ++j) x.at(0, j) = cls[j] + pos.at(0, j);
    for (std::size_t i = 0; i < cfg.n_regional(); ++i)
        for (std::size_t j = 0; j < cfg.dim; ++j) x.at(i + 1, j) = emb.at(i, j) + pos.at(i + 1, j);

    std::vector<svitt::attention::GridCoord> coords(cfg.n_regional() + 1);
    const std::size_t tpf = cfg.tokens_per_frame(), gw = cfg.grid_w();
    for (std::size_t i = 0; i < cfg.n_regional(); ++i)
        coords[i + 1] = {static_cast<int>(i / tpf), static_cast<int>((i % tpf) / gw),
                         static_cast<int>(i % gw)};

    for (std::size_t l = 0; l < cfg.visual_depth; ++l) {
        const std::string prefix = "visual.L" + std::to_string(l);
        x = attn_block(m, prefix, x, &coords);
        x = ffn_block(m, prefix, x);
    }
    x = layernorm(x, P(m, "visual.ln_f.g"), P(m, "visual.ln_f.b"));
    Tensor cls_row({1, cfg.dim});
    for (std::size_t j = 0; j < cfg.dim; ++j) cls_row.at(0, j) = x.at(0, j);
    return l2_normalize(linear(cls_row, P(m, "visual.proj.w"), P(m, "visual.proj.b")));
}

Tensor text_embed(const svitt::encoder::Model& m, const std::vector<std::size_t>& ids) {
    const auto& cfg = m.config();
    const std::size_t n = ids.size() + 1;
    Tensor x({n, cfg.dim});
    const Tensor& tok = P(m, "text.tok");
    const Tensor& cls = P(m, "text.cls");
    const Tensor& pos = P(m, "text.pos");
    for (std::size_t j = 0; j < cfg.dim; ++j) x.at(0, j) = cls[j] + pos.at(0, j);
    for (std::size_t i = 0; i < ids.size(); ++i)
        for (std::size_t j = 0; j < cfg.dim; ++j)
            x.at(i + 1, j) = tok.at(ids[i], j) + pos.at(i + 1, j);

    for (std::size_t l = 0; l < cfg.text_depth - cfg.multimodal_depth; ++l) {
        const std::string prefix = "text.L" + std::to_string(l);
        x = attn_block(m, prefix, x, nullptr);
        x = ffn_block(m, prefix, x);
    }
    x = layernorm(x, P(m, "text.ln_f.g"), P(m, "text.ln_f.b"));
    Tensor cls_row({1, cfg.dim});
    for (std::size_t j = 0; j < cfg.dim; ++j) cls_row.at(0, j) = x.at(0, j);
    return l2_normalize(linear(cls_row, P(m, "text.proj.w"), P(m, "text.proj.b")));
}

}  // namespace oracle
