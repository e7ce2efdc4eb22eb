// Copyright 2026 the svitt authors
// SPDX-License-Identifier: Apache-2.0
#include "svitt/grad.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace svitt::grad {

namespace {
constexpr double kInvSqrt2 = 0.7071067811865476;
constexpr double kInvSqrt2Pi = 0.3989422804014327;
}  // namespace

Var Tape::push(Tensor value, std::function<void(Tape&, std::size_t)> back) {
    Node n;
    n.grad = Tensor(value.shape);
    n.value = std::move(value);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
}

Var Tape::input(Tensor v) { return push(std::move(v), nullptr); }

Var Tape::param(Parameter& p) {
    Var v = push(p.value, nullptr);
    nodes_[v.id].bound = &p;
    return v;
}

Var Tape::add(Var a, Var b) {
    if (!val(a).same_shape(val(b))) throw std::invalid_argument("add: shape mismatch");
    Tensor out = val(a);
    const Tensor& bb = val(b);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] += bb[i];
    return push(std::move(out), [a, b](Tape& t, std::size_t id) {
        const Tensor& g = t.nodes_[id].grad;
        Tensor& ga = t.grad_mut(a.id);
        Tensor& gb = t.grad_mut(b.id);
        for (std::size_t i = 0; i < g.numel(); ++i) {
            ga[i] += g[i];
            gb[i] += g[i];
        }
    });
}

Var Tape::sub(Var a, Var b) {
    if (!val(a).same_shape(val(b))) throw std::invalid_argument("sub: shape mismatch");
    Tensor out = val(a);
    const Tensor& bb = val(b);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] -= bb[i];
    return push(std::move(out), [a, b](Tape& t, std::size_t id) {
        const Tensor& g = t.nodes_[id].grad;
        Tensor& ga = t.grad_mut(a.id);
        Tensor& gb = t.grad_mut(b.id);
        for (std::size_t i = 0; i < g.numel(); ++i) {
            ga[i] += g[i];
            gb[i] -= g[i];
        }
    });
}

Var Tape::mul(Var a, Var b) {
    if (!val(a).same_shape(val(b))) throw std::invalid_argument("mul: shape mismatch");
    Tensor out = val(a);
    const Tensor& bb = val(b);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= bb[i];
    return push(std::move(out), [a, b](Tape& t, std::size_t id) {
        const Tensor& g = t.nodes_[id].grad;
        const Tensor& av = t.val(a);
        const Tensor& bv = t.val(b);
        Tensor& ga = t.grad_mut(a.id);
        Tensor& gb = t.grad_mut(b.id);
        for (std::size_t i = 0; i < g.numel(); ++i) {
            ga[i] += g[i] * bv[i];
            gb[i] += g[i] * av[i];
        }
    });
}

Var Tape::add_rowvec(Var a, Var bias) {
    const Tensor& av = val(a);
    const Tensor& bv = val(bias);
    if (bv.rows() != 1 || bv.cols() != av.cols())
        throw std::invalid_argument("add_rowvec: bias must be 1 x cols");
    Tensor out = av;
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) out.at(i, j) += bv[j];
    return push(std::move(out), [a, bias](Tape& t, std::size_t id) {
        const Tensor& g = t.nodes_[id].grad;
        Tensor& ga = t.grad_mut(a.id);
        Tensor& gb = t.grad_mut(bias.id);
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) {
                ga.at(i, j) += g.at(i, j);
                gb[j] += g.at(i, j);
            }
    });
}

Var Tape::scale(Var a, double c) {
    Tensor out = val(a);
    for (auto& x : out.data) x *= c;
    return push(std::move(out), [a, c](Tape& t, std::size_t id) {
        const Tensor& g = t.nodes_[id].grad;
        Tensor& ga = t.grad_mut(a.id);
        for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += c * g[i];
    });
}

Var Tape::mul_scalar(Var a, Var s) {
    if (val(s).numel() != 1) throw std::invalid_argument("mul_scalar: s must be a scalar");
    const double sv = val(s)[0];
    Tensor out = val(a);
    for (auto& x : out.data) x *= sv;
    return push(std::move(out), [a, s, sv](Tape& t, std::size_t id) {
        const Tensor& g = t.nodes_[id].grad;
        const Tensor& av = t.val(a);
        Tensor& ga = t.grad_mut(a.id);
        Tensor& gs = t.grad_mut(s.id);
        for (std::size_t i = 0; i < g.numel(); ++i) {
            ga[i] += sv * g[i];
            gs[0] += av[i] * g[i];
        }
    });
}

Var Tape::matmul(Var a, Var b) {
    Tensor out = svitt::matmul(val(a), val(b));
    return push(std::move(out), [a, b](Tape& t, std::size_t id) {
        const Tensor& g = t.nodes_[id].grad;
        const Tensor& av = t.val(a);
        const Tensor& bv = t.val(b);
        // dA += G B^T ; dB += A^T G  (accumulated in place)
        Tensor& ga = t.grad_mut(a.id);
        Tensor& gb = t.grad_mut(b.id);
        const std::size_t n = av.rows(), k = av.cols(), m = bv.cols();
        for (std::size_t i = 0; i < n; ++i) {
            const double* gi = &g.data[i * m];
            double* gai = &ga.data[i * k];
            for (std::size_t p = 0; p < k; ++p) {
                const double* bp = &bv.data[p * m];
                double acc = 0.0;
                for (std::size_t j = 0; j < m; ++j) acc += gi[j] * bp[j];
                gai[p] += acc;
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double* ai = &av.data[i * k];
            const double* gi = &g.data[i * m];
            for (std::size_t p = 0; p < k; ++p) {
                const double apv = ai[p];
                if (apv == 0.0) continue;
                double* gbp = &gb.data[p * m];
                for (std::size_t j = 0; j < m; ++j) gbp[j] += apv * gi[j];
            }
        }
    });
}

Var Tape::transpose(Var a) {
    return push(svitt::transpose(val(a)), [a](Tape& t, std::size_t id) {
        const Tensor& g = t.nodes_[id].grad;
        Tensor& ga = t.grad_mut(a.id);
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) ga.at(j, i) += g.at(i, j);
    });
}

Var Tape::gather_rows(Var a, std::vector<std::size_t> idx) {
    const Tensor& av = val(a);
    Tensor out({idx.size(), av.cols()});
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= av.rows()) throw std::invalid_argument("gather_rows: index out of range");
        for (std::size_t j = 0; j < av.cols(); ++j) out.at(i, j) = av.at(idx[i], j);
    }
    auto shared = std::make_shared<std::vector<std::size_t>>(std::move(idx));
    return push(std::move(out), [a, shared](Tape& t, std::size_t id) {
        const Tensor& g = t.nodes_[id].grad;
        Tensor& ga = t.grad_mut(a.id);
        for (std::size_t i = 0; i < shared->size(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) ga.at((*shared)[i], j) += g.at(i, j);
    });
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: empty");
    const std::size_t cols = val(parts[0]).cols();
    std::size_t rows = 0;
    for (auto p : parts) {
        if (val(p).cols() != cols) throw std::invalid_argument("concat_rows: width mismatch");
        rows += val(p).rows();
    }
    Tensor out({rows, cols});
    std::size_t r = 0;
    for (auto p : parts) {
        const Tensor& pv = val(p);
        for (std::size_t i = 0; i < pv.rows(); ++i, ++r)
            for (std::size_t j = 0; j < cols; ++j) out.at(r, j) = pv.at(i, j);
    }
    auto shared = std::make_shared<std::vector<Var>>(parts);
    return push(std::move(out), [shared](Tape& t, std::size_t id) {
        const Tensor& g = t.nodes_[id].grad;
        std::size_t r = 0;
        for (auto p : *shared) {
            Tensor& gp = t.grad_mut(p.id);
            for (std::size_t i = 0; i < gp.rows(); ++i, ++r)
                for (std::size_t j = 0; j < g.cols(); ++j) gp.at(i, j) += g.at(r, j);
        }
    });
}

Var Tape::slice_cols(Var a, std::size_t start, std::size_t len) {
    const Tensor& av = val(a);
    if (start + len > av.cols()) throw std::invalid_argument("slice_cols: out of range");
    Tensor out({av.rows(), len});
    for (std::size_t i = 0; i < av.rows(); ++i)
        for (std::size_t j = 0; j < len; ++j) out.at(i, j) = av.at(i, start + j);
    return push(std::move(out), [a, start, len](Tape& t, std::size_t id) {
        const Tensor& g = t.nodes_[id].grad;
        Tensor& ga = t.grad_mut(a.id);
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < len; ++j) ga.at(i, start + j) += g.at(i, j);
    });
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: empty");
    const std::size_t rows = val(parts[0]).rows();
    std::size_t cols = 0;
    for (auto p : parts) {
        if (val(p).rows() != rows) throw std::invalid_argument("concat_cols: height mismatch");
        cols += val(p).cols();
    }
    Tensor out({rows, cols});
    std::size_t c = 0;
    for (auto p : parts) {
        const Tensor& pv = val(p);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < pv.cols(); ++j) out.at(i, c + j) = pv.at(i, j);
        c += pv.cols();
    }
    auto shared = std::make_shared<std::vector<Var>>(parts);
    return push(std::move(out), [shared](Tape& t, std::size_t id) {
        const Tensor& g = t.nodes_[id].grad;
        std::size_t c = 0;
        for (auto p : *shared) {
            Tensor& gp = t.grad_mut(p.id);
            for (std::size_t i = 0; i < gp.rows(); ++i)
                for (std::size_t j = 0; j < gp.cols(); ++j) gp.at(i, j) += g.at(i, c + j);
            c += gp.cols();
        }
    });
}

Var Tape::layernorm(Var x, Var gamma, Var beta, double eps) {
    const Tensor& xv = val(x);
    const std::size_t n = xv.rows(), d = xv.cols();
    if (val(gamma).numel() != d || val(beta).numel() != d)
        throw std::invalid_argument("layernorm: gamma/beta size mismatch");
    Tensor out({n, d});
    auto xhat = std::make_shared<Tensor>(Tensor({n, d}));
    auto inv_std = std::make_shared<std::vector<double>>(n);
    for (std::size_t i = 0; i < n; ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) mean += xv.at(i, j);
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double c = xv.at(i, j) - mean;
            var += c * c;
        }
        var /= static_cast<double>(d);
        const double istd = 1.0 / std::sqrt(var + eps);
        (*inv_std)[i] = istd;
        for (std::size_t j = 0; j < d; ++j) {
            const double h = (xv.at(i, j) - mean) * istd;
            xhat->at(i, j) = h;
            out.at(i, j) = h * val(gamma)[j] + val(beta)[j];
        }
    }
    return push(std::move(out), [x, gamma, beta, xhat, inv_std](Tape& t, std::size_t id) {
        const Tensor& g = t.nodes_[id].grad;
        const Tensor& gm = t.val(gamma);
        Tensor& gx = t.grad_mut(x.id);
        Tensor& gg = t.grad_mut(gamma.id);
        Tensor& gb = t.grad_mut(beta.id);
        const std::size_t n = g.rows(), d = g.cols();
        for (std::size_t i = 0; i < n; ++i) {
            double sum_gh = 0.0, sum_gh_xhat = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double gh = g.at(i, j) * gm[j];
                sum_gh += gh;
                sum_gh_xhat += gh * xhat->at(i, j);
                gg[j] += g.at(i, j) * xhat->at(i, j);
                gb[j] += g.at(i, j);
            }
            const double istd = (*inv_std)[i];
            for (std::size_t j = 0; j < d; ++j) {
                const double gh = g.at(i, j) * gm[j];
                gx.at(i, j) += istd * (gh - (sum_gh + xhat->at(i, j) * sum_gh_xhat) /
                                                static_cast<double>(d));
            }
        }
    });
}

Var Tape::gelu(Var x) {
    const Tensor& xv = val(x);
    Tensor out = xv;
    for (auto& v : out.data) v = 0.5 * v * (1.0 + std::erf(v * kInvSqrt2));
    return push(std::move(out), [x](Tape& t, std::size_t id) {
        const Tensor& g = t.nodes_[id].grad;
        const Tensor& xv = t.val(x);
        Tensor& gx = t.grad_mut(x.id);
        for (std::size_t i = 0; i < g.numel(); ++i) {
            const double v = xv[i];
            const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
            const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
            gx[i] += g[i] * (cdf + v * pdf);
        }
    });
}

Var Tape::sigmoid(Var x) {
    Tensor out = val(x);
    for (auto& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
    auto saved = std::make_shared<Tensor>(out);
    return push(std::move(out), [x, saved](Tape& t, std::size_t id) {
        const Tensor& g = t.nodes_[id].grad;
        Tensor& gx = t.grad_mut(x.id);
        for (std::size_t i = 0; i < g.numel(); ++i) {
            const double s = (*saved)[i];
            gx[i] += g[i] * s * (1.0 - s);
        }
    });
}

Var Tape::log(Var x) {
    Tensor out = val(x);
    for (auto& v : out.data) v = std::log(v);
    return push(std::move(out), [x](Tape& t, std::size_t id) {
        const Tensor& g = t.nodes_[id].grad;
        const Tensor& xv = t.val(x);
        Tensor& gx = t.grad_mut(x.id);
        for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += g[i] / xv[i];
    });
}

Var Tape::exp(Var x) {
    Tensor out = val(x);
    for (auto& v : out.data) v = std::exp(v);
    auto saved = std::make_shared<Tensor>(out);
    return push(std::move(out), [x, saved](Tape& t, std::size_t id) {
        const Tensor& g = t.nodes_[id].grad;
        Tensor& gx = t.grad_mut(x.id);
        for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += g[i] * (*saved)[i];
    });
}

Var Tape::l2_normalize_rows(Var x, double eps) {
    const Tensor& xv = val(x);
    const std::size_t n = xv.rows(), d = xv.cols();
    Tensor out({n, d});
    auto norms = std::make_shared<std::vector<double>>(n);
    for (std::size_t i = 0; i < n; ++i) {
        double ss = 0.0;
        for (std::size_t j = 0; j < d; ++j) ss += xv.at(i, j) * xv.at(i, j);
        const double norm = std::sqrt(ss + eps);
        (*norms)[i] = norm;
        for (std::size_t j = 0; j < d; ++j) out.at(i, j) = xv.at(i, j) / norm;
    }
    return push(std::move(out), [x, norms](Tape& t, std::size_t id) {
        const Tensor& g = t.nodes_[id].grad;
        const Tensor& xv = t.val(x);
        Tensor& gx = t.grad_mut(x.id);
        const std::size_t n = g.rows(), d = g.cols();
        for (std::size_t i = 0; i < n; ++i) {
            const double norm = (*norms)[i];
            double dot = 0.0;
            for (std::size_t j = 0; j < d; ++j) dot += g.at(i, j) * xv.at(i, j);
            for (std::size_t j = 0; j < d; ++j)
                gx.at(i, j) += g.at(i, j) / norm - xv.at(i, j) * dot / (norm * norm * norm);
        }
    });
}

Var Tape::sum(Var x) {
    double s = 0.0;
    for (auto v : val(x).data) s += v;
    return push(Tensor::scalar(s), [x](Tape& t, std::size_t id) {
        const double g = t.nodes_[id].grad[0];
        Tensor& gx = t.grad_mut(x.id);
        for (auto& v : gx.data) v += g;
    });
}

Var Tape::diag(Var x) {
    const Tensor& xv = val(x);
    if (xv.rows() != xv.cols()) throw std::invalid_argument("diag: matrix must be square");
    Tensor out({xv.rows(), 1});
    for (std::size_t i = 0; i < xv.rows(); ++i) out[i] = xv.at(i, i);
    return push(std::move(out), [x](Tape& t, std::size_t id) {
        const Tensor& g = t.nodes_[id].grad;
        Tensor& gx = t.grad_mut(x.id);
        for (std::size_t i = 0; i < g.rows(); ++i) gx.at(i, i) += g[i];
    });
}

Var Tape::logsumexp_rows(Var x) {
    const Tensor& xv = val(x);
    const std::size_t n = xv.rows(), m = xv.cols();
    Tensor out({n, 1});
    for (std::size_t i = 0; i < n; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < m; ++j) mx = std::max(mx, xv.at(i, j));
        double s = 0.0;
        for (std::size_t j = 0; j < m; ++j) s += std::exp(xv.at(i, j) - mx);
        out[i] = mx + std::log(s);
    }
    auto lse = std::make_shared<Tensor>(out);
    return push(std::move(out), [x, lse](Tape& t, std::size_t id) {
        const Tensor& g = t.nodes_[id].grad;
        const Tensor& xv = t.val(x);
        Tensor& gx = t.grad_mut(x.id);
        for (std::size_t i = 0; i < xv.rows(); ++i)
            for (std::size_t j = 0; j < xv.cols(); ++j)
                gx.at(i, j) += g[i] * std::exp(xv.at(i, j) - (*lse)[i]);
    });
}

Var Tape::masked_softmax_rows(Var logits, KeyMaskPtr mask) {
    const Tensor& lv = val(logits);
    const std::size_t n = lv.rows(), m = lv.cols();
    if (mask && mask->size() != n)
        throw std::invalid_argument("masked_softmax_rows: mask rows != logit rows");
    Tensor out({n, m});
    for (std::size_t i = 0; i < n; ++i) {
        const std::vector<std::size_t>* keys = mask ? &(*mask)[i] : nullptr;
        const std::size_t cnt = keys ? keys->size() : m;
        if (cnt == 0)
            throw std::runtime_error("masked_softmax_rows: query " + std::to_string(i) +
                                     " has no permitted keys");
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < cnt; ++a) mx = std::max(mx, lv.at(i, keys ? (*keys)[a] : a));
        double denom = 0.0;
        for (std::size_t a = 0; a < cnt; ++a) {
            const std::size_t j = keys ? (*keys)[a] : a;
            out.at(i, j) = std::exp(lv.at(i, j) - mx);
            denom += out.at(i, j);
        }
        for (std::size_t a = 0; a < cnt; ++a) {
            const std::size_t j = keys ? (*keys)[a] : a;
            out.at(i, j) /= denom;
        }
    }
    auto probs = std::make_shared<Tensor>(out);
    return push(std::move(out), [logits, mask, probs](Tape& t, std::size_t id) {
        const Tensor& g = t.nodes_[id].grad;
        Tensor& gl = t.grad_mut(logits.id);
        const std::size_t n = g.rows(), m = g.cols();
        for (std::size_t i = 0; i < n; ++i) {
            const std::vector<std::size_t>* keys = mask ? &(*mask)[i] : nullptr;
            const std::size_t cnt = keys ? keys->size() : m;
            double inner = 0.0;
            for (std::size_t a = 0; a < cnt; ++a) {
                const std::size_t j = keys ? (*keys)[a] : a;
                inner += g.at(i, j) * probs->at(i, j);
            }
            for (std::size_t a = 0; a < cnt; ++a) {
                const std::size_t j = keys ? (*keys)[a] : a;
                gl.at(i, j) += probs->at(i, j) * (g.at(i, j) - inner);
            }
        }
    });
}

Var Tape::bias_lookup(Var table, std::shared_ptr<const std::vector<long long>> idx,
                      std::size_t rows, std::size_t cols) {
    const Tensor& tv = val(table);
    if (idx->size() != rows * cols) throw std::invalid_argument("bias_lookup: index size mismatch");
    Tensor out({rows, cols});
    for (std::size_t i = 0; i < idx->size(); ++i) {
        const long long k = (*idx)[i];
        if (k >= 0) {
            if (static_cast<std::size_t>(k) >= tv.numel())
                throw std::out_of_range("bias_lookup: index outside table");
            out[i] = tv[static_cast<std::size_t>(k)];
        }
    }
    return push(std::move(out), [table, idx](Tape& t, std::size_t id) {
        const Tensor& g = t.nodes_[id].grad;
        Tensor& gt = t.grad_mut(table.id);
        for (std::size_t i = 0; i < idx->size(); ++i) {
            const long long k = (*idx)[i];
            if (k >= 0) gt[static_cast<std::size_t>(k)] += g[i];
        }
    });
}

Var Tape::softmax_cross_entropy_sum(Var logits, std::vector<std::size_t> targets) {
    const Tensor& lv = val(logits);
    const std::size_t n = lv.rows(), m = lv.cols();
    if (targets.size() != n)
        throw std::invalid_argument("softmax_cross_entropy_sum: target count != rows");
    auto probs = std::make_shared<Tensor>(Tensor({n, m}));
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (targets[i] >= m)
            throw std::invalid_argument("softmax_cross_entropy_sum: target out of range");
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < m; ++j) mx = std::max(mx, lv.at(i, j));
        double denom = 0.0;
        for (std::size_t j = 0; j < m; ++j) denom += std::exp(lv.at(i, j) - mx);
        const double lse = mx + std::log(denom);
        loss += lse - lv.at(i, targets[i]);
        for (std::size_t j = 0; j < m; ++j) probs->at(i, j) = std::exp(lv.at(i, j) - lse);
    }
    auto shared = std::make_shared<std::vector<std::size_t>>(std::move(targets));
    return push(Tensor::scalar(loss), [logits, probs, shared](Tape& t, std::size_t id) {
        const double g = t.nodes_[id].grad[0];
        Tensor& gl = t.grad_mut(logits.id);
        for (std::size_t i = 0; i < probs->rows(); ++i)
            for (std::size_t j = 0; j < probs->cols(); ++j)
                gl.at(i, j) += g * (probs->at(i, j) - (j == (*shared)[i] ? 1.0 : 0.0));
    });
}

void Tape::backward(Var loss) {
    if (!loss.valid() || loss.id >= nodes_.size()) throw std::invalid_argument("backward: bad var");
    if (nodes_[loss.id].value.numel() != 1)
        throw std::invalid_argument("backward: loss must be scalar");
    if (!std::isfinite(nodes_[loss.id].value[0]))
        throw std::runtime_error("backward: loss is not finite");
    nodes_[loss.id].grad[0] = 1.0;
    for (std::size_t i = loss.id + 1; i-- > 0;) {
        if (nodes_[i].back) nodes_[i].back(*this, i);
        if (nodes_[i].bound) {
            Parameter& p = *nodes_[i].bound;
            if (p.grad.numel() != p.value.numel()) p.zero_grad();
            for (std::size_t j = 0; j < p.grad.numel(); ++j) p.grad[j] += nodes_[i].grad[j];
        }
    }
}

}  // namespace svitt::grad
