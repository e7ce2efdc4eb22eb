// Copyright 2026 the svitt authors
// SPDX-License-Identifier: Apache-2.0
#include "svitt/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace svitt::grad {

Parameter& ParamStore::create(const std::string& name, std::vector<std::size_t> shape) {
    if (params_.count(name)) throw std::invalid_argument("parameter already exists: " + name);
    auto p = std::make_unique<Parameter>();
    p->name = name;
    p->value = Tensor(shape);
    p->grad = Tensor(shape);
    p->m = Tensor(shape);
    p->v = Tensor(shape);
    auto& ref = *p;
    params_.emplace(name, std::move(p));
    return ref;
}

Parameter& ParamStore::get(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::invalid_argument("no such parameter: " + name);
    return *it->second;
}

const Parameter& ParamStore::get(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::invalid_argument("no such parameter: " + name);
    return *it->second;
}

void ParamStore::zero_grads() {
    for (auto& [_, p] : params_) p->zero_grad();
}

bool AdamW::step(ParamStore& params, double lr) {
    if (lr < 0.0) throw std::invalid_argument("AdamW: negative learning rate");
    for (auto& [_, p] : params.all())
        for (auto g : p->grad.data)
            if (!std::isfinite(g)) return false;

    ++step_count;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
    for (auto& [_, p] : params.all()) {
        for (std::size_t i = 0; i < p->value.numel(); ++i) {
            const double g = p->grad[i];
            p->m[i] = beta1 * p->m[i] + (1.0 - beta1) * g;
            p->v[i] = beta2 * p->v[i] + (1.0 - beta2) * g * g;
            const double mhat = p->m[i] / bc1;
            const double vhat = p->v[i] / bc2;
            p->value[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * p->value[i]);
        }
    }
    return true;
}

double cosine_lr(double base_lr, std::size_t step, std::size_t warmup_steps,
                 std::size_t total_steps) {
    if (total_steps == 0) return base_lr;
    if (warmup_steps > 0 && step < warmup_steps)
        return base_lr * static_cast<double>(step + 1) / static_cast<double>(warmup_steps);
    const double progress =
        total_steps > warmup_steps
            ? static_cast<double>(step - warmup_steps) /
                  static_cast<double>(total_steps - warmup_steps)
            : 1.0;
    const double clamped = progress > 1.0 ? 1.0 : progress;
    return 0.5 * base_lr * (1.0 + std::cos(3.141592653589793 * clamped));
}

}  // namespace svitt::grad
