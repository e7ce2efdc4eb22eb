// Copyright 2026 the svitt authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>

#include "svitt/grad.hpp"
#include "svitt/rng.hpp"

namespace svitt::grad {

// Named parameters in deterministic (lexicographic) order.
class ParamStore {
   public:
    Parameter& create(const std::string& name, std::vector<std::size_t> shape);
    Parameter& get(const std::string& name);
    const Parameter& get(const std::string& name) const;
    bool has(const std::string& name) const { return params_.count(name) != 0; }
    void zero_grads();

    std::map<std::string, std::unique_ptr<Parameter>>& all() { return params_; }
    const std::map<std::string, std::unique_ptr<Parameter>>& all() const { return params_; }

   private:
    std::map<std::string, std::unique_ptr<Parameter>> params_;
};

// Adam with decoupled weight decay. Rejects steps with non-finite gradients.
struct AdamW {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.02;
    std::size_t step_count = 0;

    // returns false (and leaves all parameters untouched) when any gradient
    // is non-finite
    bool step(ParamStore& params, double lr);
};

// cosine decay to zero after a linear warm-up
double cosine_lr(double base_lr, std::size_t step, std::size_t warmup_steps,
                 std::size_t total_steps);

}  // namespace svitt::grad
