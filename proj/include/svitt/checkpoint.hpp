// Copyright 2026 the svitt authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "svitt/encoder.hpp"

namespace svitt::checkpoint {

// Binary layout: magic "SVTT", format version u32 LE, u64 LE config length,
// UTF-8 config JSON, then for each tensor: u32 name length + name, u32 rank,
// u64 dims, row-major f32 data. Tensors are written in lexicographic name
// order; values round-trip exactly (parameters are stored as f32).
inline constexpr std::uint32_t kFormatVersion = 1;

void save(const encoder::Model& model, const std::string& path);
encoder::Model load(const std::string& path);

}  // namespace svitt::checkpoint
