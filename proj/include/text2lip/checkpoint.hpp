#pragma once

#include <filesystem>

#include <json.hpp>

#include "text2lip/tensor.hpp"

namespace t2l {

// Checkpoint file layout (version 1):
//   bytes 0..7   magic "T2L1CKPT"
//   bytes 8..15  u64 LE header length H
//   H bytes      JSON header {"format_version", "config", "tensors":[{name,shape}]}
//   rest         float64 LE payloads, concatenated in tensor order
// The config object is opaque here; callers embed whatever they need
// (model dims, neutral frame, normalization constants, ...).
struct Checkpoint {
  nlohmann::json config;
  ParamStore params;
};

void save_checkpoint(const std::filesystem::path& path,
                     const nlohmann::json& config, const ParamStore& params);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace t2l
