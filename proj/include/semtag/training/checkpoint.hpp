#pragma once

#include <filesystem>
#include <iosfwd>

#include <json.hpp>

#include "semtag/training/model.hpp"

namespace semtag::training {

// Layout (little-endian):
//   "SMTGCKPT"  u32 version
//   u64 header length, header JSON {model, vocab, seed, meta}
//   u64 tensor count, then per tensor:
//     u32 name length, name, u8 dtype (0 = f32, 1 = f64), u32 rank,
//     u64 dims[rank], raw values
// Parameters are written in Classifier::parameters() order.
inline constexpr std::uint32_t checkpoint_version = 1;

void write_checkpoint(std::ostream& out, const Classifier<float>& model,
                      const nlohmann::json& meta = nlohmann::json::object());
void save_checkpoint(const std::filesystem::path& path, const Classifier<float>& model,
                     const nlohmann::json& meta = nlohmann::json::object());

struct LoadedCheckpoint {
  Classifier<float> model;
  nlohmann::json meta;
};

// Rebuilds the model from the header and overwrites every parameter.
// Malformed or truncated input is a ValidationError.
LoadedCheckpoint read_checkpoint(std::istream& in, const ModelResources& resources = {});
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path,
                                 const ModelResources& resources = {});

}  // namespace semtag::training
