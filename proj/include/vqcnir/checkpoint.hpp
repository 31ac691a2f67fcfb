#pragma once

#include "vqcnir/model.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace vqcnir {

/// Binary checkpoint layout (all integers little-endian):
///
///   "VQCN" | u32 version | u32 entry count
///   per entry: u32 name length | name bytes | u32 rank | u64 extents[rank]
///              | u64 byte offset into the blob section
///   blob section: f64 values of every entry, in manifest order
///
/// Model hyper-parameters travel as one-element "meta.*" entries.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointEntry {
    std::string name;
    Shape shape;
    std::vector<double> values;
};

using Checkpoint = std::vector<CheckpointEntry>;

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Parameters plus "meta.*" config entries.
Checkpoint model_checkpoint(const VQCNIRModel& model, const ParamList& params);
/// Rebuilds the model skeleton from "meta.*" entries, then loads every
/// parameter present in the checkpoint. Missing parameters keep their
/// initial values only when `require_all` is false.
VQCNIRModel model_from_checkpoint(const Checkpoint& ckpt, bool require_all);
/// Loads matching entries into `params`; returns the number loaded.
std::size_t load_params(const Checkpoint& ckpt, const ParamList& params, bool require_all);

} // namespace vqcnir
