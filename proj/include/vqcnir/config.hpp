#pragma once

#include "vqcnir/model.hpp"
#include "vqcnir/synth.hpp"
#include "vqcnir/train.hpp"

#include <filesystem>
#include <set>
#include <string>
#include <vector>

namespace vqcnir {

/// Where training and validation pairs come from. Manifests win when set;
/// otherwise pairs are synthesised from `data_seed`.
struct DataConfig {
    std::string train_manifest;
    std::string val_manifest;
    std::size_t train_count = 200;
    std::size_t val_count = 20;
    Index image_size = 64;
    std::uint64_t data_seed = 1;
};

struct RunConfig {
    ModelConfig model;
    TrainConfig train;
    DegradationRanges degradation;
    DataConfig data;
    std::string stage1_checkpoint;

    std::set<std::string> explicit_keys; // keys present in the parsed text

    void validate() const;
};

/// Parses flat `key = value` text with `#` comments. Unknown keys, duplicate
/// keys and malformed values raise ConfigError naming the line and key.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

/// One `key = value` line per known key, in canonical order; keys that took
/// their default are marked.
std::vector<std::string> describe_run_config(const RunConfig& config);
std::vector<std::string> run_config_keys();

PairedDataset training_pairs(const RunConfig& config);
PairedDataset validation_pairs(const RunConfig& config);

} // namespace vqcnir
