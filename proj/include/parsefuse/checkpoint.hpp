#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "parsefuse/model.hpp"

namespace parsefuse {

/// Single-file format: 8-byte magic "PFCHKPT\0", u32 version, u64 manifest
/// length, JSON manifest (parameter names/shapes, canonical config text,
/// config hash, rng seed), then raw little-endian f64 payloads in manifest
/// order. See docs/checkpoint-format.md.
struct Checkpoint {
    std::string config_text;
    uint64_t config_hash = 0;
    uint64_t rng_seed = 0;
    std::vector<std::string> param_names;
    std::vector<Shape> param_shapes;
    std::vector<std::vector<double>> param_values;
};

uint64_t config_hash(const std::string& canonical_config);

void save_checkpoint(const std::filesystem::path& path, SentimentModel& model, uint64_t rng_seed);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Rebuilds the model recorded in the checkpoint and loads its parameters.
SentimentModel model_from_checkpoint(const std::filesystem::path& path);

/// Loads parameters into an already-built model; config hashes must match.
void load_checkpoint_into(const std::filesystem::path& path, SentimentModel& model);

}  // namespace parsefuse
