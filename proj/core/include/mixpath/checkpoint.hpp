#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mixpath/supernet.hpp"

namespace mixpath {

// Checkpoint container: little-endian binary, magic "MXPT", format version
// u32, entry count u32, then per entry {name length u16, UTF-8 name,
// rank u8, dims u32 x rank, f32 payload}. BN states occupy four entries
// (.gamma/.beta/.mean/.var); bank entries are named block{L}.sbn.{key}.{field}.
// Run metadata (fingerprint, config hash, seed) rides along as entries whose
// names carry the value and whose payload is a single zero.

struct CheckpointEntry {
    std::vector<std::uint32_t> dims;
    std::vector<float> values;
};

using CheckpointMap = std::map<std::string, CheckpointEntry>;

struct CheckpointMeta {
    std::string fingerprint; // hash of the space + data portion of the config
    std::string config_hash; // hash of the full config
    std::uint64_t seed = 0;
};

void save_checkpoint(const Supernet& net, const std::string& path,
                     const CheckpointMeta& meta);

// Raw entry access (includes meta entries).
CheckpointMap read_checkpoint(const std::string& path);

// Extracts the metadata without loading tensors into a net.
CheckpointMeta read_checkpoint_meta(const std::string& path);

// Loads entries into an already-built net of the matching spec. Throws on
// missing entries, shape mismatches, or entries the net has no place for.
void load_checkpoint(Supernet& net, const std::string& path, CheckpointMeta* meta = nullptr);

} // namespace mixpath
