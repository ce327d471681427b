#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mixpath/rng.hpp"

namespace mixpath {

enum class PathKind { Depthwise, Conv };
enum class Aggregation { Sum, SumProj };
enum class SbnMode { Vanilla, Linear, Exponential };

// One candidate operation inside a choice layer.
struct PathSpec {
    PathKind kind = PathKind::Depthwise;
    int kernel = 3;          // odd, in {1,3,5,7}
    double expansion = 3.0;  // mid-channel multiplier, equal across a layer
};

struct LayerSpec {
    std::vector<PathSpec> paths;
    int n() const { return static_cast<int>(paths.size()); }
};

// Full description of a mixed-path search space: L choice layers, each with
// n candidate paths of which at most m may be active at once.
struct SearchSpaceSpec {
    int num_classes = 4;
    int in_channels = 1;
    int image_hw = 12;
    int stem_channels = 8;
    int stem_kernel = 3;
    int stem_stride = 1;
    int m = 2;
    Aggregation aggregation = Aggregation::SumProj;
    SbnMode sbn_mode = SbnMode::Linear;
    bool residual = true;
    std::vector<LayerSpec> layers;

    int num_layers() const { return static_cast<int>(layers.size()); }
};

// Throws std::invalid_argument when any structural invariant is violated
// (m < 1, even kernels, mixed expansions within a layer, ...). m wider than
// a layer simply caps at that layer's path count.
void validate(const SearchSpaceSpec& spec);

// Per-layer bitmask of active paths; bit i set means path i is active.
struct ArchMask {
    std::vector<std::uint32_t> layers;

    bool operator==(const ArchMask& other) const = default;
};

bool mask_valid(const SearchSpaceSpec& spec, const ArchMask& mask);

// Compact text form "5-3-1" (one integer per layer), used for map keys,
// log records, and error messages.
std::string mask_to_string(const ArchMask& mask);
ArchMask mask_from_string(const std::string& text);

// Draw one valid layer mask: independent Bernoulli(p) per path, rejection
// resampled until the popcount lands in [1, m].
std::uint32_t sample_layer_mask(int n, int m, double p, Rng& rng);

// Algorithm: per layer, independent Bernoulli(p) per path with per-layer
// rejection resampling. p = 0.5 makes the draw uniform over valid masks.
ArchMask sample_mask(const SearchSpaceSpec& spec, double p, Rng& rng);

// Bank key for a layer selection: Vanilla -> 0, Linear -> popcount,
// Exponential -> the subset bits themselves. Throws on popcount 0 or > m.
std::uint32_t sbn_key(SbnMode mode, std::uint32_t layer_mask, int m);

// Every key the bank must hold, ascending. Linear: 1..m. Exponential: all
// n-bit subsets with popcount in [1, m]. Vanilla: {0}.
std::vector<std::uint32_t> sbn_bank_keys(SbnMode mode, int n, int m);

// Closed-form number of valid masks: product over layers of
// sum_{i=1..m} C(n_l, i). Saturates at uint64 max on overflow.
std::uint64_t space_size(const SearchSpaceSpec& spec);

// All valid masks in lexicographic order (layer 0 most significant, layer
// masks ascending by integer value). Throws std::length_error when the
// space exceeds `cap`, signalling that sampling mode should be used.
std::vector<ArchMask> enumerate_space(const SearchSpaceSpec& spec,
                                      std::uint64_t cap = 100000);

// Convenience builder: L identical layers whose i-th path is a depthwise
// conv with kernels[i], the layout every shipped config uses.
SearchSpaceSpec make_space(int layers, const std::vector<int>& kernels, int m,
                           double expansion = 3.0);

const char* to_string(SbnMode mode);
const char* to_string(Aggregation agg);
const char* to_string(PathKind kind);
SbnMode sbn_mode_from_string(const std::string& s);
Aggregation aggregation_from_string(const std::string& s);
PathKind path_kind_from_string(const std::string& s);

} // namespace mixpath
