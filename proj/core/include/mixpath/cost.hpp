#pragma once

#include <cstdint>
#include <vector>

#include "mixpath/search_space.hpp"

// Multiply-add and parameter counting. Only convolution terms are counted
// (elementwise ops, normalization, and activations are excluded), and one
// fused multiply-accumulate counts as one operation.

namespace mixpath {

struct LayerCost {
    std::uint64_t pointwise = 0;   // 1x1 expansion conv
    std::uint64_t paths = 0;       // active candidate convolutions
    std::uint64_t projection = 0;  // 1x1 projection conv (when aggregation uses one)
};

struct CostBreakdown {
    std::uint64_t stem = 0;
    std::vector<LayerCost> layers;
    std::uint64_t head = 0;
    std::uint64_t flops = 0;   // multiply-adds, total of all parts
    std::uint64_t params = 0;  // learnable parameter count of the submodel
};

// The two-pointwise-plus-mixed-kernels cost of one choice layer:
//   2*H*W*C_in*C_mid + sum_i k_i^2 * H * W * C_mid
// Kernels must be odd and >= 1.
std::uint64_t layer_cost(int H, int W, int c_in, int c_mid,
                         const std::vector<int>& kernels);

// Full submodel cost under `mask`: stem + per-layer conv terms (respecting
// the aggregation mode) + classifier head. Throws on mask/spec mismatch.
CostBreakdown arch_cost(const SearchSpaceSpec& spec, const ArchMask& mask);

// The costliest submodel in the space. Layers contribute independently, so
// the per-layer argmax assembles into the global maximum.
std::uint64_t max_space_flops(const SearchSpaceSpec& spec);

} // namespace mixpath
