#include "mixpath/cost.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace mixpath {

namespace {
int conv_out(int in, int k, int stride) {
    const int pad = k / 2;
    return (in + 2 * pad - k) / stride + 1;
}

int mid_channels(const LayerSpec& layer, int c_in) {
    return std::max(1, static_cast<int>(std::lround(layer.paths[0].expansion * c_in)));
}
} // namespace

std::uint64_t layer_cost(int H, int W, int c_in, int c_mid,
                         const std::vector<int>& kernels) {
    if (H < 1 || W < 1 || c_in < 1 || c_mid < 1)
        throw std::invalid_argument("layer_cost: dimensions must be >= 1");
    if (kernels.empty()) throw std::invalid_argument("layer_cost: no kernels");
    const std::uint64_t hw = static_cast<std::uint64_t>(H) * W;
    std::uint64_t total = 2ull * hw * c_in * c_mid;
    for (int k : kernels) {
        if (k < 1 || k % 2 == 0)
            throw std::invalid_argument("layer_cost: kernels must be odd and >= 1");
        total += static_cast<std::uint64_t>(k) * k * hw * c_mid;
    }
    return total;
}

CostBreakdown arch_cost(const SearchSpaceSpec& spec, const ArchMask& mask) {
    if (!mask_valid(spec, mask))
        throw std::invalid_argument("arch_cost: mask does not fit the space: " +
                                    mask_to_string(mask));
    CostBreakdown out;

    int hw = conv_out(spec.image_hw, spec.stem_kernel, spec.stem_stride);
    const std::uint64_t stem_hw = static_cast<std::uint64_t>(hw) * hw;
    out.stem = static_cast<std::uint64_t>(spec.stem_kernel) * spec.stem_kernel *
               spec.in_channels * spec.stem_channels * stem_hw;
    out.params = static_cast<std::uint64_t>(spec.stem_kernel) * spec.stem_kernel *
                     spec.in_channels * spec.stem_channels +
                 2ull * spec.stem_channels;

    int c = spec.stem_channels;
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        const auto& layer = spec.layers[l];
        const int c_mid = mid_channels(layer, c);
        const std::uint64_t hw2 = static_cast<std::uint64_t>(hw) * hw;
        LayerCost lc;
        lc.pointwise = hw2 * static_cast<std::uint64_t>(c) * c_mid;
        out.params += static_cast<std::uint64_t>(c) * c_mid + 2ull * c_mid;

        for (int i = 0; i < layer.n(); ++i) {
            if (!(mask.layers[l] & (1u << i))) continue;
            const auto& p = layer.paths[i];
            const std::uint64_t k2 = static_cast<std::uint64_t>(p.kernel) * p.kernel;
            if (p.kind == PathKind::Depthwise) {
                lc.paths += k2 * hw2 * c_mid;
                out.params += k2 * c_mid + 2ull * c_mid;
            } else {
                lc.paths += k2 * hw2 * c_mid * c_mid;
                out.params += k2 * c_mid * c_mid + 2ull * c_mid;
            }
        }

        // the selected SBN state contributes its affine pair on the
        // post-aggregation channel count
        if (spec.aggregation == Aggregation::SumProj) {
            lc.projection = hw2 * static_cast<std::uint64_t>(c_mid) * c;
            out.params += static_cast<std::uint64_t>(c_mid) * c + 2ull * c;
        } else {
            out.params += 2ull * c_mid;
            c = c_mid;
        }
        out.layers.push_back(lc);
    }
    out.head = static_cast<std::uint64_t>(c) * spec.num_classes;
    out.params += static_cast<std::uint64_t>(c) * spec.num_classes + spec.num_classes;

    out.flops = out.stem + out.head;
    for (const auto& lc : out.layers)
        out.flops += lc.pointwise + lc.paths + lc.projection;
    return out;
}

std::uint64_t max_space_flops(const SearchSpaceSpec& spec) {
    validate(spec);
    ArchMask best;
    best.layers.assign(spec.layers.size(), 1u);
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        const int n = spec.layers[l].n();
        const int cap = std::min(spec.m, n);
        std::uint64_t top = 0;
        std::uint32_t arg = 1u;
        for (std::uint32_t bits = 1; bits < (1u << n); ++bits) {
            if (std::popcount(bits) > cap) continue;
            ArchMask probe = best;
            probe.layers[l] = bits;
            const std::uint64_t f = arch_cost(spec, probe).flops;
            if (f > top) {
                top = f;
                arg = bits;
            }
        }
        best.layers[l] = arg;
    }
    return arch_cost(spec, best).flops;
}

} // namespace mixpath
