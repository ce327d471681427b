#include "mixpath/search_space.hpp"

#include <bit>
#include <limits>
#include <stdexcept>

namespace mixpath {

void validate(const SearchSpaceSpec& spec) {
    if (spec.num_classes < 2) throw std::invalid_argument("space: need at least 2 classes");
    if (spec.in_channels < 1 || spec.stem_channels < 1)
        throw std::invalid_argument("space: channel counts must be positive");
    if (spec.image_hw < 2) throw std::invalid_argument("space: image size too small");
    if (spec.stem_kernel < 1 || spec.stem_kernel % 2 == 0)
        throw std::invalid_argument("space: stem kernel must be odd");
    if (spec.stem_stride < 1) throw std::invalid_argument("space: stem stride must be >= 1");
    if (spec.layers.empty()) throw std::invalid_argument("space: need at least one layer");
    if (spec.m < 1) throw std::invalid_argument("space: m must be >= 1");
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        const auto& layer = spec.layers[l];
        const std::string where = "space: layer " + std::to_string(l);
        if (layer.paths.empty()) throw std::invalid_argument(where + " has no paths");
        if (layer.n() > 31) throw std::invalid_argument(where + " has too many paths");
        for (const auto& p : layer.paths) {
            if (p.kernel != 1 && p.kernel != 3 && p.kernel != 5 && p.kernel != 7)
                throw std::invalid_argument(where + ": kernel must be in {1,3,5,7}");
            if (p.expansion <= 0.0)
                throw std::invalid_argument(where + ": expansion must be positive");
            if (p.expansion != layer.paths[0].expansion)
                throw std::invalid_argument(where + ": paths disagree on expansion");
        }
    }
}

bool mask_valid(const SearchSpaceSpec& spec, const ArchMask& mask) {
    if (mask.layers.size() != spec.layers.size()) return false;
    for (std::size_t l = 0; l < mask.layers.size(); ++l) {
        const std::uint32_t bits = mask.layers[l];
        const int n = spec.layers[l].n();
        if (bits >> n) return false;
        const int pc = std::popcount(bits);
        if (pc < 1 || pc > spec.m) return false;
    }
    return true;
}

std::string mask_to_string(const ArchMask& mask) {
    std::string s;
    for (std::size_t l = 0; l < mask.layers.size(); ++l) {
        if (l) s += '-';
        s += std::to_string(mask.layers[l]);
    }
    return s;
}

ArchMask mask_from_string(const std::string& text) {
    ArchMask mask;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t dash = text.find('-', pos);
        if (dash == std::string::npos) dash = text.size();
        const std::string tok = text.substr(pos, dash - pos);
        if (tok.empty()) throw std::invalid_argument("bad mask string: " + text);
        mask.layers.push_back(static_cast<std::uint32_t>(std::stoul(tok)));
        pos = dash + 1;
        if (dash == text.size()) break;
    }
    return mask;
}

std::uint32_t sample_layer_mask(int n, int m, double p, Rng& rng) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("sample_mask: p must lie strictly in (0,1)");
    for (;;) {
        std::uint32_t bits = 0;
        for (int i = 0; i < n; ++i)
            if (rng.bernoulli(p)) bits |= (1u << i);
        const int pc = std::popcount(bits);
        if (pc >= 1 && pc <= m) return bits;
    }
}

ArchMask sample_mask(const SearchSpaceSpec& spec, double p, Rng& rng) {
    ArchMask mask;
    mask.layers.reserve(spec.layers.size());
    for (const auto& layer : spec.layers)
        mask.layers.push_back(sample_layer_mask(layer.n(), spec.m, p, rng));
    return mask;
}

std::uint32_t sbn_key(SbnMode mode, std::uint32_t layer_mask, int m) {
    const int pc = std::popcount(layer_mask);
    if (pc < 1 || pc > m)
        throw std::invalid_argument("sbn_key: popcount " + std::to_string(pc) +
                                    " outside [1, " + std::to_string(m) + "]");
    switch (mode) {
        case SbnMode::Vanilla: return 0;
        case SbnMode::Linear: return static_cast<std::uint32_t>(pc);
        case SbnMode::Exponential: return layer_mask;
    }
    throw std::invalid_argument("sbn_key: bad mode");
}

std::vector<std::uint32_t> sbn_bank_keys(SbnMode mode, int n, int m) {
    const int cap = std::min(m, n); // m is a cap, never wider than the layer
    std::vector<std::uint32_t> keys;
    switch (mode) {
        case SbnMode::Vanilla:
            keys.push_back(0);
            break;
        case SbnMode::Linear:
            for (int i = 1; i <= cap; ++i) keys.push_back(static_cast<std::uint32_t>(i));
            break;
        case SbnMode::Exponential:
            for (std::uint32_t bits = 1; bits < (1u << n); ++bits) {
                const int pc = std::popcount(bits);
                if (pc >= 1 && pc <= m) keys.push_back(bits);
            }
            break;
    }
    return keys;
}

namespace {
std::uint64_t choose(int n, int k) {
    if (k < 0 || k > n) return 0;
    std::uint64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / i;
    return r;
}

std::uint64_t layer_choice_count(int n, int m) {
    std::uint64_t total = 0;
    for (int i = 1; i <= m; ++i) total += choose(n, i);
    return total;
}

// all valid bitmasks of one layer, ascending
std::vector<std::uint32_t> layer_masks(int n, int m) {
    std::vector<std::uint32_t> out;
    for (std::uint32_t bits = 1; bits < (1u << n); ++bits) {
        const int pc = std::popcount(bits);
        if (pc >= 1 && pc <= m) out.push_back(bits);
    }
    return out;
}
} // namespace

std::uint64_t space_size(const SearchSpaceSpec& spec) {
    std::uint64_t total = 1;
    for (const auto& layer : spec.layers) {
        const std::uint64_t per = layer_choice_count(layer.n(), std::min(spec.m, layer.n()));
        if (per != 0 && total > std::numeric_limits<std::uint64_t>::max() / per)
            return std::numeric_limits<std::uint64_t>::max();
        total *= per;
    }
    return total;
}

std::vector<ArchMask> enumerate_space(const SearchSpaceSpec& spec, std::uint64_t cap) {
    const std::uint64_t size = space_size(spec);
    if (size > cap)
        throw std::length_error("space has " + std::to_string(size) +
                                " masks, above the cap of " + std::to_string(cap) +
                                "; use sampling mode");
    std::vector<std::vector<std::uint32_t>> per_layer;
    per_layer.reserve(spec.layers.size());
    for (const auto& layer : spec.layers)
        per_layer.push_back(layer_masks(layer.n(), std::min(spec.m, layer.n())));

    std::vector<ArchMask> out;
    out.reserve(static_cast<std::size_t>(size));
    ArchMask current;
    current.layers.assign(spec.layers.size(), 0);
    // odometer with layer 0 as the most significant digit
    std::vector<std::size_t> idx(spec.layers.size(), 0);
    for (;;) {
        for (std::size_t l = 0; l < idx.size(); ++l)
            current.layers[l] = per_layer[l][idx[l]];
        out.push_back(current);
        int l = static_cast<int>(idx.size()) - 1;
        while (l >= 0 && ++idx[l] == per_layer[l].size()) {
            idx[l] = 0;
            --l;
        }
        if (l < 0) break;
    }
    return out;
}

SearchSpaceSpec make_space(int layers, const std::vector<int>& kernels, int m,
                           double expansion) {
    SearchSpaceSpec spec;
    spec.m = m;
    LayerSpec layer;
    for (int k : kernels)
        layer.paths.push_back(PathSpec{PathKind::Depthwise, k, expansion});
    spec.layers.assign(static_cast<std::size_t>(layers), layer);
    validate(spec);
    return spec;
}

const char* to_string(SbnMode mode) {
    switch (mode) {
        case SbnMode::Vanilla: return "vanilla";
        case SbnMode::Linear: return "linear";
        case SbnMode::Exponential: return "exponential";
    }
    return "?";
}

const char* to_string(Aggregation agg) {
    return agg == Aggregation::Sum ? "sum" : "sum_proj";
}

const char* to_string(PathKind kind) {
    return kind == PathKind::Depthwise ? "depthwise" : "conv";
}

SbnMode sbn_mode_from_string(const std::string& s) {
    if (s == "vanilla") return SbnMode::Vanilla;
    if (s == "linear") return SbnMode::Linear;
    if (s == "exponential") return SbnMode::Exponential;
    throw std::invalid_argument("unknown sbn_mode: " + s);
}

Aggregation aggregation_from_string(const std::string& s) {
    if (s == "sum") return Aggregation::Sum;
    if (s == "sum_proj") return Aggregation::SumProj;
    throw std::invalid_argument("unknown aggregation: " + s);
}

PathKind path_kind_from_string(const std::string& s) {
    if (s == "depthwise") return PathKind::Depthwise;
    if (s == "conv") return PathKind::Conv;
    throw std::invalid_argument("unknown path kind: " + s);
}

} // namespace mixpath
