#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace mixpath {

// FNV-1a over bytes; the stable 64-bit content hash used for config hashes
// and table fingerprints.
inline std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[value & 0xf];
        value >>= 4;
    }
    return out;
}

} // namespace mixpath
