#pragma once

#include <cstdint>
#include <string>

namespace hspoly {

inline constexpr const char* kVersion = "0.1.0";

/// FNV-1a 64-bit digest, used to stamp resolved configurations into output headers.
inline std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t hash = 1469598103934665603ull;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

inline std::string digest_hex(const std::string& text) {
    static const char* hex = "0123456789abcdef";
    std::uint64_t hash = fnv1a64(text);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = hex[hash & 0xF];
        hash >>= 4;
    }
    return out;
}

}  // namespace hspoly
