#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "hspoly/errors.hpp"

namespace hspoly {

/// Counter-based random number generator: Philox4x32-10 (Salmon et al.).
///
/// All randomness in this library flows through this generator so that
/// synthetic instances, folds and experiment runs are reproducible bit-for-bit
/// from (seed, stream) across platforms and compilers. The 64-bit seed is the
/// key; the stream id occupies the upper half of the 128-bit counter, so
/// distinct streams of the same seed never overlap.
class PhiloxRng {
public:
    explicit PhiloxRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          counter_{0, 0,
                   static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

    std::uint32_t next_u32() noexcept {
        if (index_ == 4) {
            block_ = philox(counter_, key_);
            advance_counter();
            index_ = 0;
        }
        return block_[index_++];
    }

    std::uint64_t next_u64() noexcept {
        const std::uint64_t lo = next_u32();
        const std::uint64_t hi = next_u32();
        return lo | (hi << 32);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller (explicit, not std::normal_distribution,
    /// whose output is implementation-defined).
    double normal() noexcept {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        // u1 in (0, 1] so the log is finite.
        const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 6.283185307179586476925286766559 * u2;
        cached_ = radius * std::sin(angle);
        have_cached_ = true;
        return radius * std::cos(angle);
    }

    /// Unbiased uniform integer in [0, n).
    std::uint64_t uniform_below(std::uint64_t n) {
        if (n == 0) throw argument_error("uniform_below: n must be positive");
        const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
        for (;;) {
            const std::uint64_t x = next_u64();
            if (x >= threshold) return x % n;
        }
    }

    /// Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_below(i));
            std::swap(values[i - 1], values[j]);
        }
    }

    /// Uniform k-subset of {0, ..., n-1}, returned sorted ascending.
    std::vector<int> sample_without_replacement(int n, int k) {
        if (k < 0 || k > n) throw argument_error("sample_without_replacement: k out of range");
        std::vector<int> pool(static_cast<std::size_t>(n));
        std::iota(pool.begin(), pool.end(), 0);
        // Partial Fisher-Yates: the first k slots end up a uniform k-subset.
        for (int i = 0; i < k; ++i) {
            const int j = i + static_cast<int>(uniform_below(static_cast<std::uint64_t>(n - i)));
            std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
        }
        pool.resize(static_cast<std::size_t>(k));
        std::sort(pool.begin(), pool.end());
        return pool;
    }

private:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static void mul_hi_lo(std::uint32_t a, std::uint32_t b,
                          std::uint32_t& hi, std::uint32_t& lo) noexcept {
        const std::uint64_t prod = static_cast<std::uint64_t>(a) * b;
        hi = static_cast<std::uint32_t>(prod >> 32);
        lo = static_cast<std::uint32_t>(prod);
    }

    static Counter philox(Counter ctr, Key key) noexcept {
        constexpr std::uint32_t kMul0 = 0xD2511F53u;
        constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
        constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
        constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
        for (int round = 0; round < 10; ++round) {
            std::uint32_t hi0, lo0, hi1, lo1;
            mul_hi_lo(kMul0, ctr[0], hi0, lo0);
            mul_hi_lo(kMul1, ctr[2], hi1, lo1);
            ctr = Counter{hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        return ctr;
    }

    void advance_counter() noexcept {
        if (++counter_[0] == 0) ++counter_[1];  // streams live in [2], [3]
    }

    Key key_;
    Counter counter_;
    Counter block_{};
    int index_ = 4;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace hspoly
