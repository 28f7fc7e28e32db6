#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <vector>

namespace fewlabel {

/// splitmix64 finalizer; the mixing step behind stream-key derivation.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Folds a path of identifiers (trial index, method index, purpose tag, ...)
/// into a 64-bit stream key. Distinct paths give statistically independent
/// Philox streams, so work units can run in any order or on any thread while
/// reproducing the same draws.
inline std::uint64_t derive_stream(std::uint64_t seed,
                                   std::initializer_list<std::uint64_t> path) {
    std::uint64_t key = splitmix64(seed ^ 0x243f6a8885a308d3ull);
    for (std::uint64_t component : path) {
        key = splitmix64(key ^ component);
    }
    return key;
}

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Chosen over
/// std::mt19937 because the output is a pure function of (key, counter): every
/// trial owns a cheap independent stream and results cannot depend on thread
/// scheduling. Distribution sampling below is hand-rolled so that draws are
/// bit-identical across standard library implementations.
class Philox {
public:
    explicit Philox(std::uint64_t key)
        : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)} {}

    std::uint32_t next_u32() {
        if (pos_ == 4) {
            block_ = generate();
            advance_counter();
            pos_ = 0;
        }
        return block_[pos_++];
    }

    std::uint64_t next_u64() {
        const std::uint64_t lo = next_u32();
        const std::uint64_t hi = next_u32();
        return (hi << 32) | lo;
    }

    /// Uniform double in [0, 1), 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in (0, 1]; safe as a log() argument.
    double uniform_open() { return 1.0 - uniform(); }

    double uniform_range(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Unbiased integer in [0, bound) via Lemire's multiply-shift rejection.
    std::uint64_t uniform_below(std::uint64_t bound) {
        unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            const std::uint64_t threshold = -bound % bound;
            while (low < threshold) {
                m = static_cast<unsigned __int128>(next_u64()) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    /// Standard normal via Box-Muller; consumes exactly two 64-bit draws.
    double normal() {
        const double u1 = uniform_open();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Fisher-Yates shuffle of the whole vector.
    template <class T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            const std::size_t j = uniform_below(i);
            std::swap(values[i - 1], values[j]);
        }
    }

    /// Places a uniform random k-subset (in random order) in the first k slots.
    template <class T>
    void partial_shuffle(std::vector<T>& values, std::size_t k) {
        const std::size_t n = values.size();
        for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
            const std::size_t j = i + uniform_below(n - i);
            std::swap(values[i], values[j]);
        }
    }

private:
    static constexpr std::uint32_t kMult0 = 0xD2511F53u;
    static constexpr std::uint32_t kMult1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    std::array<std::uint32_t, 4> generate() const {
        std::array<std::uint32_t, 4> ctr = counter_;
        std::uint32_t k0 = key_[0];
        std::uint32_t k1 = key_[1];
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(kMult0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kMult1) * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ k0,
                   static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ k1,
                   static_cast<std::uint32_t>(p0)};
            k0 += kWeyl0;
            k1 += kWeyl1;
        }
        return ctr;
    }

    void advance_counter() {
        for (auto& word : counter_) {
            if (++word != 0) {
                break;
            }
        }
    }

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> counter_{0, 0, 0, 0};
    std::array<std::uint32_t, 4> block_{};
    int pos_ = 4;
};

} // namespace fewlabel
