#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace ltsf {

/// Counter-based SplitMix64 generator.
///
/// Output k (1-based) is mix(seed + k * 0x9E3779B97F4A7C15), so the stream is
/// fully described by (seed, counter) and is identical on every platform.
/// Seed 0 yields 0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) noexcept : seed_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t counter() const noexcept { return counter_; }

    std::uint64_t next_u64() noexcept;
    // 53-bit uniform in [0, 1).
    double uniform01() noexcept;
    double uniform(double lo, double hi) noexcept;
    // Unbiased integer in [0, bound); bound must be > 0.
    std::uint64_t below(std::uint64_t bound) noexcept;

    template <typename T>
    void shuffle(std::span<T> items) noexcept {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    friend bool operator==(const Rng&, const Rng&) = default;

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64_mix(std::uint64_t z) noexcept;

}  // namespace ltsf
