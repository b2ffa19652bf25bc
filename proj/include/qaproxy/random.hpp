#pragma once

#include <cstdint>
#include <vector>

namespace qaproxy {

// SplitMix64. Chosen over <random> distributions because its output is
// bit-identical on every platform, which the determinism contract
// (same seed, same checkpoint bytes) depends on.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53 usable bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [-limit, limit].
    double next_symmetric(double limit) { return (2.0 * next_double() - 1.0) * limit; }

    // Uniform in [0, n). Modulo bias is irrelevant at the pool sizes used here.
    std::uint64_t next_below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

  private:
    std::uint64_t state_;
};

// Fisher-Yates with a fixed sweep order, so shuffles are seed-deterministic.
template <typename T>
void shuffle_in_place(std::vector<T>& items, SplitMix64& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace qaproxy
