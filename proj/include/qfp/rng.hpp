#pragma once

#include <cstdint>

namespace qfp {

// splitmix64: tiny seedable generator with cheap child-stream derivation.
// Every stochastic component in the library derives per-task child seeds
// from a master seed so results are reproducible bit-exactly.
class SplitMix64 {
  public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    static constexpr std::uint64_t min() { return 0; }
    static constexpr std::uint64_t max() { return ~0ULL; }

    std::uint64_t operator()() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    // uniform integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        // modulo bias is < 2^-40 for n < 2^24; fine for gate/qubit draws
        return (*this)() % n;
    }

  private:
    std::uint64_t state_;
};

// Deterministic child seed for stream `index` of a master seed.
inline std::uint64_t child_seed(std::uint64_t master, std::uint64_t index) {
    SplitMix64 g(master ^ (0xD1B54A32D192ED03ULL * (index + 1)));
    return g();
}

} // namespace qfp
