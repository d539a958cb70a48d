#pragma once

#include <cstdint>
#include <random>

namespace pqs {

inline constexpr const char* kRngAlgorithm =
    "mt19937_64; streams split by splitmix64(seed, index); normals via std::normal_distribution";

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seedable random stream. Child streams produced by split() depend only on
/// the parent's seed and the child index, never on how much of the parent
/// has been consumed, so work can be distributed across tasks in any order.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

    std::uint64_t seed() const noexcept { return seed_; }

    RngStream split(std::uint64_t index) const {
        return RngStream(splitmix64(seed_ ^ splitmix64(index + 0x632BE59BD9B4E019ULL)));
    }

    double normal() { return normal_(engine_); }

    double uniform() { return uniform_(engine_); }

    bool bernoulli(double prob) { return uniform() < prob; }

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace pqs
