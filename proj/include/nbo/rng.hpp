#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace nbo {

/// Seeded random stream. Every consumer receives one explicitly; there is no
/// global generator anywhere in the library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return uniform_(engine_); }
    double normal() { return normal_(engine_); }
    std::uint64_t next_u64() { return engine_(); }
    std::mt19937_64& engine() { return engine_; }

    /// Independent child stream; the parent advances by one draw.
    Rng split() { return Rng(mix_seed(engine_(), 0x9e3779b97f4a7c15ULL)); }

    static std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

private:
    std::mt19937_64 engine_;
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
    std::normal_distribution<double> normal_{0.0, 1.0};
};

/// splitmix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x);

/// 64-bit FNV-1a of a byte string; stable across platforms.
std::uint64_t fnv1a64(const std::string& text);

}  // namespace nbo
