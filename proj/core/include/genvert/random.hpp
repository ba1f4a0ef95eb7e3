#pragma once

#include <cstdint>
#include <optional>
#include <random>

namespace genvert {

/// Seeded generator used everywhere randomness is needed.
///
/// Family: std::mt19937_64. Uniform doubles take the top 53 bits of one draw.
/// Normals use the Box-Muller transform on two uniforms; the sine branch is
/// cached and returned by the next call. The transform is spelled out here
/// rather than delegated to std::normal_distribution so streams are identical
/// across standard library implementations.
class Rng {
public:
    static constexpr const char* kFamily = "mt19937_64";
    static constexpr const char* kNormalTransform = "box-muller";

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform in [0, 1).
    double uniform01();
    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
    /// Standard normal.
    double normal();
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

private:
    std::mt19937_64 engine_;
    std::optional<double> cached_normal_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed splitting rule: child = splitmix64(parent XOR index).
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept
{
    return splitmix64(parent ^ index);
}

}  // namespace genvert
