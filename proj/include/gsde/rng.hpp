#pragma once

// Counter-based normal variates.
//
// Philox4x32-10 (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3",
// SC11) maps a 128-bit counter and a 64-bit key to four 32-bit words. The key is
// the run seed; the counter is (step lo, step hi, trajectory, channel pair).
// Each block yields two 53-bit uniforms and, by Box-Muller, two standard normals
// for channels 2j and 2j+1. Any variate can be regenerated from its coordinates
// alone, so results do not depend on scheduling.

#include <array>
#include <cstdint>

namespace gsde {

using Philox4x32 = std::array<std::uint32_t, 4>;

Philox4x32 philox4x32_10(Philox4x32 counter, std::array<std::uint32_t, 2> key);

class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint32_t trajectory) : seed_(seed), traj_(trajectory) {}

    /// Standard normals for channels 0..n-1 at the given step.
    void normals(std::uint64_t step, int n, double* out) const;

    /// Uniform in [0, 1) from the same counter space (used for samplers).
    double uniform(std::uint64_t step, std::uint32_t channel) const;

private:
    std::uint64_t seed_;
    std::uint32_t traj_;
};

} // namespace gsde
