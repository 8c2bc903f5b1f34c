#include "gsde/rng.hpp"

#include <cmath>
#include <numbers>

namespace gsde {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
    return static_cast<double>(bits) * 0x1.0p-53;
}

} // namespace

Philox4x32 philox4x32_10(Philox4x32 c, std::array<std::uint32_t, 2> k) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, c[0], hi0, lo0);
        mulhilo(kMul1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += kWeyl0;
        k[1] += kWeyl1;
    }
    return c;
}

void NormalStream::normals(std::uint64_t step, int n, double* out) const {
    const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed_),
                                              static_cast<std::uint32_t>(seed_ >> 32)};
    for (int j = 0; 2 * j < n; ++j) {
        const Philox4x32 ctr = {static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32), traj_,
                                static_cast<std::uint32_t>(j)};
        const Philox4x32 r = philox4x32_10(ctr, key);
        // 1 - u lies in (0, 1], so the logarithm is finite.
        const double u1 = 1.0 - to_unit(r[0], r[1]);
        const double u2 = to_unit(r[2], r[3]);
        const double rad = std::sqrt(-2.0 * std::log(u1));
        const double ang = 2.0 * std::numbers::pi * u2;
        out[2 * j] = rad * std::cos(ang);
        if (2 * j + 1 < n) out[2 * j + 1] = rad * std::sin(ang);
    }
}

double NormalStream::uniform(std::uint64_t step, std::uint32_t channel) const {
    const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed_ ^ 0xA5A5A5A5u),
                                              static_cast<std::uint32_t>(seed_ >> 32) ^ 0x5A5A5A5Au};
    const Philox4x32 ctr = {static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32), traj_,
                            0x80000000u | channel};
    const Philox4x32 r = philox4x32_10(ctr, key);
    return to_unit(r[0], r[1]);
}

} // namespace gsde
