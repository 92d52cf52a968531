#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace ergokit {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      ctr = single_round(ctr, key);
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static Counter single_round(const Counter& c, const Key& k) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

/// Standard normal variates addressed by (seed, path, step, tag, component). Identical keys give
/// bit-identical values whatever the evaluation order or thread count.
class NoiseStream {
 public:
  explicit NoiseStream(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  std::uint64_t seed() const {
    return static_cast<std::uint64_t>(key_[0]) | (static_cast<std::uint64_t>(key_[1]) << 32);
  }

  /// Fills `out` with independent N(0, 1) values for components 0..out.size()-1.
  void normals(std::uint32_t path, std::uint64_t step, std::uint32_t tag,
               std::span<double> out) const {
    const std::size_t n = out.size();
    for (std::size_t c = 0; c < n; c += 2) {
      double z0 = 0, z1 = 0;
      pair(path, step, tag, static_cast<std::uint32_t>(c / 2), z0, z1);
      out[c] = z0;
      if (c + 1 < n) out[c + 1] = z1;
    }
  }

  double normal(std::uint32_t path, std::uint64_t step, std::uint32_t tag,
                std::uint32_t component) const {
    double z0 = 0, z1 = 0;
    pair(path, step, tag, component / 2, z0, z1);
    return (component % 2 == 0) ? z0 : z1;
  }

  /// Uniform on (0, 1).
  double uniform(std::uint32_t path, std::uint64_t step, std::uint32_t tag,
                 std::uint32_t component) const {
    const auto r = raw(path, step, tag, component / 2);
    const std::uint64_t bits = (component % 2 == 0)
                                   ? (static_cast<std::uint64_t>(r[0]) << 32 | r[1])
                                   : (static_cast<std::uint64_t>(r[2]) << 32 | r[3]);
    return to_open_unit(bits);
  }

 private:
  Philox4x32::Key key_;

  Philox4x32::Counter raw(std::uint32_t path, std::uint64_t step, std::uint32_t tag,
                          std::uint32_t block) const {
    // The step index occupies one 32-bit word; the tag word carries the upper step bits.
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(step),
                                  tag ^ static_cast<std::uint32_t>(step >> 32) * 0x9E3779B9u,
                                  block, path};
    return Philox4x32::generate(ctr, key_);
  }

  static double to_open_unit(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  void pair(std::uint32_t path, std::uint64_t step, std::uint32_t tag, std::uint32_t block,
            double& z0, double& z1) const {
    const auto r = raw(path, step, tag, block);
    const double u1 = to_open_unit(static_cast<std::uint64_t>(r[0]) << 32 | r[1]);
    const double u2 = to_open_unit(static_cast<std::uint64_t>(r[2]) << 32 | r[3]);
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    z0 = rad * std::cos(ang);
    z1 = rad * std::sin(ang);
  }
};

/// Tags separating independent uses of one NoiseStream.
namespace noise_tag {
inline constexpr std::uint32_t kDynamics = 0;
inline constexpr std::uint32_t kInitialPosition = 1;
inline constexpr std::uint32_t kInitialVelocity = 2;
inline constexpr std::uint32_t kMetropolis = 3;
inline constexpr std::uint32_t kMetropolisAccept = 4;
inline constexpr std::uint32_t kEigenStart = 5;
inline constexpr std::uint32_t kSphereQuadrature = 6;
/// Brownian-bridge refinements use kBridgeBase + node index (node < 2^21).
inline constexpr std::uint32_t kBridgeBase = 1u << 24;
}  // namespace noise_tag

}  // namespace ergokit
