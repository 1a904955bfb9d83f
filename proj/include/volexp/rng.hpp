#pragma once

#include <cmath>
#include <cstdint>
#include <span>

namespace volexp {

// Philox4x32-10 counter-based generator. A stream is addressed by
// (seed, stream_id); draws within a stream advance a 64-bit block counter.
// Output is platform-independent, which keeps Monte Carlo runs bit-identical
// for a fixed (seed, chunking) regardless of thread count.
class Philox {
 public:
  Philox(uint64_t seed, uint64_t stream_id)
      : key0_(static_cast<uint32_t>(seed)),
        key1_(static_cast<uint32_t>(seed >> 32)),
        ctr2_(static_cast<uint32_t>(stream_id)),
        ctr3_(static_cast<uint32_t>(stream_id >> 32)) {}

  uint32_t next_u32() {
    if (have_ == 0) {
      block();
      have_ = 4;
    }
    return out_[4 - have_--];
  }

  // uniform in (0, 1), 53 bits
  double uniform() {
    const uint64_t hi = next_u32();
    const uint64_t lo = next_u32();
    const uint64_t v = ((hi << 32) | lo) >> 11;
    return (static_cast<double>(v) + 0.5) * 0x1.0p-53;
  }

  // standard normal via Box-Muller (deterministic consumption: 2 uniforms
  // per pair of normals)
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

  void fill_normals(std::span<double> out) {
    for (double& v : out) v = normal();
  }

 private:
  void block() {
    uint32_t c0 = ctr0_, c1 = ctr1_, c2 = ctr2_, c3 = ctr3_;
    uint32_t k0 = key0_, k1 = key1_;
    for (int round = 0; round < 10; ++round) {
      const uint64_t p0 = 0xD2511F53ull * c0;
      const uint64_t p1 = 0xCD9E8D57ull * c2;
      const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32);
      const uint32_t lo0 = static_cast<uint32_t>(p0);
      const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32);
      const uint32_t lo1 = static_cast<uint32_t>(p1);
      const uint32_t n0 = hi1 ^ c1 ^ k0;
      const uint32_t n1 = lo1;
      const uint32_t n2 = hi0 ^ c3 ^ k1;
      const uint32_t n3 = lo0;
      c0 = n0;
      c1 = n1;
      c2 = n2;
      c3 = n3;
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    out_[0] = c0;
    out_[1] = c1;
    out_[2] = c2;
    out_[3] = c3;
    if (++ctr0_ == 0) ++ctr1_;  // 64-bit block counter in (ctr0, ctr1)
  }

  uint32_t key0_, key1_;
  uint32_t ctr0_ = 0, ctr1_ = 0, ctr2_, ctr3_;
  uint32_t out_[4] = {0, 0, 0, 0};
  int have_ = 0;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace volexp
