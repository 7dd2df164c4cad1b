#pragma once

#include <cstdint>

namespace dri {

// splitmix64 stream.  Chosen over <random> engines because distribution
// output must be byte-identical across standard libraries; the raw engine
// plus an explicit u64 -> [0,1) map is fully portable.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1), 53 significant bits
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // independent per-index stream; used to make path i reproducible
  // regardless of how work is split across threads
  static RngStream substream(std::uint64_t master, std::uint64_t index) {
    RngStream mix(master ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
    return RngStream(mix.next_u64());
  }

 private:
  std::uint64_t state_;
};

}  // namespace dri
