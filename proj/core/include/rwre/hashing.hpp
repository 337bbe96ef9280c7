#pragma once

#include <cstdint>
#include <span>

#include "rwre/lattice.hpp"

namespace rwre {

// Counter-based hashing. Every random quantity in the library is a pure
// function of (master seed, purpose tag, counters); no generator state is
// ever shared between sites, replicas or threads.

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  return splitmix64(h ^ (v + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2)));
}

// Purpose tags keep unrelated streams (site kernels, walk steps, replica
// seeds, bootstrap draws) independent even under equal numeric counters.
namespace tag {
inline constexpr std::uint64_t kSiteKernel = 0x5349544B45524Eull;  // "SITKERN"
inline constexpr std::uint64_t kWalkStep = 0x57414C4B535450ull;    // "WALKSTP"
inline constexpr std::uint64_t kReplica = 0x5245504C494341ull;     // "REPLICA"
inline constexpr std::uint64_t kMixture = 0x4D49585455524Dull;     // "MIXTURM"
inline constexpr std::uint64_t kBootstrap = 0x424F4F545354ull;     // "BOOTST"
}  // namespace tag

inline std::uint64_t site_key(std::uint64_t master_seed, const Point& x, int d) {
  std::uint64_t h = hash_combine(master_seed, tag::kSiteKernel);
  for (int i = 0; i < d; ++i) h = hash_combine(h, static_cast<std::uint64_t>(x[i]));
  return h;
}

inline std::uint64_t stream_key(std::uint64_t master_seed, std::uint64_t purpose,
                                std::uint64_t stream_id) {
  return hash_combine(hash_combine(master_seed, purpose), stream_id);
}

// Uniform in the open interval (0,1); never returns 0 or 1, so logs are safe.
inline double u01(std::uint64_t key, std::uint64_t counter) {
  std::uint64_t h = splitmix64(key ^ splitmix64(counter));
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

// A keyed counter stream: next() advances the counter only.
class HashStream {
 public:
  explicit HashStream(std::uint64_t key) : key_(key) {}

  double next_u01() { return u01(key_, n_++); }
  std::uint64_t next_u64() { return splitmix64(key_ ^ splitmix64(n_++)); }
  std::uint64_t consumed() const { return n_; }

 private:
  std::uint64_t key_;
  std::uint64_t n_ = 0;
};

inline std::uint64_t replica_seed(std::uint64_t master_seed, std::uint64_t kind_tag,
                                  std::uint64_t replica_index) {
  return hash_combine(hash_combine(hash_combine(master_seed, tag::kReplica), kind_tag),
                      replica_index);
}

}  // namespace rwre
