#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>

namespace stallwatch {

// Incremental FNV-1a (64-bit). Stable across platforms, used for seeds and
// content hashes recorded in run manifests.
class Fnv1a {
 public:
  Fnv1a& update(std::span<const std::uint8_t> bytes) noexcept;
  Fnv1a& update(std::string_view text) noexcept;
  Fnv1a& update_u64(std::uint64_t value) noexcept;
  std::uint64_t digest() const noexcept { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::uint64_t fnv1a(std::string_view text) noexcept;
std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Seed for one background window: mixes the global seed, the video id and the
// window start (milliseconds).
std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view video_id,
                          std::int64_t window_start_ms) noexcept;

// Deterministic generator. Distributions are implemented here rather than
// through <random> so that streams are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);
  // Uniform integer in [lo, hi].
  std::int64_t between(std::int64_t lo, std::int64_t hi);
  // Uniform real in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Standard normal via Box-Muller.
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace stallwatch
