#include "stallwatch/hashing.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace stallwatch {

namespace {
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;
}

Fnv1a& Fnv1a::update(std::span<const std::uint8_t> bytes) noexcept {
  for (std::uint8_t b : bytes) {
    state_ ^= b;
    state_ *= kFnvPrime;
  }
  return *this;
}

Fnv1a& Fnv1a::update(std::string_view text) noexcept {
  for (char c : text) {
    state_ ^= static_cast<std::uint8_t>(c);
    state_ *= kFnvPrime;
  }
  return *this;
}

Fnv1a& Fnv1a::update_u64(std::uint64_t value) noexcept {
  for (int i = 0; i < 8; ++i) {
    state_ ^= (value >> (8 * i)) & 0xffU;
    state_ *= kFnvPrime;
  }
  return *this;
}

std::string Fnv1a::hex() const { return fmt::format("{:016x}", state_); }

std::uint64_t fnv1a(std::string_view text) noexcept {
  return Fnv1a().update(text).digest();
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view video_id,
                          std::int64_t window_start_ms) noexcept {
  std::uint64_t s = splitmix64(global_seed);
  s = splitmix64(s ^ fnv1a(video_id));
  return splitmix64(s ^ static_cast<std::uint64_t>(window_start_ms));
}

std::uint64_t Rng::below(std::uint64_t bound) {
  // Rejection sampling over the largest multiple of bound.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return v % bound;
}

std::int64_t Rng::between(std::int64_t lo, std::int64_t hi) {
  return lo + static_cast<std::int64_t>(
                  below(static_cast<std::uint64_t>(hi - lo) + 1));
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

}  // namespace stallwatch
