#include "tlmdp/core/rng.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "tlmdp/core/errors.hpp"

namespace tlmdp {

std::uint64_t mix64(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_label(std::string_view label) {
  std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
  for (unsigned char ch : label) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  return mix64(h);
}

SeededRng::SeededRng(std::uint64_t seed, std::uint64_t position)
    : key_(mix64(seed ^ 0x5DEECE66DULL)), position_(position) {}

SeededRng SeededRng::from_state(std::uint64_t key, std::uint64_t position) {
  SeededRng rng(0, position);
  rng.key_ = key;
  return rng;
}

SeededRng SeededRng::split(std::string_view label) const {
  SeededRng child(0, 0);
  child.key_ = mix64(key_ ^ hash_label(label));
  return child;
}

SeededRng SeededRng::split(std::string_view label, std::uint64_t index) const {
  SeededRng child(0, 0);
  child.key_ = mix64(mix64(key_ ^ hash_label(label)) + mix64(index ^ 0xA0761D6478BD642FULL));
  return child;
}

std::uint64_t SeededRng::next_u64() {
  const std::uint64_t n = position_++;
  return mix64(key_ ^ mix64(n));
}

double SeededRng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t SeededRng::uniform_index(std::uint64_t bound) {
  if (bound == 0) throw InputError("uniform_index: bound must be positive");
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % bound;
}

double SeededRng::normal() {
  // Box-Muller, cosine branch only so every draw consumes exactly two words.
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void SeededRng::fill_normal(std::span<double> out) {
  for (double& v : out) v = normal();
}

std::vector<std::size_t> random_permutation(std::size_t n, SeededRng& rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform_index(i));
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

}  // namespace tlmdp
