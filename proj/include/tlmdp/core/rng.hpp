#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace tlmdp {

// Counter-based generator: output n is a pure hash of (key, n), so the whole
// stream state is the pair (key, position) and can be checkpointed exactly.
// Distributions are implemented here instead of <random> so that streams are
// identical across standard libraries.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed = 0, std::uint64_t position = 0);
  // Restores a stream from a previously observed (key, position) pair.
  static SeededRng from_state(std::uint64_t key, std::uint64_t position);

  // Independent sub-stream derived from this stream's key and a label. The
  // parent's position is not consumed, so splits are call-order independent.
  SeededRng split(std::string_view label) const;
  SeededRng split(std::string_view label, std::uint64_t index) const;

  std::uint64_t next_u64();
  // Uniform in [0, 1).
  double uniform();
  // Uniform in {0, ..., bound-1}; bound must be positive.
  std::uint64_t uniform_index(std::uint64_t bound);
  double normal();
  void fill_normal(std::span<double> out);
  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t key() const { return key_; }
  std::uint64_t position() const { return position_; }

 private:
  std::uint64_t key_;
  std::uint64_t position_;
};

std::uint64_t mix64(std::uint64_t x);
std::uint64_t hash_label(std::string_view label);

// Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> random_permutation(std::size_t n, SeededRng& rng);

}  // namespace tlmdp
