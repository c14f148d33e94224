#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tlmdp/ppo/trainer.hpp"

namespace tlmdp::harness {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  int round = 0;  // last completed round
  std::uint64_t rng_key = 0;
  std::uint64_t rng_position = 0;
  ppo::Models models;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

// Layout: magic "TLMDPCKP", u32 version, then tagged fields
//   [4-byte tag][u64 payload bytes][payload]
// in the fixed order ROND RNGS THTA PHI_ OPTP OPTC. Integers are unsigned
// little-endian, reals are IEEE-754 binary64 little-endian, and every array
// is preceded by its element count.
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void checkpoint_save(const std::string& path, const Checkpoint& ckpt);
Checkpoint checkpoint_load(const std::string& path);

}  // namespace tlmdp::harness
