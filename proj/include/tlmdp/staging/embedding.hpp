#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace tlmdp::staging {

// Deterministic stand-in for a text encoder. A token's vector is a pure
// function of (token, dim, seed): the token hash keys a SeededRng, dim
// standard normals are drawn and the result is normalized.
class EmbeddingOracle {
 public:
  EmbeddingOracle(std::size_t dim, std::uint64_t seed);

  std::size_t dim() const { return dim_; }
  std::uint64_t seed() const { return seed_; }

  std::vector<double> embed_token(const std::string& token) const;
  // Normalized mean of the token vectors. Throws InputError on an empty list.
  std::vector<double> embed_tokens(const std::vector<std::string>& tokens) const;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

// x / |x|; throws NumericalDomainError when |x| is (numerically) zero.
std::vector<double> normalized(std::vector<double> x);

}  // namespace tlmdp::staging
