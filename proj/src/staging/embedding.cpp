#include "tlmdp/staging/embedding.hpp"

#include "tlmdp/core/errors.hpp"
#include "tlmdp/core/real_array.hpp"
#include "tlmdp/core/rng.hpp"

namespace tlmdp::staging {

EmbeddingOracle::EmbeddingOracle(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim == 0) throw ConfigError("embedding: dimension must be positive");
}

std::vector<double> normalized(std::vector<double> x) {
  const double n = norm2(x);
  if (!(n > 1e-300)) throw NumericalDomainError("normalize: zero-length vector");
  for (double& v : x) v /= n;
  return x;
}

std::vector<double> EmbeddingOracle::embed_token(const std::string& token) const {
  SeededRng rng(seed_ ^ hash_label(token));
  std::vector<double> v(dim_);
  rng.fill_normal(v);
  return normalized(std::move(v));
}

std::vector<double> EmbeddingOracle::embed_tokens(const std::vector<std::string>& tokens) const {
  if (tokens.empty()) throw InputError("embed_tokens: empty token list");
  std::vector<double> sum(dim_, 0.0);
  for (const std::string& t : tokens) axpy(1.0, embed_token(t), sum);
  for (double& v : sum) v /= static_cast<double>(tokens.size());
  return normalized(std::move(sum));
}

}  // namespace tlmdp::staging
