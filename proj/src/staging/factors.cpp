#include "tlmdp/staging/factors.hpp"

#include <algorithm>

#include "tlmdp/core/errors.hpp"

namespace tlmdp::staging {
namespace {

bool contains(const std::vector<std::string>& list, const std::string& token) {
  return std::find(list.begin(), list.end(), token) != list.end();
}

}  // namespace

void FactorSet::validate(const std::string& context) const {
  const std::pair<const char*, const std::string*> headers[] = {
      {"device", &device}, {"subject", &subject}, {"vehicle", &vehicle},
      {"theme", &theme},   {"emotion", &emotion}};
  for (const auto& [name, value] : headers) {
    if (value->empty()) throw InputError(context + ": field '" + name + "' is empty");
  }
  if (subject_keywords.empty()) throw InputError(context + ": subject_keywords is empty");
  if (vehicle_keywords.empty()) throw InputError(context + ": vehicle_keywords is empty");
  for (const std::string& k : subject_keywords) {
    if (k.empty()) throw InputError(context + ": empty subject keyword");
    if (contains(vehicle_keywords, k)) {
      throw InputError(context + ": keyword '" + k + "' is both subject and vehicle");
    }
  }
  for (const std::string& k : vehicle_keywords) {
    if (k.empty()) throw InputError(context + ": empty vehicle keyword");
  }
}

void VerifierConfig::validate() const {
  if (!(tau_coherence >= 0.0 && tau_coherence <= 1.0)) {
    throw ConfigError("verifier.tau_coherence must be in [0, 1]");
  }
  if (!(tau_rhetorical >= 0.0 && tau_rhetorical <= 1.0)) {
    throw ConfigError("verifier.tau_rhetorical must be in [0, 1]");
  }
  if (max_retries < 1) throw ConfigError("verifier.max_retries must be at least 1");
  if (!(perturbation >= 0.0 && perturbation <= 1.0)) {
    throw ConfigError("verifier.perturbation must be in [0, 1]");
  }
}

FactorSet apply_perturbation(const FactorSet& truth, PerturbationKind kind, SeededRng& rng) {
  FactorSet f = truth;
  switch (kind) {
    case PerturbationKind::kOmitSubjectKeyword: {
      const auto k = static_cast<std::size_t>(rng.uniform_index(f.subject_keywords.size()));
      if (f.subject_keywords.size() > 1) {
        f.subject_keywords.erase(f.subject_keywords.begin() + static_cast<long>(k));
      } else {
        f.subject_keywords[k] += "?";
      }
      break;
    }
    case PerturbationKind::kSwapKeywordAcrossLists: {
      const auto s = static_cast<std::size_t>(rng.uniform_index(f.subject_keywords.size()));
      const auto v = static_cast<std::size_t>(rng.uniform_index(f.vehicle_keywords.size()));
      std::swap(f.subject_keywords[s], f.vehicle_keywords[v]);
      break;
    }
    case PerturbationKind::kLiteralReading:
      std::swap(f.subject, f.vehicle);
      std::swap(f.subject_keywords, f.vehicle_keywords);
      break;
  }
  return f;
}

FactorSet extract_factors(const RhetoricalInput& input, double perturbation, SeededRng& rng) {
  input.truth.validate("input '" + input.id + "'");
  if (!rng.bernoulli(perturbation)) return input.truth;
  const auto kind = static_cast<PerturbationKind>(rng.uniform_index(kPerturbationKinds));
  return apply_perturbation(input.truth, kind, rng);
}

bool verify_indicator(double coherence, double rhetorical, const VerifierConfig& cfg) {
  return coherence >= cfg.tau_coherence && rhetorical >= cfg.tau_rhetorical;
}

Verification verify_factors(const FactorSet& candidate, const RhetoricalInput& input,
                            const VerifierConfig& cfg) {
  const FactorSet& ref = input.truth;
  std::size_t found = 0;
  for (const std::string& k : ref.subject_keywords) found += contains(candidate.subject_keywords, k);
  for (const std::string& k : ref.vehicle_keywords) found += contains(candidate.vehicle_keywords, k);
  const std::size_t total = ref.subject_keywords.size() + ref.vehicle_keywords.size();

  int headers = 0;
  headers += candidate.device == ref.device;
  headers += candidate.subject == ref.subject;
  headers += candidate.vehicle == ref.vehicle;

  Verification v;
  v.coherence = total == 0 ? 0.0 : static_cast<double>(found) / static_cast<double>(total);
  v.rhetorical = headers / 3.0;
  v.accepted = verify_indicator(v.coherence, v.rhetorical, cfg);
  return v;
}

ValidatedFactors generate_validated_factors(const RhetoricalInput& input,
                                            const VerifierConfig& cfg, SeededRng& rng) {
  cfg.validate();
  for (int attempt = 1; attempt <= cfg.max_retries; ++attempt) {
    FactorSet candidate = extract_factors(input, cfg.perturbation, rng);
    const Verification v = verify_factors(candidate, input, cfg);
    if (v.accepted) return {std::move(candidate), attempt, v};
  }
  throw ExtractionFailure(input.id, cfg.max_retries);
}

}  // namespace tlmdp::staging
