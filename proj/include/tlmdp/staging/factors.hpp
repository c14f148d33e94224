#pragma once

#include <string>
#include <vector>

#include "tlmdp/core/rng.hpp"

namespace tlmdp::staging {

// The seven semantic dimensions extracted from a rhetorical input. The
// keyword lists drive the elemental reward; the five header tokens drive
// prompt staging.
struct FactorSet {
  std::string device;
  std::string subject;
  std::string vehicle;
  std::string theme;
  std::string emotion;
  std::vector<std::string> subject_keywords;
  std::vector<std::string> vehicle_keywords;

  // Non-empty tokens and keyword lists, disjoint keyword lists.
  void validate(const std::string& context) const;
  friend bool operator==(const FactorSet&, const FactorSet&) = default;
};

struct RhetoricalInput {
  std::string id;
  std::string text;
  FactorSet truth;  // what a perfect extractor would return
};

struct VerifierConfig {
  double tau_coherence = 0.9;
  double tau_rhetorical = 0.9;
  int max_retries = 10;
  // Probability that the mock extractor corrupts a candidate.
  double perturbation = 0.2;

  void validate() const;
  friend bool operator==(const VerifierConfig&, const VerifierConfig&) = default;
};

// Mock LLM extraction: the input's ground truth, corrupted with probability
// cfg.perturbation by one of PerturbationKind.
enum class PerturbationKind {
  kOmitSubjectKeyword,     // drop (or garble, for 1-keyword lists) one subject keyword
  kSwapKeywordAcrossLists, // exchange one subject keyword with one vehicle keyword
  kLiteralReading,         // tenor and vehicle confused: headers and lists exchanged
};
inline constexpr int kPerturbationKinds = 3;

FactorSet apply_perturbation(const FactorSet& truth, PerturbationKind kind, SeededRng& rng);
FactorSet extract_factors(const RhetoricalInput& input, double perturbation, SeededRng& rng);

struct Verification {
  bool accepted = false;
  double coherence = 0.0;   // s_coh
  double rhetorical = 0.0;  // s_rhet
};

// accept iff s_coh >= tau_c and s_rhet >= tau_r.
bool verify_indicator(double coherence, double rhetorical, const VerifierConfig& cfg);

// s_coh: fraction of the reference subject/vehicle keywords found in the
// candidate's list of the same kind. s_rhet: matching (device, subject,
// vehicle) headers over 3.
Verification verify_factors(const FactorSet& candidate, const RhetoricalInput& input,
                            const VerifierConfig& cfg);

struct ValidatedFactors {
  FactorSet factors;
  int attempts = 0;
  Verification verification;
};

// Returns the first verifying candidate; throws ExtractionFailure after
// cfg.max_retries rejected candidates.
ValidatedFactors generate_validated_factors(const RhetoricalInput& input,
                                            const VerifierConfig& cfg, SeededRng& rng);

}  // namespace tlmdp::staging
