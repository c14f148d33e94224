#include "tlmdp/harness/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "tlmdp/core/errors.hpp"

namespace tlmdp::harness {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* want) {
  throw ConfigError(key + ": expected " + want + ", got '" + value + "'");
}

long long parse_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) bad_value(key, v, "an integer");
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    bad_value(key, v, "a non-negative integer");
  }
  return out;
}

std::size_t parse_count(const std::string& key, const std::string& v) {
  const long long x = parse_int(key, v);
  if (x < 0) throw ConfigError(key + " must be non-negative, got " + v);
  return static_cast<std::size_t>(x);
}

double parse_double(const std::string& key, const std::string& v) {
  if (v.empty()) bad_value(key, v, "a number");
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size()) bad_value(key, v, "a number");
  return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "true or false");
}

std::vector<std::size_t> parse_widths(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    const std::size_t w = parse_count(key, item);
    if (w == 0) throw ConfigError(key + ": layer widths must be positive");
    out.push_back(w);
  }
  if (out.empty()) bad_value(key, v, "a comma-separated list of widths");
  return out;
}

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt_widths(const std::vector<std::size_t>& w) {
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(w[i]);
  }
  return out;
}

struct Entry {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define TLMDP_DOUBLE(KEY, FIELD)                                                         \
  Entry{KEY, [](RunConfig& c, const std::string& v) { c.FIELD = parse_double(KEY, v); }, \
        [](const RunConfig& c) { return fmt_double(c.FIELD); }}
#define TLMDP_INT(KEY, FIELD)                                                                  \
  Entry{KEY,                                                                                   \
        [](RunConfig& c, const std::string& v) {                                               \
          c.FIELD = static_cast<decltype(c.FIELD)>(parse_int(KEY, v));                         \
        },                                                                                     \
        [](const RunConfig& c) { return std::to_string(c.FIELD); }}
#define TLMDP_COUNT(KEY, FIELD)                                                           \
  Entry{KEY, [](RunConfig& c, const std::string& v) { c.FIELD = parse_count(KEY, v); }, \
        [](const RunConfig& c) { return std::to_string(c.FIELD); }}
#define TLMDP_U64(KEY, FIELD)                                                           \
  Entry{KEY, [](RunConfig& c, const std::string& v) { c.FIELD = parse_u64(KEY, v); }, \
        [](const RunConfig& c) { return std::to_string(c.FIELD); }}
#define TLMDP_BOOL(KEY, FIELD)                                                           \
  Entry{KEY, [](RunConfig& c, const std::string& v) { c.FIELD = parse_bool(KEY, v); }, \
        [](const RunConfig& c) { return std::string(c.FIELD ? "true" : "false"); }}
#define TLMDP_WIDTHS(KEY, FIELD)                                                           \
  Entry{KEY, [](RunConfig& c, const std::string& v) { c.FIELD = parse_widths(KEY, v); }, \
        [](const RunConfig& c) { return fmt_widths(c.FIELD); }}
#define TLMDP_ADAMW(PREFIX, FIELD)                        \
  TLMDP_DOUBLE(PREFIX ".lr", FIELD.learning_rate),        \
      TLMDP_DOUBLE(PREFIX ".beta1", FIELD.beta1),         \
      TLMDP_DOUBLE(PREFIX ".beta2", FIELD.beta2),         \
      TLMDP_DOUBLE(PREFIX ".weight_decay", FIELD.weight_decay), \
      TLMDP_DOUBLE(PREFIX ".eps", FIELD.epsilon)

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      Entry{"dataset.path", [](RunConfig& c, const std::string& v) { c.dataset_path = v; },
            [](const RunConfig& c) { return c.dataset_path; }},
      Entry{"dataset.cycle",
            [](RunConfig& c, const std::string& v) {
              if (v == "shuffle") {
                c.trainer.cycle = ppo::DatasetCycle::kShuffle;
              } else if (v == "sequential") {
                c.trainer.cycle = ppo::DatasetCycle::kSequential;
              } else {
                bad_value("dataset.cycle", v, "shuffle or sequential");
              }
            },
            [](const RunConfig& c) {
              return std::string(c.trainer.cycle == ppo::DatasetCycle::kShuffle ? "shuffle"
                                                                                 : "sequential");
            }},
      TLMDP_COUNT("run.N", trainer.inputs_per_round),
      TLMDP_INT("run.C", trainer.stages),
      TLMDP_COUNT("run.d", trainer.latent_dim),
      TLMDP_U64("run.seed", seed),
      TLMDP_INT("run.rounds", rounds),
      Entry{"run.output_dir", [](RunConfig& c, const std::string& v) { c.output_dir = v; },
            [](const RunConfig& c) { return c.output_dir; }},
      TLMDP_INT("run.checkpoint_every", checkpoint_every),
      TLMDP_INT("diffusion.T", trainer.diffusion.steps),
      TLMDP_DOUBLE("diffusion.guidance", trainer.diffusion.guidance),
      TLMDP_DOUBLE("diffusion.eta", trainer.diffusion.eta),
      TLMDP_DOUBLE("diffusion.sigma_min", trainer.diffusion.sigma_min),
      TLMDP_DOUBLE("diffusion.beta_min", trainer.diffusion.beta_min),
      TLMDP_DOUBLE("diffusion.beta_max", trainer.diffusion.beta_max),
      TLMDP_WIDTHS("denoiser.hidden", trainer.denoiser_hidden),
      TLMDP_DOUBLE("verifier.tau_coherence", trainer.verifier.tau_coherence),
      TLMDP_DOUBLE("verifier.tau_rhetorical", trainer.verifier.tau_rhetorical),
      TLMDP_INT("verifier.max_retries", trainer.verifier.max_retries),
      TLMDP_DOUBLE("verifier.perturbation", trainer.verifier.perturbation),
      TLMDP_U64("embedding.seed", trainer.embedding_seed),
      TLMDP_DOUBLE("reward.tau", trainer.reward.tau),
      TLMDP_DOUBLE("reward.decay", trainer.reward.decay),
      TLMDP_DOUBLE("reward.rho", trainer.reward.rho),
      TLMDP_DOUBLE("reward.alpha", trainer.reward.alpha),
      TLMDP_DOUBLE("reward.beta", trainer.reward.beta),
      TLMDP_DOUBLE("reward.kappa", trainer.reward.kappa),
      TLMDP_DOUBLE("gae.gamma", trainer.gae.gamma),
      TLMDP_DOUBLE("gae.lambda", trainer.gae.lambda),
      TLMDP_DOUBLE("gae.gamma_denoise", trainer.gae.gamma_denoise),
      TLMDP_WIDTHS("critic.hidden", trainer.critic_hidden),
      Entry{"critic.target",
            [](RunConfig& c, const std::string& v) {
              c.trainer.critic_target = ppo::critic_target_from_string(v);
            },
            [](const RunConfig& c) { return ppo::to_string(c.trainer.critic_target); }},
      TLMDP_DOUBLE("ppo.clip", trainer.ppo.clip),
      TLMDP_COUNT("ppo.minibatch", trainer.ppo.minibatch),
      TLMDP_INT("ppo.epochs", trainer.ppo.epochs),
      TLMDP_BOOL("ppo.normalize_advantages", trainer.ppo.normalize_advantages),
      TLMDP_INT("ppo.grad_accumulation", trainer.ppo.grad_accumulation),
      TLMDP_ADAMW("policy_opt", trainer.policy_optimizer),
      TLMDP_ADAMW("critic_opt", trainer.critic_optimizer),
      TLMDP_DOUBLE("metrics.ema_alpha", ema_alpha),
      TLMDP_BOOL("metrics.plot_data", plot_data),
      TLMDP_INT("eval.samples", eval_samples),
  };
  return table;
}

#undef TLMDP_DOUBLE
#undef TLMDP_INT
#undef TLMDP_COUNT
#undef TLMDP_U64
#undef TLMDP_BOOL
#undef TLMDP_WIDTHS
#undef TLMDP_ADAMW

}  // namespace

void RunConfig::validate() const {
  if (dataset_path.empty()) throw ConfigError("dataset.path is required");
  if (rounds < 0) throw ConfigError("run.rounds must be non-negative");
  if (checkpoint_every < 0) throw ConfigError("run.checkpoint_every must be non-negative");
  if (output_dir.empty()) throw ConfigError("run.output_dir must not be empty");
  if (!(ema_alpha > 0.0 && ema_alpha <= 1.0)) throw ConfigError("metrics.ema_alpha must be in (0, 1]");
  if (eval_samples < 1) throw ConfigError("eval.samples must be at least 1");
  trainer.validate();
}

RunConfig parse_config(std::istream& in, const std::string& source) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto& table = entries();
    const auto it = std::find_if(table.begin(), table.end(),
                                 [&](const Entry& e) { return e.key == key; });
    if (it == table.end()) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    if (!seen.insert(key).second) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": key '" + key + "' repeated");
    }
    it->set(cfg, value);
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, path);
}

std::string serialize_config(const RunConfig& cfg) {
  std::string out;
  for (const Entry& e : entries()) out += e.key + " = " + e.get(cfg) + "\n";
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const Entry& e : entries()) keys.push_back(e.key);
  return keys;
}

std::string effective_output_dir(const RunConfig& cfg) {
  if (const char* env = std::getenv("TLMDP_OUTPUT_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return cfg.output_dir;
}

}  // namespace tlmdp::harness
