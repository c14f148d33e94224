#include "tlmdp/harness/metrics.hpp"

#include <fstream>
#include <sstream>

#include "tlmdp/core/errors.hpp"

namespace tlmdp::harness {
namespace {

nlohmann::json stat_json(const ppo::Stat& s) { return {{"mean", s.mean}, {"std", s.stddev}}; }

ppo::Stat stat_from(const nlohmann::json& j) {
  return {j.at("mean").get<double>(), j.at("std").get<double>()};
}

}  // namespace

nlohmann::json to_json(const MetricsRecord& record) {
  const ppo::RoundMetrics& m = record.round;
  nlohmann::json j;
  j["round"] = m.round;
  j["composite"] = stat_json(m.composite);
  j["stage"] = stat_json(m.stage);
  j["subject"] = stat_json(m.subject);
  j["vehicle"] = stat_json(m.vehicle);
  j["aesthetic"] = stat_json(m.aesthetic);
  j["subject_cosine"] = m.subject_cosine;
  j["max_vehicle_cosine"] = m.max_vehicle_cosine;
  j["vehicle_fire_rate"] = m.vehicle_fire_rate;
  j["samples"] = m.samples;
  j["degenerate"] = m.degenerate;
  j["extraction_attempts"] = m.extraction_attempts;
  j["extraction_retries"] = m.extraction_retries;
  j["mean_advantage"] = m.mean_advantage;
  j["ppo"] = {{"objective", m.ppo_objective},
              {"mean_weight", m.mean_weight},
              {"clip_fraction", m.clip_fraction},
              {"clamped_ratios", m.clamped_ratios},
              {"policy_steps", m.policy_steps},
              {"skipped_updates", m.skipped_updates}};
  j["critic_loss"] = m.critic_loss;
  j["pool_size"] = m.pool_size;
  j["wall_seconds"] = record.wall_seconds;
  return j;
}

MetricsRecord metrics_from_json(const nlohmann::json& j) {
  MetricsRecord r;
  ppo::RoundMetrics& m = r.round;
  try {
    m.round = j.at("round").get<int>();
    m.composite = stat_from(j.at("composite"));
    m.stage = stat_from(j.at("stage"));
    m.subject = stat_from(j.at("subject"));
    m.vehicle = stat_from(j.at("vehicle"));
    m.aesthetic = stat_from(j.at("aesthetic"));
    m.subject_cosine = j.at("subject_cosine").get<double>();
    m.max_vehicle_cosine = j.at("max_vehicle_cosine").get<double>();
    m.vehicle_fire_rate = j.at("vehicle_fire_rate").get<double>();
    m.samples = j.at("samples").get<std::size_t>();
    m.degenerate = j.at("degenerate").get<std::size_t>();
    m.extraction_attempts = j.at("extraction_attempts").get<int>();
    m.extraction_retries = j.at("extraction_retries").get<int>();
    m.mean_advantage = j.at("mean_advantage").get<double>();
    const nlohmann::json& p = j.at("ppo");
    m.ppo_objective = p.at("objective").get<double>();
    m.mean_weight = p.at("mean_weight").get<double>();
    m.clip_fraction = p.at("clip_fraction").get<double>();
    m.clamped_ratios = p.at("clamped_ratios").get<std::size_t>();
    m.policy_steps = p.at("policy_steps").get<std::size_t>();
    m.skipped_updates = p.at("skipped_updates").get<std::size_t>();
    m.critic_loss = j.at("critic_loss").get<double>();
    m.pool_size = j.at("pool_size").get<std::size_t>();
    r.wall_seconds = j.at("wall_seconds").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("metrics record: ") + e.what());
  }
  return r;
}

nlohmann::json metrics_header(std::uint64_t seed, int planned_rounds) {
  return {{"format", "tlmdp-metrics"},
          {"version", kMetricsVersion},
          {"seed", seed},
          {"planned_rounds", planned_rounds}};
}

MetricsWriter MetricsWriter::create(const std::string& path, std::uint64_t seed,
                                    int planned_rounds) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write metrics file '" + path + "'");
  out << metrics_header(seed, planned_rounds).dump() << "\n";
  return MetricsWriter(path);
}

MetricsWriter MetricsWriter::resume(const std::string& path, int rounds) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read metrics file '" + path + "' for resume");
  std::string header;
  if (!std::getline(in, header)) throw InputError("metrics file '" + path + "' has no header");
  std::vector<std::string> kept;
  std::string line;
  while (static_cast<int>(kept.size()) < rounds && std::getline(in, line)) kept.push_back(line);
  if (static_cast<int>(kept.size()) < rounds) {
    throw InputError("metrics file '" + path + "' holds fewer than " + std::to_string(rounds) +
                     " records");
  }
  in.close();
  std::ofstream out(path, std::ios::trunc);
  out << header << "\n";
  for (const std::string& l : kept) out << l << "\n";
  return MetricsWriter(path);
}

void MetricsWriter::write(const MetricsRecord& record) {
  std::ofstream out(path_, std::ios::app);
  if (!out) throw Error("cannot append to metrics file '" + path_ + "'");
  out << to_json(record).dump() << "\n";
}

MetricsFile read_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open metrics file '" + path + "'");
  MetricsFile file;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw InputError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (lineno == 1) {
      file.header = j;
    } else {
      file.records.push_back(metrics_from_json(j));
    }
  }
  if (lineno == 0) throw InputError("metrics file '" + path + "' is empty");
  return file;
}

std::vector<double> ema_smooth(const std::vector<double>& series, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("ema_smooth: alpha must be in (0, 1]");
  std::vector<double> out(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    out[i] = i == 0 ? series[0] : alpha * series[i] + (1.0 - alpha) * out[i - 1];
  }
  return out;
}

void write_plot_data(std::ostream& out, const std::vector<MetricsRecord>& records, double alpha) {
  std::vector<double> composite;
  for (const auto& r : records) composite.push_back(r.round.composite.mean);
  const std::vector<double> smooth = ema_smooth(composite, alpha);
  out.precision(17);
  for (std::size_t i = 0; i < records.size(); ++i) {
    out << records[i].round.round << " " << smooth[i] << "\n";
  }
}

}  // namespace tlmdp::harness
