#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tlmdp/ppo/trainer.hpp"

namespace tlmdp::harness {

inline constexpr int kMetricsVersion = 1;

// One line per round. wall_seconds is the only field that is not a pure
// function of (config, seed).
struct MetricsRecord {
  ppo::RoundMetrics round;
  double wall_seconds = 0.0;
};

nlohmann::json to_json(const MetricsRecord& record);
MetricsRecord metrics_from_json(const nlohmann::json& j);

// First line of every metrics file.
nlohmann::json metrics_header(std::uint64_t seed, int planned_rounds);

// Appends records to a metrics file as JSON lines.
class MetricsWriter {
 public:
  // Creates or truncates the file and writes the header line.
  static MetricsWriter create(const std::string& path, std::uint64_t seed, int planned_rounds);
  // Keeps the header and the first `rounds` records, drops the rest.
  static MetricsWriter resume(const std::string& path, int rounds);

  void write(const MetricsRecord& record);
  const std::string& path() const { return path_; }

 private:
  explicit MetricsWriter(std::string path) : path_(std::move(path)) {}
  std::string path_;
};

struct MetricsFile {
  nlohmann::json header;
  std::vector<MetricsRecord> records;
};
MetricsFile read_metrics(const std::string& path);

// y_0 = x_0, y_n = alpha x_n + (1 - alpha) y_{n-1}.
std::vector<double> ema_smooth(const std::vector<double>& series, double alpha);

// Two whitespace-separated columns: round and EMA of the mean composite reward.
void write_plot_data(std::ostream& out, const std::vector<MetricsRecord>& records, double alpha);

}  // namespace tlmdp::harness
