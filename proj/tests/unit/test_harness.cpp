#include <doctest.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "helpers.hpp"
#include "tlmdp/core/errors.hpp"
#include "tlmdp/harness/checkpoint.hpp"
#include "tlmdp/harness/commands.hpp"
#include "tlmdp/harness/config.hpp"
#include "tlmdp/harness/metrics.hpp"
#include "tlmdp/staging/dataset.hpp"

using namespace tlmdp;
using namespace tlmdp::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tlmdp_unit_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in, "test.cfg");
}

// Small, fast run used by the command tests.
RunConfig tiny_run(const fs::path& dir) {
  RunConfig cfg = parse("dataset.path = " + testing::toy_dataset() +
                        "\nrun.N = 2\nrun.C = 2\ndiffusion.T = 3\ndenoiser.hidden = 8,8\n"
                        "critic.hidden = 8\nppo.epochs = 1\neval.samples = 2\nrun.seed = 5\n");
  cfg.output_dir = dir.string();
  return cfg;
}

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("config: dataset path alone gives the documented defaults") {
  const RunConfig cfg = parse("dataset.path = data/x.jsonl\n");
  CHECK(cfg.dataset_path == "data/x.jsonl");
  RunConfig expected;
  expected.dataset_path = "data/x.jsonl";
  CHECK(cfg == expected);
  CHECK(cfg.trainer.inputs_per_round == 8);
  CHECK(cfg.trainer.stages == 3);
  CHECK(cfg.trainer.diffusion.steps == 50);
  CHECK(cfg.trainer.diffusion.guidance == 5.0);
  CHECK(cfg.trainer.ppo.clip == 0.2);
  CHECK(cfg.trainer.ppo.minibatch == 3);
  CHECK(cfg.trainer.gae.gamma == 0.99);
  CHECK(cfg.trainer.gae.lambda == 0.95);
  CHECK(cfg.trainer.gae.gamma_denoise == 0.95);
  CHECK(cfg.trainer.reward.tau == 0.5);
  CHECK(cfg.trainer.verifier.max_retries == 10);
  CHECK(cfg.trainer.policy_optimizer.learning_rate == 3e-4);
  CHECK(cfg.trainer.critic_hidden == std::vector<std::size_t>{256, 256, 256});
  CHECK(cfg.ema_alpha == 0.1);
}

TEST_CASE("config: errors name the key") {
  CHECK_THROWS_WITH_AS(parse("dataset.path = x\ndiffusion.T = -3\n"), doctest::Contains("T"), ConfigError);
  CHECK_THROWS_WITH_AS(parse("dataset.path = x\nppo.clipp = 0.1\n"), doctest::Contains("ppo.clipp"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse("dataset.path = x\nppo.clip = big\n"), doctest::Contains("ppo.clip"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse("dataset.path = x\nppo.clip = 0.1\nppo.clip = 0.2\n"),
                       doctest::Contains("ppo.clip"), ConfigError);
  CHECK_THROWS_WITH_AS(parse("run.N = 2\n"), doctest::Contains("dataset.path"), ConfigError);
  CHECK_THROWS_WITH_AS(parse("dataset.path = x\nreward.decay = 1.5\n"), doctest::Contains("reward.decay"),
                       ConfigError);
  CHECK_THROWS_AS(parse("dataset.path = x\njust some words\n"), ConfigError);
}

TEST_CASE("config: comments and blank lines") {
  const RunConfig cfg = parse("# header\n\ndataset.path = a.jsonl  # trailing\n  run.seed = 12\n");
  CHECK(cfg.dataset_path == "a.jsonl");
  CHECK(cfg.seed == 12);
}

TEST_CASE("config: load, serialize, load is the identity") {
  RunConfig cfg = parse("dataset.path = d.jsonl\nrun.seed = 77\nppo.clip = 0.15\nreward.tau = 0.1\n"
                        "denoiser.hidden = 3,5,7\ncritic.target = lambda_return\ndataset.cycle = sequential\n"
                        "policy_opt.lr = 1.2345678901234567e-4\nmetrics.plot_data = true\n");
  const RunConfig back = parse(serialize_config(cfg));
  CHECK(back == cfg);
  CHECK(parse(serialize_config(back)) == back);
  CHECK(serialize_config(back) == serialize_config(cfg));
  // Every known key is emitted exactly once.
  const std::string text = serialize_config(cfg);
  for (const std::string& key : config_keys()) CHECK(text.find(key + " = ") != std::string::npos);
}

TEST_CASE("config: load_config reports missing files") {
  CHECK_THROWS_AS(load_config("/nonexistent/dir/cfg.txt"), ConfigError);
}

TEST_CASE("config: output directory override from the environment") {
  RunConfig cfg;
  cfg.output_dir = "runs/a";
  ::unsetenv("TLMDP_OUTPUT_DIR");
  CHECK(effective_output_dir(cfg) == "runs/a");
  ::setenv("TLMDP_OUTPUT_DIR", "/tmp/elsewhere", 1);
  CHECK(effective_output_dir(cfg) == "/tmp/elsewhere");
  ::unsetenv("TLMDP_OUTPUT_DIR");
}

TEST_CASE("ema_smooth: examples and properties") {
  const std::vector<double> x{0.3, -1.0, 2.0, 0.5};
  CHECK(ema_smooth(x, 1.0) == x);
  CHECK(ema_smooth({0.0, 1.0}, 0.5) == std::vector<double>{0.0, 0.5});
  for (double y : ema_smooth(std::vector<double>(10, 2.5), 0.3)) CHECK(y == doctest::Approx(2.5));
  const auto y = ema_smooth(x, 0.2);
  CHECK(y[0] == x[0]);
  for (std::size_t i = 1; i < x.size(); ++i) {
    CHECK(y[i] <= std::max(x[i], y[i - 1]) + 1e-15);
    CHECK(y[i] >= std::min(x[i], y[i - 1]) - 1e-15);
  }
  CHECK(ema_smooth({}, 0.5).empty());
  CHECK_THROWS_AS(ema_smooth(x, 0.0), ConfigError);
}

TEST_CASE("metrics: record JSON round-trip") {
  MetricsRecord r;
  r.round.round = 4;
  r.round.composite = {0.125, 0.5};
  r.round.vehicle_fire_rate = 0.25;
  r.round.clamped_ratios = 3;
  r.round.critic_loss = 1.0 / 3.0;
  r.wall_seconds = 0.75;
  const MetricsRecord back = metrics_from_json(nlohmann::json::parse(to_json(r).dump()));
  CHECK(back.round.round == 4);
  CHECK(back.round.composite.mean == 0.125);
  CHECK(back.round.composite.stddev == 0.5);
  CHECK(back.round.clamped_ratios == 3);
  CHECK(back.round.critic_loss == r.round.critic_loss);
  CHECK(back.wall_seconds == 0.75);
}

TEST_CASE("metrics: writer, resume truncation, reader") {
  const fs::path dir = scratch("metrics");
  const std::string path = (dir / "m.jsonl").string();
  MetricsWriter w = MetricsWriter::create(path, 9, 5);
  for (int k = 1; k <= 4; ++k) {
    MetricsRecord r;
    r.round.round = k;
    w.write(r);
  }
  MetricsFile f = read_metrics(path);
  CHECK(f.header["seed"] == 9);
  CHECK(f.header["format"] == "tlmdp-metrics");
  CHECK(f.records.size() == 4);
  MetricsWriter::resume(path, 2);
  f = read_metrics(path);
  REQUIRE(f.records.size() == 2);
  CHECK(f.records[1].round.round == 2);
  CHECK_THROWS_AS(MetricsWriter::resume(path, 3), InputError);
}

TEST_CASE("checkpoint: encode/decode round-trip to 0 ulp and stable bytes") {
  ppo::TrainerConfig tc;
  tc.denoiser_hidden = {6, 5};
  tc.critic_hidden = {4};
  Checkpoint c;
  c.round = 17;
  c.rng_key = 0x0123456789ABCDEFULL;
  c.rng_position = 4242;
  c.models = ppo::Models::initialize(tc, 3);
  // Non-trivial optimizer state.
  c.models.policy_optimizer.step = 5;
  c.models.policy_optimizer.first_moment.layers()[0].weight[3] = -1.5e-300;
  c.models.critic_optimizer.second_moment.layers()[1].bias[0] = 1.0 / 3.0;
  const auto bytes = encode_checkpoint(c);
  const Checkpoint back = decode_checkpoint(bytes);
  CHECK(back == c);
  CHECK(encode_checkpoint(back) == bytes);

  const fs::path dir = scratch("ckpt");
  checkpoint_save((dir / "a.ckpt").string(), c);
  const Checkpoint loaded = checkpoint_load((dir / "a.ckpt").string());
  checkpoint_save((dir / "b.ckpt").string(), loaded);
  CHECK(read_bytes(dir / "a.ckpt") == read_bytes(dir / "b.ckpt"));
  CHECK(std::memcmp(bytes.data(), "TLMDPCKP", 8) == 0);
}

TEST_CASE("checkpoint: truncation, magic, version and trailing bytes are errors") {
  ppo::TrainerConfig tc;
  tc.denoiser_hidden = {4};
  tc.critic_hidden = {4};
  Checkpoint c;
  c.models = ppo::Models::initialize(tc, 1);
  const auto bytes = encode_checkpoint(c);
  for (std::size_t cut : {std::size_t{0}, std::size_t{5}, std::size_t{12}, bytes.size() / 2, bytes.size() - 1}) {
    const std::vector<std::uint8_t> part(bytes.begin(), bytes.begin() + static_cast<long>(cut));
    CHECK_THROWS_AS(decode_checkpoint(part), CheckpointError);
  }
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_WITH_AS(decode_checkpoint(bad_magic), doctest::Contains("magic"), CheckpointError);
  auto bad_version = bytes;
  bad_version[8] = 2;
  CHECK_THROWS_WITH_AS(decode_checkpoint(bad_version), doctest::Contains("version"), CheckpointError);
  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(decode_checkpoint(trailing), CheckpointError);
  CHECK_THROWS_AS(checkpoint_load("/nonexistent/x.ckpt"), CheckpointError);

  const fs::path dir = scratch("ckpt_trunc");
  std::ofstream(dir / "t.ckpt", std::ios::binary)
      .write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size() / 3));
  CHECK_THROWS_WITH_AS(checkpoint_load((dir / "t.ckpt").string()), doctest::Contains("t.ckpt"),
                       CheckpointError);
}

TEST_CASE("cmd_train: zero rounds writes only the header") {
  const fs::path dir = scratch("train0");
  RunConfig cfg = tiny_run(dir);
  cfg.rounds = 0;
  std::ostringstream log;
  const TrainResult r = cmd_train(cfg, std::nullopt, log);
  CHECK(r.rounds_completed == 0);
  const MetricsFile f = read_metrics(r.metrics_path);
  CHECK(f.records.empty());
  CHECK(f.header["planned_rounds"] == 0);
  CHECK(fs::exists(r.last_checkpoint));
  CHECK(load_config((dir / "config.txt").string()) == cfg);
}

TEST_CASE("cmd_train: determinism, checkpoints and resume equivalence") {
  const fs::path a = scratch("train_a"), b = scratch("train_b");
  RunConfig cfg = tiny_run(a);
  cfg.rounds = 4;
  cfg.checkpoint_every = 2;
  cfg.plot_data = true;
  std::ostringstream log;
  const TrainResult ra = cmd_train(cfg, std::nullopt, log);
  CHECK(ra.rounds_completed == 4);
  CHECK(fs::exists(a / "checkpoints" / "round_000002.ckpt"));
  CHECK(fs::exists(a / "checkpoints" / "round_000004.ckpt"));
  CHECK(fs::exists(a / "plot_data.txt"));

  RunConfig cfg_b = cfg;
  cfg_b.output_dir = b.string();
  cmd_train(cfg_b, std::nullopt, log);
  const MetricsFile fa = read_metrics(ra.metrics_path);
  const MetricsFile fb = read_metrics((b / "metrics.jsonl").string());
  REQUIRE(fa.records.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    nlohmann::json ja = to_json(fa.records[i]), jb = to_json(fb.records[i]);
    ja.erase("wall_seconds");
    jb.erase("wall_seconds");
    CHECK(ja == jb);
    CHECK(fa.records[i].round.round == static_cast<int>(i + 1));
  }
  CHECK(read_bytes(a / "checkpoints" / "round_000004.ckpt") ==
        read_bytes(b / "checkpoints" / "round_000004.ckpt"));

  // Resume b from round 2 and compare rounds 3-4 and the final checkpoint.
  const TrainResult rr =
      cmd_train(cfg_b, (b / "checkpoints" / "round_000002.ckpt").string(), log);
  CHECK(rr.first_round == 3);
  CHECK(rr.rounds_completed == 2);
  const MetricsFile fr = read_metrics((b / "metrics.jsonl").string());
  REQUIRE(fr.records.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    nlohmann::json ja = to_json(fa.records[i]), jr = to_json(fr.records[i]);
    ja.erase("wall_seconds");
    jr.erase("wall_seconds");
    CHECK(ja == jr);
  }
  CHECK(read_bytes(a / "checkpoints" / "round_000004.ckpt") ==
        read_bytes(b / "checkpoints" / "round_000004.ckpt"));
}

TEST_CASE("cmd_train: resume rejects a checkpoint from another seed or architecture") {
  const fs::path a = scratch("train_seed");
  RunConfig cfg = tiny_run(a);
  cfg.rounds = 1;
  std::ostringstream log;
  const TrainResult r = cmd_train(cfg, std::nullopt, log);
  RunConfig other = cfg;
  other.seed = 6;
  CHECK_THROWS_AS(cmd_train(other, r.last_checkpoint, log), CheckpointError);
  RunConfig wider = cfg;
  wider.trainer.denoiser_hidden = {8, 9};
  CHECK_THROWS_AS(cmd_train(wider, r.last_checkpoint, log), CheckpointError);
}

TEST_CASE("cmd_eval and cmd_sample: untrained baseline, repeatable") {
  const fs::path dir = scratch("eval");
  RunConfig cfg = tiny_run(dir);
  cfg.rounds = 0;
  std::ostringstream log;
  const TrainResult r = cmd_train(cfg, std::nullopt, log);
  const EvalReport e1 = cmd_eval(cfg, r.last_checkpoint);
  const EvalReport e2 = cmd_eval(cfg, r.last_checkpoint);
  CHECK(e1 == e2);
  CHECK(e1.samples == 8 * 2);
  CHECK(e1.vehicle_fire_rate >= 0.0);
  CHECK(e1.vehicle_fire_rate <= 1.0);
  const auto samples = cmd_sample(cfg, r.last_checkpoint, 2);
  CHECK(samples.size() == 8);
  for (const auto& s : samples) CHECK(s.stage == 2);
  CHECK_THROWS_AS(cmd_sample(cfg, r.last_checkpoint, 3), ConfigError);
}

TEST_CASE("cmd_gradcheck: passes, repeats, and the corrupted backward fails") {
  RunConfig cfg = parse("dataset.path = unused.jsonl\n");
  GradcheckOptions opt;
  opt.instances = 1;
  opt.max_width = 8;
  const GradcheckSummary a = cmd_gradcheck(cfg, opt);
  CHECK(a.passed);
  CHECK(a.cases.size() == 3);
  const GradcheckSummary b = cmd_gradcheck(cfg, opt);
  CHECK(to_json(a) == to_json(b));
  opt.corrupt_backward = true;
  CHECK_FALSE(cmd_gradcheck(cfg, opt).passed);
}
