#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tlmdp/core/errors.hpp"
#include "tlmdp/harness/commands.hpp"
#include "tlmdp/harness/config.hpp"

using namespace tlmdp;

int main(int argc, char** argv) {
  CLI::App app{"Staged text-to-image policy training on a toy embedding space"};
  app.require_subcommand(1);

  std::string config_path;
  std::string ckpt_path;
  std::string resume_path;
  int stage = 0;
  bool corrupt = false;
  bool quiet = false;

  CLI::App* train = app.add_subcommand("train", "Run training rounds");
  train->add_option("--config", config_path, "Config file")->required();
  train->add_option("--resume", resume_path, "Checkpoint to resume from");
  train->add_flag("--quiet", quiet, "Suppress per-round log lines");

  CLI::App* eval = app.add_subcommand("eval", "Evaluate final-stage prompts of a checkpoint");
  eval->add_option("--config", config_path, "Config file")->required();
  eval->add_option("--ckpt", ckpt_path, "Checkpoint file")->required();

  CLI::App* sample = app.add_subcommand("sample", "Draw one sample per input at a stage");
  sample->add_option("--config", config_path, "Config file")->required();
  sample->add_option("--ckpt", ckpt_path, "Checkpoint file")->required();
  sample->add_option("--stage", stage, "Stage j in [1, C]")->required();

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  gradcheck->add_option("--config", config_path, "Config file")->required();
  gradcheck->add_flag("--corrupt-backward", corrupt, "Damage the analytic gradient (test fixture)")
      ->group("");

  CLI11_PARSE(app, argc, argv);

  try {
    const harness::RunConfig cfg = harness::load_config(config_path);
    if (*train) {
      std::ostream null_stream(nullptr);
      std::optional<std::string> resume;
      if (!resume_path.empty()) resume = resume_path;
      const harness::TrainResult r =
          harness::cmd_train(cfg, resume, quiet ? null_stream : std::cerr);
      std::cout << "completed " << r.rounds_completed << " rounds; metrics " << r.metrics_path
                << "; checkpoint " << r.last_checkpoint << "\n";
    } else if (*eval) {
      std::cout << harness::to_json(harness::cmd_eval(cfg, ckpt_path)).dump(2) << "\n";
    } else if (*sample) {
      for (const auto& rec : harness::cmd_sample(cfg, ckpt_path, stage)) {
        std::cout << harness::to_json(rec).dump() << "\n";
      }
    } else if (*gradcheck) {
      harness::GradcheckOptions options;
      options.corrupt_backward = corrupt;
      const harness::GradcheckSummary s = harness::cmd_gradcheck(cfg, options);
      std::cout << harness::to_json(s).dump(2) << "\n";
      return s.passed ? 0 : 1;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
