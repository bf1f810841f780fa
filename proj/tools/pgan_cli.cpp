#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "pgan/cli/commands.hpp"
#include "pgan/cli/config.hpp"
#include "pgan/common/error.hpp"

namespace {

using namespace pgan;

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string method;
  std::optional<std::uint64_t> seed;
  std::string output_dir;
  bool no_timestamps = false;
  bool quiet = false;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("-c,--config", c.config_path, "Experiment config file (key = value lines)");
  sub->add_option("-s,--set", c.overrides, "Override one key, e.g. --set training.epochs=10");
  sub->add_option("-m,--method", c.method, "pgan, plain, oversample, smote, vanilla_gan or cgan");
  sub->add_option("--seed", c.seed, "Seed for the dataset and training");
  sub->add_option("-o,--output-dir", c.output_dir, "Run directory (relative paths resolve under $PGAN_OUTPUT_ROOT)");
  sub->add_flag("--no-timestamps", c.no_timestamps, "Zero wall-clock fields so reruns are byte-identical");
  sub->add_flag("-q,--quiet", c.quiet, "Suppress progress lines");
}

// Defaults, then the file, then command-line flags.
cli::ExperimentConfig resolve(const Common& c, const std::string& config_path) {
  cli::ExperimentConfig cfg;
  if (!config_path.empty()) cfg = cli::load_config(config_path, cfg);
  if (!c.method.empty()) cli::apply_override(cfg, "method=" + c.method);
  if (c.seed) {
    cli::apply_override(cfg, "dataset.seed=" + std::to_string(*c.seed));
    cli::apply_override(cfg, "training.seed=" + std::to_string(*c.seed));
  }
  if (!c.output_dir.empty()) cli::apply_override(cfg, "output.dir=" + c.output_dir);
  for (const auto& o : c.overrides) cli::apply_override(cfg, o);
  cfg.validate();
  return cfg;
}

cli::RunOptions options(const Common& c) { return {!c.no_timestamps, c.quiet ? nullptr : &std::cerr}; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prior-gap adversarial rebalancing experiments"};
  app.require_subcommand(1);

  Common common;
  auto* prepare = app.add_subcommand("prepare", "Build the train/test split and priors table");
  auto* train = app.add_subcommand("train", "Train the configured method and write the checkpoint and loss curves");
  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint and write metrics and uncertainty tables");
  auto* compare = app.add_subcommand("compare", "Run or reuse several configs and tabulate them side by side");
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every layer and loss");
  for (auto* sub : {prepare, train, evaluate}) add_common(sub, common);

  std::string checkpoint;
  std::string split = "test";
  evaluate->add_option("--checkpoint", checkpoint, "Checkpoint to score (default: the run's checkpoint.bin)");
  evaluate->add_option("--split", split, "test or train")->check(CLI::IsMember({"test", "train"}));

  std::vector<std::string> compare_configs;
  std::string compare_out = ".";
  compare->add_option("configs", compare_configs, "Config files, one per run")->required();
  compare->add_option("-s,--set", common.overrides, "Override applied to every config");
  compare->add_flag("--no-timestamps", common.no_timestamps, "Zero wall-clock fields");
  compare->add_flag("-q,--quiet", common.quiet, "Suppress progress lines");
  compare->add_option("-o,--output-dir", compare_out, "Directory for comparison.csv and comparison.txt");

  std::size_t seeds = 20;
  gradcheck->add_option("--seeds", seeds, "Random networks per case");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitConfig;
  }

  try {
    const auto opt = options(common);
    if (*gradcheck) return cli::cmd_gradcheck(seeds, std::cout);
    if (*compare) {
      std::vector<cli::ExperimentConfig> configs;
      for (const auto& path : compare_configs) configs.push_back(resolve(common, path));
      cli::cmd_compare(configs, compare_out, {opt.timestamps, nullptr});
      std::cout << std::ifstream(std::filesystem::path(compare_out) / "comparison.txt").rdbuf();
      return cli::kExitOk;
    }
    const auto cfg = resolve(common, common.config_path);
    if (*prepare) {
      cli::cmd_prepare(cfg, opt);
    } else if (*train) {
      cli::cmd_train(cfg, opt);
    } else {
      std::optional<std::filesystem::path> ckpt;
      if (!checkpoint.empty()) ckpt = checkpoint;
      const auto out = cli::cmd_evaluate(cfg, opt, ckpt, split);
      std::cout << metrics::summary_text(out.metrics, out.uncertainty);
    }
    return cli::kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return cli::kExitConfig;
  } catch (const DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return cli::kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kExitFailure;
  }
}
