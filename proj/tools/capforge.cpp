#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "capforge/cli/commands.hpp"
#include "capforge/parallel.hpp"

namespace cli = capforge::cli;

namespace {

void add_dataset_options(CLI::App* sub, cli::RunConfig& config, std::string& profile) {
  sub->add_option("--dataset", config.dataset, "Annotation JSON file");
  sub->add_option("--profile", profile, "Annotation profile: generic or msrvtt")->capture_default_str();
  sub->add_option("--split", config.split, "Dataset split (default depends on the command)");
  sub->add_flag("--strict", config.strict, "Reject unknown fields");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"capforge: caption metrics, SCST rewards and frame-token fusion"};
  app.require_subcommand(1);

  cli::RunConfig config;
  config.workers = capforge::default_workers();
  std::string profile = "generic";
  std::string format = "text-table";
  std::string reward_metric = "cider-d";
  std::string mode = "concat";

  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against references");
  add_dataset_options(evaluate, config, profile);
  evaluate->add_option("--predictions", config.predictions, "Prediction JSONL file");
  evaluate->add_option("--format", format, "text-table, json or csv")->capture_default_str();
  evaluate->add_option("--bootstrap", config.bootstrap_samples, "Bootstrap resamples for confidence intervals");
  evaluate->add_option("--seed", config.seed, "Bootstrap seed")->capture_default_str();
  evaluate->add_option("--workers", config.workers, "Worker threads (CAPFORGE_WORKERS)")->capture_default_str();

  auto* reward = app.add_subcommand("reward-stream", "Serve SCST rewards over stdin/stdout");
  add_dataset_options(reward, config, profile);
  reward->add_option("--stats", config.stats, "Document-frequency sidecar");
  reward->add_option("--reward-metric", reward_metric, "cider-d or bleu4-smoothed")->capture_default_str();

  auto* fuse = app.add_subcommand("fuse", "Fuse frame tokens or report token counts");
  fuse->add_option("--input", config.input, "Frame-token tensor file");
  fuse->add_option("--output", config.output, "Fused tensor file");
  fuse->add_option("--mode", mode, "concat or average")->capture_default_str();
  fuse->add_option("--height", config.height, "Frame height in pixels");
  fuse->add_option("--width", config.width, "Frame width in pixels");
  fuse->add_option("--patch", config.patch, "Patch size")->capture_default_str();
  fuse->add_option("--frames", config.frames, "Frames per video");

  auto* validate = app.add_subcommand("validate-data", "Check an annotation file");
  add_dataset_options(validate, config, profile);
  validate->add_option("--format", format, "text-table or json")->capture_default_str();

  auto* stats = app.add_subcommand("stats", "Write document frequencies for a split");
  add_dataset_options(stats, config, profile);
  stats->add_option("--output", config.output, "Sidecar path");

  try {
    app.parse(argc, argv);
    if (*evaluate) config.command = cli::Command::kEvaluate;
    if (*reward) config.command = cli::Command::kRewardStream;
    if (*fuse) config.command = cli::Command::kFuse;
    if (*validate) config.command = cli::Command::kValidateData;
    if (*stats) config.command = cli::Command::kStats;
    config.profile = capforge::parse_annotation_profile(profile);
    config.format = cli::parse_output_format(format);
    config.reward_metric = capforge::parse_reward_metric(reward_metric);
    config.fusion_mode = capforge::parse_fusion_mode(mode);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kExitInput;
  }

  std::ios::sync_with_stdio(false);
  return cli::execute(config, std::cin, std::cout, std::cerr);
}
