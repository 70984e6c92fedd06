#include "capforge/cli/config.hpp"

namespace capforge::cli {

std::string_view to_string(Command command) {
  switch (command) {
    case Command::kEvaluate:
      return "evaluate";
    case Command::kRewardStream:
      return "reward-stream";
    case Command::kFuse:
      return "fuse";
    case Command::kValidateData:
      return "validate-data";
    case Command::kStats:
      return "stats";
  }
  return "unknown";
}

std::string_view to_string(OutputFormat format) {
  switch (format) {
    case OutputFormat::kTextTable:
      return "text-table";
    case OutputFormat::kJson:
      return "json";
    case OutputFormat::kCsv:
      return "csv";
  }
  return "unknown";
}

OutputFormat parse_output_format(std::string_view name) {
  if (name == "text-table" || name == "text" || name == "table") return OutputFormat::kTextTable;
  if (name == "json") return OutputFormat::kJson;
  if (name == "csv") return OutputFormat::kCsv;
  throw ConfigError("unknown output format '" + std::string(name) + "'");
}

std::string RunConfig::effective_split() const {
  if (!split.empty()) return split;
  return command == Command::kRewardStream || command == Command::kStats ? "train" : "test";
}

void RunConfig::validate() const {
  switch (command) {
    case Command::kEvaluate:
      if (dataset.empty()) throw ConfigError("evaluate: --dataset is required");
      if (predictions.empty()) throw ConfigError("evaluate: --predictions is required");
      break;
    case Command::kRewardStream:
      if (dataset.empty() && stats.empty()) throw ConfigError("reward-stream: --stats or --dataset is required");
      break;
    case Command::kValidateData:
      if (dataset.empty()) throw ConfigError("validate-data: --dataset is required");
      break;
    case Command::kStats:
      if (dataset.empty()) throw ConfigError("stats: --dataset is required");
      if (output.empty()) throw ConfigError("stats: --output is required");
      break;
    case Command::kFuse:
      if (input.empty() && !height && !width) throw ConfigError("fuse: give --input or --height/--width");
      if (!input.empty() && output.empty()) throw ConfigError("fuse: --output is required with --input");
      if ((height.has_value()) != (width.has_value())) throw ConfigError("fuse: --height and --width go together");
      break;
  }
  if (workers == 0) throw ConfigError("--workers must be positive");
}

}  // namespace capforge::cli
