#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "capforge/dataio.hpp"
#include "capforge/fusion.hpp"
#include "capforge/scst.hpp"

namespace capforge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitAlignment = 3;
inline constexpr int kExitInternal = 4;

inline constexpr std::uint64_t kDefaultSeed = 20240917;

enum class Command { kEvaluate, kRewardStream, kFuse, kValidateData, kStats };
enum class OutputFormat { kTextTable, kJson, kCsv };

std::string_view to_string(Command command);
std::string_view to_string(OutputFormat format);
OutputFormat parse_output_format(std::string_view name);

/// Invalid command-line configuration; maps to the input exit code.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  Command command = Command::kEvaluate;

  std::filesystem::path dataset;
  AnnotationProfile profile = AnnotationProfile::kGeneric;
  std::string split;  // empty: per-command default
  std::filesystem::path predictions;
  RewardMetric reward_metric = RewardMetric::kCiderD;
  std::filesystem::path stats;
  OutputFormat format = OutputFormat::kTextTable;
  std::size_t bootstrap_samples = 0;
  std::uint64_t seed = kDefaultSeed;
  std::size_t workers = 1;
  bool strict = false;

  // stats
  std::filesystem::path output;

  // fuse
  std::filesystem::path input;
  FusionMode fusion_mode = FusionMode::kConcat;
  std::optional<std::size_t> height;
  std::optional<std::size_t> width;
  std::size_t patch = 14;
  std::optional<std::size_t> frames;

  /// "test" for evaluate and validate-data summaries, "train" for the
  /// SCST reward corpus and stats building.
  std::string effective_split() const;

  /// Throws ConfigError when a required path for the command is missing.
  void validate() const;
};

}  // namespace capforge::cli
