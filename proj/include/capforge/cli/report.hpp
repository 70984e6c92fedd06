#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "capforge/metrics.hpp"

namespace capforge::cli {

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// Percentile bootstrap over items. CIDEr, ROUGE-L and METEOR-lite resample
/// per-item scores; BLEU-4 is recomputed corpus-level on each resample.
struct BootstrapResult {
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  double confidence = 0.95;
  Interval cider, bleu4, rouge_l, meteor_lite;
};

BootstrapResult bootstrap(const ScoreReport& report, std::size_t samples, std::uint64_t seed, double confidence = 0.95);

struct EvaluationOutput {
  std::string dataset;
  std::string split;
  ScoreReport report;
  std::size_t missing = 0;
  std::size_t extra = 0;
  std::optional<BootstrapResult> bootstrap;
};

/// Leaderboard row: C., M., R., B4. scaled by 100 with one decimal, two
/// spaces apart, e.g. "79.5  34.2  68.3  52.4".
std::string format_table_row(double cider, double meteor, double rouge_l, double bleu4);

std::string render_text(const EvaluationOutput& out);
std::string render_json(const EvaluationOutput& out);
std::string render_csv(const EvaluationOutput& out);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

/// 6513 -> "6,513".
std::string group_thousands(std::size_t n);

}  // namespace capforge::cli
