#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "capforge/ngram.hpp"
#include "capforge/text_norm.hpp"

namespace capforge {

enum class RewardMetric { kCiderD, kBleu4Smoothed };

std::string_view to_string(RewardMetric metric);
/// Accepts "cider_d" / "cider-d" and "bleu4_smoothed" / "bleu4".
RewardMetric parse_reward_metric(std::string_view name);

/// One video's greedy decode plus k sampled decodes. token_logprob_sums is
/// either empty (rewards only) or parallel to sampled_captions.
struct SampleGroup {
  std::string video_id;
  std::string greedy_caption;
  std::vector<std::string> sampled_captions;
  std::vector<double> token_logprob_sums;

  /// Throws std::invalid_argument on a broken invariant.
  void validate() const;
};

struct GroupRewards {
  double greedy_reward = 0.0;
  std::vector<double> sampled_rewards;
};

/// Rewards and greedy-baseline advantages for one video.
struct RewardGroup {
  std::string video_id;
  double greedy_reward = 0.0;
  std::vector<double> sampled_rewards;
  std::vector<double> advantages;
};

struct RewardBatch {
  std::vector<RewardGroup> groups;
};

/// Scores the greedy and each sampled caption against refs with the chosen
/// per-item metric.
GroupRewards compute_rewards(const SampleGroup& group, std::span<const TokenSequence> refs, const CorpusStats& stats,
                             RewardMetric metric = RewardMetric::kCiderD);

/// a_i = r_i - r_greedy.
std::vector<double> advantages(double greedy_reward, std::span<const double> sampled_rewards);

RewardGroup make_reward_group(std::string video_id, const GroupRewards& rewards);

struct LossTerm {
  std::span<const double> advantages;
  std::span<const double> logprob_sums;
};

/// L = -(1/M) * sum_i a_i * lp_i over every sample of every group. Throws
/// std::invalid_argument on a length mismatch, non-finite input or an
/// empty batch.
double scst_loss(std::span<const LossTerm> batch);

/// One reward_stream request: a sample group plus the references to score it
/// against (may be empty when the server has a reference fallback).
struct RewardRequest {
  SampleGroup group;
  std::vector<std::string> refs;
};

struct StreamSummary {
  std::size_t requests = 0;
  std::size_t errors = 0;
  std::size_t samples = 0;
  double greedy_reward_sum = 0.0;
  double sampled_reward_sum = 0.0;

  double mean_greedy_reward() const { return requests == 0 ? 0.0 : greedy_reward_sum / static_cast<double>(requests); }
  double mean_sampled_reward() const { return samples == 0 ? 0.0 : sampled_reward_sum / static_cast<double>(samples); }
};

/// Serves SCST rewards over a fixed CorpusStats. Line protocol, one JSON
/// object per line in each direction:
///   request  {"video_id": ..., "greedy": ..., "samples": [...], "refs": [...]}
///   response {"video_id": ..., "greedy_reward": ..., "rewards": [...], "advantages": [...]}
/// A malformed request yields {"error": ..., "line": n} (plus "video_id"
/// when it could be read) and the stream continues. Blank lines are skipped.
class RewardServer {
 public:
  RewardServer(std::shared_ptr<const CorpusStats> stats, RewardMetric metric,
               std::shared_ptr<const std::map<std::string, std::vector<std::string>>> fallback_refs = nullptr,
               bool strict = false);

  RewardGroup handle(const RewardRequest& request) const;

  /// Parses one request line; throws InputError when it is malformed.
  RewardRequest parse_request(std::string_view line) const;

  static std::string format_response(const RewardGroup& group);

  /// Processes `in` until end of input, writing and flushing one response
  /// line per request. Per-record problems go to `diag`.
  StreamSummary serve(std::istream& in, std::ostream& out, std::ostream& diag) const;

 private:
  std::shared_ptr<const CorpusStats> stats_;
  RewardMetric metric_;
  std::shared_ptr<const std::map<std::string, std::vector<std::string>>> fallback_refs_;
  bool strict_;
};

/// Batch mode: handle() applied to each request in order. Unlike serve(),
/// the first bad request throws.
RewardBatch score_batch(std::span<const RewardRequest> requests, const RewardServer& server);

}  // namespace capforge
