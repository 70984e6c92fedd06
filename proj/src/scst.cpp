#include "capforge/scst.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "capforge/errors.hpp"
#include "capforge/metrics.hpp"

namespace capforge {

std::string_view to_string(RewardMetric metric) {
  switch (metric) {
    case RewardMetric::kCiderD:
      return "cider_d";
    case RewardMetric::kBleu4Smoothed:
      return "bleu4_smoothed";
  }
  return "unknown";
}

RewardMetric parse_reward_metric(std::string_view name) {
  if (name == "cider_d" || name == "cider-d" || name == "cider") return RewardMetric::kCiderD;
  if (name == "bleu4_smoothed" || name == "bleu4-smoothed" || name == "bleu4") return RewardMetric::kBleu4Smoothed;
  throw std::invalid_argument("unknown reward metric '" + std::string(name) + "'");
}

void SampleGroup::validate() const {
  if (sampled_captions.empty()) throw std::invalid_argument("video '" + video_id + "': no sampled captions");
  if (token_logprob_sums.empty()) return;
  if (token_logprob_sums.size() != sampled_captions.size())
    throw std::invalid_argument("video '" + video_id + "': " + std::to_string(sampled_captions.size()) + " samples but " +
                                std::to_string(token_logprob_sums.size()) + " logprob sums");
  for (double lp : token_logprob_sums)
    if (!std::isfinite(lp) || lp > 0.0) throw std::invalid_argument("video '" + video_id + "': logprob sums must be finite and <= 0");
}

GroupRewards compute_rewards(const SampleGroup& group, std::span<const TokenSequence> refs, const CorpusStats& stats,
                             RewardMetric metric) {
  group.validate();
  if (refs.empty()) throw std::invalid_argument("video '" + group.video_id + "': empty reference list");
  GroupRewards out;
  out.sampled_rewards.reserve(group.sampled_captions.size());
  if (metric == RewardMetric::kCiderD) {
    const CiderReferenceSet scorer(refs, stats);
    out.greedy_reward = scorer.score(tokenize(group.greedy_caption));
    for (const auto& s : group.sampled_captions) out.sampled_rewards.push_back(scorer.score(tokenize(s)));
  } else {
    out.greedy_reward = bleu4_smoothed(tokenize(group.greedy_caption), refs);
    for (const auto& s : group.sampled_captions) out.sampled_rewards.push_back(bleu4_smoothed(tokenize(s), refs));
  }
  return out;
}

std::vector<double> advantages(double greedy_reward, std::span<const double> sampled_rewards) {
  std::vector<double> out;
  out.reserve(sampled_rewards.size());
  for (double r : sampled_rewards) out.push_back(r - greedy_reward);
  return out;
}

RewardGroup make_reward_group(std::string video_id, const GroupRewards& rewards) {
  RewardGroup g;
  g.video_id = std::move(video_id);
  g.greedy_reward = rewards.greedy_reward;
  g.sampled_rewards = rewards.sampled_rewards;
  g.advantages = advantages(rewards.greedy_reward, rewards.sampled_rewards);
  return g;
}

double scst_loss(std::span<const LossTerm> batch) {
  if (batch.empty()) throw std::invalid_argument("scst_loss: empty batch");
  double sum = 0.0;
  std::size_t samples = 0;
  for (std::size_t g = 0; g < batch.size(); ++g) {
    const auto& term = batch[g];
    if (term.advantages.size() != term.logprob_sums.size())
      throw std::invalid_argument("scst_loss: group " + std::to_string(g) + " has mismatched advantage/logprob lengths");
    for (std::size_t i = 0; i < term.advantages.size(); ++i) {
      if (!std::isfinite(term.advantages[i]) || !std::isfinite(term.logprob_sums[i]))
        throw std::invalid_argument("scst_loss: non-finite input in group " + std::to_string(g));
      sum += term.advantages[i] * term.logprob_sums[i];
    }
    samples += term.advantages.size();
  }
  if (samples == 0) throw std::invalid_argument("scst_loss: batch has no samples");
  return -sum / static_cast<double>(samples);
}

// ---------------------------------------------------------------- stream

RewardServer::RewardServer(std::shared_ptr<const CorpusStats> stats, RewardMetric metric,
                           std::shared_ptr<const std::map<std::string, std::vector<std::string>>> fallback_refs, bool strict)
    : stats_(std::move(stats)), metric_(metric), fallback_refs_(std::move(fallback_refs)), strict_(strict) {
  if (!stats_ || stats_->num_videos() < 1) throw std::invalid_argument("RewardServer: corpus stats required");
}

RewardGroup RewardServer::handle(const RewardRequest& request) const {
  const std::vector<std::string>* texts = &request.refs;
  if (texts->empty() && fallback_refs_) {
    const auto it = fallback_refs_->find(request.group.video_id);
    if (it != fallback_refs_->end()) texts = &it->second;
  }
  if (texts->empty()) throw InputError("video '" + request.group.video_id + "': no references");
  std::vector<TokenSequence> refs;
  refs.reserve(texts->size());
  for (const auto& t : *texts) refs.push_back(tokenize(t));
  return make_reward_group(request.group.video_id, compute_rewards(request.group, refs, *stats_, metric_));
}

RewardRequest RewardServer::parse_request(std::string_view line) const {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw InputError("request must be a JSON object");
  if (strict_) {
    for (const auto& [key, value] : doc.items())
      if (key != "video_id" && key != "greedy" && key != "samples" && key != "refs") throw InputError("unknown field '" + key + "'");
  }
  RewardRequest req;
  if (!doc.contains("video_id") || !doc["video_id"].is_string()) throw InputError("missing string field 'video_id'");
  req.group.video_id = doc["video_id"].get<std::string>();
  if (!doc.contains("greedy") || !doc["greedy"].is_string()) throw InputError("missing string field 'greedy'");
  req.group.greedy_caption = doc["greedy"].get<std::string>();

  auto string_array = [&](const char* key, std::vector<std::string>& out) {
    const auto& arr = doc[key];
    if (!arr.is_array()) throw InputError(std::string("field '") + key + "' must be an array of strings");
    for (const auto& v : arr) {
      if (!v.is_string()) throw InputError(std::string("field '") + key + "' must be an array of strings");
      out.push_back(v.get<std::string>());
    }
  };
  if (!doc.contains("samples")) throw InputError("missing field 'samples'");
  string_array("samples", req.group.sampled_captions);
  if (req.group.sampled_captions.empty()) throw InputError("'samples' is empty");
  if (doc.contains("refs")) string_array("refs", req.refs);
  return req;
}

std::string RewardServer::format_response(const RewardGroup& group) {
  nlohmann::ordered_json doc;
  doc["video_id"] = group.video_id;
  doc["greedy_reward"] = group.greedy_reward;
  doc["rewards"] = group.sampled_rewards;
  doc["advantages"] = group.advantages;
  return doc.dump();
}

StreamSummary RewardServer::serve(std::istream& in, std::ostream& out, std::ostream& diag) const {
  StreamSummary summary;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::string video_id;
    try {
      const RewardRequest req = parse_request(line);
      video_id = req.group.video_id;
      const RewardGroup group = handle(req);
      out << format_response(group) << '\n';
      out.flush();
      ++summary.requests;
      summary.samples += group.sampled_rewards.size();
      summary.greedy_reward_sum += group.greedy_reward;
      for (double r : group.sampled_rewards) summary.sampled_reward_sum += r;
    } catch (const std::exception& e) {
      ++summary.errors;
      nlohmann::ordered_json err;
      if (!video_id.empty()) err["video_id"] = video_id;
      err["error"] = e.what();
      err["line"] = line_no;
      out << err.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
      out.flush();
      diag << "line " << line_no << ": " << e.what() << '\n';
    }
  }
  return summary;
}

RewardBatch score_batch(std::span<const RewardRequest> requests, const RewardServer& server) {
  RewardBatch batch;
  batch.groups.reserve(requests.size());
  for (const auto& r : requests) batch.groups.push_back(server.handle(r));
  return batch;
}

}  // namespace capforge
