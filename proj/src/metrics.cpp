#include "capforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "capforge/errors.hpp"
#include "capforge/parallel.hpp"
#include "capforge/stemmer.hpp"

namespace capforge {

namespace {

std::array<NgramCounts, kMaxOrder> all_orders(const TokenSequence& tokens) {
  std::array<NgramCounts, kMaxOrder> out;
  for (int n = 1; n <= kMaxOrder; ++n) out[static_cast<std::size_t>(n - 1)] = extract_ngrams(tokens, n);
  return out;
}

template <typename Value>
void require_same_ids(const std::map<std::string, Value>& candidates, const std::map<std::string, std::vector<TokenSequence>>& refs) {
  auto c = candidates.begin();
  auto r = refs.begin();
  while (c != candidates.end() || r != refs.end()) {
    if (r == refs.end() || (c != candidates.end() && c->first < r->first))
      throw AlignmentError("id '" + c->first + "' has a candidate but no references");
    if (c == candidates.end() || r->first < c->first)
      throw AlignmentError("id '" + r->first + "' has references but no candidate");
    ++c;
    ++r;
  }
}

}  // namespace

// ---------------------------------------------------------------- CIDEr-D

CiderReferenceSet::CiderReferenceSet(std::span<const TokenSequence> refs, const CorpusStats& stats) : stats_(&stats) {
  if (refs.empty()) throw std::invalid_argument("cider_d: empty reference list");
  if (stats.num_videos() < 1) throw std::invalid_argument("cider_d: corpus stats have N = 0");
  refs_.reserve(refs.size());
  for (const auto& ref : refs) {
    const auto counts = all_orders(ref);
    for (std::size_t o = 0; o < kMaxOrder; ++o)
      for (const auto& [g, c] : counts[o].counts) {
        int& ceiling = max_ref_counts_[o][g];
        ceiling = std::max(ceiling, c);
      }
    refs_.push_back(vectorize(counts, static_cast<int>(ref.size())));
  }
}

CiderReferenceSet::Vector CiderReferenceSet::vectorize(const std::array<NgramCounts, kMaxOrder>& counts, int length) const {
  Vector v;
  v.length = length;
  for (std::size_t o = 0; o < kMaxOrder; ++o) {
    v.weights[o] = tfidf_vector(counts[o], *stats_);
    double sq = 0.0;
    for (const auto& [g, w] : v.weights[o]) sq += w * w;
    v.norms[o] = std::sqrt(sq);
  }
  return v;
}

double CiderReferenceSet::score(const TokenSequence& candidate) const {
  const auto counts = all_orders(candidate);
  const Vector cand = vectorize(counts, static_cast<int>(candidate.size()));

  // Clipped candidate weights share the unclipped TF denominator, so they are
  // elementwise <= the unclipped weights and each cosine stays within [0, 1].
  std::array<std::vector<std::pair<const Gram*, double>>, kMaxOrder> clipped;
  for (std::size_t o = 0; o < kMaxOrder; ++o) {
    const double total = counts[o].total();
    for (const auto& [g, c] : counts[o].counts) {
      const auto it = max_ref_counts_[o].find(g);
      if (it == max_ref_counts_[o].end()) continue;
      const int kept = std::min(c, it->second);
      clipped[o].emplace_back(&g, static_cast<double>(kept) / total * stats_->idf(static_cast<int>(o + 1), g));
    }
  }

  const double two_sigma_sq = 2.0 * kCiderSigma * kCiderSigma;
  double sum_over_orders = 0.0;
  for (std::size_t o = 0; o < kMaxOrder; ++o) {
    double sum_over_refs = 0.0;
    for (const auto& ref : refs_) {
      if (cand.norms[o] == 0.0 || ref.norms[o] == 0.0) continue;
      double dot = 0.0;
      for (const auto& [g, w] : clipped[o]) {
        const auto it = ref.weights[o].find(*g);
        if (it != ref.weights[o].end()) dot += w * it->second;
      }
      // rounding can push an exact match a hair above 1
      const double cosine = std::min(1.0, dot / (cand.norms[o] * ref.norms[o]));
      const double delta = static_cast<double>(cand.length - ref.length);
      sum_over_refs += std::exp(-(delta * delta) / two_sigma_sq) * cosine;
    }
    sum_over_orders += sum_over_refs / static_cast<double>(refs_.size());
  }
  return kCiderScale * sum_over_orders / kMaxOrder;
}

double cider_d(const TokenSequence& candidate, std::span<const TokenSequence> refs, const CorpusStats& stats) {
  return CiderReferenceSet(refs, stats).score(candidate);
}

// ---------------------------------------------------------------- BLEU

BleuStats& BleuStats::operator+=(const BleuStats& other) {
  for (std::size_t o = 0; o < kMaxOrder; ++o) {
    matches[o] += other.matches[o];
    totals[o] += other.totals[o];
  }
  candidate_length += other.candidate_length;
  reference_length += other.reference_length;
  return *this;
}

BleuStats bleu_stats(const TokenSequence& candidate, std::span<const TokenSequence> refs) {
  if (refs.empty()) throw std::invalid_argument("bleu: empty reference list");
  BleuStats s;
  s.candidate_length = static_cast<long long>(candidate.size());

  long long best_len = static_cast<long long>(refs.front().size());
  for (const auto& ref : refs) {
    const auto len = static_cast<long long>(ref.size());
    const auto d = std::llabs(len - s.candidate_length);
    const auto best_d = std::llabs(best_len - s.candidate_length);
    if (d < best_d || (d == best_d && len < best_len)) best_len = len;
  }
  s.reference_length = best_len;

  for (int n = 1; n <= kMaxOrder; ++n) {
    const auto o = static_cast<std::size_t>(n - 1);
    const auto cand = extract_ngrams(candidate, n);
    std::unordered_map<Gram, int> ceiling;
    for (const auto& ref : refs)
      for (const auto& [g, c] : extract_ngrams(ref, n).counts) {
        int& m = ceiling[g];
        m = std::max(m, c);
      }
    for (const auto& [g, c] : cand.counts) {
      s.totals[o] += c;
      const auto it = ceiling.find(g);
      if (it != ceiling.end()) s.matches[o] += std::min(c, it->second);
    }
  }
  return s;
}

namespace {

double brevity_penalty(long long candidate_length, long long reference_length) {
  if (candidate_length == 0) return 0.0;
  return std::min(1.0, std::exp(1.0 - static_cast<double>(reference_length) / static_cast<double>(candidate_length)));
}

}  // namespace

std::array<double, kMaxOrder> bleu_from_stats(const BleuStats& stats) {
  std::array<double, kMaxOrder> out{};
  const double bp = brevity_penalty(stats.candidate_length, stats.reference_length);
  double log_sum = 0.0;
  bool zero = false;
  for (std::size_t k = 0; k < kMaxOrder; ++k) {
    if (stats.totals[k] == 0 || stats.matches[k] == 0) zero = true;
    if (zero) {
      out[k] = 0.0;
      continue;
    }
    log_sum += std::log(static_cast<double>(stats.matches[k]) / static_cast<double>(stats.totals[k]));
    out[k] = bp * std::exp(log_sum / static_cast<double>(k + 1));
  }
  return out;
}

std::array<double, kMaxOrder> bleu4(const std::map<std::string, TokenSequence>& candidates,
                                    const std::map<std::string, std::vector<TokenSequence>>& refs) {
  if (candidates.empty()) throw std::invalid_argument("bleu: empty candidate set");
  require_same_ids(candidates, refs);
  BleuStats total;
  for (const auto& [id, cand] : candidates) total += bleu_stats(cand, refs.at(id));
  return bleu_from_stats(total);
}

double bleu4_smoothed(const BleuStats& stats) {
  const double bp = brevity_penalty(stats.candidate_length, stats.reference_length);
  if (bp == 0.0) return 0.0;
  double log_sum = 0.0;
  for (std::size_t k = 0; k < kMaxOrder; ++k) {
    const double p = stats.totals[k] == 0 ? 0.0 : static_cast<double>(stats.matches[k]) / static_cast<double>(stats.totals[k]);
    log_sum += std::log(std::max(p, kBleuItemEpsilon));
  }
  return bp * std::exp(log_sum / kMaxOrder);
}

double bleu4_smoothed(const TokenSequence& candidate, std::span<const TokenSequence> refs) {
  return bleu4_smoothed(bleu_stats(candidate, refs));
}

// ---------------------------------------------------------------- ROUGE-L

std::size_t lcs_length(const TokenSequence& a, const TokenSequence& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(const TokenSequence& candidate, std::span<const TokenSequence> refs) {
  if (refs.empty()) throw std::invalid_argument("rouge_l: empty reference list");
  if (candidate.empty()) return 0.0;
  const double beta_sq = kRougeBeta * kRougeBeta;
  double best = 0.0;
  for (const auto& ref : refs) {
    if (ref.empty()) continue;
    const auto lcs = static_cast<double>(lcs_length(candidate, ref));
    const double recall = lcs / static_cast<double>(ref.size());
    const double precision = lcs / static_cast<double>(candidate.size());
    if (recall + precision == 0.0) continue;
    const double f = ((1.0 + beta_sq) * recall * precision) / (recall + beta_sq * precision);
    best = std::max(best, f);
  }
  return best;
}

// ---------------------------------------------------------------- METEOR-lite

std::vector<std::pair<std::size_t, std::size_t>> meteor_alignment(const TokenSequence& candidate, const TokenSequence& reference) {
  constexpr auto kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> cand_to_ref(candidate.size(), kNone);
  std::vector<bool> ref_used(reference.size(), false);

  auto stage = [&](auto&& same) {
    for (std::size_t i = 0; i < candidate.size(); ++i) {
      if (cand_to_ref[i] != kNone) continue;
      for (std::size_t j = 0; j < reference.size(); ++j) {
        if (ref_used[j] || !same(i, j)) continue;
        cand_to_ref[i] = j;
        ref_used[j] = true;
        break;
      }
    }
  };

  stage([&](std::size_t i, std::size_t j) { return candidate[i] == reference[j]; });

  std::vector<std::string> cand_stems, ref_stems;
  cand_stems.reserve(candidate.size());
  ref_stems.reserve(reference.size());
  for (const auto& t : candidate) cand_stems.push_back(porter_stem(t));
  for (const auto& t : reference) ref_stems.push_back(porter_stem(t));
  stage([&](std::size_t i, std::size_t j) { return cand_stems[i] == ref_stems[j]; });

  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < candidate.size(); ++i)
    if (cand_to_ref[i] != kNone) out.emplace_back(i, cand_to_ref[i]);
  return out;
}

double meteor_lite(const TokenSequence& candidate, std::span<const TokenSequence> refs) {
  if (refs.empty()) throw std::invalid_argument("meteor_lite: empty reference list");
  double best = 0.0;
  for (const auto& ref : refs) {
    const auto alignment = meteor_alignment(candidate, ref);
    if (alignment.empty()) continue;
    const auto matches = static_cast<double>(alignment.size());
    std::size_t chunks = 1;
    for (std::size_t k = 1; k < alignment.size(); ++k) {
      const bool contiguous = alignment[k].first == alignment[k - 1].first + 1 && alignment[k].second == alignment[k - 1].second + 1;
      if (!contiguous) ++chunks;
    }
    const double precision = matches / static_cast<double>(candidate.size());
    const double recall = matches / static_cast<double>(ref.size());
    const double f_mean = precision * recall / (kMeteorAlpha * precision + (1.0 - kMeteorAlpha) * recall);
    const double penalty = kMeteorGamma * std::pow(static_cast<double>(chunks) / matches, kMeteorBeta);
    best = std::max(best, f_mean * (1.0 - penalty));
  }
  return best;
}

// ---------------------------------------------------------------- VQA

double vqa_top1(const std::map<std::string, std::string>& predictions, const std::map<std::string, std::string>& answers) {
  if (predictions.size() != answers.size()) throw AlignmentError("vqa_top1: prediction and answer id sets differ in size");
  if (predictions.empty()) throw std::invalid_argument("vqa_top1: no predictions");
  std::size_t correct = 0;
  for (const auto& [id, predicted] : predictions) {
    const auto it = answers.find(id);
    if (it == answers.end()) throw AlignmentError("vqa_top1: no answer for id '" + id + "'");
    if (tokenize(predicted) == tokenize(it->second)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

// ---------------------------------------------------------------- evaluate

void aggregate_report(ScoreReport& report) {
  report.n_items = report.items.size();
  double cider = 0.0, rouge = 0.0, meteor = 0.0;
  BleuStats bleu;
  for (const auto& item : report.items) {
    cider += item.cider;
    rouge += item.rouge_l;
    meteor += item.meteor_lite;
    bleu += item.bleu_stats;
  }
  const double n = report.n_items == 0 ? 1.0 : static_cast<double>(report.n_items);
  report.corpus_cider = cider / n;
  report.corpus_rouge_l = rouge / n;
  report.corpus_meteor = meteor / n;
  report.corpus_bleu = report.n_items == 0 ? std::array<double, kMaxOrder>{} : bleu_from_stats(bleu);
  report.corpus_bleu4 = report.corpus_bleu[kMaxOrder - 1];
}

ScoreReport evaluate_tokens(const std::map<std::string, TokenSequence>& candidates,
                            const std::map<std::string, std::vector<TokenSequence>>& refs, std::size_t workers) {
  if (candidates.empty()) throw std::invalid_argument("evaluate: empty candidate set");
  require_same_ids(candidates, refs);
  const CorpusStats stats = build_corpus_stats(refs);

  ScoreReport report;
  report.items.resize(candidates.size());
  std::vector<std::pair<const std::string*, const TokenSequence*>> order;
  order.reserve(candidates.size());
  for (const auto& [id, cand] : candidates) order.emplace_back(&id, &cand);

  parallel_for(order.size(), workers, [&](std::size_t i) {
    const auto& [id, cand] = order[i];
    const auto& item_refs = refs.at(*id);
    ItemScore& item = report.items[i];
    item.video_id = *id;
    item.cider = cider_d(*cand, item_refs, stats);
    item.bleu_stats = bleu_stats(*cand, item_refs);
    item.bleu4 = bleu4_smoothed(item.bleu_stats);
    item.rouge_l = rouge_l(*cand, item_refs);
    item.meteor_lite = meteor_lite(*cand, item_refs);
  });
  aggregate_report(report);
  return report;
}

ScoreReport evaluate(const std::map<std::string, std::string>& candidates,
                     const std::map<std::string, std::vector<std::string>>& refs, std::size_t workers) {
  std::map<std::string, TokenSequence> cand_tokens;
  for (const auto& [id, text] : candidates) cand_tokens.emplace(id, tokenize(text));
  std::map<std::string, std::vector<TokenSequence>> ref_tokens;
  for (const auto& [id, texts] : refs) {
    auto& out = ref_tokens[id];
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(tokenize(t));
  }
  return evaluate_tokens(cand_tokens, ref_tokens, workers);
}

}  // namespace capforge
