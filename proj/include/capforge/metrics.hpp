#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "capforge/ngram.hpp"
#include "capforge/text_norm.hpp"

namespace capforge {

// CIDEr-D constants.
inline constexpr double kCiderSigma = 6.0;
inline constexpr double kCiderScale = 10.0;

// ROUGE-L recall weight.
inline constexpr double kRougeBeta = 1.2;

// METEOR-lite parameters (published METEOR defaults).
inline constexpr double kMeteorAlpha = 0.9;
inline constexpr double kMeteorBeta = 3.0;
inline constexpr double kMeteorGamma = 0.5;

/// Floor applied to per-item BLEU precisions so the sentence-level score
/// stays usable as a reward.
inline constexpr double kBleuItemEpsilon = 1e-9;

/// References for one video with their TF-IDF vectors precomputed, so many
/// candidates (SCST samples) can be scored against them cheaply.
class CiderReferenceSet {
 public:
  /// Throws std::invalid_argument when refs is empty or stats has N = 0.
  CiderReferenceSet(std::span<const TokenSequence> refs, const CorpusStats& stats);

  /// CIDEr-D in [0, 10].
  double score(const TokenSequence& candidate) const;

 private:
  struct Vector {
    std::array<std::unordered_map<Gram, double>, kMaxOrder> weights;
    std::array<double, kMaxOrder> norms{};
    int length = 0;
  };

  Vector vectorize(const std::array<NgramCounts, kMaxOrder>& counts, int length) const;

  const CorpusStats* stats_;
  std::vector<Vector> refs_;
  // Highest count of each n-gram in any single reference; the clip ceiling.
  std::array<std::unordered_map<Gram, int>, kMaxOrder> max_ref_counts_;
};

double cider_d(const TokenSequence& candidate, std::span<const TokenSequence> refs, const CorpusStats& stats);

/// Sufficient statistics of one candidate for corpus BLEU.
struct BleuStats {
  std::array<long long, kMaxOrder> matches{};  // clipped n-gram matches
  std::array<long long, kMaxOrder> totals{};   // candidate n-grams
  long long candidate_length = 0;
  long long reference_length = 0;  // closest reference length, ties to the shorter

  BleuStats& operator+=(const BleuStats& other);
};

BleuStats bleu_stats(const TokenSequence& candidate, std::span<const TokenSequence> refs);

/// b1..b4 from aggregated statistics, unsmoothed.
std::array<double, kMaxOrder> bleu_from_stats(const BleuStats& stats);

/// Corpus-level BLEU-1..4. Throws AlignmentError on id mismatch and
/// std::invalid_argument on an empty candidate set or empty reference list.
std::array<double, kMaxOrder> bleu4(const std::map<std::string, TokenSequence>& candidates,
                                    const std::map<std::string, std::vector<TokenSequence>>& refs);

/// Sentence-level BLEU-4 with precisions floored at kBleuItemEpsilon.
double bleu4_smoothed(const TokenSequence& candidate, std::span<const TokenSequence> refs);
double bleu4_smoothed(const BleuStats& stats);

std::size_t lcs_length(const TokenSequence& a, const TokenSequence& b);

/// Max over references of the beta-weighted LCS F-measure.
double rouge_l(const TokenSequence& candidate, std::span<const TokenSequence> refs);

/// Exact-then-stem greedy unigram alignment between candidate and one
/// reference, as (candidate index, reference index) pairs sorted by
/// candidate index.
std::vector<std::pair<std::size_t, std::size_t>> meteor_alignment(const TokenSequence& candidate,
                                                                  const TokenSequence& reference);

/// METEOR without the synonym/paraphrase stages. Max over references.
double meteor_lite(const TokenSequence& candidate, std::span<const TokenSequence> refs);

/// Fraction of ids whose normalized prediction equals the normalized answer.
double vqa_top1(const std::map<std::string, std::string>& predictions, const std::map<std::string, std::string>& answers);

struct ItemScore {
  std::string video_id;
  double cider = 0.0;
  double bleu4 = 0.0;  // smoothed sentence-level
  double rouge_l = 0.0;
  double meteor_lite = 0.0;
  BleuStats bleu_stats;
};

struct ScoreReport {
  double corpus_cider = 0.0;
  std::array<double, kMaxOrder> corpus_bleu{};  // corpus-level b1..b4
  double corpus_bleu4 = 0.0;
  double corpus_rouge_l = 0.0;
  double corpus_meteor = 0.0;  // meteor_lite
  std::vector<ItemScore> items;  // sorted by video id
  std::size_t n_items = 0;
};

/// Scores pre-tokenized input. Document frequencies come from `refs`.
ScoreReport evaluate_tokens(const std::map<std::string, TokenSequence>& candidates,
                            const std::map<std::string, std::vector<TokenSequence>>& refs, std::size_t workers = 1);

/// Tokenizes and scores. Output is identical for every worker count.
ScoreReport evaluate(const std::map<std::string, std::string>& candidates,
                     const std::map<std::string, std::vector<std::string>>& refs, std::size_t workers = 1);

/// Recomputes the corpus fields and n_items from report.items.
void aggregate_report(ScoreReport& report);

}  // namespace capforge
