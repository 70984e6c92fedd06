#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "capforge/text_norm.hpp"

namespace capforge {

inline constexpr int kMaxOrder = 4;

/// N-gram key: the n tokens joined by single spaces. Tokens never contain
/// whitespace, so the encoding is unambiguous.
using Gram = std::string;

struct NgramCounts {
  int order = 1;
  std::unordered_map<Gram, int> counts;

  /// Sum of all counts, i.e. max(0, len - order + 1) for the source sequence.
  int total() const;
};

/// Sliding-window n-gram counts. Throws std::invalid_argument unless
/// 1 <= order <= 4.
NgramCounts extract_ngrams(const TokenSequence& tokens, int order);

/// Document frequencies over a reference corpus, one document per video.
class CorpusStats {
 public:
  CorpusStats() = default;

  int num_videos() const { return num_videos_; }

  /// Number of videos whose references contain `gram` of the given order;
  /// 0 when the n-gram never occurs.
  int doc_freq(int order, std::string_view gram) const;

  /// Natural-log inverse document frequency log(N / df), with absent
  /// n-grams treated as df = 1.
  double idf(int order, std::string_view gram) const;

  /// Count one more document. Each n-gram in `present` is credited once
  /// regardless of how often it occurs.
  void add_document(const std::array<std::vector<Gram>, kMaxOrder>& present);

  /// Direct construction from (order, gram, df) triples, validating
  /// 1 <= df <= num_videos. Used by the sidecar loader.
  static CorpusStats from_entries(int num_videos, const std::vector<std::tuple<int, Gram, int>>& entries);

  std::size_t num_entries() const;

  /// Entries sorted by (order, gram).
  std::vector<std::tuple<int, Gram, int>> sorted_entries() const;

 private:
  struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };
  using DfMap = std::unordered_map<Gram, int, StringHash, std::equal_to<>>;

  int num_videos_ = 0;
  std::array<DfMap, kMaxOrder> doc_freq_;
};

/// Builds document frequencies for orders 1..4. Throws std::invalid_argument
/// on an empty corpus or a video without references.
CorpusStats build_corpus_stats(const std::map<std::string, std::vector<TokenSequence>>& references);

/// Sparse TF-IDF weights for one order:
/// weight(g) = count(g) / total(counts) * log(N / df(g)).
std::unordered_map<Gram, double> tfidf_vector(const NgramCounts& counts, const CorpusStats& stats);

/// JSON sidecar: {"format": "capforge-corpus-stats", "version": 1,
/// "n_videos": N, "entries": [{"n": 1, "gram": "a man", "df": 3}, ...]}.
void save_corpus_stats(const CorpusStats& stats, const std::filesystem::path& path);
CorpusStats load_corpus_stats(const std::filesystem::path& path, bool strict = false);

std::string corpus_stats_to_json(const CorpusStats& stats);
CorpusStats corpus_stats_from_json(std::string_view text, bool strict = false);

}  // namespace capforge
