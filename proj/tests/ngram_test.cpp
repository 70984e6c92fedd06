#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "capforge/errors.hpp"
#include "capforge/ngram.hpp"
#include "oracle/oracle.hpp"
#include "support/toy_corpus.hpp"

using namespace capforge;

TEST(ExtractNgrams, Bigrams) {
  const auto c = extract_ngrams({"a", "b", "c"}, 2);
  EXPECT_EQ(c.counts.size(), 2u);
  EXPECT_EQ(c.counts.at("a b"), 1);
  EXPECT_EQ(c.counts.at("b c"), 1);
}

TEST(ExtractNgrams, WindowLongerThanSequence) { EXPECT_TRUE(extract_ngrams({"a", "b"}, 3).counts.empty()); }

TEST(ExtractNgrams, RepeatedUnigram) {
  const auto c = extract_ngrams({"a", "a", "a"}, 1);
  EXPECT_EQ(c.counts.size(), 1u);
  EXPECT_EQ(c.counts.at("a"), 3);
}

TEST(ExtractNgrams, OrderOutOfRange) {
  EXPECT_THROW(extract_ngrams({"a"}, 0), std::invalid_argument);
  EXPECT_THROW(extract_ngrams({"a"}, 5), std::invalid_argument);
}

TEST(ExtractNgramsProperty, TotalMatchesWindowCount) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 2000; ++i) {
    const auto w = toy::sentence(rng, 0, 12, 4);
    for (int n = 1; n <= kMaxOrder; ++n) {
      const auto c = extract_ngrams(TokenSequence(w), n);
      int sum = 0;
      for (const auto& [g, k] : c.counts) {
        sum += k;
        EXPECT_EQ(std::count(g.begin(), g.end(), ' '), n - 1);
      }
      EXPECT_EQ(sum, std::max(0, static_cast<int>(w.size()) - n + 1));
      EXPECT_EQ(c.total(), sum);
    }
  }
}

TEST(CorpusStats, PresenceInBothVideos) {
  const auto s = build_corpus_stats({{"v1", {{"a", "b"}}}, {"v2", {{"x", "a", "b"}}}});
  EXPECT_EQ(s.num_videos(), 2);
  EXPECT_EQ(s.doc_freq(2, "a b"), 2);
  EXPECT_EQ(s.doc_freq(1, "x"), 1);
}

TEST(CorpusStats, RepeatWithinOneVideoCountsOnce) {
  const auto s = build_corpus_stats({{"v1", {{"a", "b"}, {"a", "b", "a", "b"}}}, {"v2", {{"c"}}}});
  EXPECT_EQ(s.doc_freq(2, "a b"), 1);
}

TEST(CorpusStats, DisjointVocabularies) {
  const auto s = build_corpus_stats({{"v1", {{"a", "b"}}}, {"v2", {{"c", "d"}}}, {"v3", {{"e"}}}});
  EXPECT_EQ(s.num_videos(), 3);
  for (const auto& [n, g, df] : s.sorted_entries()) EXPECT_EQ(df, 1) << g;
}

TEST(CorpusStats, EmptyCorpusRejected) {
  EXPECT_THROW(build_corpus_stats({}), std::invalid_argument);
  EXPECT_THROW(build_corpus_stats({{"v1", {}}}), std::invalid_argument);
}

TEST(CorpusStatsProperty, MatchesOracleDocFreq) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const auto corpus = toy::random_corpus(rng);
    const auto stats = build_corpus_stats(toy::to_tokens(corpus.references));
    EXPECT_EQ(stats.num_videos(), static_cast<int>(corpus.references.size()));
    for (const auto& [n, gram, df] : stats.sorted_entries()) {
      oracle::Words w;
      std::string cur;
      for (char ch : gram + " ") {
        if (ch == ' ') {
          w.push_back(cur);
          cur.clear();
        } else {
          cur += ch;
        }
      }
      ASSERT_EQ(static_cast<int>(w.size()), n);
      EXPECT_EQ(df, oracle::doc_freq(corpus.references, w)) << gram;
      EXPECT_GE(df, 1);
      EXPECT_LE(df, stats.num_videos());
    }
  }
}

TEST(CorpusStatsProperty, AddingVideoNeverDecreasesDocFreq) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 100; ++i) {
    auto corpus = toy::random_corpus(rng);
    const auto before = build_corpus_stats(toy::to_tokens(corpus.references));
    corpus.references["zz"] = {toy::sentence(rng, 1, 7, 10)};
    const auto after = build_corpus_stats(toy::to_tokens(corpus.references));
    EXPECT_EQ(after.num_videos(), before.num_videos() + 1);
    for (const auto& [n, g, df] : before.sorted_entries()) EXPECT_GE(after.doc_freq(n, g), df);
  }
}

TEST(Tfidf, SingleBigramHalfCorpus) {
  const auto s = build_corpus_stats({{"v1", {{"a", "b"}}}, {"v2", {{"c", "d"}}}});
  const auto w = tfidf_vector(extract_ngrams({"a", "b"}, 2), s);
  EXPECT_NEAR(w.at("a b"), std::log(2.0), 1e-15);
  EXPECT_NEAR(w.at("a b"), 0.6931, 1e-4);
}

TEST(Tfidf, UbiquitousGramHasZeroWeight) {
  const auto s = build_corpus_stats({{"v1", {{"a", "b"}}}, {"v2", {{"a", "c"}}}});
  EXPECT_EQ(tfidf_vector(extract_ngrams({"a"}, 1), s).at("a"), 0.0);
}

TEST(Tfidf, TwoGramsQuarterCorpus) {
  const auto s = build_corpus_stats({{"v1", {{"a", "b", "c"}}}, {"v2", {{"d"}}}, {"v3", {{"e"}}}, {"v4", {{"f"}}}});
  const auto w = tfidf_vector(extract_ngrams({"a", "b", "c"}, 2), s);
  EXPECT_NEAR(w.at("a b"), 0.5 * std::log(4.0), 1e-15);
  EXPECT_NEAR(w.at("b c"), 0.5 * std::log(4.0), 1e-15);
}

TEST(Tfidf, UnseenGramUsesDocFreqOne) {
  const auto s = build_corpus_stats({{"v1", {{"a"}}}, {"v2", {{"b"}}}, {"v3", {{"c"}}}});
  EXPECT_DOUBLE_EQ(tfidf_vector(extract_ngrams({"zebra"}, 1), s).at("zebra"), std::log(3.0));
}

TEST(CorpusStatsSidecar, RoundTrip) {
  std::mt19937_64 rng(2);
  const auto corpus = toy::random_corpus(rng);
  const auto stats = build_corpus_stats(toy::to_tokens(corpus.references));
  const auto path = std::filesystem::temp_directory_path() / "capforge_ngram_stats.json";
  save_corpus_stats(stats, path);
  const auto loaded = load_corpus_stats(path, true);
  EXPECT_EQ(loaded.num_videos(), stats.num_videos());
  EXPECT_EQ(loaded.sorted_entries(), stats.sorted_entries());
  std::filesystem::remove(path);
}

TEST(CorpusStatsSidecar, RejectsBadDocuments) {
  EXPECT_THROW(corpus_stats_from_json("not json"), InputError);
  EXPECT_THROW(corpus_stats_from_json(R"({"format":"capforge-corpus-stats","version":1,"n_videos":1,
    "entries":[{"n":1,"gram":"a","df":2}]})"),
               InputError);
  EXPECT_THROW(corpus_stats_from_json(R"({"format":"capforge-corpus-stats","version":1,"n_videos":1,
    "entries":[{"n":5,"gram":"a b c d e","df":1}]})"),
               InputError);
  const std::string extra = R"({"format":"capforge-corpus-stats","version":1,"n_videos":1,"entries":[],"note":"x"})";
  EXPECT_NO_THROW(corpus_stats_from_json(extra, false));
  EXPECT_THROW(corpus_stats_from_json(extra, true), InputError);
}
