#include "capforge/ngram.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "capforge/errors.hpp"

namespace capforge {

namespace {

constexpr std::string_view kStatsFormat = "capforge-corpus-stats";
constexpr int kStatsVersion = 1;

void check_order(int order) {
  if (order < 1 || order > kMaxOrder) throw std::invalid_argument("n-gram order must be in [1, 4], got " + std::to_string(order));
}

int gram_order(std::string_view gram) {
  if (gram.empty()) return 0;
  return 1 + static_cast<int>(std::count(gram.begin(), gram.end(), ' '));
}

}  // namespace

int NgramCounts::total() const {
  int sum = 0;
  for (const auto& [gram, count] : counts) sum += count;
  return sum;
}

NgramCounts extract_ngrams(const TokenSequence& tokens, int order) {
  check_order(order);
  NgramCounts out;
  out.order = order;
  const auto n = static_cast<std::size_t>(order);
  if (tokens.size() < n) return out;
  std::string key;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    key = tokens[i];
    for (std::size_t k = 1; k < n; ++k) {
      key.push_back(' ');
      key += tokens[i + k];
    }
    ++out.counts[key];
  }
  return out;
}

int CorpusStats::doc_freq(int order, std::string_view gram) const {
  check_order(order);
  const auto& map = doc_freq_[static_cast<std::size_t>(order - 1)];
  const auto it = map.find(gram);
  return it == map.end() ? 0 : it->second;
}

double CorpusStats::idf(int order, std::string_view gram) const {
  const int df = std::max(1, doc_freq(order, gram));
  return std::log(static_cast<double>(num_videos_) / static_cast<double>(df));
}

void CorpusStats::add_document(const std::array<std::vector<Gram>, kMaxOrder>& present) {
  ++num_videos_;
  for (std::size_t o = 0; o < kMaxOrder; ++o)
    for (const auto& g : present[o]) ++doc_freq_[o][g];
}

CorpusStats CorpusStats::from_entries(int num_videos, const std::vector<std::tuple<int, Gram, int>>& entries) {
  if (num_videos < 1) throw InputError("corpus stats: n_videos must be positive");
  CorpusStats stats;
  stats.num_videos_ = num_videos;
  for (const auto& [order, gram, df] : entries) {
    if (order < 1 || order > kMaxOrder) throw InputError("corpus stats: entry order out of range for '" + gram + "'");
    if (gram_order(gram) != order) throw InputError("corpus stats: gram '" + gram + "' does not have " + std::to_string(order) + " tokens");
    if (df < 1 || df > num_videos) throw InputError("corpus stats: df out of range for '" + gram + "'");
    auto [it, inserted] = stats.doc_freq_[static_cast<std::size_t>(order - 1)].emplace(gram, df);
    if (!inserted) throw InputError("corpus stats: duplicate entry '" + gram + "'");
  }
  return stats;
}

std::size_t CorpusStats::num_entries() const {
  std::size_t n = 0;
  for (const auto& m : doc_freq_) n += m.size();
  return n;
}

std::vector<std::tuple<int, Gram, int>> CorpusStats::sorted_entries() const {
  std::vector<std::tuple<int, Gram, int>> out;
  out.reserve(num_entries());
  for (std::size_t o = 0; o < kMaxOrder; ++o)
    for (const auto& [g, df] : doc_freq_[o]) out.emplace_back(static_cast<int>(o + 1), g, df);
  std::sort(out.begin(), out.end());
  return out;
}

CorpusStats build_corpus_stats(const std::map<std::string, std::vector<TokenSequence>>& references) {
  if (references.empty()) throw std::invalid_argument("build_corpus_stats: empty corpus");
  CorpusStats stats;
  for (const auto& [video_id, refs] : references) {
    if (refs.empty()) throw std::invalid_argument("build_corpus_stats: video '" + video_id + "' has no references");
    std::array<std::vector<Gram>, kMaxOrder> present;
    for (int order = 1; order <= kMaxOrder; ++order) {
      std::set<Gram> seen;
      for (const auto& ref : refs)
        for (auto& [g, c] : extract_ngrams(ref, order).counts) seen.insert(g);
      present[static_cast<std::size_t>(order - 1)].assign(seen.begin(), seen.end());
    }
    stats.add_document(present);
  }
  return stats;
}

std::unordered_map<Gram, double> tfidf_vector(const NgramCounts& counts, const CorpusStats& stats) {
  std::unordered_map<Gram, double> out;
  const int total = counts.total();
  if (total == 0) return out;
  for (const auto& [gram, count] : counts.counts) {
    const double tf = static_cast<double>(count) / static_cast<double>(total);
    out.emplace(gram, tf * stats.idf(counts.order, gram));
  }
  return out;
}

std::string corpus_stats_to_json(const CorpusStats& stats) {
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (const auto& [order, gram, df] : stats.sorted_entries()) {
    nlohmann::ordered_json e;
    e["n"] = order;
    e["gram"] = gram;
    e["df"] = df;
    entries.push_back(std::move(e));
  }
  nlohmann::ordered_json doc;
  doc["format"] = kStatsFormat;
  doc["version"] = kStatsVersion;
  doc["n_videos"] = stats.num_videos();
  doc["entries"] = std::move(entries);
  return doc.dump();
}

CorpusStats corpus_stats_from_json(std::string_view text, bool strict) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("corpus stats: ") + e.what());
  }
  if (!doc.is_object()) throw InputError("corpus stats: top level must be an object");
  if (strict) {
    for (const auto& [key, value] : doc.items())
      if (key != "format" && key != "version" && key != "n_videos" && key != "entries")
        throw InputError("corpus stats: unknown field '" + key + "'");
  }
  if (doc.contains("version") && doc["version"] != kStatsVersion)
    throw InputError("corpus stats: unsupported version " + doc["version"].dump());
  if (!doc.contains("n_videos") || !doc["n_videos"].is_number_integer()) throw InputError("corpus stats: missing integer n_videos");
  if (!doc.contains("entries") || !doc["entries"].is_array()) throw InputError("corpus stats: missing entries array");

  std::vector<std::tuple<int, Gram, int>> entries;
  entries.reserve(doc["entries"].size());
  std::size_t index = 0;
  for (const auto& e : doc["entries"]) {
    if (!e.is_object() || !e.contains("n") || !e.contains("gram") || !e.contains("df") || !e["n"].is_number_integer() ||
        !e["gram"].is_string() || !e["df"].is_number_integer())
      throw InputError("corpus stats: malformed entry #" + std::to_string(index));
    entries.emplace_back(e["n"].get<int>(), e["gram"].get<std::string>(), e["df"].get<int>());
    ++index;
  }
  return CorpusStats::from_entries(doc["n_videos"].get<int>(), entries);
}

void save_corpus_stats(const CorpusStats& stats, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << corpus_stats_to_json(stats) << '\n';
}

CorpusStats load_corpus_stats(const std::filesystem::path& path, bool strict) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return corpus_stats_from_json(buf.str(), strict);
}

}  // namespace capforge
