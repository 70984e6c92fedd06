#include "capforge/cli/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <vector>

#include <json.hpp>

namespace capforge::cli {

namespace {

std::string one_decimal(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", v * 100.0);
  return buf;
}

double quantile(std::vector<double>& values, double q) {
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Interval interval(std::vector<double>& values, double confidence) {
  const double tail = (1.0 - confidence) / 2.0;
  return {quantile(values, tail), quantile(values, 1.0 - tail)};
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string group_thousands(std::size_t n) {
  std::string digits = std::to_string(n);
  std::string out;
  const std::size_t lead = digits.size() % 3 == 0 ? 3 : digits.size() % 3;
  out += digits.substr(0, lead);
  for (std::size_t i = lead; i < digits.size(); i += 3) out += "," + digits.substr(i, 3);
  return out;
}

BootstrapResult bootstrap(const ScoreReport& report, std::size_t samples, std::uint64_t seed, double confidence) {
  BootstrapResult result;
  result.samples = samples;
  result.seed = seed;
  result.confidence = confidence;
  const std::size_t n = report.items.size();
  if (samples == 0 || n == 0) return result;

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<double> cider(samples), bleu(samples), rouge(samples), meteor(samples);
  for (std::size_t b = 0; b < samples; ++b) {
    double c = 0.0, r = 0.0, m = 0.0;
    BleuStats stats;
    for (std::size_t i = 0; i < n; ++i) {
      const ItemScore& item = report.items[pick(rng)];
      c += item.cider;
      r += item.rouge_l;
      m += item.meteor_lite;
      stats += item.bleu_stats;
    }
    cider[b] = c / static_cast<double>(n);
    rouge[b] = r / static_cast<double>(n);
    meteor[b] = m / static_cast<double>(n);
    bleu[b] = bleu_from_stats(stats)[kMaxOrder - 1];
  }
  result.cider = interval(cider, confidence);
  result.bleu4 = interval(bleu, confidence);
  result.rouge_l = interval(rouge, confidence);
  result.meteor_lite = interval(meteor, confidence);
  return result;
}

std::string format_table_row(double cider, double meteor, double rouge_l, double bleu4) {
  return one_decimal(cider) + "  " + one_decimal(meteor) + "  " + one_decimal(rouge_l) + "  " + one_decimal(bleu4);
}

std::string render_text(const EvaluationOutput& out) {
  const ScoreReport& r = out.report;
  const std::array<std::string, 4> labels = {"C.", "M.", "R.", "B4."};
  const std::array<std::string, 4> values = {one_decimal(r.corpus_cider), one_decimal(r.corpus_meteor), one_decimal(r.corpus_rouge_l),
                                             one_decimal(r.corpus_bleu4)};
  std::string header, row;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::size_t width = std::max(labels[i].size(), values[i].size());
    const bool last = i + 1 == labels.size();
    auto pad = [&](const std::string& s) { return last ? s : s + std::string(width - s.size() + 2, ' '); };
    header += pad(labels[i]);
    row += pad(values[i]);
  }
  std::ostringstream os;
  os << "dataset: " << out.dataset << "  split: " << out.split << "  items: " << group_thousands(r.n_items)
     << "  missing: " << out.missing << "  extra: " << out.extra << '\n';
  os << header << '\n' << row << '\n';
  os << "(x100; M. is meteor_lite: exact + stem matching, no synonym stage; B4. is corpus-level)\n";
  if (out.bootstrap) {
    const auto& b = *out.bootstrap;
    auto iv = [](const Interval& i) { return "[" + one_decimal(i.low) + ", " + one_decimal(i.high) + "]"; };
    os << "bootstrap: " << b.samples << " resamples, seed " << b.seed << ", " << one_decimal(b.confidence) << "% percentile intervals\n";
    os << "  C. " << iv(b.cider) << "  M. " << iv(b.meteor_lite) << "  R. " << iv(b.rouge_l) << "  B4. " << iv(b.bleu4) << '\n';
  }
  return os.str();
}

std::string render_json(const EvaluationOutput& out) {
  const ScoreReport& r = out.report;
  nlohmann::ordered_json doc;
  doc["dataset"] = out.dataset;
  doc["split"] = out.split;
  doc["n_items"] = r.n_items;
  doc["missing"] = out.missing;
  doc["extra"] = out.extra;
  nlohmann::ordered_json corpus;
  corpus["cider"] = r.corpus_cider;
  corpus["bleu1"] = r.corpus_bleu[0];
  corpus["bleu2"] = r.corpus_bleu[1];
  corpus["bleu3"] = r.corpus_bleu[2];
  corpus["bleu4"] = r.corpus_bleu4;
  corpus["rouge_l"] = r.corpus_rouge_l;
  corpus["meteor_lite"] = r.corpus_meteor;
  doc["corpus"] = std::move(corpus);
  auto items = nlohmann::ordered_json::array();
  for (const auto& item : r.items) {
    nlohmann::ordered_json j;
    j["video_id"] = item.video_id;
    j["cider"] = item.cider;
    j["bleu4"] = item.bleu4;
    j["rouge_l"] = item.rouge_l;
    j["meteor_lite"] = item.meteor_lite;
    items.push_back(std::move(j));
  }
  doc["items"] = std::move(items);
  if (out.bootstrap) {
    const auto& b = *out.bootstrap;
    nlohmann::ordered_json j;
    j["samples"] = b.samples;
    j["seed"] = b.seed;
    j["confidence"] = b.confidence;
    j["cider"] = {b.cider.low, b.cider.high};
    j["bleu4"] = {b.bleu4.low, b.bleu4.high};
    j["rouge_l"] = {b.rouge_l.low, b.rouge_l.high};
    j["meteor_lite"] = {b.meteor_lite.low, b.meteor_lite.high};
    doc["bootstrap"] = std::move(j);
  }
  return doc.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

std::string render_csv(const EvaluationOutput& out) {
  const ScoreReport& r = out.report;
  std::ostringstream os;
  os << "video_id,cider,bleu4,rouge_l,meteor_lite\n";
  for (const auto& item : r.items)
    os << csv_field(item.video_id) << ',' << format_double(item.cider) << ',' << format_double(item.bleu4) << ','
       << format_double(item.rouge_l) << ',' << format_double(item.meteor_lite) << '\n';
  os << "__corpus__," << format_double(r.corpus_cider) << ',' << format_double(r.corpus_bleu4) << ',' << format_double(r.corpus_rouge_l)
     << ',' << format_double(r.corpus_meteor) << '\n';
  return os.str();
}

}  // namespace capforge::cli
