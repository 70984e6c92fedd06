#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>

namespace oracle {

namespace {

std::vector<Words> windows(const Words& w, std::size_t n) {
  std::vector<Words> out;
  for (std::size_t i = 0; i + n <= w.size(); ++i) out.emplace_back(w.begin() + static_cast<long>(i), w.begin() + static_cast<long>(i + n));
  return out;
}

int count_of(const Words& w, const Words& gram) {
  int c = 0;
  for (const auto& g : windows(w, gram.size()))
    if (g == gram) ++c;
  return c;
}

std::set<Words> distinct(const Words& w, std::size_t n) {
  const auto all = windows(w, n);
  return {all.begin(), all.end()};
}

double idf(const Corpus& corpus, const Words& gram) {
  const int df = doc_freq(corpus, gram);
  return std::log(static_cast<double>(corpus.size()) / static_cast<double>(df == 0 ? 1 : df));
}

}  // namespace

int doc_freq(const Corpus& corpus, const Words& gram) {
  int df = 0;
  for (const auto& [id, refs] : corpus) {
    bool present = false;
    for (const auto& r : refs) present = present || count_of(r, gram) > 0;
    if (present) ++df;
  }
  return df;
}

double cider_d(const Words& cand, const std::vector<Words>& refs, const Corpus& corpus) {
  const double sigma = 6.0;
  double total = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    const double cand_len = static_cast<double>(windows(cand, n).size());
    double per_ref = 0.0;
    for (const auto& ref : refs) {
      const double ref_len = static_cast<double>(windows(ref, n).size());
      double dot = 0.0, cand_sq = 0.0, ref_sq = 0.0;
      for (const auto& g : distinct(cand, n)) {
        const double w = count_of(cand, g) / cand_len * idf(corpus, g);
        cand_sq += w * w;
      }
      for (const auto& g : distinct(ref, n)) {
        const double w = count_of(ref, g) / ref_len * idf(corpus, g);
        ref_sq += w * w;
        int ceiling = 0;
        for (const auto& r : refs) ceiling = std::max(ceiling, count_of(r, g));
        const int clipped = std::min(count_of(cand, g), ceiling);
        if (clipped > 0) dot += clipped / cand_len * idf(corpus, g) * w;
      }
      double sim = 0.0;
      if (cand_sq > 0.0 && ref_sq > 0.0) sim = dot / (std::sqrt(cand_sq) * std::sqrt(ref_sq));
      const double d = static_cast<double>(cand.size()) - static_cast<double>(ref.size());
      per_ref += std::exp(-(d * d) / (2 * sigma * sigma)) * sim;
    }
    total += 10.0 * per_ref / static_cast<double>(refs.size());
  }
  return total / 4.0;
}

namespace {

struct BleuCounts {
  double matched[4] = {0, 0, 0, 0};
  double total[4] = {0, 0, 0, 0};
  double c = 0;
  double r = 0;
};

BleuCounts bleu_counts(const Words& cand, const std::vector<Words>& refs) {
  BleuCounts b;
  b.c = static_cast<double>(cand.size());
  std::size_t best = refs[0].size();
  for (const auto& ref : refs) {
    const long d = std::labs(static_cast<long>(ref.size()) - static_cast<long>(cand.size()));
    const long bd = std::labs(static_cast<long>(best) - static_cast<long>(cand.size()));
    if (d < bd || (d == bd && ref.size() < best)) best = ref.size();
  }
  b.r = static_cast<double>(best);
  for (std::size_t n = 1; n <= 4; ++n) {
    for (const auto& g : distinct(cand, n)) {
      int ceiling = 0;
      for (const auto& ref : refs) ceiling = std::max(ceiling, count_of(ref, g));
      b.matched[n - 1] += std::min(count_of(cand, g), ceiling);
    }
    b.total[n - 1] = static_cast<double>(windows(cand, n).size());
  }
  return b;
}

}  // namespace

void corpus_bleu(const std::map<std::string, Words>& cands, const Corpus& corpus, double out[4]) {
  BleuCounts sum;
  for (const auto& [id, cand] : cands) {
    const BleuCounts b = bleu_counts(cand, corpus.at(id));
    for (int k = 0; k < 4; ++k) {
      sum.matched[k] += b.matched[k];
      sum.total[k] += b.total[k];
    }
    sum.c += b.c;
    sum.r += b.r;
  }
  const double bp = sum.c == 0 ? 0.0 : std::min(1.0, std::exp(1.0 - sum.r / sum.c));
  for (int k = 1; k <= 4; ++k) {
    double product = 1.0;
    bool any_zero = false;
    for (int n = 1; n <= k; ++n) {
      if (sum.total[n - 1] == 0 || sum.matched[n - 1] == 0) any_zero = true;
      else product *= sum.matched[n - 1] / sum.total[n - 1];
    }
    out[k - 1] = any_zero ? 0.0 : bp * std::pow(product, 1.0 / k);
  }
}

double bleu4_smoothed(const Words& cand, const std::vector<Words>& refs) {
  const BleuCounts b = bleu_counts(cand, refs);
  if (b.c == 0) return 0.0;
  const double bp = std::min(1.0, std::exp(1.0 - b.r / b.c));
  double log_sum = 0.0;
  for (int n = 0; n < 4; ++n) {
    const double p = b.total[n] == 0 ? 0.0 : b.matched[n] / b.total[n];
    log_sum += std::log(std::max(p, 1e-9));
  }
  return bp * std::exp(log_sum / 4.0);
}

namespace {

bool is_subsequence(const Words& sub, const Words& of) {
  std::size_t j = 0;
  for (const auto& w : of)
    if (j < sub.size() && sub[j] == w) ++j;
  return j == sub.size();
}

}  // namespace

double rouge_l(const Words& cand, const std::vector<Words>& refs) {
  if (cand.empty()) return 0.0;
  double best = 0.0;
  for (const auto& ref : refs) {
    std::size_t lcs = 0;
    for (unsigned mask = 0; mask < (1u << cand.size()); ++mask) {
      Words sub;
      for (std::size_t i = 0; i < cand.size(); ++i)
        if (mask & (1u << i)) sub.push_back(cand[i]);
      if (sub.size() > lcs && is_subsequence(sub, ref)) lcs = sub.size();
    }
    if (ref.empty() || lcs == 0) continue;
    const double r = static_cast<double>(lcs) / static_cast<double>(ref.size());
    const double p = static_cast<double>(lcs) / static_cast<double>(cand.size());
    const double b2 = 1.2 * 1.2;
    best = std::max(best, (1 + b2) * r * p / (r + b2 * p));
  }
  return best;
}

double meteor_lite(const Words& cand, const std::vector<Words>& refs, const std::map<std::string, std::string>& stems) {
  auto stem = [&](const std::string& w) {
    const auto it = stems.find(w);
    return it == stems.end() ? w : it->second;
  };
  double best = 0.0;
  for (const auto& ref : refs) {
    std::vector<int> link(cand.size(), -1);
    std::vector<bool> taken(ref.size(), false);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i < cand.size(); ++i) {
        if (link[i] >= 0) continue;
        for (std::size_t j = 0; j < ref.size(); ++j) {
          const bool same = pass == 0 ? cand[i] == ref[j] : stem(cand[i]) == stem(ref[j]);
          if (!taken[j] && same) {
            link[i] = static_cast<int>(j);
            taken[j] = true;
            break;
          }
        }
      }
    }
    double m = 0;
    double chunks = 0;
    int prev_i = -2, prev_j = -2;
    for (std::size_t i = 0; i < cand.size(); ++i) {
      if (link[i] < 0) continue;
      ++m;
      if (!(static_cast<int>(i) == prev_i + 1 && link[i] == prev_j + 1)) ++chunks;
      prev_i = static_cast<int>(i);
      prev_j = link[i];
    }
    if (m == 0) continue;
    const double p = m / static_cast<double>(cand.size());
    const double r = m / static_cast<double>(ref.size());
    const double f = p * r / (0.9 * p + 0.1 * r);
    best = std::max(best, f * (1.0 - 0.5 * std::pow(chunks / m, 3.0)));
  }
  return best;
}

Report evaluate(const std::map<std::string, Words>& cands, const Corpus& corpus, const std::map<std::string, std::string>& stems) {
  Report out;
  for (const auto& [id, cand] : cands) {
    const auto& refs = corpus.at(id);
    Scores s;
    s.cider = cider_d(cand, refs, corpus);
    s.bleu4_smoothed = bleu4_smoothed(cand, refs);
    s.rouge_l = rouge_l(cand, refs);
    s.meteor_lite = meteor_lite(cand, refs, stems);
    out.cider += s.cider;
    out.rouge_l += s.rouge_l;
    out.meteor_lite += s.meteor_lite;
    out.items[id] = s;
  }
  const double n = static_cast<double>(cands.size());
  out.cider /= n;
  out.rouge_l /= n;
  out.meteor_lite /= n;
  corpus_bleu(cands, corpus, out.bleu);
  return out;
}

std::vector<double> frame_mean(const std::vector<double>& values, std::size_t frames, std::size_t tokens, std::size_t dim) {
  std::vector<double> out(tokens * dim, 0.0);
  for (std::size_t t = 0; t < tokens; ++t)
    for (std::size_t d = 0; d < dim; ++d) {
      long double s = 0;
      for (std::size_t f = 0; f < frames; ++f) s += values[(f * tokens + t) * dim + d];
      out[t * dim + d] = static_cast<double>(s / static_cast<long double>(frames));
    }
  return out;
}

const std::map<std::string, std::string>& toy_stems() {
  static const std::map<std::string, std::string> table = {
      {"a", "a"},       {"the", "the"},   {"cat", "cat"},   {"cats", "cat"},    {"dog", "dog"},
      {"dogs", "dog"},  {"run", "run"},   {"runs", "run"},  {"jumping", "jump"}, {"jumps", "jump"},
  };
  return table;
}

}  // namespace oracle
