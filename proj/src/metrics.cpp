// SPDX-License-Identifier: Apache-2.0

#include "vnsgru/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <string>

#include "vnsgru/errors.hpp"

namespace vnsgru {

namespace {

constexpr int kMaxOrder = 4;
constexpr double kPrecisionFloor = 1e-9;

void check_corpus(const std::vector<Tokens>& candidates, const ReferenceSets& references) {
  if (candidates.empty()) throw DomainError("metrics: empty candidate list");
  if (candidates.size() != references.size())
    throw DomainError("metrics: " + std::to_string(candidates.size()) + " candidates vs " +
                      std::to_string(references.size()) + " reference sets");
  for (const auto& refs : references)
    if (refs.empty()) throw DomainError("metrics: a video has no references");
}

/// n-grams as joined strings; exact integer counts so reductions are
/// order-independent.
using Counts = std::map<std::string, long>;

Counts ngram_counts(const Tokens& toks, int n) {
  Counts out;
  if (static_cast<int>(toks.size()) < n) return out;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= toks.size(); ++i) {
    std::string key = toks[i];
    for (int k = 1; k < n; ++k) {
      key.push_back(' ');
      key += toks[i + static_cast<std::size_t>(k)];
    }
    ++out[key];
  }
  return out;
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  const std::size_t n = a.size(), m = b.size();
  if (n == 0 || m == 0) return 0;
  std::vector<std::size_t> prev(m + 1, 0), cur(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      if (a[i - 1] == b[j - 1]) cur[j] = prev[j - 1] + 1;
      else cur[j] = std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

} // namespace

double bleu4(const std::vector<Tokens>& candidates, const ReferenceSets& references) {
  check_corpus(candidates, references);

  long clipped[kMaxOrder] = {0, 0, 0, 0};
  long totals[kMaxOrder] = {0, 0, 0, 0};
  long cand_len = 0, ref_len = 0;

  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Tokens& cand = candidates[i];
    cand_len += static_cast<long>(cand.size());

    // closest reference length, shorter wins ties
    long best_ref = static_cast<long>(references[i][0].size());
    for (const Tokens& ref : references[i]) {
      const long len = static_cast<long>(ref.size());
      const long cur = std::labs(len - static_cast<long>(cand.size()));
      const long best = std::labs(best_ref - static_cast<long>(cand.size()));
      if (cur < best || (cur == best && len < best_ref)) best_ref = len;
    }
    ref_len += best_ref;

    for (int n = 1; n <= kMaxOrder; ++n) {
      Counts cc = ngram_counts(cand, n);
      Counts cap; // max count of each n-gram over the references
      for (const Tokens& ref : references[i])
        for (const auto& [gram, cnt] : ngram_counts(ref, n)) {
          long& slot = cap[gram];
          slot = std::max(slot, cnt);
        }
      for (const auto& [gram, cnt] : cc) {
        totals[n - 1] += cnt;
        auto it = cap.find(gram);
        if (it != cap.end()) clipped[n - 1] += std::min(cnt, it->second);
      }
    }
  }

  if (cand_len == 0) return 0.0;
  double log_prec = 0.0;
  for (int n = 0; n < kMaxOrder; ++n) {
    double p = totals[n] > 0
                   ? static_cast<double>(clipped[n]) / static_cast<double>(totals[n])
                   : 0.0;
    if (p <= 0.0) p = kPrecisionFloor;
    log_prec += std::log(p);
  }
  const double bp =
      cand_len >= ref_len
          ? 1.0
          : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len));
  return bp * std::exp(log_prec / kMaxOrder);
}

double rouge_l(const std::vector<Tokens>& candidates, const ReferenceSets& references) {
  check_corpus(candidates, references);
  constexpr double beta = 1.2;
  double total = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Tokens& cand = candidates[i];
    double best = 0.0;
    for (const Tokens& ref : references[i]) {
      const std::size_t lcs = lcs_length(cand, ref);
      if (lcs == 0 || cand.empty() || ref.empty()) continue;
      const double p = static_cast<double>(lcs) / static_cast<double>(cand.size());
      const double r = static_cast<double>(lcs) / static_cast<double>(ref.size());
      const double f = (1.0 + beta * beta) * p * r / (r + beta * beta * p);
      best = std::max(best, f);
    }
    total += best;
  }
  return total / static_cast<double>(candidates.size());
}

double cider(const std::vector<Tokens>& candidates, const ReferenceSets& references) {
  check_corpus(candidates, references);
  const std::size_t videos = candidates.size();
  if (videos < 2) throw DomainError("cider: needs a corpus of >= 2 videos");

  double corpus_total = 0.0;
  for (int n = 1; n <= kMaxOrder; ++n) {
    // document frequency: number of videos whose reference set contains the
    // n-gram at least once
    Counts df;
    for (const auto& refs : references) {
      Counts seen;
      for (const Tokens& ref : refs)
        for (const auto& [gram, cnt] : ngram_counts(ref, n)) seen[gram] = 1;
      for (const auto& [gram, one] : seen) df[gram] += one;
    }
    const double log_videos = std::log(static_cast<double>(videos));
    auto idf = [&df, log_videos](const std::string& gram) {
      auto it = df.find(gram);
      const double d = it == df.end() ? 0.0 : static_cast<double>(it->second);
      return log_videos - std::log(std::max(1.0, d));
    };

    double order_total = 0.0;
    for (std::size_t i = 0; i < videos; ++i) {
      Counts cc = ngram_counts(candidates[i], n);
      std::map<std::string, double> cvec;
      double cnorm = 0.0;
      for (const auto& [gram, cnt] : cc) {
        const double w = static_cast<double>(cnt) * idf(gram);
        cvec[gram] = w;
        cnorm += w * w;
      }
      cnorm = std::sqrt(cnorm);

      double ref_total = 0.0;
      for (const Tokens& ref : references[i]) {
        double dotp = 0.0, rnorm = 0.0;
        for (const auto& [gram, cnt] : ngram_counts(ref, n)) {
          const double w = static_cast<double>(cnt) * idf(gram);
          rnorm += w * w;
          auto it = cvec.find(gram);
          if (it != cvec.end()) dotp += it->second * w;
        }
        rnorm = std::sqrt(rnorm);
        if (cnorm > 0.0 && rnorm > 0.0) ref_total += dotp / (cnorm * rnorm);
      }
      order_total += 10.0 * ref_total / static_cast<double>(references[i].size());
    }
    corpus_total += order_total / static_cast<double>(videos);
  }
  return corpus_total / kMaxOrder;
}

double meteor_lite(const std::vector<Tokens>& candidates, const ReferenceSets& references) {
  check_corpus(candidates, references);

  // Aligns candidate tokens left to right against one reference: a token
  // matches if the reference still has an unused copy of it, preferring the
  // position right after the previous match so contiguous phrases stay in
  // one chunk.
  auto pair_score = [](const Tokens& cand, const Tokens& ref) {
    if (cand.empty() || ref.empty()) return 0.0;
    std::vector<bool> used(ref.size(), false);
    long prev_pos = -2;
    long matches = 0, chunks = 0;
    for (const std::string& tok : cand) {
      long pos = -1;
      const std::size_t follow = static_cast<std::size_t>(prev_pos + 1);
      if (prev_pos + 1 >= 0 && follow < ref.size() && !used[follow] && ref[follow] == tok) {
        pos = prev_pos + 1;
      } else {
        for (std::size_t j = 0; j < ref.size(); ++j)
          if (!used[j] && ref[j] == tok) {
            pos = static_cast<long>(j);
            break;
          }
      }
      if (pos < 0) {
        prev_pos = -2; // unmatched token breaks candidate adjacency
        continue;
      }
      used[static_cast<std::size_t>(pos)] = true;
      ++matches;
      if (pos != prev_pos + 1) ++chunks;
      prev_pos = pos;
    }
    if (matches == 0) return 0.0;
    const double p = static_cast<double>(matches) / static_cast<double>(cand.size());
    const double r = static_cast<double>(matches) / static_cast<double>(ref.size());
    const double f = p * r / (0.9 * p + 0.1 * r);
    const double frag = static_cast<double>(chunks) / static_cast<double>(matches);
    return f * (1.0 - 0.5 * frag * frag * frag);
  };

  double total = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    double best = 0.0;
    for (const Tokens& ref : references[i])
      best = std::max(best, pair_score(candidates[i], ref));
    total += best;
  }
  return total / static_cast<double>(candidates.size());
}

MetricReport evaluate_corpus(const std::vector<Tokens>& candidates,
                             const ReferenceSets& references) {
  MetricReport rep;
  rep.b4 = 100.0 * bleu4(candidates, references);
  rep.c = cider(candidates, references);
  rep.m = 100.0 * meteor_lite(candidates, references);
  rep.r = 100.0 * rouge_l(candidates, references);
  rep.captions = candidates.size();
  return rep;
}

} // namespace vnsgru
