// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "vnsgru/text.hpp"

namespace vnsgru {

/// One reference set per candidate, aligned by index.
using ReferenceSets = std::vector<std::vector<Tokens>>;

/// Corpus BLEU-4: clipped n-gram precision up to n=4, geometric mean,
/// brevity penalty; zero precisions floored at 1e-9. Returns [0,1].
double bleu4(const std::vector<Tokens>& candidates, const ReferenceSets& references);

/// Mean over candidates of the best LCS F-measure against any reference
/// (beta = 1.2). Returns [0,1].
double rouge_l(const std::vector<Tokens>& candidates, const ReferenceSets& references);

/// tf-idf weighted n-gram cosine similarity for n=1..4, averaged over
/// references, scaled by 10, averaged over n and the corpus. Document
/// frequencies come from the reference sets, one document per video.
double cider(const std::vector<Tokens>& candidates, const ReferenceSets& references);

/// Exact-unigram-match harmonic score with a fragmentation penalty:
/// F = PR/(0.9P + 0.1R), penalty = 0.5 (chunks/matches)^3, best reference
/// taken per candidate. Returns [0,1].
double meteor_lite(const std::vector<Tokens>& candidates, const ReferenceSets& references);

struct MetricReport {
  double b4 = 0.0; // bleu4 × 100
  double c = 0.0;  // cider, 10-scaled
  double m = 0.0;  // meteor_lite × 100
  double r = 0.0;  // rouge_l × 100
  std::size_t captions = 0;
};

MetricReport evaluate_corpus(const std::vector<Tokens>& candidates,
                             const ReferenceSets& references);

} // namespace vnsgru
