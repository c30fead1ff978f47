// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace vnsgru {

/// Weighted sum of per-metric ratios against running bests:
/// o = sum_i w_i * v_i / b_i. Equals 1 when every value ties its best.
/// Requires every b_i > 0 (DomainError otherwise).
double overall_score(const std::vector<double>& values,
                     const std::vector<double>& bests,
                     const std::vector<double>& weights);

/// Online champion tracking across epochs. Each observation first folds the
/// new values into the per-metric running bests, then scores the epoch
/// against those bests, and saves a new champion exactly when the epoch
/// scores strictly higher than the current champion does under the same
/// bests. Rescoring the champion (rather than keeping its stale score from
/// the epoch it was saved in) keeps the comparison meaningful after a best
/// moves: with a single metric the champion is always the argmax epoch, and
/// feeding a negated loss as the only metric selects the argmin-loss epoch.
///
/// Ties keep the earlier champion. Values at most equal to their best give
/// ratios at most 1, so a strictly dominated epoch can never win.
class SelectionState {
public:
  /// Metric names and weights; weights must be nonnegative and sum to 1
  /// within 1e-12 (ConfigError otherwise).
  SelectionState(std::vector<std::string> metrics, std::vector<double> weights);

  /// Optional warm start: seeds the running bests (e.g. from a previous
  /// run) before the first observation. Off by default.
  void seed_bests(const std::vector<double>& bests);

  struct Decision {
    bool save = false;     // this epoch becomes the champion
    bool rejected = false; // non-finite score, state untouched
    double overall = 0.0;  // epoch score under the updated bests
  };

  /// Feeds one epoch's metric values (same order as the metric names).
  Decision observe(std::size_t epoch, const std::vector<double>& values);

  const std::vector<std::string>& metrics() const { return metrics_; }
  const std::vector<double>& bests() const { return bests_; }
  bool has_champion() const { return has_champion_; }
  std::size_t champion_epoch() const;
  const std::vector<double>& champion_values() const;
  /// Champion score under the current bests (the bar a new epoch must beat).
  double best_overall() const;

  struct HistoryRow {
    std::size_t epoch = 0;
    std::vector<double> values;
    double overall = 0.0;
    bool saved = false;
  };
  const std::vector<HistoryRow>& history() const { return history_; }

  /// Tab-separated history dump: header line, one row per observation.
  std::string history_tsv() const;

private:
  double score(const std::vector<double>& values) const;

  std::vector<std::string> metrics_;
  std::vector<double> weights_;
  std::vector<double> bests_;
  bool bests_set_ = false;
  bool has_champion_ = false;
  std::size_t champion_epoch_ = 0;
  std::vector<double> champion_values_;
  std::vector<HistoryRow> history_;
};

} // namespace vnsgru
