// SPDX-License-Identifier: Apache-2.0

#include "vnsgru/selection.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "vnsgru/errors.hpp"

namespace vnsgru {

namespace {

// Ratio of a value to its running best. Positive bests use the plain ratio;
// a best at or below zero (possible with a negated-loss metric) switches to
// an affine score that is still 1 at the best and monotone in the value,
// where the ratio would flip sign or divide by zero.
double normalized(double value, double best) {
  if (best > 0.0) return value / best;
  return value - best + 1.0;
}

} // namespace

double overall_score(const std::vector<double>& values,
                     const std::vector<double>& bests,
                     const std::vector<double>& weights) {
  if (values.size() != bests.size() || values.size() != weights.size())
    throw ConfigError("overall_score: values, bests and weights must have equal length");
  double o = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(bests[i] > 0.0))
      throw DomainError("overall_score: best for metric " + std::to_string(i) +
                        " is not positive");
    o += weights[i] * values[i] / bests[i];
  }
  return o;
}

SelectionState::SelectionState(std::vector<std::string> metrics,
                               std::vector<double> weights)
    : metrics_(std::move(metrics)), weights_(std::move(weights)) {
  if (metrics_.empty()) throw ConfigError("selection: at least one metric required");
  if (metrics_.size() != weights_.size())
    throw ConfigError("selection: " + std::to_string(metrics_.size()) + " metrics vs " +
                      std::to_string(weights_.size()) + " weights");
  double total = 0.0;
  for (double w : weights_) {
    if (w < 0.0) throw ConfigError("selection: negative metric weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw ConfigError("selection: metric weights sum to " + std::to_string(total) +
                      ", expected 1");
  bests_.assign(metrics_.size(), -std::numeric_limits<double>::infinity());
}

void SelectionState::seed_bests(const std::vector<double>& bests) {
  if (bests.size() != metrics_.size())
    throw ConfigError("selection: seeded bests length mismatch");
  for (double b : bests)
    if (!std::isfinite(b)) throw ConfigError("selection: seeded best not finite");
  bests_ = bests;
  bests_set_ = true;
}

double SelectionState::score(const std::vector<double>& values) const {
  double o = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i)
    o += weights_[i] * normalized(values[i], bests_[i]);
  return o;
}

SelectionState::Decision SelectionState::observe(std::size_t epoch,
                                                 const std::vector<double>& values) {
  if (values.size() != metrics_.size())
    throw ConfigError("selection: observed " + std::to_string(values.size()) +
                      " values for " + std::to_string(metrics_.size()) + " metrics");
  for (double v : values)
    if (!std::isfinite(v))
      return Decision{false, true, std::numeric_limits<double>::quiet_NaN()};

  for (std::size_t i = 0; i < values.size(); ++i)
    bests_[i] = std::max(bests_[i], values[i]);
  bests_set_ = true;

  const double o = score(values);
  const double bar = has_champion_ ? score(champion_values_)
                                   : -std::numeric_limits<double>::infinity();
  Decision d;
  d.overall = o;
  if (o > bar) {
    d.save = true;
    has_champion_ = true;
    champion_epoch_ = epoch;
    champion_values_ = values;
  }
  history_.push_back(HistoryRow{epoch, values, o, d.save});
  return d;
}

std::size_t SelectionState::champion_epoch() const {
  if (!has_champion_) throw DomainError("selection: no champion yet");
  return champion_epoch_;
}

const std::vector<double>& SelectionState::champion_values() const {
  if (!has_champion_) throw DomainError("selection: no champion yet");
  return champion_values_;
}

double SelectionState::best_overall() const {
  if (!has_champion_) throw DomainError("selection: no champion yet");
  return score(champion_values_);
}

std::string SelectionState::history_tsv() const {
  std::ostringstream out;
  out.precision(6);
  out << std::fixed;
  out << "epoch";
  for (const std::string& m : metrics_) out << '\t' << m;
  out << "\toverall\tdecision\n";
  for (const HistoryRow& row : history_) {
    out << row.epoch;
    for (double v : row.values) out << '\t' << v;
    out << '\t' << row.overall << '\t' << (row.saved ? "save" : "skip") << '\n';
  }
  return out.str();
}

} // namespace vnsgru
