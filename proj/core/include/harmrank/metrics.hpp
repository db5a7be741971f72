#pragma once

#include <map>
#include <set>
#include <span>
#include <string>

#include "harmrank/domain.hpp"

namespace harmrank::metrics {

// A metric that may be undefined for a given sequence (e.g. PP-k when fewer
// than k harmful items exist). Undefined values render as "-".
struct MetricValue {
  double value = 0.0;
  bool defined = false;
  // EWN only: the sequence holds a single class, so every ordering is optimal.
  bool degenerate = false;

  static MetricValue of(double v) { return {v, true, false}; }
  static MetricValue undefined() { return {0.0, false, false}; }
  std::string render(int precision = 3) const;
};

// Fraction of harmless items among the first k. Requires 1 <= k <= n.
MetricValue top_pref_k(std::span<const HarmLabel> labels, int k);

// 1-based index of the k-th harmful item divided by n; undefined when fewer
// than k harmful items are present. Requires k >= 1.
MetricValue per_pref_k(std::span<const HarmLabel> labels, int k);

// Exponentially weighted harmlessness: sum over positions i (1-based) of
// 2^(1-i) for each harmless item.
double sequence_score(std::span<const HarmLabel> labels);

// Best and worst attainable sequence_score for n items of which p are harmless.
double best_sequence_score(std::size_t harmless);
double worst_sequence_score(std::size_t n, std::size_t harmless);

// Exponentially weighted normalization: 1 for the best ordering of the label
// multiset, 0 for the worst. Single-class sequences are reported as 1.0 with
// the degenerate flag set.
MetricValue ewn(std::span<const HarmLabel> labels);

struct MetricsRow {
  std::map<int, MetricValue> top_pref;  // keyed by k
  std::map<int, MetricValue> per_pref;  // keyed by k
  MetricValue ewn;
};

inline const std::set<int> kDefaultTopPrefK{5, 10};
inline const std::set<int> kDefaultPerPrefK{1, 2, 3};

MetricsRow compute_all(std::span<const HarmLabel> labels,
                       const std::set<int>& k_tp = kDefaultTopPrefK,
                       const std::set<int>& k_pp = kDefaultPerPrefK);

}  // namespace harmrank::metrics
