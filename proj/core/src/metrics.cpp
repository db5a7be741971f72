#include "harmrank/metrics.hpp"

#include <cmath>
#include <cstdio>

#include "harmrank/errors.hpp"

namespace harmrank::metrics {

std::string MetricValue::render(int precision) const {
  if (!defined) return "-";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, value);
  return buf;
}

MetricValue top_pref_k(std::span<const HarmLabel> labels, int k) {
  if (k < 1 || static_cast<std::size_t>(k) > labels.size()) {
    throw ParameterError("TP-k requires 1 <= k <= n (k=" + std::to_string(k) +
                         ", n=" + std::to_string(labels.size()) + ")");
  }
  int harmless = 0;
  for (int i = 0; i < k; ++i) {
    if (labels[i] == HarmLabel::Harmless) ++harmless;
  }
  return MetricValue::of(static_cast<double>(harmless) / k);
}

MetricValue per_pref_k(std::span<const HarmLabel> labels, int k) {
  if (k < 1) {
    throw ParameterError("PP-k requires k >= 1 (k=" + std::to_string(k) + ")");
  }
  if (labels.empty()) throw ParameterError("PP-k requires a non-empty sequence");
  int seen = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == HarmLabel::Harmful && ++seen == k) {
      return MetricValue::of(static_cast<double>(i + 1) /
                             static_cast<double>(labels.size()));
    }
  }
  return MetricValue::undefined();
}

double sequence_score(std::span<const HarmLabel> labels) {
  double score = 0.0;
  double weight = 1.0;
  for (auto label : labels) {
    if (label == HarmLabel::Harmless) score += weight;
    weight *= 0.5;
  }
  return score;
}

double best_sequence_score(std::size_t harmless) {
  // Geometric series 1 + 1/2 + ... over the first p positions.
  return 2.0 * (1.0 - std::ldexp(1.0, -static_cast<int>(harmless)));
}

double worst_sequence_score(std::size_t n, std::size_t harmless) {
  const int ni = static_cast<int>(n);
  const int pi = static_cast<int>(harmless);
  return std::ldexp(1.0, pi - ni + 1) - std::ldexp(1.0, 1 - ni);
}

MetricValue ewn(std::span<const HarmLabel> labels) {
  if (labels.empty()) throw ParameterError("EWN requires a non-empty sequence");
  std::size_t harmless = 0;
  for (auto label : labels) {
    if (label == HarmLabel::Harmless) ++harmless;
  }
  if (harmless == 0 || harmless == labels.size()) {
    return {1.0, true, true};
  }
  const double s = sequence_score(labels);
  const double s_max = best_sequence_score(harmless);
  const double s_min = worst_sequence_score(labels.size(), harmless);
  return MetricValue::of((s - s_min) / (s_max - s_min));
}

MetricsRow compute_all(std::span<const HarmLabel> labels, const std::set<int>& k_tp,
                       const std::set<int>& k_pp) {
  MetricsRow row;
  for (int k : k_tp) row.top_pref.emplace(k, top_pref_k(labels, k));
  for (int k : k_pp) row.per_pref.emplace(k, per_pref_k(labels, k));
  row.ewn = ewn(labels);
  return row;
}

}  // namespace harmrank::metrics
