#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "harmrank/metrics.hpp"
#include "harmrank/reranker.hpp"

namespace harmrank::harness {

struct SequenceRow {
  std::string config;
  int harm_pct = 0;
  std::size_t sequence_index = 0;
  std::size_t n = 0;
  std::vector<std::string> input_ids;
  std::vector<std::string> ranked_ids;
  metrics::MetricsRow metrics;
  rerank::RerankTelemetry telemetry;
};

// Mean over the sequences whose metric is defined; `defined` counts them.
struct MeanValue {
  double mean = 0.0;
  std::size_t defined = 0;
  std::string render(int precision = 6) const;  // "-" when defined == 0
};

struct AggregateRow {
  std::string config;
  int harm_pct = 0;
  std::size_t n_sequences = 0;
  std::map<int, MeanValue> top_pref;
  std::map<int, MeanValue> per_pref;
  MeanValue ewn;
  std::size_t ewn_degenerate = 0;
};

struct ClientSummary {
  std::uint64_t network_calls = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t retries = 0;
};

struct MetricsReport {
  std::size_t n = 0;
  std::size_t m = 0;
  std::uint64_t seed = 0;
  std::set<int> k_tp;
  std::set<int> k_pp;
  std::vector<std::string> configs;  // in run order
  std::vector<SequenceRow> rows;
  std::vector<AggregateRow> aggregates;
  std::map<std::string, rerank::RerankTelemetry> telemetry;  // per config
  ClientSummary client;
  std::vector<std::string> warnings;
};

// Means per (config, harm percentage) in first-appearance order. Undefined
// metric entries are skipped and counted. Throws AggregationError when rows
// disagree on n.
std::vector<AggregateRow> aggregate(const std::vector<SequenceRow>& rows);

struct ReportFormats {
  bool json = true;
  bool csv = true;
  bool plot = false;
};

struct ReportPaths {
  std::filesystem::path json;
  std::filesystem::path csv;
  std::filesystem::path plot;
};

// Writes report.json (full detail), summary.csv (one row per aggregate) and
// optionally plot_data.csv (config, harm_pct, metric, value) into out_dir.
// Throws StorageError when the directory or a file cannot be written.
ReportPaths emit_report(const MetricsReport& report, const std::filesystem::path& out_dir,
                        const ReportFormats& formats = {});

std::string summary_csv(const MetricsReport& report);
std::string plot_csv(const MetricsReport& report);
std::string report_json(const MetricsReport& report);
MetricsReport parse_report_json(const std::string& text);
MetricsReport read_report_json(const std::filesystem::path& path);

}  // namespace harmrank::harness
