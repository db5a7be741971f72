#include "harmrank/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "harmrank/errors.hpp"

namespace harmrank::harness {

using ordered_json = nlohmann::ordered_json;

std::string MeanValue::render(int precision) const {
  if (defined == 0) return "-";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, mean);
  return buf;
}

namespace {

// Neumaier-compensated sum, so a mean of identical values is that value.
struct Accumulator {
  double sum = 0.0;
  double compensation = 0.0;
  std::size_t defined = 0;
  void add(const metrics::MetricValue& v) {
    if (!v.defined) return;
    const double t = sum + v.value;
    if (std::fabs(sum) >= std::fabs(v.value)) {
      compensation += (sum - t) + v.value;
    } else {
      compensation += (v.value - t) + sum;
    }
    sum = t;
    ++defined;
  }
  MeanValue mean() const {
    if (defined == 0) return {};
    return {(sum + compensation) / static_cast<double>(defined), defined};
  }
};

struct Group {
  AggregateRow row;
  std::map<int, Accumulator> tp;
  std::map<int, Accumulator> pp;
  Accumulator ewn;
};

ordered_json metric_to_json(const metrics::MetricValue& v) {
  if (!v.defined) return nullptr;
  ordered_json j;
  j["value"] = v.value;
  if (v.degenerate) j["degenerate"] = true;
  return j;
}

metrics::MetricValue metric_from_json(const nlohmann::json& j) {
  if (j.is_null()) return metrics::MetricValue::undefined();
  metrics::MetricValue v = metrics::MetricValue::of(j.at("value").get<double>());
  v.degenerate = j.value("degenerate", false);
  return v;
}

ordered_json mean_to_json(const MeanValue& v) {
  ordered_json j;
  j["mean"] = v.defined == 0 ? ordered_json(nullptr) : ordered_json(v.mean);
  j["defined"] = v.defined;
  return j;
}

MeanValue mean_from_json(const nlohmann::json& j) {
  MeanValue v;
  v.defined = j.at("defined").get<std::size_t>();
  if (!j.at("mean").is_null()) v.mean = j.at("mean").get<double>();
  return v;
}

template <typename V, typename F>
ordered_json keyed_to_json(const std::map<int, V>& values, F&& convert) {
  ordered_json j = ordered_json::object();
  for (const auto& [k, v] : values) j[std::to_string(k)] = convert(v);
  return j;
}

template <typename V, typename F>
std::map<int, V> keyed_from_json(const nlohmann::json& j, F&& convert) {
  std::map<int, V> out;
  for (const auto& [k, v] : j.items()) out.emplace(std::stoi(k), convert(v));
  return out;
}

ordered_json telemetry_to_json(const rerank::RerankTelemetry& t) {
  ordered_json j;
  j["queries"] = t.queries;
  j["parse_retries"] = t.parse_retries;
  j["parse_failures"] = t.parse_failures;
  j["judge_failures"] = t.judge_failures;
  j["truncated_queries"] = t.truncated_queries;
  j["cache_hits"] = t.cache_hits;
  j["network_retries"] = t.network_retries;
  if (!t.transcripts.empty()) j["transcripts"] = t.transcripts;
  return j;
}

rerank::RerankTelemetry telemetry_from_json(const nlohmann::json& j) {
  rerank::RerankTelemetry t;
  t.queries = j.value("queries", std::uint64_t{0});
  t.parse_retries = j.value("parse_retries", std::uint64_t{0});
  t.parse_failures = j.value("parse_failures", std::uint64_t{0});
  t.judge_failures = j.value("judge_failures", std::uint64_t{0});
  t.truncated_queries = j.value("truncated_queries", std::uint64_t{0});
  t.cache_hits = j.value("cache_hits", std::uint64_t{0});
  t.network_retries = j.value("network_retries", std::uint64_t{0});
  if (j.contains("transcripts")) t.transcripts = j.at("transcripts").get<std::vector<std::string>>();
  return t;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StorageError("cannot write " + path.string());
  out << text;
  if (!out) throw StorageError("short write to " + path.string());
}

}  // namespace

std::vector<AggregateRow> aggregate(const std::vector<SequenceRow>& rows) {
  std::vector<Group> groups;
  std::map<std::pair<std::string, int>, std::size_t> index;
  for (const auto& row : rows) {
    if (row.n != rows.front().n) {
      throw AggregationError("rows mix sequence lengths " + std::to_string(rows.front().n) +
                             " and " + std::to_string(row.n));
    }
    const auto key = std::make_pair(row.config, row.harm_pct);
    auto [it, inserted] = index.emplace(key, groups.size());
    if (inserted) {
      Group g;
      g.row.config = row.config;
      g.row.harm_pct = row.harm_pct;
      groups.push_back(std::move(g));
    }
    Group& g = groups[it->second];
    ++g.row.n_sequences;
    for (const auto& [k, v] : row.metrics.top_pref) g.tp[k].add(v);
    for (const auto& [k, v] : row.metrics.per_pref) g.pp[k].add(v);
    g.ewn.add(row.metrics.ewn);
    if (row.metrics.ewn.degenerate) ++g.row.ewn_degenerate;
  }

  std::vector<AggregateRow> out;
  out.reserve(groups.size());
  for (auto& g : groups) {
    for (const auto& [k, acc] : g.tp) g.row.top_pref[k] = acc.mean();
    for (const auto& [k, acc] : g.pp) g.row.per_pref[k] = acc.mean();
    g.row.ewn = g.ewn.mean();
    out.push_back(std::move(g.row));
  }
  return out;
}

std::string summary_csv(const MetricsReport& report) {
  std::ostringstream out;
  out << "config,harm_pct";
  for (int k : report.k_tp) out << ",tp" << k;
  for (int k : report.k_pp) out << ",pp" << k;
  out << ",ewn,n_sequences\n";
  for (const auto& row : report.aggregates) {
    out << row.config << ',' << row.harm_pct;
    for (int k : report.k_tp) {
      auto it = row.top_pref.find(k);
      out << ',' << (it == row.top_pref.end() ? MeanValue{} : it->second).render();
    }
    for (int k : report.k_pp) {
      auto it = row.per_pref.find(k);
      out << ',' << (it == row.per_pref.end() ? MeanValue{} : it->second).render();
    }
    out << ',' << row.ewn.render() << ',' << row.n_sequences << '\n';
  }
  return out.str();
}

std::string plot_csv(const MetricsReport& report) {
  std::ostringstream out;
  out << "config,harm_pct,metric,value\n";
  for (const auto& row : report.aggregates) {
    auto emit = [&](const std::string& metric, const MeanValue& v) {
      out << row.config << ',' << row.harm_pct << ',' << metric << ',' << v.render() << '\n';
    };
    for (const auto& [k, v] : row.top_pref) emit("tp" + std::to_string(k), v);
    for (const auto& [k, v] : row.per_pref) emit("pp" + std::to_string(k), v);
    emit("ewn", row.ewn);
  }
  return out.str();
}

std::string report_json(const MetricsReport& report) {
  ordered_json j;
  j["n"] = report.n;
  j["m"] = report.m;
  j["seed"] = report.seed;
  j["k_tp"] = report.k_tp;
  j["k_pp"] = report.k_pp;
  j["configs"] = report.configs;

  auto& aggregates = j["aggregates"] = ordered_json::array();
  for (const auto& row : report.aggregates) {
    ordered_json a;
    a["config"] = row.config;
    a["harm_pct"] = row.harm_pct;
    a["n_sequences"] = row.n_sequences;
    a["top_pref"] = keyed_to_json(row.top_pref, mean_to_json);
    a["per_pref"] = keyed_to_json(row.per_pref, mean_to_json);
    a["ewn"] = mean_to_json(row.ewn);
    a["ewn_degenerate"] = row.ewn_degenerate;
    aggregates.push_back(std::move(a));
  }

  auto& rows = j["sequences"] = ordered_json::array();
  for (const auto& row : report.rows) {
    ordered_json r;
    r["config"] = row.config;
    r["harm_pct"] = row.harm_pct;
    r["sequence_index"] = row.sequence_index;
    r["n"] = row.n;
    r["input_ids"] = row.input_ids;
    r["ranked_ids"] = row.ranked_ids;
    r["top_pref"] = keyed_to_json(row.metrics.top_pref, metric_to_json);
    r["per_pref"] = keyed_to_json(row.metrics.per_pref, metric_to_json);
    r["ewn"] = metric_to_json(row.metrics.ewn);
    r["telemetry"] = telemetry_to_json(row.telemetry);
    rows.push_back(std::move(r));
  }

  auto& telemetry = j["telemetry"] = ordered_json::object();
  for (const auto& [config, t] : report.telemetry) telemetry[config] = telemetry_to_json(t);

  ordered_json client;
  client["network_calls"] = report.client.network_calls;
  client["cache_hits"] = report.client.cache_hits;
  client["retries"] = report.client.retries;
  const auto lookups = report.client.network_calls + report.client.cache_hits;
  client["cache_hit_rate"] =
      lookups == 0 ? 0.0 : static_cast<double>(report.client.cache_hits) / lookups;
  j["client"] = std::move(client);
  j["warnings"] = report.warnings;
  return j.dump(2) + "\n";
}

MetricsReport parse_report_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  MetricsReport report;
  report.n = j.at("n").get<std::size_t>();
  report.m = j.at("m").get<std::size_t>();
  report.seed = j.at("seed").get<std::uint64_t>();
  report.k_tp = j.at("k_tp").get<std::set<int>>();
  report.k_pp = j.at("k_pp").get<std::set<int>>();
  report.configs = j.at("configs").get<std::vector<std::string>>();

  for (const auto& a : j.at("aggregates")) {
    AggregateRow row;
    row.config = a.at("config").get<std::string>();
    row.harm_pct = a.at("harm_pct").get<int>();
    row.n_sequences = a.at("n_sequences").get<std::size_t>();
    row.top_pref = keyed_from_json<MeanValue>(a.at("top_pref"), mean_from_json);
    row.per_pref = keyed_from_json<MeanValue>(a.at("per_pref"), mean_from_json);
    row.ewn = mean_from_json(a.at("ewn"));
    row.ewn_degenerate = a.at("ewn_degenerate").get<std::size_t>();
    report.aggregates.push_back(std::move(row));
  }

  for (const auto& r : j.at("sequences")) {
    SequenceRow row;
    row.config = r.at("config").get<std::string>();
    row.harm_pct = r.at("harm_pct").get<int>();
    row.sequence_index = r.at("sequence_index").get<std::size_t>();
    row.n = r.at("n").get<std::size_t>();
    row.input_ids = r.at("input_ids").get<std::vector<std::string>>();
    row.ranked_ids = r.at("ranked_ids").get<std::vector<std::string>>();
    row.metrics.top_pref = keyed_from_json<metrics::MetricValue>(r.at("top_pref"), metric_from_json);
    row.metrics.per_pref = keyed_from_json<metrics::MetricValue>(r.at("per_pref"), metric_from_json);
    row.metrics.ewn = metric_from_json(r.at("ewn"));
    row.telemetry = telemetry_from_json(r.at("telemetry"));
    report.rows.push_back(std::move(row));
  }

  for (const auto& [config, t] : j.at("telemetry").items()) {
    report.telemetry[config] = telemetry_from_json(t);
  }
  const auto& client = j.at("client");
  report.client.network_calls = client.at("network_calls").get<std::uint64_t>();
  report.client.cache_hits = client.at("cache_hits").get<std::uint64_t>();
  report.client.retries = client.at("retries").get<std::uint64_t>();
  report.warnings = j.at("warnings").get<std::vector<std::string>>();
  return report;
}

MetricsReport read_report_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open report: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_report_json(buffer.str());
  } catch (const std::exception& e) {
    throw LoadError("malformed report " + path.string() + ": " + e.what());
  }
}

ReportPaths emit_report(const MetricsReport& report, const std::filesystem::path& out_dir,
                        const ReportFormats& formats) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) {
    throw StorageError("cannot create output directory " + out_dir.string());
  }
  ReportPaths paths;
  if (formats.json) {
    paths.json = out_dir / "report.json";
    write_text(paths.json, report_json(report));
  }
  if (formats.csv) {
    paths.csv = out_dir / "summary.csv";
    write_text(paths.csv, summary_csv(report));
  }
  if (formats.plot) {
    paths.plot = out_dir / "plot_data.csv";
    write_text(paths.plot, plot_csv(report));
  }
  return paths;
}

}  // namespace harmrank::harness
