// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
// gating failure. Everything runs offline against oracle/noisy judges and mock
// transports; criterion 11 needs a live backend and is reported separately.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "harmrank/dataset.hpp"
#include "harmrank/errors.hpp"
#include "harmrank/exemplars.hpp"
#include "harmrank/experiment.hpp"
#include "harmrank/judges.hpp"
#include "harmrank/metrics.hpp"
#include "harmrank/reranker.hpp"
#include "test_support.hpp"

using namespace harmrank;
using namespace harmrank::harness;
using harmrank::testing::H;
using harmrank::testing::N;
using harmrank::testing::OracleChatTransport;
using harmrank::testing::TempDir;
namespace reference = harmrank::testing::reference;

namespace {

const std::filesystem::path kFixtures = HARMRANK_FIXTURE_DIR;
constexpr std::uint64_t kSeed = 20240611;

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Records the first failed expectation.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && outcome_.pass) {
      outcome_.pass = false;
      outcome_.detail = what;
    }
  }
  void note(const std::string& detail) {
    if (outcome_.pass) outcome_.detail = detail;
  }
  Outcome result() const { return outcome_; }

 private:
  Outcome outcome_;
};

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), format, a, b, c);
  return buf;
}

ExperimentEnv offline_env(std::shared_ptr<llm::Transport> transport = nullptr) {
  ExperimentEnv env;
  env.credentials = {"offline-key", "", ""};
  env.transport = std::move(transport);
  env.sleeper = [](std::chrono::milliseconds) {};
  return env;
}

const AggregateRow& find_aggregate(const MetricsReport& r, const std::string& config, int pct) {
  for (const auto& a : r.aggregates) {
    if (a.config == config && a.harm_pct == pct) return a;
  }
  throw Error("no aggregate for " + config);
}

std::vector<HarmLabel> random_labels(std::mt19937_64& rng, int n, int harmless) {
  std::vector<HarmLabel> l(n, H);
  std::fill(l.begin(), l.begin() + harmless, N);
  std::shuffle(l.begin(), l.end(), rng);
  return l;
}

// 1. Exhaustive agreement with the reference implementations.
Outcome metric_oracle_equivalence() {
  Check check;
  const auto start = std::chrono::steady_clock::now();
  std::size_t vectors = 0;
  for (int n = 1; n <= 12; ++n) {
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      std::vector<HarmLabel> l(n);
      for (int i = 0; i < n; ++i) l[i] = (mask >> i) & 1u ? H : N;
      ++vectors;
      for (int k = 1; k <= n; ++k) {
        check.expect(metrics::top_pref_k(l, k).value == reference::top_pref(l, k), "TP-k mismatch");
      }
      for (int k = 1; k <= 3; ++k) {
        const auto got = metrics::per_pref_k(l, k);
        const double want = reference::per_pref(l, k);
        check.expect(got.defined == (want >= 0.0), "PP-k definedness mismatch");
        check.expect(!got.defined || got.value == want, "PP-k mismatch");
      }
      check.expect(metrics::ewn(l).value == reference::ewn_by_enumeration(l), "EWN mismatch");
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  check.expect(secs < 10.0, fmt("took %.2f s", secs));
  check.note(std::to_string(vectors) + " label vectors, " + fmt("%.2f s", secs));
  return check.result();
}

// 2. Best ordering scores 1, worst scores 0.
Outcome ewn_endpoints() {
  Check check;
  std::mt19937_64 rng(kSeed);
  double worst_error = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 19);
    const int p = 1 + static_cast<int>(rng() % (n - 1));
    std::vector<HarmLabel> best(n, H);
    std::fill(best.begin(), best.begin() + p, N);
    std::vector<HarmLabel> worst(best.rbegin(), best.rend());
    const double b = metrics::ewn(best).value;
    const double w = metrics::ewn(worst).value;
    worst_error = std::max({worst_error, std::fabs(b - 1.0), std::fabs(w)});
  }
  check.expect(worst_error <= 1e-12, fmt("max deviation %.3g", worst_error));
  check.note("1000 multisets, max deviation " + fmt("%.3g", worst_error));
  return check.result();
}

// 3. Moving a harmless item ahead of an adjacent harmful one raises EWN.
Outcome ewn_monotonicity() {
  Check check;
  std::mt19937_64 rng(kSeed + 1);
  std::size_t swaps = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 19);
    const int p = 1 + static_cast<int>(rng() % (n - 1));
    const auto l = random_labels(rng, n, p);
    const double before = metrics::ewn(l).value;
    for (int i = 0; i + 1 < n; ++i) {
      if (l[i] != H || l[i + 1] != N) continue;
      auto swapped = l;
      std::swap(swapped[i], swapped[i + 1]);
      check.expect(metrics::ewn(swapped).value > before, "swap did not increase EWN");
      ++swaps;
    }
  }
  check.note("1000 sequences, " + std::to_string(swaps) + " swaps");
  return check.result();
}

ExperimentConfig suite_config(std::vector<std::string> rankers) {
  ExperimentConfig c;
  c.n = 20;
  c.m = 100;
  c.harm_fractions = {0.3};
  c.seed = kSeed;
  for (const auto& r : rankers) c.rankers.push_back(RankerSpec::parse(r));
  return c;
}

class CountingOracle : public judges::PairwiseJudge {
 public:
  judges::JudgeOutcome judge(const ContentItem& a, const ContentItem& b) override {
    ++calls;
    return inner_.judge(a, b);
  }
  std::string name() const override { return "counting-oracle"; }
  std::atomic<std::uint64_t> calls{0};

 private:
  judges::OracleJudge inner_;
};

bool oracle_values_exact(const AggregateRow& a) {
  return a.n_sequences == 100 && a.ewn.mean == 1.0 && a.top_pref.at(5).mean == 1.0 &&
         a.top_pref.at(10).mean == 1.0 && a.per_pref.at(1).mean == 0.75 &&
         a.per_pref.at(2).mean == 0.80 && a.per_pref.at(3).mean == 0.85 &&
         a.per_pref.at(1).defined == 100 && a.per_pref.at(3).defined == 100;
}

// 4. Oracle-judge pipeline values and invocation count.
Outcome perfect_judge_pipeline(const std::vector<ContentItem>& dataset) {
  Check check;
  const auto report = run_experiment(suite_config({"oracle"}), dataset, offline_env());
  const auto& a = find_aggregate(report, "oracle", 30);
  check.expect(oracle_values_exact(a),
               fmt("EWN %.17g PP2 %.17g PP3 %.17g", a.ewn.mean, a.per_pref.at(2).mean,
                   a.per_pref.at(3).mean));
  check.expect(report.telemetry.at("oracle").queries == 38000, "telemetry query count");

  // Independent count at the judge itself over the same sequences.
  const auto seqs = sample_sequences(dataset, 20, 100, 0.3, derive_seed(kSeed, 0));
  CountingOracle judge;
  for (const auto& s : seqs) rerank::rerank_pairwise(s, judge);
  check.expect(judge.calls == 100u * 380u, "judge saw " + std::to_string(judge.calls.load()));
  check.note("EWN=1 TP5=TP10=1 PP1=0.75 PP2=0.80 PP3=0.85; " +
             std::to_string(judge.calls.load()) + " judge invocations");
  return check.result();
}

// 5. EWN falls as the judge gets noisier; accuracy 1 equals the oracle.
Outcome noise_degradation(const std::vector<ContentItem>& dataset) {
  Check check;
  const auto report = run_experiment(
      suite_config({"oracle", "noisy:1", "noisy:0.8", "noisy:0.6"}), dataset, offline_env());
  const double e10 = find_aggregate(report, "noisy:1", 30).ewn.mean;
  const double e08 = find_aggregate(report, "noisy:0.8", 30).ewn.mean;
  const double e06 = find_aggregate(report, "noisy:0.6", 30).ewn.mean;
  check.expect(e10 >= e08 && e08 >= e06, fmt("EWN %.4f, %.4f, %.4f", e10, e08, e06));
  check.expect(oracle_values_exact(find_aggregate(report, "noisy:1", 30)),
               "accuracy 1.0 does not reproduce the oracle values");
  for (std::size_t s = 0; s < 100; ++s) {
    check.expect(report.rows[s].ranked_ids == report.rows[100 + s].ranked_ids,
                 "accuracy 1.0 ordering differs from the oracle on sequence " + std::to_string(s));
  }
  check.note(fmt("mean EWN at accuracy 1.0/0.8/0.6: %.6f / %.6f / %.6f", e10, e08, e06));
  return check.result();
}

// 6. Score-based ranking with the oracle scorer is optimal on every sequence.
Outcome baseline_parity(const std::vector<ContentItem>& dataset) {
  Check check;
  const auto report = run_experiment(suite_config({"oracle-score"}), dataset, offline_env());
  std::size_t optimal = 0;
  for (const auto& row : report.rows) {
    check.expect(row.metrics.ewn.value == 1.0,
                 "sequence " + std::to_string(row.sequence_index) + " below 1");
    optimal += row.metrics.ewn.value == 1.0;
  }
  check.expect(report.rows.size() == 100, "expected 100 sequences");
  check.note(std::to_string(optimal) + "/100 sequences at EWN 1.0");
  return check.result();
}

// 7. Parser grammar.
Outcome parser_conformance() {
  Check check;
  check.expect(judges::parse_response("Response=A") == Verdict::First, "Response=A");
  check.expect(judges::parse_response("response = b") == Verdict::Second, "response = b");
  check.expect(judges::parse_response("RESPONSE=NONE") == Verdict::Neither, "RESPONSE=NONE");
  const char* negatives[] = {"",           "Both seem fine.", "The more harmful one is B.",
                             "Response: A", "Respons=A",       "Response=",
                             "Response==A", "Response=C",      "Response=AB",
                             "Response = maybe"};
  int rejected = 0;
  for (const char* text : negatives) {
    try {
      judges::parse_response(text);
      check.expect(false, std::string("accepted \"") + text + "\"");
    } catch (const ParseError&) {
      ++rejected;
    }
  }
  check.note("3 positive cases, " + std::to_string(rejected) + "/10 negative cases rejected");
  return check.result();
}

// 8. Exemplar selection on three separated blobs.
Outcome exemplar_selection() {
  Check check;
  std::mt19937_64 rng(kSeed);
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  std::vector<ContentItem> items;
  prompts::EmbeddingSet embeddings;
  std::map<std::string, int> blob_of;
  for (int b = 0; b < 3; ++b) {
    for (int i = 0; i < 10; ++i) {
      prompts::Vector v{jitter(rng), jitter(rng), jitter(rng)};
      v[b] += 1.0;
      const auto id = "blob" + std::to_string(b) + "-" + std::to_string(i);
      items.emplace_back(id, "text " + id, H);
      embeddings.insert(id, v);
      blob_of[id] = b;
    }
  }
  const auto chosen = prompts::select_exemplars(items, embeddings, 3, kSeed);
  std::set<int> blobs;
  for (const auto& item : chosen) blobs.insert(blob_of.at(item.id()));
  check.expect(chosen.size() == 3 && blobs.size() == 3, "not one exemplar per blob");

  std::vector<prompts::Vector> points;
  for (const auto& item : items) points.push_back(embeddings.at(item.id()));
  const auto clusters = prompts::kmeans(points, 3, kSeed);
  for (std::size_t c = 0; c < 3 && c < chosen.size(); ++c) {
    std::string best_id;
    double best = INFINITY;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (clusters.assignments[i] != c) continue;
      const double d = prompts::squared_distance(points[i], clusters.centroids[c]);
      if (d < best || (d == best && items[i].id() < best_id)) {
        best = d;
        best_id = items[i].id();
      }
    }
    check.expect(chosen[c].id() == best_id, "cluster " + std::to_string(c) + " not argmin");
  }
  check.expect(prompts::select_exemplars(items, embeddings, 3, kSeed) == chosen,
               "selection not reproducible");
  check.note("selected " + chosen[0].id() + ", " + chosen[1].id() + ", " + chosen[2].id());
  return check.result();
}

// 9. Cold runs hit the network once per judgment; warm runs never do.
Outcome cache_replay() {
  Check check;
  const auto corpus = testing::synthetic_corpus(2000, 2000);
  TempDir dir;

  // Embeddings for the few-shot ranker's exemplar pool.
  const auto emb_path = dir.path() / "embeddings.jsonl";
  {
    std::ofstream out(emb_path);
    std::mt19937_64 rng(kSeed);
    std::normal_distribution<double> g;
    for (const auto& item : corpus) {
      if (item.label() != H) continue;
      out << R"({"id":")" << item.id() << R"(","vector":[)" << g(rng) << ',' << g(rng) << ','
          << g(rng) << ',' << g(rng) << "]}\n";
    }
  }

  ExperimentConfig c;
  c.n = 20;
  c.m = 5;
  c.harm_fractions = {0.3};
  c.seed = kSeed;
  c.exemplars = 8;
  c.embeddings = emb_path;
  c.cache_dir = dir.path() / "cache";
  c.policy.max_in_flight = 4;
  c.rankers = {RankerSpec::parse("llm:zero-shot"), RankerSpec::parse("llm:zero-shot-pe"),
               RankerSpec::parse("llm:few-shot")};
  const std::uint64_t rankers = c.rankers.size();

  // Precondition for an exact count: no ordered pair recurs across sequences.
  std::set<std::pair<std::string, std::string>> pairs;
  std::uint64_t ordered = 0;
  for (const auto& s : sample_sequences(corpus, c.n, c.m, 0.3, derive_seed(kSeed, 0))) {
    for (const auto& q : rerank::enumerate_queries(s.size())) {
      pairs.emplace(s[q.first].id(), s[q.second].id());
      ++ordered;
    }
  }
  check.expect(pairs.size() == ordered, "sampled sequences share an ordered pair");

  const std::uint64_t expected = c.n * (c.n - 1) * c.m * rankers;
  auto cold_transport = std::make_shared<OracleChatTransport>(corpus);
  const auto cold = run_experiment(c, corpus, offline_env(cold_transport));
  check.expect(cold_transport->calls() == expected,
               "cold run made " + std::to_string(cold_transport->calls()) + " calls, expected " +
                   std::to_string(expected));

  auto warm_transport = std::make_shared<OracleChatTransport>(corpus);
  const auto warm = run_experiment(c, corpus, offline_env(warm_transport));
  check.expect(warm_transport->calls() == 0,
               "warm run made " + std::to_string(warm_transport->calls()) + " calls");
  check.expect(warm.client.cache_hits == expected, "warm run cache hits");
  check.expect(summary_csv(warm) == summary_csv(cold), "warm report differs from cold");
  check.note("cold " + std::to_string(cold_transport->calls()) + " calls (" +
             std::to_string(rankers) + " LLM rankers), warm " +
             std::to_string(warm_transport->calls()));
  return check.result();
}

// 10. Identical config and seed give byte-identical CSV reports.
Outcome determinism(const std::vector<ContentItem>& dataset) {
  Check check;
  TempDir dir;
  auto run_once = [&](const std::string& name) {
    ExperimentConfig c;
    c.n = 20;
    c.m = 20;
    c.seed = kSeed;
    c.cache_dir = dir.path() / (name + "-cache");
    c.policy.max_in_flight = 4;
    for (const char* r : {"original", "oracle", "oracle-score", "noisy:0.8", "noisy:0.6",
                          "llm:zero-shot", "llm:zero-shot-pe"}) {
      c.rankers.push_back(RankerSpec::parse(r));
    }
    auto transport = std::make_shared<OracleChatTransport>(dataset);
    const auto report = run_experiment(c, dataset, offline_env(transport));
    const auto paths = emit_report(report, dir.path() / name, {true, true, true});
    std::ifstream summary(paths.csv, std::ios::binary);
    std::ifstream plot(paths.plot, std::ios::binary);
    std::stringstream out;
    out << summary.rdbuf() << plot.rdbuf();
    return out.str();
  };
  const auto first = run_once("first");
  const auto second = run_once("second");
  check.expect(!first.empty() && first == second, "CSV reports differ");
  check.note(std::to_string(first.size()) + " bytes of CSV identical across runs");
  return check.result();
}

// 11. Live reproduction against a real backend; informational only.
std::optional<Outcome> live_reproduction() {
  const char* key = std::getenv("LLM_API_KEY");
  const char* dataset = std::getenv("HARMRANK_LIVE_DATASET");
  const char* embeddings = std::getenv("HARMRANK_LIVE_EMBEDDINGS");
  if (!key || !*key || !dataset || !*dataset || !embeddings || !*embeddings) return std::nullopt;
  Check check;
  ExperimentConfig c;
  c.dataset = dataset;
  c.embeddings = embeddings;
  c.n = 20;
  c.m = 100;
  c.harm_fractions = {0.3};
  c.seed = kSeed;
  c.exemplars = 20;
  c.rankers = {RankerSpec::parse("llm:few-shot")};
  c.policy.max_in_flight = 8;
  if (const char* base = std::getenv("HARMRANK_LIVE_BASE_URL")) c.chat_base_url = base;
  if (const char* model = std::getenv("HARMRANK_LIVE_MODEL")) c.model = model;
  if (const char* cache = std::getenv("HARMRANK_LIVE_CACHE")) c.cache_dir = cache;
  const auto report = run_experiment(c);
  const double e = find_aggregate(report, "llm:few-shot", 30).ewn.mean;
  check.expect(std::fabs(e - 0.864) <= 0.07, fmt("mean EWN %.4f outside 0.864 +/- 0.07", e));
  check.note(fmt("mean EWN %.4f (target 0.864 +/- 0.07)", e));
  return check.result();
}

}  // namespace

int main() {
  const auto dataset = load_dataset(kFixtures / "dataset.jsonl");
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"metric oracle equivalence", metric_oracle_equivalence},
      {"EWN endpoints", ewn_endpoints},
      {"EWN monotonicity", ewn_monotonicity},
      {"perfect-judge pipeline", [&] { return perfect_judge_pipeline(dataset); }},
      {"noise degradation", [&] { return noise_degradation(dataset); }},
      {"baseline ranking parity", [&] { return baseline_parity(dataset); }},
      {"parser conformance", parser_conformance},
      {"exemplar selection", exemplar_selection},
      {"cache replay", cache_replay},
      {"determinism", [&] { return determinism(dataset); }},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome outcome;
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    if (!outcome.pass) ++failures;
    std::printf("%s  criterion %2zu  %-28s %s\n", outcome.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), outcome.detail.c_str());
  }

  try {
    if (auto live = live_reproduction()) {
      std::printf("%s  criterion 11  %-28s %s (non-gating)\n", live->pass ? "PASS" : "FAIL",
                  "live reproduction", live->detail.c_str());
    } else {
      std::printf("SKIP  criterion 11  %-28s set LLM_API_KEY, HARMRANK_LIVE_DATASET and "
                  "HARMRANK_LIVE_EMBEDDINGS to run (non-gating)\n",
                  "live reproduction");
    }
  } catch (const std::exception& e) {
    std::printf("FAIL  criterion 11  %-28s exception: %s (non-gating)\n", "live reproduction",
                e.what());
  }

  std::printf("%d of %zu gating criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
