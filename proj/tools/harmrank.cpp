// harmrank: command-line front end for pairwise harm re-ranking experiments.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "harmrank/cache.hpp"
#include "harmrank/dataset.hpp"
#include "harmrank/errors.hpp"
#include "harmrank/exemplars.hpp"
#include "harmrank/experiment.hpp"
#include "harmrank/metrics.hpp"
#include "harmrank/report.hpp"

namespace fs = std::filesystem;
using namespace harmrank;

namespace {

struct CommonOptions {
  std::vector<std::string> rankers;
  std::string strategy = "zero-shot";
  std::string model = "gpt-3.5-turbo";
  std::size_t exemplars = 20;
  std::string embeddings;
  std::string cache_dir;
  std::size_t max_in_flight = 4;
  double rpm = 0.0;
  std::uint64_t seed = 0;
  std::string llm_base_url = llm::kDefaultChatBaseUrl;
  std::string moderation_url = llm::kDefaultModerationBaseUrl;
  std::string perspective_url = llm::kDefaultPerspectiveBaseUrl;
  int parse_retries = 2;
  std::size_t max_text_chars = 2000;
  int max_attempts = 5;
  bool abort_on_judge_failure = false;
  bool transcripts = false;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool many_rankers) {
  if (many_rankers) {
    cmd->add_option("--ranker", o.rankers,
                    "original | oracle | oracle-score | noisy:<acc> | moderation | "
                    "perspective | llm[:<strategy>] (repeatable)")
        ->required();
  } else {
    o.rankers.resize(1);
    cmd->add_option("--ranker", o.rankers[0], "ranker to apply")->required();
  }
  cmd->add_option("--strategy", o.strategy, "prompt strategy for 'llm' rankers")
      ->check(CLI::IsMember({"zero-shot", "zero-shot-pe", "few-shot", "few-shot-icl"}))
      ->capture_default_str();
  cmd->add_option("--model", o.model, "chat model name")->capture_default_str();
  cmd->add_option("--exemplars", o.exemplars, "few-shot exemplar count N")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--embeddings", o.embeddings, "embeddings JSONL for few-shot selection");
  cmd->add_option("--cache-dir", o.cache_dir, "response cache directory");
  cmd->add_option("--max-in-flight", o.max_in_flight, "concurrent judgments / requests")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--rpm", o.rpm, "request rate limit per minute (0 = unlimited)")
      ->capture_default_str();
  cmd->add_option("--seed", o.seed, "master seed")->capture_default_str();
  cmd->add_option("--llm-base-url", o.llm_base_url, "chat endpoint base URL")
      ->capture_default_str();
  cmd->add_option("--moderation-url", o.moderation_url, "moderation endpoint base URL")
      ->capture_default_str();
  cmd->add_option("--perspective-url", o.perspective_url, "toxicity endpoint base URL")
      ->capture_default_str();
  cmd->add_option("--parse-retries", o.parse_retries, "re-asks after an unparseable reply")
      ->capture_default_str();
  cmd->add_option("--max-text-chars", o.max_text_chars, "per-item text budget in the prompt")
      ->capture_default_str();
  cmd->add_option("--max-attempts", o.max_attempts, "HTTP attempts per request")
      ->capture_default_str();
  cmd->add_flag("--abort-on-judge-failure", o.abort_on_judge_failure,
                "abort instead of counting a failed judgment as NONE");
  cmd->add_flag("--transcripts", o.transcripts, "keep raw LLM replies in the report");
}

harness::ExperimentConfig to_config(const CommonOptions& o) {
  harness::ExperimentConfig config;
  const auto default_strategy = harness::parse_strategy_kind(o.strategy);
  for (const auto& r : o.rankers) {
    config.rankers.push_back(harness::RankerSpec::parse(r, default_strategy));
  }
  config.seed = o.seed;
  config.model = o.model;
  config.exemplars = o.exemplars;
  if (!o.embeddings.empty()) config.embeddings = o.embeddings;
  if (!o.cache_dir.empty()) config.cache_dir = o.cache_dir;
  config.policy.max_in_flight = o.max_in_flight;
  config.policy.judge_failure_as =
      o.abort_on_judge_failure ? rerank::JudgeFailure::Abort : rerank::JudgeFailure::Neither;
  config.policy.keep_transcripts = o.transcripts;
  config.client_max_in_flight = o.max_in_flight;
  config.requests_per_minute = o.rpm;
  config.chat_base_url = o.llm_base_url;
  config.moderation_base_url = o.moderation_url;
  config.perspective_base_url = o.perspective_url;
  config.judge.retries_on_parse_failure = o.parse_retries;
  config.judge.max_text_chars = o.max_text_chars;
  config.retry.max_attempts = o.max_attempts;
  return config;
}

void print_telemetry(const std::string& id, const rerank::RerankTelemetry& t) {
  std::fprintf(stderr,
               "%s: %llu judgments, %llu parse retries, %llu parse failures, "
               "%llu judge failures, %llu cache hits\n",
               id.c_str(), static_cast<unsigned long long>(t.queries),
               static_cast<unsigned long long>(t.parse_retries),
               static_cast<unsigned long long>(t.parse_failures),
               static_cast<unsigned long long>(t.judge_failures),
               static_cast<unsigned long long>(t.cache_hits));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pairwise harm re-ranking and exposure metrics"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key = value file mirroring the command-line flags");

  // run
  CommonOptions run_opts;
  std::string run_dataset;
  std::size_t run_n = 20;
  std::size_t run_m = 100;
  std::vector<double> run_harm{0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<int> run_k_tp{5, 10};
  std::vector<int> run_k_pp{1, 2, 3};
  std::string run_out = "results";
  bool run_plot = false;
  auto* run = app.add_subcommand("run", "run a full experiment and write reports");
  run->add_option("--dataset", run_dataset, "labeled dataset JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--n", run_n, "sequence length")->capture_default_str();
  run->add_option("--m", run_m, "sequences per harm fraction")->capture_default_str();
  run->add_option("--harm", run_harm, "harm fractions in (0,1)")
      ->delimiter(',')
      ->capture_default_str();
  run->add_option("--k-tp", run_k_tp, "TP-k cutoffs")->delimiter(',')->capture_default_str();
  run->add_option("--k-pp", run_k_pp, "PP-k cutoffs")->delimiter(',')->capture_default_str();
  run->add_option("--out", run_out, "output directory")->capture_default_str();
  run->add_flag("--plot", run_plot, "also write plot_data.csv");
  add_common(run, run_opts, true);

  // rerank
  CommonOptions rr_opts;
  std::string rr_input;
  std::string rr_output;
  std::string rr_dataset;
  auto* rr = app.add_subcommand("rerank", "re-rank one sequence file");
  rr->add_option("--input", rr_input, "sequence JSONL (dataset schema, label optional)")
      ->required()
      ->check(CLI::ExistingFile);
  rr->add_option("--out", rr_output, "ranked JSONL output")->required();
  rr->add_option("--dataset", rr_dataset,
                 "harmful-item pool for few-shot exemplars (defaults to the input)");
  add_common(rr, rr_opts, false);

  // metrics
  std::string mt_input;
  std::vector<int> mt_k_tp{5, 10};
  std::vector<int> mt_k_pp{1, 2, 3};
  auto* mt = app.add_subcommand("metrics", "score an already-ranked labeled file");
  mt->add_option("--input", mt_input, "ranked, labeled JSONL in display order")
      ->required()
      ->check(CLI::ExistingFile);
  mt->add_option("--k-tp", mt_k_tp, "TP-k cutoffs")->delimiter(',')->capture_default_str();
  mt->add_option("--k-pp", mt_k_pp, "PP-k cutoffs")->delimiter(',')->capture_default_str();

  // select-exemplars
  std::string se_dataset;
  std::string se_embeddings;
  std::size_t se_count = 20;
  std::uint64_t se_seed = 0;
  std::string se_out;
  auto* se = app.add_subcommand("select-exemplars", "pick few-shot exemplars by k-means");
  se->add_option("--dataset", se_dataset, "labeled dataset JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  se->add_option("--embeddings", se_embeddings, "embeddings JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  se->add_option("--exemplars", se_count, "number of exemplars N")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  se->add_option("--seed", se_seed, "k-means seed")->capture_default_str();
  se->add_option("--out", se_out, "write selected items as JSONL (default: stdout)");

  // cache-gc
  std::string gc_dir;
  std::uint64_t gc_max_bytes = 0;
  auto* gc = app.add_subcommand("cache-gc", "evict least-recently-used cache entries");
  gc->add_option("--cache-dir", gc_dir, "response cache directory")->required();
  gc->add_option("--max-bytes", gc_max_bytes, "size limit after eviction")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto config = to_config(run_opts);
      config.dataset = run_dataset;
      config.n = run_n;
      config.m = run_m;
      config.harm_fractions = run_harm;
      config.k_tp = std::set<int>(run_k_tp.begin(), run_k_tp.end());
      config.k_pp = std::set<int>(run_k_pp.begin(), run_k_pp.end());
      const auto report = harness::run_experiment(config);
      for (const auto& w : report.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
      const auto paths = harness::emit_report(report, run_out, {true, true, run_plot});
      for (const auto& [id, t] : report.telemetry) print_telemetry(id, t);
      std::cout << harness::summary_csv(report);
      std::fprintf(stderr, "wrote %s and %s\n", paths.json.c_str(), paths.csv.c_str());
      return 0;
    }

    if (*rr) {
      auto config = to_config(rr_opts);
      const auto items = harness::load_dataset(rr_input, {.require_label = false});
      const auto pool = rr_dataset.empty() ? items : harness::load_dataset(rr_dataset);
      const ContentSequence seq(items);
      auto set = harness::build_rankers(config, pool, {});
      auto outcome = set.rankers.front()(seq);
      if (auto violation = validate_ranked(seq, outcome.ranked)) {
        throw Error("invalid ranking: " + *violation);
      }
      if (const auto parent = fs::path(rr_output).parent_path(); !parent.empty()) {
        fs::create_directories(parent);
      }
      harness::write_items_jsonl(rr_output, outcome.ranked.items, &outcome.ranked.scores);
      print_telemetry(set.rankers.front().id(), outcome.telemetry);
      if (set.service && set.service->cache()) set.service->cache()->flush();
      return 0;
    }

    if (*mt) {
      const auto items = harness::load_dataset(mt_input);
      const auto labels = labels_of(std::span<const ContentItem>(items));
      const auto row = metrics::compute_all(labels, std::set<int>(mt_k_tp.begin(), mt_k_tp.end()),
                                            std::set<int>(mt_k_pp.begin(), mt_k_pp.end()));
      std::cout << "metric,value\n";
      for (const auto& [k, v] : row.top_pref) std::cout << "tp" << k << ',' << v.render(6) << '\n';
      for (const auto& [k, v] : row.per_pref) std::cout << "pp" << k << ',' << v.render(6) << '\n';
      std::cout << "ewn," << row.ewn.render(6) << '\n';
      if (row.ewn.degenerate) std::fprintf(stderr, "note: single-class sequence, EWN is degenerate\n");
      return 0;
    }

    if (*se) {
      const auto items = harness::load_dataset(se_dataset);
      std::vector<ContentItem> harmful;
      for (const auto& item : items) {
        if (item.label() == HarmLabel::Harmful) harmful.push_back(item);
      }
      const auto embeddings = prompts::load_embeddings(se_embeddings);
      const auto chosen = prompts::select_exemplars(harmful, embeddings, se_count, se_seed);
      if (se_out.empty()) {
        for (const auto& item : chosen) std::cout << item.id() << '\t' << item.text() << '\n';
      } else {
        if (const auto parent = fs::path(se_out).parent_path(); !parent.empty()) {
          fs::create_directories(parent);
        }
        harness::write_items_jsonl(se_out, chosen);
      }
      return 0;
    }

    if (*gc) {
      if (!fs::is_directory(gc_dir)) throw StorageError("no cache directory at " + gc_dir);
      llm::ResponseCache cache(gc_dir);
      const auto reclaimed = cache.gc(gc_max_bytes);
      std::cout << "reclaimed " << reclaimed << " bytes; " << cache.size() << " entries ("
                << cache.total_bytes() << " bytes) remain\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "harmrank: %s\n", e.what());
    return 1;
  }
  return 0;
}
