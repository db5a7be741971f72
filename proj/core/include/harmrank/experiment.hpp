#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "harmrank/domain.hpp"
#include "harmrank/judges.hpp"
#include "harmrank/llmclient.hpp"
#include "harmrank/report.hpp"
#include "harmrank/reranker.hpp"

namespace harmrank::harness {

enum class RankerKind { Original, Oracle, OracleScore, Noisy, Moderation, Perspective, Llm };

enum class StrategyKind { ZeroShot, ZeroShotPE, FewShotIcl };

std::string_view strategy_kind_name(StrategyKind kind);
StrategyKind parse_strategy_kind(std::string_view text);  // throws ConfigError

struct RankerSpec {
  RankerKind kind = RankerKind::Original;
  double accuracy = 1.0;                     // Noisy
  StrategyKind strategy = StrategyKind::ZeroShot;  // Llm

  // "original", "oracle", "oracle-score", "noisy:<accuracy>", "moderation",
  // "perspective", "llm" (uses `default_strategy`) or "llm:<strategy>" with
  // strategy one of zero-shot, zero-shot-pe, few-shot.
  static RankerSpec parse(std::string_view text,
                          StrategyKind default_strategy = StrategyKind::ZeroShot);
  std::string id() const;
  bool needs_chat() const { return kind == RankerKind::Llm; }
};

struct ExperimentConfig {
  std::filesystem::path dataset;
  std::size_t n = 20;
  std::size_t m = 100;
  std::vector<double> harm_fractions{0.1, 0.2, 0.3, 0.4, 0.5};
  std::uint64_t seed = 0;
  std::vector<RankerSpec> rankers;
  std::set<int> k_tp{5, 10};
  std::set<int> k_pp{1, 2, 3};

  // Few-shot exemplars, drawn from the dataset's harmful items.
  std::size_t exemplars = 20;
  std::optional<std::filesystem::path> embeddings;

  std::string model = "gpt-3.5-turbo";
  judges::LlmJudgeOptions judge;  // model is overwritten from `model`
  rerank::RerankPolicy policy;

  std::string chat_base_url = llm::kDefaultChatBaseUrl;
  std::string moderation_base_url = llm::kDefaultModerationBaseUrl;
  std::string moderation_model = llm::kDefaultModerationModel;
  std::string perspective_base_url = llm::kDefaultPerspectiveBaseUrl;
  std::optional<std::filesystem::path> cache_dir;
  double requests_per_minute = 0.0;
  std::size_t client_max_in_flight = 8;
  llm::RetryPolicy retry;

  // Checks n, m, fractions and k sets; returns non-fatal warnings.
  std::vector<std::string> validate() const;
};

struct Credentials {
  std::string llm_api_key;
  std::string moderation_api_key;
  std::string perspective_api_key;

  // LLM_API_KEY, MODERATION_API_KEY, PERSPECTIVE_API_KEY.
  static Credentials from_env();
};

// Everything an experiment reaches outside the process. A null transport means
// real HTTP.
struct ExperimentEnv {
  Credentials credentials = Credentials::from_env();
  std::shared_ptr<llm::Transport> transport;
  llm::Sleeper sleeper;
};

struct RankOutcome {
  RankedSequence ranked;
  rerank::RerankTelemetry telemetry;
};

// A constructed ranker configuration, ready to apply to sequences.
class Ranker {
 public:
  Ranker(std::string id, std::function<RankOutcome(const ContentSequence&)> run)
      : id_(std::move(id)), run_(std::move(run)) {}
  const std::string& id() const { return id_; }
  RankOutcome operator()(const ContentSequence& seq) const { return run_(seq); }

 private:
  std::string id_;
  std::function<RankOutcome(const ContentSequence&)> run_;
};

// Rankers plus the shared service client they talk through.
struct RankerSet {
  std::vector<Ranker> rankers;
  std::shared_ptr<llm::ServiceClient> service;  // null when no ranker needs the network
};

// Builds every configured ranker up front. Throws ConfigError for missing
// credentials, missing embeddings for few-shot, or unusable settings.
RankerSet build_rankers(const ExperimentConfig& config, std::span<const ContentItem> dataset,
                        const ExperimentEnv& env);

// For each harm fraction: sample once, run every ranker on the same
// sequences, score each output, aggregate.
MetricsReport run_experiment(const ExperimentConfig& config, std::span<const ContentItem> dataset,
                             const ExperimentEnv& env = {});
MetricsReport run_experiment(const ExperimentConfig& config, const ExperimentEnv& env = {});

}  // namespace harmrank::harness
