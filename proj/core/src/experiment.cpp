#include "harmrank/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "harmrank/dataset.hpp"
#include "harmrank/errors.hpp"
#include "harmrank/exemplars.hpp"

namespace harmrank::harness {

namespace {

std::string env_or_empty(const char* name) {
  const char* value = std::getenv(name);
  return value ? std::string(value) : std::string();
}

int harm_percentage(double fraction) { return static_cast<int>(std::lround(fraction * 100.0)); }

std::string format_accuracy(double accuracy) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", accuracy);
  return buf;
}

prompts::PromptStrategy make_strategy(StrategyKind kind, const ExperimentConfig& config,
                                      std::span<const ContentItem> dataset) {
  switch (kind) {
    case StrategyKind::ZeroShot:
      return prompts::ZeroShot{};
    case StrategyKind::ZeroShotPE:
      return prompts::ZeroShotPE{};
    case StrategyKind::FewShotIcl:
      break;
  }
  if (!config.embeddings) {
    throw ConfigError("few-shot ranker needs an embeddings file (--embeddings)");
  }
  std::vector<ContentItem> harmful;
  for (const auto& item : dataset) {
    if (item.label() == HarmLabel::Harmful) harmful.push_back(item);
  }
  try {
    const auto embeddings = prompts::load_embeddings(*config.embeddings);
    const auto chosen = prompts::select_exemplars(harmful, embeddings, config.exemplars, config.seed);
    prompts::FewShotIcl strategy;
    for (const auto& item : chosen) strategy.exemplars.push_back(item.text());
    return strategy;
  } catch (const Error& e) {
    throw ConfigError(std::string("cannot select few-shot exemplars: ") + e.what());
  }
}

Ranker pairwise_ranker(std::string id, std::shared_ptr<judges::PairwiseJudge> judge,
                       rerank::RerankPolicy policy) {
  return Ranker(std::move(id), [judge, policy](const ContentSequence& seq) {
    auto result = rerank::rerank_pairwise(seq, *judge, policy);
    return RankOutcome{std::move(result.ranked), std::move(result.telemetry)};
  });
}

Ranker score_ranker(std::string id, std::shared_ptr<judges::HarmScorer> scorer) {
  return Ranker(std::move(id), [scorer](const ContentSequence& seq) {
    RankOutcome out{rerank::rank_by_score(seq, *scorer), {}};
    out.telemetry.queries = seq.size();
    return out;
  });
}

}  // namespace

std::string_view strategy_kind_name(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::ZeroShot:
      return "zero-shot";
    case StrategyKind::ZeroShotPE:
      return "zero-shot-pe";
    case StrategyKind::FewShotIcl:
      return "few-shot";
  }
  return "zero-shot";
}

StrategyKind parse_strategy_kind(std::string_view text) {
  if (text == "zero-shot") return StrategyKind::ZeroShot;
  if (text == "zero-shot-pe") return StrategyKind::ZeroShotPE;
  if (text == "few-shot" || text == "few-shot-icl") return StrategyKind::FewShotIcl;
  throw ConfigError("unknown prompt strategy '" + std::string(text) +
                    "' (expected zero-shot, zero-shot-pe or few-shot)");
}

RankerSpec RankerSpec::parse(std::string_view text, StrategyKind default_strategy) {
  RankerSpec spec;
  const auto colon = text.find(':');
  const auto head = text.substr(0, colon);
  const auto arg = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  const bool has_arg = colon != std::string_view::npos;

  auto no_arg = [&](RankerKind kind) {
    if (has_arg) throw ConfigError("ranker '" + std::string(head) + "' takes no argument");
    spec.kind = kind;
    return spec;
  };
  if (head == "original") return no_arg(RankerKind::Original);
  if (head == "oracle") return no_arg(RankerKind::Oracle);
  if (head == "oracle-score") return no_arg(RankerKind::OracleScore);
  if (head == "moderation") return no_arg(RankerKind::Moderation);
  if (head == "perspective") return no_arg(RankerKind::Perspective);
  if (head == "noisy") {
    spec.kind = RankerKind::Noisy;
    std::string value(arg);
    char* end = nullptr;
    spec.accuracy = std::strtod(value.c_str(), &end);
    if (value.empty() || end != value.c_str() + value.size() ||
        !(spec.accuracy >= 0.0 && spec.accuracy <= 1.0)) {
      throw ConfigError("noisy ranker needs an accuracy in [0, 1], e.g. noisy:0.8");
    }
    return spec;
  }
  if (head == "llm") {
    spec.kind = RankerKind::Llm;
    spec.strategy = has_arg ? parse_strategy_kind(arg) : default_strategy;
    return spec;
  }
  throw ConfigError("unknown ranker '" + std::string(text) + "'");
}

std::string RankerSpec::id() const {
  switch (kind) {
    case RankerKind::Original:
      return "original";
    case RankerKind::Oracle:
      return "oracle";
    case RankerKind::OracleScore:
      return "oracle-score";
    case RankerKind::Noisy:
      return "noisy:" + format_accuracy(accuracy);
    case RankerKind::Moderation:
      return "moderation";
    case RankerKind::Perspective:
      return "perspective";
    case RankerKind::Llm:
      return "llm:" + std::string(strategy_kind_name(strategy));
  }
  return "original";
}

std::vector<std::string> ExperimentConfig::validate() const {
  if (n < 2) throw ConfigError("sequence length n must be >= 2");
  if (m < 1) throw ConfigError("sequence count m must be >= 1");
  if (harm_fractions.empty()) throw ConfigError("at least one harm fraction is required");
  if (rankers.empty()) throw ConfigError("at least one ranker is required");
  for (int k : k_tp) {
    if (k < 1 || static_cast<std::size_t>(k) > n) {
      throw ConfigError("TP-k needs 1 <= k <= n, got k=" + std::to_string(k));
    }
  }
  for (int k : k_pp) {
    if (k < 1) throw ConfigError("PP-k needs k >= 1, got k=" + std::to_string(k));
  }
  std::vector<std::string> warnings;
  for (double f : harm_fractions) {
    if (!(f > 0.0 && f < 1.0)) throw ConfigError("harm fractions must lie in (0, 1)");
    const auto h = harmful_count(f, n);
    if (h < 1 || h > n - 1) {
      warnings.push_back("harm fraction " + format_accuracy(f) + " gives " + std::to_string(h) +
                         " harmful of " + std::to_string(n) +
                         " items; EWN is degenerate for every sequence");
    }
  }
  return warnings;
}

Credentials Credentials::from_env() {
  return {env_or_empty("LLM_API_KEY"), env_or_empty("MODERATION_API_KEY"),
          env_or_empty("PERSPECTIVE_API_KEY")};
}

RankerSet build_rankers(const ExperimentConfig& config, std::span<const ContentItem> dataset,
                        const ExperimentEnv& env) {
  RankerSet set;
  bool needs_network = false;
  for (const auto& spec : config.rankers) {
    switch (spec.kind) {
      case RankerKind::Llm:
        if (env.credentials.llm_api_key.empty()) {
          throw ConfigError("ranker " + spec.id() + " needs LLM_API_KEY");
        }
        needs_network = true;
        break;
      case RankerKind::Moderation:
        if (env.credentials.moderation_api_key.empty()) {
          throw ConfigError("moderation ranker needs MODERATION_API_KEY");
        }
        needs_network = true;
        break;
      case RankerKind::Perspective:
        if (env.credentials.perspective_api_key.empty()) {
          throw ConfigError("perspective ranker needs PERSPECTIVE_API_KEY");
        }
        needs_network = true;
        break;
      default:
        break;
    }
  }

  if (needs_network) {
    std::shared_ptr<llm::ResponseCache> cache;
    try {
      if (config.cache_dir) cache = std::make_shared<llm::ResponseCache>(*config.cache_dir);
    } catch (const StorageError& e) {
      throw ConfigError(e.what());
    }
    llm::ClientOptions options;
    options.retry = config.retry;
    options.requests_per_minute = config.requests_per_minute;
    options.max_in_flight = config.client_max_in_flight;
    options.jitter_seed = derive_seed(config.seed, 0x6A17);
    options.sleeper = env.sleeper;
    auto transport = env.transport ? env.transport : llm::make_http_transport();
    set.service = std::make_shared<llm::ServiceClient>(transport, cache, options);
  }

  for (const auto& spec : config.rankers) {
    const auto id = spec.id();
    switch (spec.kind) {
      case RankerKind::Original:
        set.rankers.emplace_back(id, [](const ContentSequence& seq) {
          return RankOutcome{rerank::identity_rank(seq), {}};
        });
        break;
      case RankerKind::Oracle:
        set.rankers.push_back(
            pairwise_ranker(id, std::make_shared<judges::OracleJudge>(), config.policy));
        break;
      case RankerKind::Noisy:
        set.rankers.push_back(pairwise_ranker(
            id, std::make_shared<judges::NoisyJudge>(spec.accuracy, config.seed), config.policy));
        break;
      case RankerKind::OracleScore:
        set.rankers.push_back(score_ranker(id, std::make_shared<judges::OracleScorer>()));
        break;
      case RankerKind::Moderation: {
        auto client = std::make_shared<llm::ModerationClient>(
            set.service, llm::Endpoint{config.moderation_base_url, env.credentials.moderation_api_key},
            config.moderation_model);
        set.rankers.push_back(score_ranker(id, std::make_shared<judges::ModerationScorer>(client)));
        break;
      }
      case RankerKind::Perspective: {
        auto client = std::make_shared<llm::PerspectiveClient>(
            set.service,
            llm::Endpoint{config.perspective_base_url, env.credentials.perspective_api_key});
        set.rankers.push_back(score_ranker(id, std::make_shared<judges::PerspectiveScorer>(client)));
        break;
      }
      case RankerKind::Llm: {
        auto client = std::make_shared<llm::ChatClient>(
            set.service, llm::Endpoint{config.chat_base_url, env.credentials.llm_api_key});
        auto options = config.judge;
        options.model = config.model;
        options.keep_transcripts = config.policy.keep_transcripts;
        auto judge = std::make_shared<judges::LlmJudge>(
            make_strategy(spec.strategy, config, dataset), client, options);
        set.rankers.push_back(pairwise_ranker(id, judge, config.policy));
        break;
      }
    }
  }
  return set;
}

MetricsReport run_experiment(const ExperimentConfig& config, std::span<const ContentItem> dataset,
                             const ExperimentEnv& env) {
  MetricsReport report;
  report.warnings = config.validate();
  report.n = config.n;
  report.m = config.m;
  report.seed = config.seed;
  report.k_tp = config.k_tp;
  report.k_pp = config.k_pp;

  const auto set = build_rankers(config, dataset, env);
  for (const auto& ranker : set.rankers) {
    for (const auto& existing : report.configs) {
      if (existing == ranker.id()) throw ConfigError("ranker listed twice: " + ranker.id());
    }
    report.configs.push_back(ranker.id());
  }

  for (std::size_t f = 0; f < config.harm_fractions.size(); ++f) {
    const double fraction = config.harm_fractions[f];
    const int pct = harm_percentage(fraction);
    const auto sequences =
        sample_sequences(dataset, config.n, config.m, fraction, derive_seed(config.seed, f));

    for (const auto& ranker : set.rankers) {
      for (std::size_t s = 0; s < sequences.size(); ++s) {
        const auto& seq = sequences[s];
        auto outcome = ranker(seq);
        if (auto violation = validate_ranked(seq, outcome.ranked)) {
          throw Error("ranker " + ranker.id() + " produced an invalid ranking: " + *violation);
        }
        SequenceRow row;
        row.config = ranker.id();
        row.harm_pct = pct;
        row.sequence_index = s;
        row.n = seq.size();
        row.input_ids = seq.ids();
        row.ranked_ids = outcome.ranked.ids();
        row.metrics = metrics::compute_all(labels_of(outcome.ranked.items), config.k_tp,
                                           config.k_pp);
        report.telemetry[ranker.id()] += outcome.telemetry;
        row.telemetry = std::move(outcome.telemetry);
        report.rows.push_back(std::move(row));
      }
    }
  }

  report.aggregates = aggregate(report.rows);
  if (set.service) {
    const auto stats = set.service->stats();
    report.client = {stats.network_calls, stats.cache_hits, stats.retries};
    if (set.service->cache()) set.service->cache()->flush();
  }
  return report;
}

MetricsReport run_experiment(const ExperimentConfig& config, const ExperimentEnv& env) {
  const auto dataset = load_dataset(config.dataset);
  return run_experiment(config, dataset, env);
}

}  // namespace harmrank::harness
