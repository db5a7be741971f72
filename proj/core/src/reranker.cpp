#include "harmrank/reranker.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <numeric>
#include <optional>
#include <thread>

namespace harmrank::rerank {

RerankTelemetry& RerankTelemetry::operator+=(const RerankTelemetry& other) {
  queries += other.queries;
  parse_retries += other.parse_retries;
  parse_failures += other.parse_failures;
  judge_failures += other.judge_failures;
  truncated_queries += other.truncated_queries;
  cache_hits += other.cache_hits;
  network_retries += other.network_retries;
  transcripts.insert(transcripts.end(), other.transcripts.begin(), other.transcripts.end());
  return *this;
}

std::vector<PairQuery> enumerate_queries(std::size_t n) {
  std::vector<PairQuery> out;
  if (n < 2) return out;
  out.reserve(n * (n - 1));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      out.push_back({i, j});
      out.push_back({j, i});
    }
  }
  return out;
}

namespace {

struct Slot {
  bool done = false;
  bool failed = false;  // hard judge failure
  std::string failure;
  judges::JudgeOutcome outcome;
};

RankedSequence sort_by_scores(const ContentSequence& seq, const std::vector<double>& scores,
                              std::string provenance) {
  std::vector<std::size_t> order(seq.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  RankedSequence out;
  out.provenance = std::move(provenance);
  out.items.reserve(seq.size());
  out.scores.reserve(seq.size());
  for (auto i : order) {
    out.items.push_back(seq[i]);
    out.scores.push_back(scores[i]);
  }
  return out;
}

}  // namespace

RerankResult rerank_pairwise(const ContentSequence& seq, judges::PairwiseJudge& judge,
                             const RerankPolicy& policy) {
  if (policy.max_in_flight < 1) throw ParameterError("max_in_flight must be at least 1");

  ScoreTable table(seq);
  const std::string provenance = "pairwise:" + judge.name();
  if (seq.size() < 2) {
    return {sort_by_scores(seq, std::vector<double>(seq.size(), 0.0), provenance), table, {}};
  }

  const auto queries = enumerate_queries(seq.size());
  std::vector<Slot> slots(queries.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr unexpected;
  std::mutex unexpected_mutex;

  auto worker = [&] {
    for (;;) {
      if (stop.load()) return;
      const std::size_t q = next.fetch_add(1);
      if (q >= queries.size()) return;
      Slot& slot = slots[q];
      try {
        slot.outcome = judge.judge(seq[queries[q].first], seq[queries[q].second]);
      } catch (const JudgeError& e) {
        slot.failed = true;
        slot.failure = e.what();
        if (policy.judge_failure_as == JudgeFailure::Abort) stop.store(true);
      } catch (...) {
        std::lock_guard lock(unexpected_mutex);
        if (!unexpected) unexpected = std::current_exception();
        stop.store(true);
        return;
      }
      slot.done = true;
    }
  };

  const std::size_t workers =
      judge.concurrent_safe() ? std::min(policy.max_in_flight, queries.size()) : 1;
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (unexpected) std::rethrow_exception(unexpected);

  // Accumulate in query order so results do not depend on scheduling.
  RerankTelemetry telemetry;
  std::optional<std::string> abort_reason;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const Slot& slot = slots[q];
    if (!slot.done) continue;
    ++telemetry.queries;
    if (slot.failed) {
      ++telemetry.judge_failures;
      if (policy.judge_failure_as == JudgeFailure::Abort && !abort_reason) {
        abort_reason = slot.failure;
      }
      continue;
    }
    const auto& out = slot.outcome;
    telemetry.parse_retries += static_cast<std::uint64_t>(out.parse_retries);
    if (out.parse_exhausted) ++telemetry.parse_failures;
    if (out.truncated) ++telemetry.truncated_queries;
    telemetry.cache_hits += static_cast<std::uint64_t>(out.cache_hits);
    telemetry.network_retries += static_cast<std::uint64_t>(out.network_retries);
    const auto& first = seq[queries[q].first];
    const auto& second = seq[queries[q].second];
    if (policy.keep_transcripts && !out.transcript.empty()) {
      telemetry.transcripts.push_back(first.id() + "|" + second.id() + "|" + out.transcript);
    }
    if (out.verdict == Verdict::First) table.increment(first.id());
    if (out.verdict == Verdict::Second) table.increment(second.id());
  }
  if (abort_reason) {
    throw RerankError("judge failed, aborting rerank: " + *abort_reason, std::move(telemetry));
  }

  std::vector<double> scores(seq.size());
  for (std::size_t i = 0; i < seq.size(); ++i) scores[i] = table.at(seq[i].id());
  return {sort_by_scores(seq, scores, provenance), std::move(table), std::move(telemetry)};
}

RankedSequence rank_by_score(const ContentSequence& seq, judges::HarmScorer& scorer) {
  std::vector<double> scores(seq.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const auto& item = seq[i];
    double s;
    try {
      s = scorer.score(item);
    } catch (const std::exception& e) {
      throw RankError(item.id(), "scorer failed on item '" + item.id() + "': " + e.what());
    }
    if (!(s >= 0.0 && s <= 1.0)) {
      throw RankError(item.id(), "scorer returned " + std::to_string(s) + " for item '" +
                                     item.id() + "', outside [0, 1]");
    }
    scores[i] = s;
  }
  return sort_by_scores(seq, scores, "score:" + scorer.name());
}

RankedSequence identity_rank(const ContentSequence& seq) {
  RankedSequence out;
  out.provenance = "original";
  out.items = seq.items();
  out.scores.assign(seq.size(), 0.0);
  return out;
}

}  // namespace harmrank::rerank
