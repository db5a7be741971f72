#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "harmrank/domain.hpp"
#include "harmrank/errors.hpp"
#include "harmrank/judges.hpp"

namespace harmrank::rerank {

// One presentation-ordered judgment: `first` is shown as Text A.
struct PairQuery {
  std::size_t first = 0;   // position in the input sequence
  std::size_t second = 0;
};

// All unordered pairs, each in both presentation orders: n * (n - 1) queries.
std::vector<PairQuery> enumerate_queries(std::size_t n);

enum class JudgeFailure { Neither, Abort };

struct RerankPolicy {
  std::size_t max_in_flight = 1;
  JudgeFailure judge_failure_as = JudgeFailure::Neither;
  bool keep_transcripts = false;
};

struct RerankTelemetry {
  std::uint64_t queries = 0;             // judgments attempted
  std::uint64_t parse_retries = 0;
  std::uint64_t parse_failures = 0;      // judgments forced to Neither after retries
  std::uint64_t judge_failures = 0;      // hard failures substituted per policy
  std::uint64_t truncated_queries = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t network_retries = 0;
  std::vector<std::string> transcripts;  // "first_id|second_id|reply", when kept

  RerankTelemetry& operator+=(const RerankTelemetry& other);
};

struct RerankResult {
  RankedSequence ranked;
  ScoreTable scores;
  RerankTelemetry telemetry;
};

class RerankError : public Error {
 public:
  RerankError(const std::string& what, RerankTelemetry partial)
      : Error(what), telemetry_(std::move(partial)) {}
  const RerankTelemetry& telemetry() const { return telemetry_; }

 private:
  RerankTelemetry telemetry_;
};

// Pairwise harm re-ranking: every unordered pair is judged in both
// presentation orders, each verdict naming an item adds one to its score, and
// items are stably sorted by ascending score. Sequences shorter than two come
// back unchanged with zero scores.
RerankResult rerank_pairwise(const ContentSequence& seq, judges::PairwiseJudge& judge,
                             const RerankPolicy& policy = {});

// Stable ascending sort by per-item harm score (least harmful first). Throws
// RankError naming the item whose score fails or falls outside [0, 1].
RankedSequence rank_by_score(const ContentSequence& seq, judges::HarmScorer& scorer);

// The unmodified input order; provenance "original".
RankedSequence identity_rank(const ContentSequence& seq);

}  // namespace harmrank::rerank
