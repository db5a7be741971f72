#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "harmrank/domain.hpp"
#include "harmrank/llmclient.hpp"
#include "harmrank/prompts.hpp"
#include "harmrank/random.hpp"

namespace harmrank::judges {

struct JudgeOutcome {
  Verdict verdict = Verdict::Neither;
  int parse_retries = 0;
  bool parse_exhausted = false;  // every attempt was unparseable; verdict forced to Neither
  bool truncated = false;        // at least one text was cut to the character budget
  int cache_hits = 0;
  int network_retries = 0;
  std::string transcript;        // raw replies, kept only when requested
};

// Names the more harmful of two presented items, or Neither. Hard failures
// (transport exhausted, missing label) throw JudgeError.
class PairwiseJudge {
 public:
  virtual ~PairwiseJudge() = default;
  virtual JudgeOutcome judge(const ContentItem& first, const ContentItem& second) = 0;
  // False forces the rerank engine to query serially.
  virtual bool concurrent_safe() const { return true; }
  virtual std::string name() const = 0;
};

// Per-item harm score in [0, 1]; higher means more harmful.
class HarmScorer {
 public:
  virtual ~HarmScorer() = default;
  virtual double score(const ContentItem& item) = 0;
  virtual std::string name() const = 0;
};

struct HarmScore {
  double value;
  // Throws ScorerError outside [0, 1] or for NaN.
  static HarmScore checked(double value);
};

Verdict oracle_verdict(HarmLabel first, HarmLabel second);
Verdict noisy_verdict(HarmLabel first, HarmLabel second, double accuracy, Rng& rng);

// Grammar: case-insensitive "response", optional whitespace, "=", optional
// whitespace, then a token of letters/digits that must be A, B or NONE.
// Only the first "response =" occurrence is considered.
std::optional<Verdict> try_parse_response(std::string_view text);
Verdict parse_response(std::string_view text);  // throws ParseError
std::string render_verdict(Verdict verdict);     // "Response=A" etc.

// Cuts text to at most max_chars bytes on a UTF-8 boundary.
std::string truncate_text(std::string_view text, std::size_t max_chars, bool* truncated = nullptr);

class OracleJudge final : public PairwiseJudge {
 public:
  JudgeOutcome judge(const ContentItem& first, const ContentItem& second) override;
  std::string name() const override { return "oracle"; }
};

// Oracle answer with probability `accuracy`, otherwise one of the other two
// verdicts uniformly. Each (first, second) pair draws from its own generator
// seeded from (seed, first id, second id), so query order and concurrency
// cannot change outcomes.
class NoisyJudge final : public PairwiseJudge {
 public:
  NoisyJudge(double accuracy, std::uint64_t seed);
  JudgeOutcome judge(const ContentItem& first, const ContentItem& second) override;
  std::string name() const override;

 private:
  double accuracy_;
  std::uint64_t seed_;
};

struct LlmJudgeOptions {
  std::string model = "gpt-3.5-turbo";
  int retries_on_parse_failure = 2;
  std::size_t max_text_chars = 2000;
  double temperature = 0.0;
  int max_tokens = 16;
  bool keep_transcripts = false;
};

class LlmJudge final : public PairwiseJudge {
 public:
  LlmJudge(prompts::PromptStrategy strategy, std::shared_ptr<llm::ChatClient> client,
           LlmJudgeOptions options = {});
  JudgeOutcome judge(const ContentItem& first, const ContentItem& second) override;
  std::string name() const override;

 private:
  prompts::PromptStrategy strategy_;
  std::shared_ptr<llm::ChatClient> client_;
  LlmJudgeOptions options_;
};

HarmScore oracle_score(HarmLabel label);

// Maximum category score of a moderation response body
// ({"results":[{"category_scores":{...}}]}). Throws ScorerError.
HarmScore moderation_max_score(std::string_view response_body);
// attributeScores.TOXICITY.summaryScore.value of an analyze response body.
HarmScore perspective_toxicity(std::string_view response_body);

HarmScore moderation_score(const std::string& text, llm::ModerationClient& client);
HarmScore perspective_score(const std::string& text, llm::PerspectiveClient& client);

class OracleScorer final : public HarmScorer {
 public:
  double score(const ContentItem& item) override;
  std::string name() const override { return "oracle"; }
};

class ModerationScorer final : public HarmScorer {
 public:
  explicit ModerationScorer(std::shared_ptr<llm::ModerationClient> client)
      : client_(std::move(client)) {}
  double score(const ContentItem& item) override;
  std::string name() const override { return "moderation"; }

 private:
  std::shared_ptr<llm::ModerationClient> client_;
};

class PerspectiveScorer final : public HarmScorer {
 public:
  explicit PerspectiveScorer(std::shared_ptr<llm::PerspectiveClient> client)
      : client_(std::move(client)) {}
  double score(const ContentItem& item) override;
  std::string name() const override { return "perspective"; }

 private:
  std::shared_ptr<llm::PerspectiveClient> client_;
};

}  // namespace harmrank::judges
