#include "harmrank/judges.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>

#include "json.hpp"

#include "harmrank/errors.hpp"

namespace harmrank::judges {

namespace {

HarmLabel require_label(const ContentItem& item) {
  if (!item.label()) throw JudgeError("item '" + item.id() + "' has no ground-truth label");
  return *item.label();
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_token_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

}  // namespace

HarmScore HarmScore::checked(double value) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw ScorerError("harm score outside [0, 1]: " + std::to_string(value));
  }
  return {value};
}

Verdict oracle_verdict(HarmLabel first, HarmLabel second) {
  if (first == HarmLabel::Harmful) return Verdict::First;
  if (second == HarmLabel::Harmful) return Verdict::Second;
  return Verdict::Neither;
}

Verdict noisy_verdict(HarmLabel first, HarmLabel second, double accuracy, Rng& rng) {
  if (!(accuracy >= 0.0 && accuracy <= 1.0)) {
    throw ParameterError("noisy judge accuracy must lie in [0, 1]");
  }
  const Verdict truth = oracle_verdict(first, second);
  if (uniform01(rng) < accuracy) return truth;
  // The two remaining verdicts in enum order.
  Verdict others[2];
  int n = 0;
  for (Verdict v : {Verdict::First, Verdict::Second, Verdict::Neither}) {
    if (v != truth) others[n++] = v;
  }
  return others[uniform_below(rng, 2)];
}

std::optional<Verdict> try_parse_response(std::string_view text) {
  static constexpr std::string_view kKeyword = "response";
  for (std::size_t start = 0; start + kKeyword.size() <= text.size(); ++start) {
    bool match = true;
    for (std::size_t j = 0; j < kKeyword.size(); ++j) {
      if (lower(text[start + j]) != kKeyword[j]) {
        match = false;
        break;
      }
    }
    if (!match) continue;
    std::size_t pos = start + kKeyword.size();
    while (pos < text.size() && is_space(text[pos])) ++pos;
    if (pos >= text.size() || text[pos] != '=') continue;
    ++pos;
    while (pos < text.size() && is_space(text[pos])) ++pos;
    const std::size_t token_start = pos;
    while (pos < text.size() && is_token_char(text[pos])) ++pos;
    // First "response =" wins, valid token or not.
    return verdict_from_token(text.substr(token_start, pos - token_start));
  }
  return std::nullopt;
}

Verdict parse_response(std::string_view text) {
  if (auto v = try_parse_response(text)) return *v;
  throw ParseError(std::string(text));
}

std::string render_verdict(Verdict verdict) {
  return "Response=" + std::string(verdict_token(verdict));
}

std::string truncate_text(std::string_view text, std::size_t max_chars, bool* truncated) {
  if (text.size() <= max_chars) {
    if (truncated) *truncated = false;
    return std::string(text);
  }
  std::size_t cut = max_chars;
  while (cut > 0 && (static_cast<unsigned char>(text[cut]) & 0xC0) == 0x80) --cut;
  if (truncated) *truncated = true;
  return std::string(text.substr(0, cut));
}

JudgeOutcome OracleJudge::judge(const ContentItem& first, const ContentItem& second) {
  JudgeOutcome out;
  out.verdict = oracle_verdict(require_label(first), require_label(second));
  return out;
}

NoisyJudge::NoisyJudge(double accuracy, std::uint64_t seed) : accuracy_(accuracy), seed_(seed) {
  if (!(accuracy >= 0.0 && accuracy <= 1.0)) {
    throw ParameterError("noisy judge accuracy must lie in [0, 1]");
  }
}

JudgeOutcome NoisyJudge::judge(const ContentItem& first, const ContentItem& second) {
  const std::uint64_t pair_hash = fnv1a64(second.id(), fnv1a64("\x1f", fnv1a64(first.id())));
  Rng rng(derive_seed(seed_, pair_hash));
  JudgeOutcome out;
  out.verdict = noisy_verdict(require_label(first), require_label(second), accuracy_, rng);
  return out;
}

std::string NoisyJudge::name() const {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "noisy(%.3g)", accuracy_);
  return buf;
}

LlmJudge::LlmJudge(prompts::PromptStrategy strategy, std::shared_ptr<llm::ChatClient> client,
                   LlmJudgeOptions options)
    : strategy_(std::move(strategy)), client_(std::move(client)), options_(std::move(options)) {
  if (!client_) throw ParameterError("LLM judge needs a chat client");
  if (options_.retries_on_parse_failure < 0) {
    throw ParameterError("retries_on_parse_failure must be >= 0");
  }
  if (options_.max_text_chars == 0) throw ParameterError("max_text_chars must be >= 1");
}

std::string LlmJudge::name() const {
  return "llm:" + prompts::strategy_name(strategy_) + "@" + options_.model;
}

JudgeOutcome LlmJudge::judge(const ContentItem& first, const ContentItem& second) {
  JudgeOutcome out;
  bool cut_a = false;
  bool cut_b = false;
  const auto a_text = truncate_text(first.text(), options_.max_text_chars, &cut_a);
  const auto b_text = truncate_text(second.text(), options_.max_text_chars, &cut_b);
  out.truncated = cut_a || cut_b;

  llm::ChatRequest request;
  request.model = options_.model;
  request.messages = prompts::build_messages(strategy_, a_text, b_text);
  request.temperature = options_.temperature;
  request.max_tokens = options_.max_tokens;

  for (int attempt = 0; attempt <= options_.retries_on_parse_failure; ++attempt) {
    llm::CallResult reply;
    try {
      reply = client_->complete(request, attempt);
    } catch (const TransportError& e) {
      throw JudgeError(std::string("chat backend failed: ") + e.what());
    }
    if (reply.from_cache) ++out.cache_hits;
    out.network_retries += reply.retries;
    if (options_.keep_transcripts) {
      if (!out.transcript.empty()) out.transcript += "\n---\n";
      out.transcript += reply.text;
    }
    if (auto verdict = try_parse_response(reply.text)) {
      out.verdict = *verdict;
      return out;
    }
    if (attempt < options_.retries_on_parse_failure) ++out.parse_retries;
  }
  out.verdict = Verdict::Neither;
  out.parse_exhausted = true;
  return out;
}

HarmScore oracle_score(HarmLabel label) {
  return {label == HarmLabel::Harmful ? 1.0 : 0.0};
}

HarmScore moderation_max_score(std::string_view response_body) {
  try {
    const auto j = nlohmann::json::parse(response_body);
    const auto& scores = j.at("results").at(0).at("category_scores");
    if (!scores.is_object() || scores.empty()) {
      throw ScorerError("moderation response has no category scores");
    }
    double best = 0.0;
    for (const auto& [category, value] : scores.items()) {
      best = std::max(best, HarmScore::checked(value.get<double>()).value);
    }
    return {best};
  } catch (const ScorerError&) {
    throw;
  } catch (const std::exception& e) {
    throw ScorerError(std::string("malformed moderation response: ") + e.what());
  }
}

HarmScore perspective_toxicity(std::string_view response_body) {
  try {
    const auto j = nlohmann::json::parse(response_body);
    const double value =
        j.at("attributeScores").at("TOXICITY").at("summaryScore").at("value").get<double>();
    return HarmScore::checked(value);
  } catch (const ScorerError&) {
    throw;
  } catch (const std::exception& e) {
    throw ScorerError(std::string("malformed perspective response: ") + e.what());
  }
}

HarmScore moderation_score(const std::string& text, llm::ModerationClient& client) {
  try {
    return moderation_max_score(client.classify(text).text);
  } catch (const TransportError& e) {
    throw ScorerError(std::string("moderation request failed: ") + e.what());
  }
}

HarmScore perspective_score(const std::string& text, llm::PerspectiveClient& client) {
  try {
    return perspective_toxicity(client.analyze(text).text);
  } catch (const TransportError& e) {
    throw ScorerError(std::string("perspective request failed: ") + e.what());
  }
}

double OracleScorer::score(const ContentItem& item) {
  if (!item.label()) throw ScorerError("item '" + item.id() + "' has no ground-truth label");
  return oracle_score(*item.label()).value;
}

double ModerationScorer::score(const ContentItem& item) {
  return moderation_score(item.text(), *client_).value;
}

double PerspectiveScorer::score(const ContentItem& item) {
  return perspective_score(item.text(), *client_).value;
}

}  // namespace harmrank::judges
