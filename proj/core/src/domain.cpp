#include "harmrank/domain.hpp"

#include <algorithm>
#include <unordered_set>

#include "harmrank/errors.hpp"

namespace harmrank {

namespace {

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
           c == '\v';
  });
}

char ascii_upper(char c) {
  return (c >= 'a' && c <= 'z') ? static_cast<char>(c - 'a' + 'A') : c;
}

}  // namespace

int label_to_int(HarmLabel label) { return label == HarmLabel::Harmful ? 1 : 0; }

HarmLabel label_from_int(long long value) {
  if (value == 0) return HarmLabel::Harmless;
  if (value == 1) return HarmLabel::Harmful;
  throw ParameterError("label must be 0 (harmless) or 1 (harmful), got " +
                       std::to_string(value));
}

std::string_view label_name(HarmLabel label) {
  return label == HarmLabel::Harmful ? "harmful" : "harmless";
}

std::string_view verdict_token(Verdict verdict) {
  switch (verdict) {
    case Verdict::First:
      return "A";
    case Verdict::Second:
      return "B";
    case Verdict::Neither:
      return "NONE";
  }
  return "NONE";
}

std::optional<Verdict> verdict_from_token(std::string_view token) {
  std::string upper(token);
  std::transform(upper.begin(), upper.end(), upper.begin(), ascii_upper);
  if (upper == "A") return Verdict::First;
  if (upper == "B") return Verdict::Second;
  if (upper == "NONE") return Verdict::Neither;
  return std::nullopt;
}

ContentItem::ContentItem(std::string id, std::string text,
                         std::optional<HarmLabel> label,
                         std::set<std::string> categories)
    : id_(std::move(id)),
      text_(std::move(text)),
      label_(label),
      categories_(std::move(categories)) {
  if (id_.empty()) throw ParameterError("content item id must not be empty");
  if (is_blank(text_)) {
    throw ParameterError("content item '" + id_ + "' has blank text");
  }
}

ContentSequence::ContentSequence(std::vector<ContentItem> items)
    : items_(std::move(items)) {
  if (items_.empty()) throw ParameterError("content sequence must not be empty");
  std::unordered_set<std::string> seen;
  for (const auto& item : items_) {
    if (!seen.insert(item.id()).second) {
      throw ParameterError("duplicate item id in sequence: " + item.id());
    }
  }
}

std::vector<std::string> ContentSequence::ids() const {
  std::vector<std::string> out;
  out.reserve(items_.size());
  for (const auto& item : items_) out.push_back(item.id());
  return out;
}

std::vector<HarmLabel> labels_of(std::span<const ContentItem> items) {
  std::vector<HarmLabel> labels;
  labels.reserve(items.size());
  for (const auto& item : items) {
    if (!item.label()) {
      throw LabelingError(item.id(), "item '" + item.id() + "' has no label");
    }
    labels.push_back(*item.label());
  }
  return labels;
}

std::vector<HarmLabel> labels_of(const ContentSequence& seq) {
  return labels_of(std::span<const ContentItem>(seq.items()));
}

std::size_t count_harmless(const ContentSequence& seq) {
  const auto labels = labels_of(seq);
  return static_cast<std::size_t>(
      std::count(labels.begin(), labels.end(), HarmLabel::Harmless));
}

ScoreTable::ScoreTable(const ContentSequence& seq)
    : max_entry_(static_cast<std::uint32_t>(2 * (seq.size() - 1))) {
  for (const auto& item : seq.items()) entries_.emplace(item.id(), 0);
}

void ScoreTable::increment(const std::string& id) {
  auto it = entries_.find(id);
  if (it == entries_.end()) {
    throw ParameterError("score table has no entry for id: " + id);
  }
  if (it->second >= max_entry_) {
    throw ParameterError("score for '" + id + "' would exceed 2(n-1)");
  }
  ++it->second;
}

std::uint32_t ScoreTable::at(const std::string& id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) {
    throw ParameterError("score table has no entry for id: " + id);
  }
  return it->second;
}

std::vector<std::string> RankedSequence::ids() const {
  std::vector<std::string> out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back(item.id());
  return out;
}

std::optional<std::string> validate_ranked(const ContentSequence& original,
                                           const RankedSequence& ranked) {
  if (ranked.items.size() != ranked.scores.size()) {
    return "items and scores differ in length";
  }
  auto lhs = original.ids();
  auto rhs = ranked.ids();
  std::sort(lhs.begin(), lhs.end());
  std::sort(rhs.begin(), rhs.end());
  if (lhs != rhs) return "id multiset mismatch";
  for (std::size_t i = 1; i < ranked.scores.size(); ++i) {
    if (ranked.scores[i] < ranked.scores[i - 1]) {
      return "scores not non-decreasing";
    }
  }
  return std::nullopt;
}

}  // namespace harmrank
