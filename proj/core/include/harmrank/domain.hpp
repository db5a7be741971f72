#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace harmrank {

enum class HarmLabel : std::uint8_t { Harmless, Harmful };

// File encoding: 1 = Harmful, 0 = Harmless.
int label_to_int(HarmLabel label);
HarmLabel label_from_int(long long value);  // throws ParameterError
std::string_view label_name(HarmLabel label);

// Outcome of one pairwise judgment. First/Second name the more harmful of the
// two presented items; Neither means both were judged harmless.
enum class Verdict : std::uint8_t { First, Second, Neither };

// Response tokens used by the prompt protocol: A, B, NONE.
std::string_view verdict_token(Verdict verdict);
std::optional<Verdict> verdict_from_token(std::string_view token);

class ContentItem {
 public:
  // Throws ParameterError when id is empty or text is blank.
  ContentItem(std::string id, std::string text,
              std::optional<HarmLabel> label = std::nullopt,
              std::set<std::string> categories = {});

  const std::string& id() const { return id_; }
  const std::string& text() const { return text_; }
  const std::optional<HarmLabel>& label() const { return label_; }
  const std::set<std::string>& categories() const { return categories_; }

  bool operator==(const ContentItem&) const = default;

 private:
  std::string id_;
  std::string text_;
  std::optional<HarmLabel> label_;
  std::set<std::string> categories_;
};

// Ordered, non-empty list of items with distinct ids.
class ContentSequence {
 public:
  explicit ContentSequence(std::vector<ContentItem> items);

  std::size_t size() const { return items_.size(); }
  const std::vector<ContentItem>& items() const { return items_; }
  const ContentItem& operator[](std::size_t i) const { return items_[i]; }

  std::vector<std::string> ids() const;

 private:
  std::vector<ContentItem> items_;
};

// Ground-truth labels in sequence order; throws LabelingError naming the
// first unlabeled item.
std::vector<HarmLabel> labels_of(std::span<const ContentItem> items);
std::vector<HarmLabel> labels_of(const ContentSequence& seq);

std::size_t count_harmless(const ContentSequence& seq);

// Accumulated pairwise harm score per item id.
class ScoreTable {
 public:
  explicit ScoreTable(const ContentSequence& seq);

  void increment(const std::string& id);
  std::uint32_t at(const std::string& id) const;
  const std::map<std::string, std::uint32_t>& entries() const { return entries_; }

  // Upper bound for a single entry: 2 * (n - 1) presentation-ordered queries.
  std::uint32_t max_entry() const { return max_entry_; }

 private:
  std::map<std::string, std::uint32_t> entries_;
  std::uint32_t max_entry_;
};

struct RankedSequence {
  std::vector<ContentItem> items;
  std::vector<double> scores;  // parallel to items, non-decreasing
  std::string provenance;

  std::vector<std::string> ids() const;
};

// Returns the first violation of the permutation / monotone-score contract,
// or nullopt when the ranking is valid.
std::optional<std::string> validate_ranked(const ContentSequence& original,
                                           const RankedSequence& ranked);

}  // namespace harmrank
