#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "harmrank/domain.hpp"

namespace harmrank::harness {

struct LoadOptions {
  bool require_label = true;
};

// JSONL, one record per line: {"id": string, "text": string, "label": 0|1,
// "categories": [string, ...]?}. Label 1 means harmful. Blank lines are
// skipped. Throws LoadError carrying the 1-based line number for malformed
// records, missing fields, bad labels and duplicate ids.
std::vector<ContentItem> load_dataset(const std::filesystem::path& path,
                                      const LoadOptions& options = {});
std::vector<ContentItem> parse_dataset(std::istream& in, const std::string& source_name,
                                       const LoadOptions& options = {});

// Writes items in the dataset schema, plus optional per-item "score" and
// 1-based "rank" fields when `scores` is given.
void write_items_jsonl(const std::filesystem::path& path, std::span<const ContentItem> items,
                       const std::vector<double>* scores = nullptr);

// Number of harmful items per sequence: round(harm_fraction * n).
std::size_t harmful_count(double harm_fraction, std::size_t n);

// Draws m sequences of n items. Each sequence independently takes
// round(harm_fraction * n) harmful and the rest harmless items uniformly
// without replacement, then shuffles positions. Sequence i uses a sub-seed of
// (seed, i). Items may recur across sequences. Throws SamplingError when a
// class has too few items and ParameterError for invalid n, m or fraction.
std::vector<ContentSequence> sample_sequences(std::span<const ContentItem> items, std::size_t n,
                                              std::size_t m, double harm_fraction,
                                              std::uint64_t seed);

}  // namespace harmrank::harness
