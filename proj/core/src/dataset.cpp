#include "harmrank/dataset.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include "json.hpp"

#include "harmrank/errors.hpp"
#include "harmrank/random.hpp"

namespace harmrank::harness {

namespace {

ContentItem parse_record(const nlohmann::json& record, const LoadOptions& options) {
  if (!record.is_object()) throw std::runtime_error("record is not a JSON object");
  if (!record.contains("id")) throw std::runtime_error("missing required field 'id'");
  if (!record.contains("text")) throw std::runtime_error("missing required field 'text'");
  const auto& id_field = record.at("id");
  const auto& text_field = record.at("text");
  if (!id_field.is_string()) throw std::runtime_error("field 'id' must be a string");
  if (!text_field.is_string()) throw std::runtime_error("field 'text' must be a string");

  std::optional<HarmLabel> label;
  if (record.contains("label") && !record.at("label").is_null()) {
    const auto& l = record.at("label");
    if (!l.is_number_integer()) throw std::runtime_error("field 'label' must be 0 or 1");
    label = label_from_int(l.get<long long>());
  } else if (options.require_label) {
    throw std::runtime_error("missing required field 'label'");
  }

  std::set<std::string> categories;
  if (record.contains("categories") && !record.at("categories").is_null()) {
    for (const auto& c : record.at("categories")) categories.insert(c.get<std::string>());
  }
  return ContentItem(id_field.get<std::string>(), text_field.get<std::string>(), label,
                     std::move(categories));
}

// Partial Fisher-Yates: the first `count` entries become a uniform sample.
void sample_prefix(std::vector<std::size_t>& pool, std::size_t count, Rng& rng) {
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + uniform_below(rng, pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
}

}  // namespace

std::vector<ContentItem> parse_dataset(std::istream& in, const std::string& source_name,
                                       const LoadOptions& options) {
  std::vector<ContentItem> items;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source_name + ":" + std::to_string(line_no) + ": ";
    std::optional<ContentItem> item;
    try {
      item.emplace(parse_record(nlohmann::json::parse(line), options));
    } catch (const std::exception& e) {
      throw LoadError(where + e.what(), line_no);
    }
    if (!ids.insert(item->id()).second) {
      throw LoadError(where + "duplicate id '" + item->id() + "'", line_no);
    }
    items.push_back(std::move(*item));
  }
  return items;
}

std::vector<ContentItem> load_dataset(const std::filesystem::path& path,
                                      const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open dataset: " + path.string());
  return parse_dataset(in, path.string(), options);
}

void write_items_jsonl(const std::filesystem::path& path, std::span<const ContentItem> items,
                       const std::vector<double>* scores) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw StorageError("cannot write " + path.string());
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& item = items[i];
    nlohmann::ordered_json j;
    j["id"] = item.id();
    j["text"] = item.text();
    if (item.label()) j["label"] = label_to_int(*item.label());
    if (!item.categories().empty()) j["categories"] = item.categories();
    if (scores) {
      j["score"] = (*scores)[i];
      j["rank"] = i + 1;
    }
    out << j.dump() << '\n';
  }
  if (!out) throw StorageError("short write to " + path.string());
}

std::size_t harmful_count(double harm_fraction, std::size_t n) {
  return static_cast<std::size_t>(std::lround(harm_fraction * static_cast<double>(n)));
}

std::vector<ContentSequence> sample_sequences(std::span<const ContentItem> items, std::size_t n,
                                              std::size_t m, double harm_fraction,
                                              std::uint64_t seed) {
  if (n < 1) throw ParameterError("sequence length n must be >= 1");
  if (m < 1) throw ParameterError("sequence count m must be >= 1");
  if (!(harm_fraction > 0.0 && harm_fraction < 1.0)) {
    throw ParameterError("harm fraction must lie in (0, 1)");
  }

  std::vector<std::size_t> harmful;
  std::vector<std::size_t> harmless;
  const auto labels = labels_of(items);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (labels[i] == HarmLabel::Harmful ? harmful : harmless).push_back(i);
  }
  const std::size_t h = harmful_count(harm_fraction, n);
  if (h > harmful.size() || n - h > harmless.size()) {
    throw SamplingError("sequence needs " + std::to_string(h) + " harmful and " +
                        std::to_string(n - h) + " harmless items; dataset has " +
                        std::to_string(harmful.size()) + " harmful and " +
                        std::to_string(harmless.size()) + " harmless");
  }

  std::vector<ContentSequence> out;
  out.reserve(m);
  for (std::size_t s = 0; s < m; ++s) {
    // Fresh pools per sequence keep sequence s a function of (seed, s) alone.
    Rng rng(derive_seed(seed, s));
    auto harmful_pool = harmful;
    auto harmless_pool = harmless;
    sample_prefix(harmful_pool, h, rng);
    sample_prefix(harmless_pool, n - h, rng);

    std::vector<std::size_t> picked(harmful_pool.begin(),
                                    harmful_pool.begin() + static_cast<long>(h));
    picked.insert(picked.end(), harmless_pool.begin(),
                  harmless_pool.begin() + static_cast<long>(n - h));
    for (std::size_t i = picked.size(); i > 1; --i) {
      std::swap(picked[i - 1], picked[uniform_below(rng, i)]);
    }

    std::vector<ContentItem> seq;
    seq.reserve(n);
    for (auto idx : picked) seq.push_back(items[idx]);
    out.emplace_back(std::move(seq));
  }
  return out;
}

}  // namespace harmrank::harness
