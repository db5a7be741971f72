#include "harmrank/cache.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <vector>

#include "json.hpp"

#include "harmrank/errors.hpp"

namespace fs = std::filesystem;

namespace harmrank::llm {

namespace {

constexpr const char* kIndexName = "index.json";

bool is_digest(const std::string& s) {
  return s.size() == 64 && std::all_of(s.begin(), s.end(), [](char c) {
           return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
         });
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot write cache file: " + tmp.string());
    out << contents;
    if (!out) throw StorageError("short write to cache file: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw StorageError("cannot rename cache file " + tmp.string() + ": " + ec.message());
}

}  // namespace

ResponseCache::ResponseCache(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec || !fs::is_directory(dir_)) {
    throw StorageError("cannot create cache directory " + dir_.string() +
                       (ec ? ": " + ec.message() : ""));
  }
  load_index();
}

ResponseCache::~ResponseCache() {
  try {
    flush();
  } catch (...) {
    // Nothing sensible to do in a destructor; entries will be re-adopted.
  }
}

fs::path ResponseCache::entry_path(const std::string& digest) const {
  return dir_ / (digest + ".json");
}

void ResponseCache::load_index() {
  std::map<std::string, std::uint64_t> access;
  const auto index_path = dir_ / kIndexName;
  if (fs::exists(index_path)) {
    std::ifstream in(index_path);
    try {
      const auto index = nlohmann::json::parse(in);
      clock_ = index.value("clock", std::uint64_t{0});
      for (const auto& [digest, entry] : index.at("entries").items()) {
        access[digest] = entry.value("last_access", std::uint64_t{0});
      }
    } catch (const std::exception&) {
      // A corrupt index only loses recency information.
      access.clear();
    }
  }
  for (const auto& file : fs::directory_iterator(dir_)) {
    if (!file.is_regular_file() || file.path().extension() != ".json") continue;
    const auto digest = file.path().stem().string();
    if (!is_digest(digest)) continue;
    Entry entry;
    entry.bytes = file.file_size();
    if (auto it = access.find(digest); it != access.end()) entry.last_access = it->second;
    entries_[digest] = entry;
  }
}

std::optional<std::string> ResponseCache::get(const std::string& digest) {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(digest);
  if (it == entries_.end()) return std::nullopt;
  std::ifstream in(entry_path(digest), std::ios::binary);
  if (!in) {
    entries_.erase(it);
    dirty_ = true;
    return std::nullopt;
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    const auto record = nlohmann::json::parse(buffer.str());
    if (record.at("digest").get<std::string>() != digest) return std::nullopt;
    it->second.last_access = ++clock_;
    dirty_ = true;
    return record.at("response").get<std::string>();
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

void ResponseCache::put(const std::string& digest, const std::string& response) {
  nlohmann::ordered_json record;
  record["digest"] = digest;
  record["response"] = response;
  const std::string contents = record.dump();

  std::lock_guard lock(mutex_);
  write_file_atomic(entry_path(digest), contents);
  entries_[digest] = Entry{++clock_, contents.size()};
  dirty_ = true;
}

std::uint64_t ResponseCache::gc(std::uint64_t max_bytes) {
  std::lock_guard lock(mutex_);
  std::uint64_t total = 0;
  for (const auto& [digest, entry] : entries_) total += entry.bytes;

  std::vector<std::pair<std::uint64_t, std::string>> by_age;
  by_age.reserve(entries_.size());
  for (const auto& [digest, entry] : entries_) by_age.emplace_back(entry.last_access, digest);
  std::sort(by_age.begin(), by_age.end());

  std::uint64_t reclaimed = 0;
  for (const auto& [access, digest] : by_age) {
    if (total <= max_bytes) break;
    std::error_code ec;
    fs::remove(entry_path(digest), ec);
    if (ec) throw StorageError("cannot evict cache entry " + digest + ": " + ec.message());
    const auto bytes = entries_[digest].bytes;
    entries_.erase(digest);
    total -= bytes;
    reclaimed += bytes;
    dirty_ = true;
  }
  write_index_locked();
  return reclaimed;
}

std::uint64_t ResponseCache::total_bytes() const {
  std::lock_guard lock(mutex_);
  std::uint64_t total = 0;
  for (const auto& [digest, entry] : entries_) total += entry.bytes;
  return total;
}

std::size_t ResponseCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

void ResponseCache::flush() {
  std::lock_guard lock(mutex_);
  if (dirty_) write_index_locked();
}

void ResponseCache::write_index_locked() {
  nlohmann::ordered_json index;
  index["clock"] = clock_;
  auto& entries = index["entries"] = nlohmann::ordered_json::object();
  for (const auto& [digest, entry] : entries_) {
    entries[digest] = {{"last_access", entry.last_access}, {"bytes", entry.bytes}};
  }
  write_file_atomic(dir_ / kIndexName, index.dump());
  dirty_ = false;
}

}  // namespace harmrank::llm
