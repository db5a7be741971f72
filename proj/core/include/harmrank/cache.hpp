#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>

namespace harmrank::llm {

// Content-addressed response cache on disk. Each entry lives in
// `<dir>/<digest>.json` holding the digest and the raw response text;
// `<dir>/index.json` records a logical access clock per entry for LRU
// eviction. The index is rewritten on flush(), gc() and destruction; entry
// files missing from the index are adopted with access time 0.
class ResponseCache {
 public:
  // Creates the directory if needed. Throws StorageError when it cannot.
  explicit ResponseCache(std::filesystem::path dir);
  ~ResponseCache();

  ResponseCache(const ResponseCache&) = delete;
  ResponseCache& operator=(const ResponseCache&) = delete;

  std::optional<std::string> get(const std::string& digest);
  void put(const std::string& digest, const std::string& response);

  // Evicts least-recently-used entries until the total size of entry files
  // is at most max_bytes. Returns the number of bytes reclaimed.
  std::uint64_t gc(std::uint64_t max_bytes);

  std::uint64_t total_bytes() const;
  std::size_t size() const;
  void flush();

  const std::filesystem::path& dir() const { return dir_; }

 private:
  struct Entry {
    std::uint64_t last_access = 0;
    std::uint64_t bytes = 0;
  };

  std::filesystem::path entry_path(const std::string& digest) const;
  void load_index();
  void write_index_locked();

  std::filesystem::path dir_;
  std::map<std::string, Entry> entries_;
  std::uint64_t clock_ = 0;
  bool dirty_ = false;
  mutable std::mutex mutex_;
};

}  // namespace harmrank::llm
