#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "harmrank/domain.hpp"

namespace harmrank::prompts {

using Vector = std::vector<double>;

// Item id -> embedding. Every vector shares one dimension and is stored
// L2-normalized.
class EmbeddingSet {
 public:
  EmbeddingSet() = default;

  // Throws ParameterError on dimension mismatch, zero-norm or empty vectors.
  void insert(const std::string& id, Vector vector);

  bool contains(const std::string& id) const { return vectors_.count(id) != 0; }
  const Vector& at(const std::string& id) const;  // throws SelectionError
  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return vectors_.size(); }
  const std::map<std::string, Vector>& entries() const { return vectors_; }

 private:
  std::map<std::string, Vector> vectors_;
  std::size_t dimension_ = 0;
};

// One JSON record per line: {"id": string, "vector": [number, ...]}.
// Throws LoadError with the offending line number.
EmbeddingSet load_embeddings(const std::filesystem::path& path);

struct KMeansOptions {
  int max_iterations = 100;
  double tolerance = 1e-6;  // stop once no centroid moves farther than this
};

struct KMeansResult {
  std::vector<std::size_t> assignments;  // cluster index per input point
  std::vector<Vector> centroids;
  int iterations = 0;
};

// Lloyd's algorithm with k-means++ seeding. Deterministic in (points, k, seed).
// Empty clusters are re-seeded with the point farthest from its centroid, so
// every cluster of the result is non-empty. Throws ParameterError when k is
// zero or exceeds the point count.
KMeansResult kmeans(std::span<const Vector> points, std::size_t k, std::uint64_t seed,
                    const KMeansOptions& options = {});

double squared_distance(std::span<const double> a, std::span<const double> b);

// Clusters the harmful items' embeddings into `count` groups and returns the
// member nearest each centroid (ties to the smaller id), ordered by cluster.
std::vector<ContentItem> select_exemplars(std::span<const ContentItem> harm_items,
                                          const EmbeddingSet& embeddings,
                                          std::size_t count, std::uint64_t seed);

}  // namespace harmrank::prompts
