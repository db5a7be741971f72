#include "harmrank/exemplars.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"

#include "harmrank/errors.hpp"
#include "harmrank/random.hpp"

namespace harmrank::prompts {

void EmbeddingSet::insert(const std::string& id, Vector vector) {
  if (vector.empty()) throw ParameterError("embedding for '" + id + "' is empty");
  if (dimension_ != 0 && vector.size() != dimension_) {
    throw ParameterError("embedding for '" + id + "' has dimension " +
                         std::to_string(vector.size()) + ", expected " +
                         std::to_string(dimension_));
  }
  double norm = 0.0;
  for (double v : vector) {
    if (!std::isfinite(v)) throw ParameterError("embedding for '" + id + "' is not finite");
    norm += v * v;
  }
  norm = std::sqrt(norm);
  if (norm == 0.0) throw ParameterError("embedding for '" + id + "' has zero norm");
  for (double& v : vector) v /= norm;
  dimension_ = vector.size();
  vectors_.insert_or_assign(id, std::move(vector));
}

const Vector& EmbeddingSet::at(const std::string& id) const {
  auto it = vectors_.find(id);
  if (it == vectors_.end()) throw SelectionError("no embedding for item '" + id + "'");
  return it->second;
}

EmbeddingSet load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open embeddings file: " + path.string());
  EmbeddingSet set;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto record = nlohmann::json::parse(line);
      const auto id = record.at("id").get<std::string>();
      auto vector = record.at("vector").get<Vector>();
      if (set.contains(id)) throw LoadError("duplicate embedding id '" + id + "'", line_no);
      set.insert(id, std::move(vector));
    } catch (const LoadError&) {
      throw;
    } catch (const std::exception& e) {
      throw LoadError(path.string() + ":" + std::to_string(line_no) + ": " + e.what(),
                      line_no);
    }
  }
  return set;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

namespace {

std::size_t nearest(const Vector& point, const std::vector<Vector>& centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = squared_distance(point, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

std::vector<Vector> plus_plus_init(std::span<const Vector> points, std::size_t k, Rng& rng) {
  std::vector<Vector> centroids;
  centroids.reserve(k);
  centroids.push_back(points[uniform_below(rng, points.size())]);

  std::vector<double> d2(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    d2[i] = squared_distance(points[i], centroids[0]);
  }
  while (centroids.size() < k) {
    double total = 0.0;
    for (double d : d2) total += d;
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = uniform01(rng) * total;
      double acc = 0.0;
      pick = points.size() - 1;
      for (std::size_t i = 0; i < points.size(); ++i) {
        acc += d2[i];
        if (d2[i] > 0.0 && acc > target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = uniform_below(rng, points.size());
    }
    centroids.push_back(points[pick]);
    for (std::size_t i = 0; i < points.size(); ++i) {
      d2[i] = std::min(d2[i], squared_distance(points[i], centroids.back()));
    }
  }
  return centroids;
}

// Moves the farthest-from-centroid point of a multi-member cluster into each
// empty cluster.
void reseed_empty(std::span<const Vector> points, std::vector<std::size_t>& assignments,
                  std::vector<Vector>& centroids) {
  const std::size_t k = centroids.size();
  std::vector<std::size_t> sizes(k, 0);
  for (auto a : assignments) ++sizes[a];
  for (std::size_t c = 0; c < k; ++c) {
    if (sizes[c] != 0) continue;
    std::size_t far = points.size();
    double far_d = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (sizes[assignments[i]] < 2) continue;
      const double d = squared_distance(points[i], centroids[assignments[i]]);
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    --sizes[assignments[far]];
    assignments[far] = c;
    sizes[c] = 1;
    centroids[c] = points[far];
  }
}

}  // namespace

KMeansResult kmeans(std::span<const Vector> points, std::size_t k, std::uint64_t seed,
                    const KMeansOptions& options) {
  if (k == 0) throw ParameterError("k-means requires k >= 1");
  if (k > points.size()) {
    throw ParameterError("k-means requires k <= point count (k=" + std::to_string(k) +
                         ", points=" + std::to_string(points.size()) + ")");
  }
  const std::size_t dim = points[0].size();
  if (dim == 0) throw ParameterError("k-means requires dimension >= 1");
  for (const auto& p : points) {
    if (p.size() != dim) throw ParameterError("k-means points differ in dimension");
  }

  Rng rng(seed);
  KMeansResult result;
  result.centroids = plus_plus_init(points, k, rng);
  result.assignments.assign(points.size(), 0);

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    result.iterations = iter;
    for (std::size_t i = 0; i < points.size(); ++i) {
      result.assignments[i] = nearest(points[i], result.centroids);
    }
    reseed_empty(points, result.assignments, result.centroids);

    std::vector<Vector> updated(k, Vector(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      auto& c = updated[result.assignments[i]];
      for (std::size_t d = 0; d < dim; ++d) c[d] += points[i][d];
      ++counts[result.assignments[i]];
    }
    double max_shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      for (double& v : updated[c]) v /= static_cast<double>(counts[c]);
      max_shift = std::max(max_shift, std::sqrt(squared_distance(updated[c], result.centroids[c])));
    }
    result.centroids = std::move(updated);
    if (max_shift < options.tolerance) break;
  }
  return result;
}

std::vector<ContentItem> select_exemplars(std::span<const ContentItem> harm_items,
                                          const EmbeddingSet& embeddings, std::size_t count,
                                          std::uint64_t seed) {
  if (count == 0) throw SelectionError("exemplar count must be at least 1");
  if (count > harm_items.size()) {
    throw SelectionError("requested " + std::to_string(count) + " exemplars from " +
                         std::to_string(harm_items.size()) + " harmful items");
  }
  std::vector<Vector> points;
  points.reserve(harm_items.size());
  for (const auto& item : harm_items) points.push_back(embeddings.at(item.id()));

  const auto clusters = kmeans(points, count, seed);

  std::vector<std::size_t> chosen(count, harm_items.size());
  std::vector<double> chosen_d(count, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < harm_items.size(); ++i) {
    const std::size_t c = clusters.assignments[i];
    const double d = squared_distance(points[i], clusters.centroids[c]);
    const bool better =
        d < chosen_d[c] ||
        (d == chosen_d[c] && harm_items[i].id() < harm_items[chosen[c]].id());
    if (better) {
      chosen[c] = i;
      chosen_d[c] = d;
    }
  }

  std::vector<ContentItem> out;
  out.reserve(count);
  for (auto i : chosen) out.push_back(harm_items[i]);
  return out;
}

}  // namespace harmrank::prompts
