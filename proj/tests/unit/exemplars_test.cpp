#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "harmrank/errors.hpp"
#include "harmrank/exemplars.hpp"
#include "test_support.hpp"

using namespace harmrank;
using namespace harmrank::prompts;
using harmrank::testing::TempDir;

namespace {

// `per_blob` points jittered around each unit axis of R^dim, one blob per axis
// up to `blobs`. Item ids are b<blob>_<index>.
struct BlobFixture {
  std::vector<ContentItem> items;
  EmbeddingSet embeddings;
  std::map<std::string, int> blob_of;
};

BlobFixture make_blobs(int blobs, int per_blob, int dim, std::uint64_t seed) {
  BlobFixture f;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  for (int b = 0; b < blobs; ++b) {
    for (int i = 0; i < per_blob; ++i) {
      Vector v(dim);
      for (auto& x : v) x = jitter(rng);
      v[b] += 1.0;
      const auto id = "b" + std::to_string(b) + "_" + std::to_string(i);
      f.items.emplace_back(id, "exemplar text " + id, HarmLabel::Harmful);
      f.embeddings.insert(id, v);
      f.blob_of[id] = b;
    }
  }
  return f;
}

std::vector<Vector> points_of(const BlobFixture& f) {
  std::vector<Vector> points;
  for (const auto& item : f.items) points.push_back(f.embeddings.at(item.id()));
  return points;
}

}  // namespace

TEST(EmbeddingSet, NormalizesAndValidates) {
  EmbeddingSet set;
  set.insert("a", {3.0, 4.0});
  EXPECT_DOUBLE_EQ(set.at("a")[0], 0.6);
  EXPECT_DOUBLE_EQ(set.at("a")[1], 0.8);
  EXPECT_THROW(set.insert("b", {1.0, 2.0, 3.0}), ParameterError);
  EXPECT_THROW(set.insert("c", {0.0, 0.0}), ParameterError);
  EXPECT_THROW(set.insert("d", {}), ParameterError);
  EXPECT_THROW(set.insert("e", {NAN, 1.0}), ParameterError);
  EXPECT_THROW(set.at("missing"), SelectionError);
}

TEST(EmbeddingSet, LoadsJsonl) {
  TempDir dir;
  const auto path = dir.path() / "emb.jsonl";
  {
    std::ofstream out(path);
    out << R"({"id":"x","vector":[1,0]})" << "\n\n" << R"({"id":"y","vector":[0,2]})" << "\n";
  }
  const auto set = load_embeddings(path);
  EXPECT_EQ(set.size(), 2u);
  EXPECT_EQ(set.dimension(), 2u);
  EXPECT_DOUBLE_EQ(set.at("y")[1], 1.0);
}

TEST(EmbeddingSet, LoadErrorsCarryLineNumbers) {
  TempDir dir;
  const auto path = dir.path() / "bad.jsonl";
  const std::vector<std::string> bad_second_lines{
      R"({"id":"y","vector":[1,2,3]})",  // dimension mismatch
      R"({"id":"x","vector":[0,1]})",    // duplicate
      R"({"id":"y"})",                   // missing vector
      "not json"};
  for (const auto& second : bad_second_lines) {
    {
      std::ofstream out(path);
      out << R"({"id":"x","vector":[1,0]})" << "\n" << second << "\n";
    }
    try {
      load_embeddings(path);
      FAIL() << "expected LoadError for " << second;
    } catch (const LoadError& e) {
      EXPECT_EQ(e.line(), 2u) << second;
    }
  }
  EXPECT_THROW(load_embeddings(dir.path() / "absent.jsonl"), LoadError);
}

TEST(KMeans, SingleClusterIsTheMean) {
  const auto f = make_blobs(2, 5, 3, 1);
  const auto points = points_of(f);
  const auto r = kmeans(points, 1, 42);
  Vector mean(3, 0.0);
  for (const auto& p : points) {
    for (int d = 0; d < 3; ++d) mean[d] += p[d] / static_cast<double>(points.size());
  }
  for (int d = 0; d < 3; ++d) EXPECT_NEAR(r.centroids[0][d], mean[d], 1e-12);
  for (auto a : r.assignments) EXPECT_EQ(a, 0u);
}

TEST(KMeans, SeparatesTwoBlobs) {
  const auto f = make_blobs(2, 10, 2, 3);
  const auto points = points_of(f);
  for (std::uint64_t seed : {0u, 1u, 2u, 99u}) {
    const auto r = kmeans(points, 2, seed);
    for (std::size_t i = 0; i < points.size(); ++i) {
      const bool same_blob = f.blob_of.at(f.items[i].id()) == f.blob_of.at(f.items[0].id());
      EXPECT_EQ(r.assignments[i] == r.assignments[0], same_blob);
    }
  }
}

TEST(KMeans, DeterministicAndNeverEmpty) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  std::vector<Vector> points(60, Vector(4));
  for (auto& p : points) {
    for (auto& x : p) x = g(rng);
  }
  for (std::size_t k : {1u, 3u, 7u, 20u, 60u}) {
    const auto a = kmeans(points, k, 17);
    const auto b = kmeans(points, k, 17);
    EXPECT_EQ(a.assignments, b.assignments);
    EXPECT_EQ(a.centroids, b.centroids);
    std::vector<int> sizes(k, 0);
    for (auto c : a.assignments) ++sizes[c];
    for (int s : sizes) EXPECT_GT(s, 0) << "k=" << k;
    EXPECT_LE(a.iterations, 100);
  }
}

TEST(KMeans, DuplicatePointsStillFillEveryCluster) {
  const std::vector<Vector> points(5, Vector{1.0, 0.0});
  const auto r = kmeans(points, 3, 0);
  std::set<std::size_t> used(r.assignments.begin(), r.assignments.end());
  EXPECT_EQ(used.size(), 3u);
}

TEST(KMeans, RejectsBadK) {
  const std::vector<Vector> points{{1.0, 0.0}, {0.0, 1.0}};
  EXPECT_THROW(kmeans(points, 0, 0), ParameterError);
  EXPECT_THROW(kmeans(points, 3, 0), ParameterError);
}

TEST(SelectExemplars, OnePerBlobAndNearestToCentroid) {
  const auto f = make_blobs(3, 8, 3, 11);
  const auto chosen = select_exemplars(f.items, f.embeddings, 3, 7);
  ASSERT_EQ(chosen.size(), 3u);
  std::set<int> blobs;
  for (const auto& item : chosen) blobs.insert(f.blob_of.at(item.id()));
  EXPECT_EQ(blobs.size(), 3u);

  const auto points = points_of(f);
  const auto clusters = kmeans(points, 3, 7);
  for (std::size_t c = 0; c < 3; ++c) {
    std::string best_id;
    double best = INFINITY;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (clusters.assignments[i] != c) continue;
      const double d = squared_distance(points[i], clusters.centroids[c]);
      if (d < best || (d == best && f.items[i].id() < best_id)) {
        best = d;
        best_id = f.items[i].id();
      }
    }
    EXPECT_EQ(chosen[c].id(), best_id);
  }
  EXPECT_EQ(select_exemplars(f.items, f.embeddings, 3, 7), chosen);
}

TEST(SelectExemplars, SaturationSelectsEveryItem) {
  const auto f = make_blobs(2, 3, 2, 4);
  const auto chosen = select_exemplars(f.items, f.embeddings, f.items.size(), 1);
  std::set<std::string> ids;
  for (const auto& item : chosen) ids.insert(item.id());
  EXPECT_EQ(ids.size(), f.items.size());
}

TEST(SelectExemplars, SweepSizes) {
  const auto f = make_blobs(4, 10, 4, 8);
  std::set<std::string> pool;
  for (const auto& item : f.items) pool.insert(item.id());
  for (std::size_t n : {4u, 8u, 12u, 16u, 20u}) {
    const auto chosen = select_exemplars(f.items, f.embeddings, n, 3);
    ASSERT_EQ(chosen.size(), n);
    std::set<std::string> ids;
    for (const auto& item : chosen) {
      EXPECT_TRUE(pool.count(item.id()));
      ids.insert(item.id());
    }
    EXPECT_EQ(ids.size(), n);
  }
}

TEST(SelectExemplars, Errors) {
  auto f = make_blobs(1, 3, 2, 2);
  f.items.emplace_back("orphan", "no vector", HarmLabel::Harmful);
  try {
    select_exemplars(f.items, f.embeddings, 2, 0);
    FAIL() << "expected SelectionError";
  } catch (const SelectionError& e) {
    EXPECT_NE(std::string(e.what()).find("orphan"), std::string::npos);
  }
  EXPECT_THROW(select_exemplars(f.items, f.embeddings, 0, 0), SelectionError);
  EXPECT_THROW(select_exemplars(f.items, f.embeddings, 9, 0), SelectionError);
}
