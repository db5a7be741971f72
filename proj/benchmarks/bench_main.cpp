#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "harmrank/exemplars.hpp"
#include "harmrank/judges.hpp"
#include "harmrank/metrics.hpp"
#include "harmrank/reranker.hpp"

using namespace harmrank;

namespace {

std::vector<HarmLabel> shuffled_labels(std::size_t n, std::size_t harmful, std::uint64_t seed) {
  std::vector<HarmLabel> labels(n, HarmLabel::Harmless);
  std::fill_n(labels.begin(), harmful, HarmLabel::Harmful);
  std::mt19937_64 rng(seed);
  std::shuffle(labels.begin(), labels.end(), rng);
  return labels;
}

ContentSequence sequence_of(const std::vector<HarmLabel>& labels) {
  std::vector<ContentItem> items;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    items.emplace_back("item" + std::to_string(i + 1), "text " + std::to_string(i + 1), labels[i]);
  }
  return ContentSequence(std::move(items));
}

}  // namespace

static void BM_Ewn(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto labels = shuffled_labels(n, n * 3 / 10, 1);
  for (auto _ : state) benchmark::DoNotOptimize(metrics::ewn(labels));
}
BENCHMARK(BM_Ewn)->Arg(20)->Arg(200)->Arg(2000);

static void BM_ComputeAll(benchmark::State& state) {
  const auto labels = shuffled_labels(20, 6, 2);
  for (auto _ : state) benchmark::DoNotOptimize(metrics::compute_all(labels));
}
BENCHMARK(BM_ComputeAll);

static void BM_OracleRerank(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto seq = sequence_of(shuffled_labels(n, n * 3 / 10, 3));
  judges::OracleJudge judge;
  for (auto _ : state) benchmark::DoNotOptimize(rerank::rerank_pairwise(seq, judge));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * (n - 1)));
}
BENCHMARK(BM_OracleRerank)->Arg(20)->Arg(50);

static void BM_NoisyRerank(benchmark::State& state) {
  const auto seq = sequence_of(shuffled_labels(20, 6, 4));
  judges::NoisyJudge judge(0.8, 5);
  for (auto _ : state) benchmark::DoNotOptimize(rerank::rerank_pairwise(seq, judge));
}
BENCHMARK(BM_NoisyRerank);

static void BM_KMeans(benchmark::State& state) {
  const auto count = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(6);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<prompts::Vector> points(count, prompts::Vector(64));
  for (auto& p : points) {
    for (auto& x : p) x = noise(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(prompts::kmeans(points, 8, 7));
}
BENCHMARK(BM_KMeans)->Arg(256)->Arg(2048);

BENCHMARK_MAIN();
