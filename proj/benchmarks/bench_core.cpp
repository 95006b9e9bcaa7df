#include <benchmark/benchmark.h>

#include <random>

#include "neurocap/decoder/generation.hpp"
#include "neurocap/decoder/language_model.hpp"
#include "neurocap/eval/metrics.hpp"
#include "neurocap/mathcore/matrix.hpp"
#include "neurocap/pipeline/retrieval.hpp"

using namespace neurocap;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (double& v : m.values()) v = normal(rng);
  return m;
}

Vocabulary vocabulary(std::size_t content) {
  std::vector<std::string> tokens{"<bos>", "<eos>", "<unk>"};
  for (std::size_t i = 0; i < content; ++i) tokens.push_back("w" + std::to_string(i));
  return Vocabulary::from_tokens(tokens);
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, n, 1);
  const Matrix b = random_matrix(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(256)->Arg(512);

void BM_RetrieveSimilar(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const FeatureDatabase db = FeatureDatabase::from_matrix(random_matrix(n, 512, 3));
  const Matrix q = random_matrix(1, 512, 4);
  for (auto _ : state) benchmark::DoNotOptimize(retrieve_similar(q.row(0), db, 10));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_RetrieveSimilar)->Arg(1000)->Arg(10000);

void BM_LstmStep(benchmark::State& state) {
  const auto width = static_cast<std::size_t>(state.range(0));
  const LanguageModel lm = make_language_model(vocabulary(1000), {256, width, width}, InitScheme::scaled_normal, 5);
  const std::vector<double> input = token_input(lm, 3);
  const DecoderState start = initial_state(lm);
  for (auto _ : state) benchmark::DoNotOptimize(lstm_step(lm, start, input));
}
BENCHMARK(BM_LstmStep)->Arg(128)->Arg(512);

void BM_BeamSearch(benchmark::State& state) {
  const LanguageModel lm = make_language_model(vocabulary(500), {64, 64, 64}, InitScheme::scaled_normal, 6);
  const Matrix f = random_matrix(1, 64, 7);
  for (auto _ : state) benchmark::DoNotOptimize(generate_beam(lm, f.row(0), static_cast<std::size_t>(state.range(0))));
}
BENCHMARK(BM_BeamSearch)->Arg(1)->Arg(10);

void BM_Bleu4(benchmark::State& state) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> word(0, 40);
  auto sentence = [&] {
    Sentence s(12);
    for (std::string& w : s) w = "w" + std::to_string(word(rng));
    return s;
  };
  const Sentence cand = sentence();
  std::vector<Sentence> refs;
  for (int i = 0; i < 5; ++i) refs.push_back(sentence());
  for (auto _ : state) benchmark::DoNotOptimize(bleu4(cand, refs));
}
BENCHMARK(BM_Bleu4);

void BM_MeteorLite(benchmark::State& state) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> word(0, 10);
  auto sentence = [&] {
    Sentence s(12);
    for (std::string& w : s) w = "w" + std::to_string(word(rng));
    return s;
  };
  const Sentence cand = sentence();
  std::vector<Sentence> refs;
  for (int i = 0; i < 5; ++i) refs.push_back(sentence());
  for (auto _ : state) benchmark::DoNotOptimize(meteor_lite(cand, refs));
}
BENCHMARK(BM_MeteorLite);

}  // namespace
BENCHMARK_MAIN();
