// Timings for the hot paths: jet evaluation, classification sweeps, SODE
// derivation and Lagrangian reconstruction.
#include "corpus.hpp"
#include "models.hpp"

#include "varsode/sode.hpp"
#include "varsode/variational.hpp"

#include <benchmark/benchmark.h>

using namespace varsode;
using namespace varsode::testing;

namespace {

FieldVector identity_map(std::size_t m, std::size_t n) {
  std::vector<std::string> s;
  for (std::size_t a = 1; a <= n; ++a) s.push_back("y" + std::to_string(a));
  return bundle_fields(m, n, s);
}

void BM_CorpusJet2(benchmark::State& state) {
  const auto& vars = corpus_variables();
  std::vector<ScalarField> fields;
  for (const auto& src : expression_corpus()) fields.emplace_back(parse(src), vars);
  const auto pts = corpus_points(8);
  for (auto _ : state)
    for (const auto& f : fields)
      for (const auto& p : pts) benchmark::DoNotOptimize(f.jet(p));
  state.SetItemsProcessed(state.iterations() * std::int64_t(fields.size() * pts.size()));
}
BENCHMARK(BM_CorpusJet2);

void BM_ClassifySe2(benchmark::State& state) {
  const auto E = lie_algebra(3, se2_constants());
  const auto G = bundle_fields(0, 3, {"y2*y3", "-y1*y3", "1"});
  const auto F = identity_map(0, 3);
  const auto pts = bundle_points(0, 3, std::size_t(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(classify(E, G, F, pts));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ClassifySe2)->Arg(64)->Arg(512);

void BM_ClassifyAtiyahLagrangian(benchmark::State& state) {
  std::mt19937_64 rng(5);
  AtiyahData D;
  do D = random_atiyah(rng, 3, 3);
  while (D.m < 2 || D.ng < 3);
  const auto E = atiyah_algebroid(D);
  const Lagrangian L(random_lagrangian(rng, E.m(), E.n()), bundle_names(E.m(), E.n()));
  const auto G = sode_from_lagrangian(E, L);
  const auto F = legendre(E, L);
  const auto pts = bundle_points(E.m(), E.n(), 64, 1);
  for (auto _ : state) benchmark::DoNotOptimize(classify(E, G, F, pts));
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_ClassifyAtiyahLagrangian);

void BM_PopResiduals(benchmark::State& state) {
  std::mt19937_64 rng(6);
  const auto E = tangent_bundle(3);
  const Lagrangian L(random_lagrangian(rng, 3, 3), bundle_names(3, 3));
  const auto G = sode_from_lagrangian(E, L);
  const auto F = legendre(E, L);
  const auto pts = bundle_points(3, 3, 64, 1);
  for (auto _ : state) benchmark::DoNotOptimize(pop_residuals(E, G, F, pts));
}
BENCHMARK(BM_PopResiduals);

void BM_SodeFromLagrangianPoint(benchmark::State& state) {
  std::mt19937_64 rng(7);
  const auto E = tangent_bundle(3);
  const Lagrangian L(random_lagrangian(rng, 3, 3), bundle_names(3, 3));
  const std::vector<double> p{0.1, 0.2, -0.3, 0.4, -0.5, 0.6};
  for (auto _ : state) benchmark::DoNotOptimize(sode_from_lagrangian(E, L, p));
}
BENCHMARK(BM_SodeFromLagrangianPoint);

void BM_ValidateStructureAtiyah(benchmark::State& state) {
  std::mt19937_64 rng(8);
  AtiyahData D;
  do D = random_atiyah(rng, 3, 3);
  while (D.m < 3 || D.ng < 3);
  const auto E = atiyah_algebroid(D);
  const auto pts = halton_points(Box::symmetric(D.m), 50, 1);
  for (auto _ : state) benchmark::DoNotOptimize(validate_structure(E, pts));
}
BENCHMARK(BM_ValidateStructureAtiyah);

void BM_Reconstruct(benchmark::State& state) {
  const auto E = tangent_bundle(3);
  const Lagrangian L(parse("0.5*(y1^2 + y2^2 + y3^2) + x3"), bundle_names(3, 3));
  const auto G = sode_from_lagrangian(E, L);
  const auto F = legendre(E, L);
  const std::vector<double> base(6, 0.0);
  for (auto _ : state) {
    const auto Lr = reconstruct_lagrangian(E, G, F, base, ReconstructionMode::full_rank_square);
    benchmark::DoNotOptimize(Lr.value(std::vector<double>{0.3, 0.2, 0.1, 0.4, 0.5, 0.6}));
  }
}
BENCHMARK(BM_Reconstruct)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
