#include <benchmark/benchmark.h>

#include <vector>

#include "fdaclust/bspline.hpp"
#include "fdaclust/cluster.hpp"
#include "fdaclust/fpca.hpp"
#include "fdaclust/rng.hpp"
#include "fdaclust/synth.hpp"

namespace {

std::vector<double> random_sequence(fdaclust::Rng& rng, int n) {
  std::vector<double> out(n);
  for (double& v : out) v = rng.gaussian();
  return out;
}

void bm_dtw_distance(benchmark::State& state) {
  fdaclust::Rng rng(7);
  const auto a = random_sequence(rng, static_cast<int>(state.range(0)));
  const auto b = random_sequence(rng, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(fdaclust::dtw_distance(a, b));
}
BENCHMARK(bm_dtw_distance)->Arg(101)->Arg(301);

void bm_basis_fit(benchmark::State& state) {
  const auto cohort = fdaclust::generate_cohort(fdaclust::CohortSpec::default_spec());
  const auto basis = fdaclust::make_basis(4, fdaclust::equispaced_interior_knots(9));
  const auto& curve = cohort.curves().front();
  for (auto _ : state) benchmark::DoNotOptimize(fdaclust::fit(basis, curve));
}
BENCHMARK(bm_basis_fit);

void bm_fit_fpca(benchmark::State& state) {
  auto spec = fdaclust::CohortSpec::default_spec();
  spec.seed = 11;
  const auto cohort = fdaclust::generate_cohort(spec);
  const auto basis = fdaclust::make_basis(4, fdaclust::equispaced_interior_knots(9));
  std::vector<fdaclust::FunctionalDatum> data;
  for (const auto& curve : cohort.curves()) data.push_back(fdaclust::fit(basis, curve));
  for (auto _ : state) benchmark::DoNotOptimize(fdaclust::fit_fpca(data));
}
BENCHMARK(bm_fit_fpca);

void bm_kmeans(benchmark::State& state) {
  fdaclust::Rng rng(3);
  Eigen::MatrixXd items(120, 6);
  for (Eigen::Index i = 0; i < items.rows(); ++i)
    for (Eigen::Index j = 0; j < items.cols(); ++j) items(i, j) = rng.gaussian();
  for (auto _ : state) benchmark::DoNotOptimize(fdaclust::kmeans(items, 4, 5));
}
BENCHMARK(bm_kmeans);

}  // namespace

BENCHMARK_MAIN();
