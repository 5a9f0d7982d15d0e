#include <benchmark/benchmark.h>

#include <redslds/data.hpp>
#include <redslds/discrete_fb.hpp>
#include <redslds/gibbs.hpp>
#include <redslds/kalman_info.hpp>
#include <redslds/rand_dist.hpp>

using namespace redslds;

namespace {

// Shared fixture: REDSLDS sized like one NASCAR chunk.
struct Problem {
  ModelConfig config;
  ModelParams params;
  Simulation sim;
  PGSequence pg;

  Problem(int length, int max_duration) {
    config = ModelConfig::from_variant(Variant::kRedslds, 4, 2, 10, max_duration);
    Rng rng(1);
    const Priors pr = make_priors({}, config, Matrix::Identity(10, 10), Matrix::Identity(2, 2));
    params = sample_params_from_prior(pr, config, rng);
    for (auto& m : params.modes) {
      m.a_mat = 0.95 * Matrix::Identity(2, 2);
      m.q_cov = 0.01 * Matrix::Identity(2, 2);
    }
    sim = simulate(params, config, length, rng);
    pg = sample_pg_sequence(params, config, sim.traj, rng);
  }
};

void BM_SamplePG(benchmark::State& state) {
  Rng rng(2);
  const PGParams p{static_cast<int>(state.range(0)), 1.5};
  for (auto _ : state) benchmark::DoNotOptimize(sample_pg(p, rng));
}
BENCHMARK(BM_SamplePG)->Arg(1)->Arg(4);

void BM_ForwardFilter(benchmark::State& state) {
  const Problem pb(400, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(forward_filter(pb.params, pb.config, pb.sim.y, pb.sim.traj.x));
  state.SetItemsProcessed(state.iterations() * 400);
}
BENCHMARK(BM_ForwardFilter)->Arg(10)->Arg(50)->Arg(100);

void BM_BackwardSample(benchmark::State& state) {
  const Problem pb(400, 50);
  const auto lat = forward_filter(pb.params, pb.config, pb.sim.y, pb.sim.traj.x);
  Rng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(backward_sample(lat, pb.config, rng));
}
BENCHMARK(BM_BackwardSample);

void BM_BackwardInfoFilter(benchmark::State& state) {
  const Problem pb(400, 50);
  const auto& tr = pb.sim.traj;
  for (auto _ : state) benchmark::DoNotOptimize(backward_info_filter(pb.params, pb.config, pb.sim.y, tr.s, tr.d, pb.pg));
  state.SetItemsProcessed(state.iterations() * 400);
}
BENCHMARK(BM_BackwardInfoFilter);

void BM_Sweep(benchmark::State& state) {
  Rng gen(4, 0), split(4, 1);
  NascarOptions o;
  o.runs = 1;
  o.length = 2000;
  const Dataset ds = chunk_and_sample(generate_nascar(o, gen), 5, 0.8, split);
  const auto c = ModelConfig::from_variant(Variant::kRedslds, 4, 2, 10, static_cast<int>(state.range(0)));
  const Priors pr = make_priors({}, c, pooled_covariance(ds.sequences), Matrix::Identity(2, 2));
  ChainState st = initialize(ds.sequences, c, pr, {InitScheme::kInitII, 1, 0}, Rng(5));
  for (auto _ : state) sweep(st, ds.sequences, c, pr);
  state.SetItemsProcessed(state.iterations() * static_cast<long>(ds.total_points()));
}
BENCHMARK(BM_Sweep)->Arg(20)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
