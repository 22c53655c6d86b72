#include <benchmark/benchmark.h>

#include "hardbench/data.hpp"
#include "hardbench/trainer.hpp"

using namespace hardbench;

namespace {

struct Fixture {
  Dataset ds;
  Mlp model;

  explicit Fixture(std::size_t n) : ds(standardize(generate_blobs(n, 8, 4, 8.0, 1))) {
    MlpConfig cfg;
    cfg.seed = 2;
    model = Mlp(cfg, ds.dims(), ds.num_classes);
  }
};

template <bool Parallel>
void BM_RecordEpoch(benchmark::State& state) {
  const Fixture f(static_cast<std::size_t>(state.range(0)));
  DynamicsRecord rec = make_record(f.model, f.ds, 1, RecordOptions{});
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::record_epoch(f.model, f.ds, rec, 0, 0, true);
    else
      kernels::serial::record_epoch(f.model, f.ds, rec, 0, 0, true);
    benchmark::DoNotOptimize(rec.losses.values().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_McDropout(benchmark::State& state) {
  const Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    Tensor3 t = Parallel ? kernels::mc_dropout_proba(f.model, f.ds.features, 10, 3)
                         : kernels::serial::mc_dropout_proba(f.model, f.ds.features, 10, 3);
    benchmark::DoNotOptimize(t.values().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * 10);
}

}  // namespace

BENCHMARK(BM_RecordEpoch<false>)->Arg(1000)->Arg(10000);
BENCHMARK(BM_RecordEpoch<true>)->Arg(1000)->Arg(10000);
BENCHMARK(BM_McDropout<false>)->Arg(1000)->Arg(10000);
BENCHMARK(BM_McDropout<true>)->Arg(1000)->Arg(10000);

BENCHMARK_MAIN();
