#include <benchmark/benchmark.h>

#include <cmath>

#include "llsp/maslov.hpp"

namespace {

using namespace llsp;

struct CirclePair {
  ChartPtr chart;
  Calibrated cal;
  FramedLagrangian loop;

  CirclePair()
      : chart(std::make_shared<const CoordSystem>(CoordSystem::tangent_chart(1))),
        cal(),
        loop(make_loop()) {
    RunConfig cfg;
    cfg.samples = 20;
    PForm omega(chart, 2);
    omega.accumulate({1, 0}, rational(1));
    TangentStructure ts = canonical_tangent_structure(chart, cfg);
    cal = calibrate(ts.S, Splitting::coordinate(chart), omega, cfg);
  }

  FramedLagrangian make_loop() {
    auto params = std::make_shared<const CoordSystem>(CoordSystem({std::string("t")}));
    Expr t = coord(*params, 0);
    auto ambient = std::make_shared<const CoordSystem>(CoordSystem::tangent_chart(1));
    chart = ambient;
    return FramedLagrangian::from_immersion(params, ambient,
                                            {integer(2) * cos_e(t), sin_e(t)});
  }
};

void BM_maslov_loop(benchmark::State& state) {
  static CirclePair pair;
  RunConfig cfg;
  cfg.samples = 20;
  for (auto _ : state) {
    double v = first_maslov_loop(pair.loop, pair.cal, 2.0 * M_PI, cfg);
    benchmark::DoNotOptimize(v);
  }
}
BENCHMARK(BM_maslov_loop);

void BM_winding_oracle(benchmark::State& state) {
  static CirclePair pair;
  RunConfig cfg;
  cfg.samples = 20;
  for (auto _ : state) {
    WindingResult w = winding_oracle(pair.loop, pair.cal, 2.0 * M_PI, 720, cfg);
    benchmark::DoNotOptimize(w);
  }
}
BENCHMARK(BM_winding_oracle);

}  // namespace
