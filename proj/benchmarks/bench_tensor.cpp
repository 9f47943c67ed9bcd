#include <benchmark/benchmark.h>

#include "llsp/structures.hpp"
#include "llsp/tensor.hpp"

namespace {

using namespace llsp;

ChartPtr chart4() {
  static ChartPtr c = std::make_shared<const CoordSystem>(CoordSystem::tangent_chart(2));
  return c;
}

void BM_exterior_d(benchmark::State& state) {
  ChartPtr c = chart4();
  PForm w(c, 2);
  w.accumulate({0, 2}, parse("sin(q1)*u2 + q2^3", *c));
  w.accumulate({1, 3}, parse("exp(q1*q2)*u1", *c));
  w.accumulate({0, 1}, parse("q1*q2*u1*u2", *c));
  for (auto _ : state) {
    PForm d = exterior_d(w);
    benchmark::DoNotOptimize(d);
  }
}
BENCHMARK(BM_exterior_d);

void BM_schouten(benchmark::State& state) {
  ChartPtr c = chart4();
  Bivector p(c);
  p.set(0, 2, parse("q1 + q2^2", *c));
  p.set(1, 3, parse("cos(q1)", *c));
  p.set(0, 1, parse("u1*u2", *c));
  for (auto _ : state) {
    auto sq = schouten_square(p);
    benchmark::DoNotOptimize(sq);
  }
}
BENCHMARK(BM_schouten);

void BM_energy_hamiltonian(benchmark::State& state) {
  RunConfig cfg;
  cfg.samples = 20;
  ChartPtr c = chart4();
  LagrangianChart lc(c, parse("1/2*(u1^2 + u2^2) + q1*u1*u2/8 + q2^2*u1", *c));
  for (auto _ : state) {
    EnergyHamiltonian eh = energy_hamiltonian(lc, cfg);
    benchmark::DoNotOptimize(eh);
  }
}
BENCHMARK(BM_energy_hamiltonian);

}  // namespace
