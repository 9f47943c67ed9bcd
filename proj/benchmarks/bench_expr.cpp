#include <benchmark/benchmark.h>

#include "llsp/expr.hpp"

namespace {

using namespace llsp;

void BM_parse(benchmark::State& state) {
  CoordSystem cs = CoordSystem::tangent_chart(2);
  const std::string src =
      "1/2*(u1^2 + u2^2) + sin(q1*q2)*u1 - exp(q2)*u2^3 + q1^4*q2";
  for (auto _ : state) {
    Expr e = parse(src, cs);
    benchmark::DoNotOptimize(e);
  }
}
BENCHMARK(BM_parse);

void BM_diff(benchmark::State& state) {
  CoordSystem cs = CoordSystem::tangent_chart(2);
  Expr e = parse("sin(q1*u2)*exp(q2) + (q1 + u1*q2)^4 - u2^3*q1*q2", cs);
  for (auto _ : state) {
    Expr d = diff(diff(e, 0), 2);
    benchmark::DoNotOptimize(d);
  }
}
BENCHMARK(BM_diff);

void BM_eval(benchmark::State& state) {
  CoordSystem cs = CoordSystem::tangent_chart(2);
  Expr e = parse("sin(q1*u2)*exp(q2) + (q1 + u1*q2)^4 - u2^3*q1*q2", cs);
  Point p{0.3, -0.7, 0.2, 0.9};
  for (auto _ : state) benchmark::DoNotOptimize(eval(e, p));
}
BENCHMARK(BM_eval);

}  // namespace
