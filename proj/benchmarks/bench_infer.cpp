// Microbenchmarks for the symbolic layers: end-to-end guard synthesis per
// domain, the co-reachability core, and the differential oracle throughput.

#include <benchmark/benchmark.h>

#include "heapguard/crt/checks.hpp"
#include "heapguard/infer/guard.hpp"
#include "heapguard/sir/parser.hpp"

using namespace heapguard;

namespace {

const char* kFieldFlow = R"(
class A { int fi; }
class B { A fa; }
method m(A a, B b, int i) {
  local B r;
  r = new B;
  a.fi = i;
  r.fa = a;
  output low(b);
}
)";

const char* kDiamond = R"(
method f(int v) {
  local int l;
  l = 0;
  if (v == 0) goto OUT;
  l = 42;
  OUT: output low(l);
}
)";

const char* kWide = R"(
class P { int x; Q next; }
class Q { int y; }
method wide(P p0, P p1, P p2, Q q0, Q q1, Q q2, int s, int t) {
  local P a0;
  local P a1;
  local Q b0;
  local Q b1;
  a0 = new P;
  b0 = new Q;
  a0.next = b0;
  a1 = p0;
  b1 = q0;
  a1.x = s;
  b1.y = t;
  if (s > 0) goto MORE;
  t = t + 1;
  MORE: a0.x = t;
  p2.next = q2;
  output low(p0);
}
)";

void BM_synthesize(benchmark::State& state, const char* src, const char* method,
                   const char* domain) {
  sir::TypedProgram tp = sir::typecheck(sir::parse_program(src));
  for (auto _ : state) {
    infer::Guard g =
        infer::synthesize_guard(tp, method, heap::HeapFamily::by_name(domain), {});
    benchmark::DoNotOptimize(g.formula.node());
  }
}

void BM_encode_only(benchmark::State& state) {
  sir::TypedProgram tp = sir::typecheck(sir::parse_program(kWide));
  for (auto _ : state) {
    auto enc = scfg::encode_method(tp, "wide", heap::HeapFamily::deep(), {});
    benchmark::DoNotOptimize(enc.scfg.location_count());
  }
}

void BM_abstraction_check(benchmark::State& state) {
  for (auto _ : state) {
    crt::AbstractionCheckOptions opts;
    opts.trials = static_cast<uint64_t>(state.range(0));
    opts.seed = 7;
    auto r = crt::check_secure_abstraction("deep", opts);
    benchmark::DoNotOptimize(r.cases);
  }
}

}  // namespace

BENCHMARK_CAPTURE(BM_synthesize, field_flow_deep, kFieldFlow, "m", "deep");
BENCHMARK_CAPTURE(BM_synthesize, field_flow_shal, kFieldFlow, "m", "shal");
BENCHMARK_CAPTURE(BM_synthesize, field_flow_dumb, kFieldFlow, "m", "dumb");
BENCHMARK_CAPTURE(BM_synthesize, diamond_deep, kDiamond, "f", "deep");
BENCHMARK_CAPTURE(BM_synthesize, wide_deep, kWide, "wide", "deep");
BENCHMARK_CAPTURE(BM_synthesize, wide_dumb, kWide, "wide", "dumb");
BENCHMARK(BM_encode_only);
BENCHMARK(BM_abstraction_check)->Arg(50)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
