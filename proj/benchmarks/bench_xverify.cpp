// Copyright 2026 The xverify Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include <filesystem>
#include <string>

#include <unistd.h>

#include "xverify/graphs.hpp"
#include "xverify/harness.hpp"
#include "xverify/patterns.hpp"
#include "xverify/rng.hpp"
#include "xverify/simulator.hpp"
#include "xverify/verifier.hpp"

namespace {

using namespace xverify;

// Brickwork of J and CZ gates on `wires` wires.
Circuit layered_circuit(int wires, int layers, std::uint64_t seed) {
    Rng rng(seed);
    Circuit c(wires);
    for (int l = 0; l < layers; ++l) {
        for (int w = 0; w < wires; ++w) c.j(w, kTwoPi * rng.uniform());
        for (int w = l % 2; w + 1 < wires; w += 2) c.cz(w, w + 1);
    }
    return c;
}

void BM_ExactDistribution(benchmark::State &state) {
    const Circuit c = layered_circuit(static_cast<int>(state.range(0)), 8, 1);
    for (auto _ : state) benchmark::DoNotOptimize(exact_distribution(c));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ExactDistribution)->DenseRange(2, kMaxWires, 2);

void BM_Sample(benchmark::State &state) {
    const OutcomeDistribution d = exact_distribution(layered_circuit(6, 8, 2));
    const auto shots = static_cast<std::uint64_t>(state.range(0));
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(sample_distribution(d, shots, ++seed));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Sample)->RangeMultiplier(10)->Range(1000, 1000000);

void BM_CompilePattern(benchmark::State &state) {
    const auto g = builtin_graph("BOX_2x5");
    const AngleSet a = random_instance(g.graph, pi_over_4_grid(), 3);
    for (auto _ : state) benchmark::DoNotOptimize(compile_to_circuit(g.graph, g.flows[1], a));
}
BENCHMARK(BM_CompilePattern);

std::vector<FixedJob> jobs_for(const BuiltinGraph &g, const RelationSpec &rel, Side side, std::uint64_t shots,
                               std::uint64_t seed) {
    const AngleSet a = random_instance(g.graph, pi_over_4_grid(), 5);
    const FlowSpec &flow = rel.flow(side);
    const auto fixed = rel.fixed_positions(side);
    Rng rng(seed);
    std::vector<FixedJob> out;
    for (int j = 0; j < 4; ++j) {
        std::map<Vertex, int> outcomes;
        std::vector<int> fix;
        for (Vertex v : fixed) {
            fix.push_back(rng.bit());
            outcomes[v] = fix.back();
        }
        const Circuit c = compile_to_circuit(g.graph, flow, branch_angles(g.graph, flow, a, outcomes));
        out.push_back({sample(c, shots, {}, rng.next()), fix});
    }
    return out;
}

void BM_L2CollisionEstimate(benchmark::State &state) {
    const auto g = builtin_graph("BOX_2x5");
    const auto rel = relate_outcomes(g.graph, g.flows[0], g.flows[1]);
    const auto shots = static_cast<std::uint64_t>(state.range(0));
    const auto a = jobs_for(g, rel, Side::kA, shots, 1);
    const auto b = jobs_for(g, rel, Side::kB, shots, 2);
    for (auto _ : state) benchmark::DoNotOptimize(l2_collision_estimate(a, b, rel));
}
BENCHMARK(BM_L2CollisionEstimate)->RangeMultiplier(10)->Range(1000, 100000);

void BM_SelfCollision(benchmark::State &state) {
    const CountsTable t = sample_distribution(OutcomeDistribution::uniform(10), 100000, 4);
    for (auto _ : state) benchmark::DoNotOptimize(self_collision_estimate(t));
}
BENCHMARK(BM_SelfCollision);

void BM_TotalLeastSquares(benchmark::State &state) {
    Rng rng(6);
    std::vector<Point> pts;
    for (int i = 0; i < state.range(0); ++i) {
        const double x = rng.uniform();
        pts.push_back({x + 0.01 * rng.normal(), 0.85 * x + 0.01 * rng.normal()});
    }
    for (auto _ : state) benchmark::DoNotOptimize(total_least_squares(pts));
}
BENCHMARK(BM_TotalLeastSquares)->Arg(136)->Arg(1000);

void BM_HarnessRun(benchmark::State &state) {
    ExperimentPlan plan;
    plan.graph = builtin_graph("H6");
    plan.participants = {{"ideal", "flow-a"}, {"noisy", "flow-b"}};
    plan.instance_count = 34;
    plan.comparison_subset = 34;
    plan.shots = 10000;
    DeviceConfig ideal{"ideal", Backend::kLocal, "flow-a", {}, {}, {}};
    DeviceConfig noisy{"noisy", Backend::kLocal, "flow-b", {}, {}, {}};
    noisy.noise.depolarizing = 0.2;
    const auto out = std::filesystem::temp_directory_path() / ("xverify_bench_" + std::to_string(::getpid()));
    for (auto _ : state) benchmark::DoNotOptimize(run_experiment(plan, {{ideal, noisy}}, {out, 1}));
    std::filesystem::remove_all(out);
}
BENCHMARK(BM_HarnessRun)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
