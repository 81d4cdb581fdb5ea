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

// Acceptance checks. Prints one [PASS]/[FAIL] line per criterion; with
// `--only <id>` runs a single criterion and exits non-zero when it fails.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include "xverify/bits.hpp"
#include "xverify/graphs.hpp"
#include "xverify/harness.hpp"
#include "xverify/patterns.hpp"
#include "xverify/rng.hpp"
#include "xverify/simulator.hpp"
#include "xverify/verifier.hpp"

#include "models.hpp"

namespace {

using namespace xverify;
namespace fs = std::filesystem;
constexpr double kPi = std::numbers::pi;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char *f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

AngleSet golden_angles() {
    const double alpha[] = {3 * kPi / 4, 7 * kPi / 3, kPi / 3, 0, 2 * kPi / 3, kPi};
    AngleSet a;
    for (int v = 1; v <= 6; ++v) a.set(v, alpha[v - 1]);
    return a;
}

RandomizationBits golden_bits() {
    RandomizationBits bits;
    bits.k = {{1, 1}, {2, 0}, {3, 0}, {4, 0}, {5, 1}, {6, 0}};
    bits.r = {{2, 0}, {5, 1}, {6, 1}};
    return bits;
}

int threads() { return static_cast<int>(std::max(1U, std::thread::hardware_concurrency())); }

fs::path workdir(const std::string &tag) {
    const fs::path dir = fs::temp_directory_path() / ("xverify_acceptance_" + std::to_string(::getpid())) / tag;
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

DeviceConfig local(const std::string &id, const std::string &flow, double depolarizing) {
    DeviceConfig c;
    c.device_id = id;
    c.flow_id = flow;
    c.noise.depolarizing = depolarizing;
    return c;
}

/// H6 pair: ideal flow-a device against a flow-b device with global depolarizing.
ExperimentPlan h6_plan(std::uint64_t seed) {
    ExperimentPlan plan;
    plan.graph = builtin_graph("H6");
    plan.participants = {{"ideal", "flow-a"}, {"noisy", "flow-b"}};
    plan.instance_count = 34;
    plan.comparison_subset = 34;
    plan.shots = 10000;
    plan.jobs_per_instance = 4;
    plan.seed = seed;
    return plan;
}

DeviceRegistry h6_registry(double lambda) { return {{local("ideal", "flow-a", 0.0), local("noisy", "flow-b", lambda)}}; }

// ---------------------------------------------------------------------------

Outcome golden_example() {
    const auto h6 = builtin_graph("H6");
    const std::vector<double> want_a{0.207, 0.393, 0.043, 0.357};
    const std::vector<double> want_b{0.179, 0.021, 0.196, 0.104, 0.060, 0.064, 0.065, 0.311};
    const auto pa = exact_distribution(compile_to_circuit(h6.graph, h6.flow("flow-a"), golden_angles()));
    const AngleSet rewritten = rewrite_angles(h6.graph, h6.flow("flow-b"), golden_angles(), golden_bits());
    const auto pb = exact_distribution(compile_to_circuit(h6.graph, h6.flow("flow-b"), rewritten));
    double worst = 0.0;
    for (std::size_t i = 0; i < want_a.size(); ++i) worst = std::max(worst, std::abs(pa[i] - want_a[i]));
    for (std::size_t i = 0; i < want_b.size(); ++i) worst = std::max(worst, std::abs(pb[i] - want_b[i]));
    return {worst <= 5e-4, fmt("max deviation %.2e (tolerance 5.0e-04)", worst)};
}

Outcome relation_identity() {
    const std::vector<std::pair<std::string, double>> graphs{{"H6", 2}, {"BOX_2x4", 4}, {"BOX_2x5", 8}};
    double worst = 0.0;
    bool scales_ok = true;
    std::string scales;
    for (const auto &[name, expected_scale] : graphs) {
        const auto g = builtin_graph(name);
        const auto rel = relate_outcomes(g.graph, g.flows[0], g.flows[1]);
        scales_ok = scales_ok && rel.scale() == expected_scale;
        scales += fmt("%s%s x%g", scales.empty() ? "" : ", ", name.c_str(), rel.scale());
        const auto related = related_outcomes(rel);
        for (std::uint64_t s = 0; s < 100; ++s) {
            const AngleSet a = random_instance(g.graph, pi_over_4_grid(), derive_seed(s, {hash_tag(name)}));
            auto reference = [&](Side side) {
                const FlowSpec &f = rel.flow(side);
                return exact_distribution(
                    compile_to_circuit(g.graph, f, branch_angles(g.graph, f, a, rel.reference_outcomes(side))));
            };
            const auto qa = reference(Side::kA);
            const auto qb = reference(Side::kB);
            for (const auto &r : related) worst = std::max(worst, std::abs(qa[r.a_index] - rel.scale() * qb[r.b_index]));
        }
    }
    return {scales_ok && worst <= 1e-12,
            fmt("max |Pr_A - scale*Pr_B| %.2e (tolerance 1e-12); scales %s", worst, scales.c_str())};
}

Outcome rewrite_golden() {
    const auto h6 = builtin_graph("H6");
    const FlowSpec &fb = h6.flow("flow-b");
    const AngleSet rewritten = rewrite_angles(h6.graph, fb, golden_angles(), golden_bits());
    const double expected[] = {5 * kPi / 4, 7 * kPi / 3, 7 * kPi / 3, 0, kPi / 3, 0};
    double angle_error = 0.0;
    for (int v = 1; v <= 6; ++v) angle_error = std::max(angle_error, angle_distance(rewritten.at(v), expected[v - 1]));

    const auto pa = exact_distribution(compile_to_circuit(h6.graph, h6.flow("flow-a"), golden_angles()));
    const auto pb = exact_distribution(compile_to_circuit(h6.graph, fb, rewritten));
    // Pr(a1 a2)_a = 2 Pr(b2 b5 b6)_b with b5 b6 = NOT(a1 a2) and b2 = 0.
    const std::uint64_t partner[] = {0b011, 0b010, 0b001, 0b000};
    double worst = 0.0;
    for (std::uint64_t a = 0; a < 4; ++a) worst = std::max(worst, std::abs(pa[a] - 2 * pb[partner[a]]));
    return {angle_error <= 1e-12 && worst <= 1e-12,
            fmt("angle error %.1e, masked relation error %.2e (tolerance 1e-12)", angle_error, worst)};
}

Outcome depolarization_anchor() {
    const auto h6 = builtin_graph("H6");
    const FlowSpec &fa = h6.flow("flow-a");
    NoiseModel full;
    full.depolarizing = 1.0;
    double sum_sq = 0.0, sum_norm = 0.0;
    const int n = 200;
    for (int i = 0; i < n; ++i) {
        const AngleSet a = random_instance(h6.graph, pi_over_4_grid(), derive_seed(2024, {hash_tag("anchor"), std::uint64_t(i)}));
        const auto ideal = exact_distribution(compile_to_circuit(h6.graph, fa, a));
        const auto mixed = apply_noise(ideal, full);
        double d = 0.0;
        for (std::uint64_t b = 0; b < ideal.size(); ++b) d += (ideal[b] - mixed[b]) * (ideal[b] - mixed[b]);
        sum_sq += d;
        sum_norm += std::sqrt(d);
    }
    const double mean = sum_sq / n;
    return {std::abs(mean - 0.428) <= 0.05,
            fmt("mean squared l2 %.4f vs 0.428 +- 0.05 (mean unsquared distance %.4f)", mean, sum_norm / n)};
}

Outcome estimator_consistency() {
    std::string detail;
    bool pass = true;
    for (double lambda : {0.0, 0.2}) {
        int agree = 0;
        const int reps = 50;
        for (int r = 0; r < reps; ++r) {
            const fs::path out = workdir(fmt("consistency_%g_%d", lambda, r));
            const auto report = run_experiment(h6_plan(100 + r), h6_registry(lambda), {out, threads()});
            const PairResult &p = report.pairs.at(0);
            if (std::abs(p.mean_l2 - p.mean_model_l2.value()) <= 4 * p.mean_l2_std_error) ++agree;
            fs::remove_all(out);
        }
        pass = pass && agree >= 48;  // >= 95% of 50
        detail += fmt("%slambda=%g: %d/%d within 4 SE", detail.empty() ? "" : "; ", lambda, agree, reps);
    }
    return {pass, detail + " (need >= 48/50 each)"};
}

Outcome uniform_floor() {
    bool pass = true;
    std::string detail;
    for (int n : {2, 3, 4, 5}) {
        const auto e = self_collision_estimate(sample_distribution(OutcomeDistribution::uniform(n), 100000, 7 + n));
        const double floor = std::ldexp(1.0, -n);
        const bool ok = std::abs(e.value - floor) <= 3 * e.std_error && sanity_classify(e, n) == SanityFlag::kUniformSuspect;
        pass = pass && ok;
        detail += fmt("%sn=%d %.3g sigma", detail.empty() ? "" : ", ", n, (e.value - floor) / e.std_error);
    }
    // Twice the floor: half the strings at weight 2/2^n.
    std::vector<double> half(16, 0.0);
    for (int i = 0; i < 8; ++i) half[2 * i] = 1.0 / 8;
    const auto pt = self_collision_estimate(sample_distribution(OutcomeDistribution(half), 100000, 3));
    const bool pt_ok = sanity_classify(pt, 4) == SanityFlag::kPorterThomasLike;
    return {pass && pt_ok, "uniform floor offsets " + detail + " (tolerance 3 sigma, flagged uniform-suspect); " +
                               fmt("2x-floor sampler flagged %s", std::string(to_string(sanity_classify(pt, 4))).c_str())};
}

// Model-exact mean l2 of the H6 calibration pair over the plan's instances.
double model_mean_l2(const ExperimentPlan &plan, double lambda) {
    const auto rel = relate_outcomes(plan.graph.graph, plan.graph.flow("flow-a"), plan.graph.flow("flow-b"));
    NoiseModel noise;
    noise.depolarizing = lambda;
    double sum = 0.0;
    for (int i = 0; i < plan.instance_count; ++i) {
        const AngleSet a = plan.instance(i);
        sum += l2_exact(models::model_pvector(plan.graph, rel, Side::kA, a, {}),
                        models::model_pvector(plan.graph, rel, Side::kB, a, noise))
                   .value;
    }
    return sum / plan.instance_count;
}

Outcome monotonic_in_lambda() {
    const ExperimentPlan plan = h6_plan(7);
    std::vector<double> values;
    for (int i = 0; i <= 10; ++i) values.push_back(model_mean_l2(plan, i / 10.0));
    bool increasing = true;
    for (std::size_t i = 1; i < values.size(); ++i) increasing = increasing && values[i] > values[i - 1];
    return {increasing, fmt("mean l2 over lambda 0..1: %.4f -> %.4f, strictly increasing: %s", values.front(),
                            values.back(), increasing ? "yes" : "no")};
}

Outcome calibrated_pair() {
    const ExperimentPlan plan = h6_plan(33);
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (model_mean_l2(plan, mid) < 0.033 ? lo : hi) = mid;
    }
    const double lambda = 0.5 * (lo + hi);
    const fs::path out = workdir("calibrated");
    const auto report = run_experiment(plan, h6_registry(lambda), {out, threads()});
    const PairResult &p = report.pairs.at(0);
    const double model = p.mean_model_l2.value();
    const bool pass = std::abs(model - 0.033) <= 1e-9 && std::abs(p.mean_l2 - 0.033) <= 4 * p.mean_l2_std_error;
    fs::remove_all(out);
    return {pass, fmt("lambda=%.4f, model l2 %.4f, estimate %s (tolerance 4 SE)", lambda, model,
                      format_uncertainty(p.mean_l2, p.mean_l2_std_error).c_str())};
}

Outcome tls_recovery() {
    int inside = 0, inside3 = 0;
    const int trials = 100;
    for (int t = 0; t < trials; ++t) {
        Rng rng(derive_seed(85, {std::uint64_t(t)}));
        std::vector<Point> pts;
        for (int i = 0; i < 136; ++i) {  // 34 instances x 4 outcomes
            const double x = 0.5 * rng.uniform();
            pts.push_back({x + 0.01 * rng.normal(), 0.85 * x + 0.01 * rng.normal()});
        }
        const auto r = total_least_squares(pts);
        inside += std::abs(r.slope - 0.85) <= r.slope_std_error ? 1 : 0;
        inside3 += std::abs(r.slope - 0.85) <= 3 * r.slope_std_error ? 1 : 0;
    }
    return {inside >= 90, fmt("slope within its 1-sigma interval in %d/%d trials (need >= 90; within 3 sigma: %d)", inside,
                              trials, inside3)};
}

Outcome fidelity_formula() {
    const std::vector<double> perfect(7, 1.0);
    const auto a = fidelity_lower_bound(perfect, 7);
    const auto b = fidelity_lower_bound_from_alpha(5.56, 7);
    const auto at = fidelity_lower_bound_from_alpha(5.0, 7);
    const auto above = fidelity_lower_bound_from_alpha(std::nextafter(5.0, 6.0), 7);
    const bool pass = a.f_min == 1.0 && std::abs(b.f_min - 0.64) <= 1e-12 && !at.bell_violation && above.bell_violation;
    return {pass, fmt("F(7,7)=%.6g, F(5.56)=%.6g, violation at M-2: %s, just above: %s", a.f_min, b.f_min,
                      at.bell_violation ? "yes" : "no", above.bell_violation ? "yes" : "no")};
}

Outcome determinism() {
    ExperimentPlan plan = h6_plan(9);
    plan.instance_count = 40;
    plan.comparison_subset = 34;
    const fs::path first = workdir("determinism_1");
    const fs::path second = workdir("determinism_2");
    run_experiment(plan, h6_registry(0.2), {first, 1});
    const int workers = std::max(4, threads());
    run_experiment(plan, h6_registry(0.2), {second, workers});
    std::size_t files = 0, differing = 0;
    for (const auto &entry : fs::recursive_directory_iterator(first)) {
        if (!entry.is_regular_file()) continue;
        ++files;
        if (slurp(entry.path()) != slurp(second / fs::relative(entry.path(), first))) ++differing;
    }
    const bool same_report = slurp(first / "report.json") == slurp(second / "report.json");
    fs::remove_all(first);
    fs::remove_all(second);
    return {same_report && differing == 0,
            fmt("report.json identical: %s; %zu/%zu persisted files differ (1 vs %d threads)", same_report ? "yes" : "no",
                differing, files, workers)};
}

struct Criterion {
    std::string id;
    std::string name;
    std::function<Outcome()> check;
    double max_seconds = 0.0;  // 0: no runtime bound
};

}  // namespace

int main(int argc, char **argv) {
    const std::vector<Criterion> criteria{
        {"1", "golden worked example", golden_example, 1.0},
        {"2", "relation identity", relation_identity, 30.0},
        {"3", "angle rewrite and masked relations", rewrite_golden, 0.0},
        {"4", "depolarization anchor", depolarization_anchor, 60.0},
        {"5", "estimator consistency", estimator_consistency, 0.0},
        {"6", "uniform floor and Porter-Thomas flags", uniform_floor, 0.0},
        {"7a", "l2 monotone in depolarizing strength", monotonic_in_lambda, 0.0},
        {"7b", "calibrated pair at l2 = 0.033", calibrated_pair, 0.0},
        {"7c", "TLS slope recovery", tls_recovery, 0.0},
        {"8", "fidelity bound formula", fidelity_formula, 0.0},
        {"9", "determinism", determinism, 0.0},
    };
    std::string only;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--only" && i + 1 < argc) {
            only = argv[++i];
        } else {
            std::fprintf(stderr, "usage: %s [--only <id>]\n", argv[0]);
            return 2;
        }
    }
    int failed = 0, ran = 0;
    for (const Criterion &c : criteria) {
        if (!only.empty() && c.id != only) continue;
        ++ran;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception &e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::string timing = fmt("%.2f s", seconds);
        if (c.max_seconds > 0) {
            timing += fmt(" (limit %g s)", c.max_seconds);
            if (seconds >= c.max_seconds) o.pass = false;
        }
        std::printf("[%s] %s %s: %s, %s\n", o.pass ? "PASS" : "FAIL", c.id.c_str(), c.name.c_str(), o.detail.c_str(),
                    timing.c_str());
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    fs::remove_all(fs::temp_directory_path() / ("xverify_acceptance_" + std::to_string(::getpid())));
    if (ran == 0) {
        std::fprintf(stderr, "unknown criterion '%s'\n", only.c_str());
        return 2;
    }
    return failed == 0 ? 0 : 1;
}
