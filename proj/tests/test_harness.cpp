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

#include "xverify/harness.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>

#include "xverify/error.hpp"

using namespace xverify;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

fs::path scratch(const std::string &name) {
    const fs::path dir = fs::temp_directory_path() / ("xverify_harness_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

ExperimentPlan small_plan(int instances = 6, int subset = 6) {
    ExperimentPlan plan;
    plan.graph = builtin_graph("H6");
    plan.participants = {{"dev-a", "flow-a"}, {"dev-b", "flow-b"}};
    plan.instance_count = instances;
    plan.comparison_subset = subset;
    plan.shots = 1500;
    plan.jobs_per_instance = 2;
    plan.seed = 11;
    return plan;
}

DeviceConfig local(const std::string &id, const std::string &flow, double depolarizing = 0.0) {
    DeviceConfig c;
    c.device_id = id;
    c.flow_id = flow;
    c.noise.depolarizing = depolarizing;
    return c;
}

DeviceRegistry local_registry() { return {{local("dev-a", "flow-a"), local("dev-b", "flow-b")}}; }

ErrorKind kind_of(const std::function<void()> &f) {
    try {
        f();
    } catch (const Error &e) {
        return e.kind();
    }
    return ErrorKind::kEmptyGrid;  // sentinel: nothing thrown
}

int run_cli(const std::string &args) {
    const std::string cmd = std::string(XVERIFY_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Harness, NoiselessPairIsConsistentWithZero) {
    const fs::path out = scratch("noiseless");
    const auto report = run_experiment(small_plan(), local_registry(), {out, 2});
    ASSERT_EQ(report.pairs.size(), 1u);
    const PairResult &p = report.pairs[0];
    EXPECT_EQ(p.a.label(), "dev-a:flow-a");
    EXPECT_EQ(p.b.label(), "dev-b:flow-b");
    EXPECT_EQ(p.n_c, 2);
    EXPECT_EQ(p.n_v, 3);
    EXPECT_EQ(p.scale_exponent, 1);
    EXPECT_TRUE(report.complete);
    EXPECT_LT(std::abs(p.mean_l2), 4 * p.mean_l2_std_error);
    ASSERT_TRUE(p.mean_model_l2.has_value());
    EXPECT_NEAR(*p.mean_model_l2, 0.0, 1e-14);
    // Noiseless model distributions lie exactly on the diagonal; one row per
    // side-A outcome at the reference fix.
    ASSERT_EQ(p.scatter.size(), 6u * 4u);
    for (const auto &row : p.scatter) EXPECT_NEAR(row.x, row.y, 1e-12);
    ASSERT_TRUE(p.regression.has_value());
    EXPECT_NEAR(p.regression->slope, 1.0, 1e-9);
    EXPECT_NEAR(p.regression->intercept, 0.0, 1e-9);
    EXPECT_TRUE(fs::exists(out / "report.json"));
    EXPECT_TRUE(fs::exists(out / "instances" / "0005.json"));
    EXPECT_TRUE(fs::exists(out / "counts" / "dev-b" / "p0-b-i0005-j1.json"));
}

TEST(Harness, DepolarizedPartnerIsDetected) {
    const fs::path out = scratch("noisy");
    DeviceRegistry reg{{local("dev-a", "flow-a"), local("dev-b", "flow-b", 0.5)}};
    ExperimentPlan plan = small_plan(10, 10);
    plan.shots = 5000;
    const auto report = run_experiment(plan, reg, {out, 2});
    const PairResult &p = report.pairs[0];
    ASSERT_TRUE(p.mean_model_l2.has_value());
    EXPECT_GT(*p.mean_model_l2, 0.005);
    EXPECT_NEAR(p.mean_l2, *p.mean_model_l2, 4 * p.mean_l2_std_error);
    ASSERT_TRUE(p.regression.has_value());
    EXPECT_LT(p.regression->slope, 1.0);
    ASSERT_TRUE(p.mean_b_vs_ideal.has_value());
    EXPECT_GT(*p.mean_b_vs_ideal, *p.mean_a_vs_ideal);  // distance from the ideal
}

TEST(Harness, BlindedCountsArePersistedMasked) {
    const fs::path out = scratch("masked");
    run_experiment(small_plan(), local_registry(), {out, 1});
    const Json manifest = read_json_file(out / "jobs.json");
    int masked = 0;
    for (const Json &j : manifest.at("jobs")) {
        for (int m : j.at("mask").get<std::vector<int>>()) masked += m;
    }
    EXPECT_GT(masked, 0);

    // Unblinded run of the same plan: different persisted counts, same physics.
    ExperimentPlan plain = small_plan();
    plain.blind = false;
    const fs::path out2 = scratch("unmasked");
    const auto report = run_experiment(plain, local_registry(), {out2, 1});
    EXPECT_LT(std::abs(report.pairs[0].mean_l2), 4 * report.pairs[0].mean_l2_std_error);
}

TEST(Harness, ReportIsIndependentOfThreadCount) {
    const fs::path one = scratch("t1");
    const fs::path four = scratch("t4");
    run_experiment(small_plan(), local_registry(), {one, 1});
    run_experiment(small_plan(), local_registry(), {four, 4});
    EXPECT_EQ(slurp(one / "report.json"), slurp(four / "report.json"));
    EXPECT_EQ(slurp(one / "jobs.json"), slurp(four / "jobs.json"));
    EXPECT_EQ(slurp(one / "counts" / "dev-a" / "p0-a-i0003-j0.json"),
              slurp(four / "counts" / "dev-a" / "p0-a-i0003-j0.json"));
    // The report is a pure function of the persisted files.
    const auto again = build_report(one);
    EXPECT_EQ(again.to_json().dump(2) + "\n", slurp(one / "report.json"));
}

TEST(Harness, ReplayDeviceReproducesARun) {
    const fs::path live = scratch("live");
    const auto original = run_experiment(small_plan(), local_registry(), {live, 2});
    DeviceRegistry replay;
    for (const std::string id : {"dev-a", "dev-b"}) {
        DeviceConfig c;
        c.device_id = id;
        c.backend = Backend::kReplay;
        c.flow_id = id == std::string("dev-a") ? "flow-a" : "flow-b";
        c.replay_dir = live / "counts" / id;
        replay.devices.push_back(c);
    }
    const fs::path out = scratch("replayed");
    const auto replayed = run_experiment(small_plan(), replay, {out, 2});
    EXPECT_EQ(replayed.pairs[0].mean_l2, original.pairs[0].mean_l2);
    EXPECT_EQ(replayed.pairs[0].mean_l2_std_error, original.pairs[0].mean_l2_std_error);

    fs::remove(live / "counts" / "dev-b" / "p0-b-i0002-j1.json");
    try {
        run_experiment(small_plan(), replay, {scratch("replay_missing"), 2});
        FAIL() << "expected DeviceFailure";
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::kDeviceFailure);
        EXPECT_NE(std::string(e.what()).find("p0-b-i0002-j1"), std::string::npos) << e.what();
    }
}

TEST(Harness, ExternalDeviceMatchesLocalSampling) {
    const fs::path live = scratch("ext_local");
    run_experiment(small_plan(), local_registry(), {live, 1});
    DeviceConfig ext;
    ext.device_id = "dev-b";
    ext.backend = Backend::kExternal;
    ext.flow_id = "flow-b";
    ext.command = {XVERIFY_CLI, "device-serve", "--device-id", "dev-b"};
    const fs::path out = scratch("ext");
    const auto report = run_experiment(small_plan(), DeviceRegistry{{local("dev-a", "flow-a"), ext}}, {out, 3});
    // Same seeds, same sampler: identical counts, so identical estimates.
    for (const auto &entry : fs::directory_iterator(live / "counts" / "dev-b")) {
        EXPECT_EQ(slurp(entry.path()), slurp(out / "counts" / "dev-b" / entry.path().filename())) << entry.path();
    }
    const auto local_report = build_report(live);
    EXPECT_EQ(report.pairs[0].mean_l2, local_report.pairs[0].mean_l2);
    EXPECT_EQ(report.pairs[0].mean_l2_std_error, local_report.pairs[0].mean_l2_std_error);
    EXPECT_FALSE(report.pairs[0].mean_model_l2.has_value());  // no noise model for an external device
}

TEST(Harness, FailingExternalDeviceIsAuditedAndExcluded) {
    DeviceConfig ext;
    ext.device_id = "dev-b";
    ext.backend = Backend::kExternal;
    ext.flow_id = "flow-b";
    ext.command = {"/bin/false"};
    const fs::path out = scratch("ext_fail");
    const auto report = run_experiment(small_plan(), DeviceRegistry{{local("dev-a", "flow-a"), ext}}, {out, 2});
    EXPECT_FALSE(report.complete);
    ASSERT_EQ(report.audit.size(), 6u * 2u);
    for (const auto &a : report.audit) {
        EXPECT_EQ(a.device_id, "dev-b");
        EXPECT_EQ(a.attempts, 3);
        EXPECT_FALSE(a.error.empty());
    }
    EXPECT_EQ(report.pairs[0].excluded.size(), 6u);
    EXPECT_TRUE(report.pairs[0].instances.empty());
}

TEST(Harness, InvalidPlans) {
    auto invalid = [](const std::function<void(ExperimentPlan &)> &edit) {
        ExperimentPlan plan = small_plan();
        edit(plan);
        return kind_of([&] { plan.validate(); });
    };
    EXPECT_EQ(invalid([](auto &p) { p.participants.pop_back(); }), ErrorKind::kPlanInvalid);
    EXPECT_EQ(invalid([](auto &p) { p.participants[1] = p.participants[0]; }), ErrorKind::kPlanInvalid);
    EXPECT_EQ(invalid([](auto &p) { p.participants[0].device_id = "bad/id"; }), ErrorKind::kPlanInvalid);
    EXPECT_EQ(invalid([](auto &p) { p.comparison_subset = 7; }), ErrorKind::kPlanInvalid);
    EXPECT_EQ(invalid([](auto &p) { p.comparison_subset = 0; }), ErrorKind::kPlanInvalid);
    EXPECT_EQ(invalid([](auto &p) { p.shots = 2; }), ErrorKind::kPlanInvalid);
    EXPECT_EQ(invalid([](auto &p) { p.jobs_per_instance = 0; }), ErrorKind::kPlanInvalid);
    EXPECT_EQ(invalid([](auto &p) { p.participants[1].flow_id = "flow-a"; }), ErrorKind::kPlanInvalid);
    EXPECT_EQ(invalid([](auto &p) {
                  p.participants[1].flow_id = "flow-a";
                  p.allow_equal_width = true;
              }),
              ErrorKind::kEmptyGrid);  // valid
    EXPECT_NE(invalid([](auto &p) { p.participants[1].flow_id = "flow-z"; }), ErrorKind::kEmptyGrid);
    EXPECT_EQ(kind_of([] { run_experiment(small_plan(), DeviceRegistry{{local("dev-a", "flow-a")}}, {scratch("noreg"), 1}); }),
              ErrorKind::kPlanInvalid);
}

TEST(Harness, PlansRoundTrip) {
    ExperimentPlan plan = small_plan();
    plan.instances = {random_instance(plan.graph.graph, plan.grid, 1)};
    plan.instance_count = 1;
    plan.comparison_subset = 1;
    const ExperimentPlan back = plan_from_json(plan_to_json(plan));
    EXPECT_EQ(plan_to_json(back).dump(), plan_to_json(plan).dump());
    EXPECT_TRUE(back.instance(0).equivalent(plan.instance(0)));
}

TEST(Harness, PlotsNeedDistributions) {
    ExperimentPlan plan = small_plan();
    plan.theory = false;
    const fs::path out = scratch("notheory");
    const auto report = run_experiment(plan, local_registry(), {out, 1});
    EXPECT_FALSE(report.pairs[0].mean_model_l2.has_value());
    EXPECT_TRUE(report.pairs[0].scatter.empty());
    EXPECT_EQ(kind_of([&] { emit_plots(report, out / "plots"); }), ErrorKind::kMissingDistributions);
    EXPECT_FALSE(fs::exists(out / "plots"));

    const fs::path full = scratch("theory");
    const auto with = run_experiment(small_plan(), local_registry(), {full, 1});
    const auto files = emit_plots(with, full / "plots");
    EXPECT_FALSE(files.empty());
    for (const auto &f : files) EXPECT_TRUE(fs::exists(f)) << f;
}

TEST(Harness, GoldenInstanceScatterRow) {
    ExperimentPlan plan = small_plan(1, 1);
    AngleSet golden;
    const double alpha[] = {3 * kPi / 4, 7 * kPi / 3, kPi / 3, 0, 2 * kPi / 3, kPi};
    for (int v = 1; v <= 6; ++v) golden.set(v, alpha[v - 1]);
    plan.instances = {golden};
    const auto report = run_experiment(plan, local_registry(), {scratch("golden"), 1});
    const auto &scatter = report.pairs[0].scatter;
    ASSERT_FALSE(scatter.empty());
    bool found = false;
    for (const auto &row : scatter) {
        if (row.a_bits != "00") continue;
        found = true;
        EXPECT_NEAR(row.x, 0.2075, 5e-4);
        EXPECT_NEAR(row.y, 2 * 0.1037, 5e-4);
    }
    EXPECT_TRUE(found);
}

TEST(Harness, MissingCountsMakeTheReportIncomplete) {
    const fs::path out = scratch("incomplete");
    run_experiment(small_plan(), local_registry(), {out, 1});
    fs::remove(out / "counts" / "dev-a" / "p0-a-i0001-j0.json");
    EXPECT_EQ(kind_of([&] { build_report(out); }), ErrorKind::kIncompleteData);
}

TEST(Harness, SelfVerifyOneDeviceTwoFlows) {
    const auto report = self_verify(small_plan(), local("solo", "flow-a"), "flow-a", "flow-b", {scratch("self"), 2});
    ASSERT_EQ(report.pairs.size(), 1u);
    EXPECT_EQ(report.pairs[0].a.label(), "solo:flow-a");
    EXPECT_EQ(report.pairs[0].b.label(), "solo:flow-b");
    EXPECT_LT(std::abs(report.pairs[0].mean_l2), 4 * report.pairs[0].mean_l2_std_error);
}

TEST(Harness, ExitCodes) {
    EXPECT_EQ(exit_code(ErrorKind::kPlanInvalid), 2);
    EXPECT_EQ(exit_code(ErrorKind::kDeviceFailure), 3);
    EXPECT_EQ(exit_code(ErrorKind::kIncompleteData), 4);
    EXPECT_EQ(exit_code(ErrorKind::kParse), 1);
}

TEST(Cli, ExitCodesAndRoundTrip) {
    const fs::path dir = scratch("cli");
    write_json_file(dir / "reg.json", registry_to_json(local_registry()));
    const std::string common = "--graph H6 --devices " + (dir / "reg.json").string() +
                               " --instances 4 --subset 4 --shots 500 --jobs 2";
    ASSERT_EQ(run_cli("run " + common + " --out " + (dir / "run").string()), 0);
    EXPECT_TRUE(fs::exists(dir / "run" / "report.json"));
    EXPECT_EQ(run_cli("report --out " + (dir / "run").string() + " --report " + (dir / "again.json").string()), 0);
    EXPECT_EQ(slurp(dir / "run" / "report.json"), slurp(dir / "again.json"));
    EXPECT_EQ(run_cli("plots --out " + (dir / "run").string()), 0);
    EXPECT_EQ(run_cli("oracle --instance " + (dir / "run" / "instances" / "0000.json").string()), 0);

    EXPECT_EQ(run_cli("run --graph H6 --devices " + (dir / "reg.json").string() +
                      " --instances 4 --subset 9 --out " + (dir / "bad").string()),
              2);
    fs::remove(dir / "run" / "counts" / "dev-a" / "p0-a-i0000-j0.json");
    EXPECT_EQ(run_cli("report --out " + (dir / "run").string()), 4);

    DeviceRegistry replay{{local("dev-a", "flow-a")}};
    DeviceConfig r;
    r.device_id = "dev-b";
    r.backend = Backend::kReplay;
    r.flow_id = "flow-b";
    r.replay_dir = dir / "nowhere";
    replay.devices.push_back(r);
    write_json_file(dir / "replay.json", registry_to_json(replay));
    EXPECT_EQ(run_cli("run --graph H6 --devices " + (dir / "replay.json").string() +
                      " --instances 2 --subset 2 --shots 100 --jobs 1 --out " + (dir / "rp").string()),
              3);
}
