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

// xverify: cross-check quantum devices through MBQC-related circuits.

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "xverify/harness.hpp"
#include "xverify/io.hpp"
#include "xverify/patterns.hpp"
#include "xverify/simulator.hpp"
#include "xverify/verifier.hpp"

namespace {

using namespace xverify;

struct PlanFlags {
    std::string graph = "H6";
    std::string devices;
    std::string plan_file;
    int instances = 200;
    std::optional<int> subset;  // default: min(34, instances)
    std::uint64_t shots = 10000;
    int jobs = 4;
    std::uint64_t seed = 1;
    bool allow_equal_width = false;
    bool no_blind = false;
    bool no_theory = false;
};

void add_plan_flags(CLI::App *cmd, PlanFlags &f, bool needs_devices) {
    cmd->add_option("--graph", f.graph, "Built-in graph name or graph JSON file")->capture_default_str();
    auto *d = cmd->add_option("--devices", f.devices, "Device registry JSON");
    if (needs_devices) d->required();
    cmd->add_option("--instances", f.instances, "Number of random angle instances")->capture_default_str();
    cmd->add_option("--subset", f.subset, "Instances averaged in the comparison (default: min(34, instances))");
    cmd->add_option("--shots", f.shots, "Shots per job")->capture_default_str();
    cmd->add_option("--jobs", f.jobs, "Jobs (random fixes) per instance and device")->capture_default_str();
    cmd->add_option("--seed", f.seed, "Master seed")->capture_default_str();
    cmd->add_flag("--allow-equal-width", f.allow_equal_width, "Also compare circuits of equal width");
    cmd->add_flag("--no-blind", f.no_blind, "Skip the random stabilizer/mask rewrite of jobs");
    cmd->add_flag("--no-theory", f.no_theory, "Skip noiseless-theory columns and distributions");
}

ExperimentPlan plan_from_flags(const PlanFlags &f, const DeviceRegistry *registry) {
    if (!f.plan_file.empty()) return plan_from_json(read_json_file(f.plan_file));
    ExperimentPlan plan;
    plan.graph = load_graph(f.graph);
    if (registry != nullptr) {
        for (const DeviceConfig &d : registry->devices) {
            const std::string flow = d.flow_id.empty() && !plan.graph.flows.empty() ? plan.graph.flows.front().id
                                                                                    : d.flow_id;
            plan.participants.push_back({d.device_id, flow});
        }
    }
    plan.instance_count = f.instances;
    plan.comparison_subset = f.subset.value_or(std::min(34, f.instances));
    plan.shots = f.shots;
    plan.jobs_per_instance = f.jobs;
    plan.seed = f.seed;
    plan.allow_equal_width = f.allow_equal_width;
    plan.blind = !f.no_blind;
    plan.theory = !f.no_theory;
    return plan;
}

void print_report(const CrossCheckReport &report) {
    std::printf("graph %s, %d instances (subset %d), %llu shots x %d jobs\n", report.graph.c_str(),
                report.instance_count, report.comparison_subset, static_cast<unsigned long long>(report.shots),
                report.jobs_per_instance);
    for (const PairResult &p : report.pairs) {
        std::printf("  %s vs %s: l2 = %s", p.a.label().c_str(), p.b.label().c_str(),
                    format_uncertainty(p.mean_l2, p.mean_l2_std_error).c_str());
        if (p.mean_model_l2) std::printf("  model %.4f", *p.mean_model_l2);
        if (p.regression) {
            std::printf("  slope %s", format_uncertainty(p.regression->slope, p.regression->slope_std_error).c_str());
        }
        if (!p.excluded.empty()) std::printf("  (%zu instances excluded)", p.excluded.size());
        std::printf("\n");
    }
    for (const DeviceSummary &d : report.devices) {
        std::printf("  %s mean vs others: %s over %d comparisons\n", d.participant.c_str(),
                    format_uncertainty(d.mean_l2, d.std_error).c_str(), d.comparisons);
    }
    for (const SanityRow &s : report.sanity) {
        std::printf("  %s self-collision %s (uniform %.4f): %s\n", s.participant.c_str(),
                    format_uncertainty(s.collision.value, s.collision.std_error).c_str(),
                    1.0 / static_cast<double>(1ULL << s.n_outputs), std::string(to_string(s.flag)).c_str());
    }
    if (!report.complete) std::printf("  verification data incomplete: fewer surviving instances than the subset\n");
}

int finish(const CrossCheckReport &report) {
    print_report(report);
    return report.complete ? 0 : 4;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Cross-check quantum devices by running MBQC-related circuits"};
    app.require_subcommand(1);

    PlanFlags flags;
    std::string out_dir = "out";
    int threads = static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));

    auto *plan_cmd = app.add_subcommand("plan", "Write an experiment plan");
    add_plan_flags(plan_cmd, flags, true);
    plan_cmd->add_option("--out", out_dir, "Output directory (plan.json is written here)")->capture_default_str();

    auto *run_cmd = app.add_subcommand("run", "Execute a plan against a device registry");
    add_plan_flags(run_cmd, flags, true);
    run_cmd->add_option("--plan", flags.plan_file, "Plan JSON (otherwise built from the flags)");
    run_cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
    run_cmd->add_option("--threads", threads, "Worker threads for job dispatch")->capture_default_str();

    std::string device_id;
    std::vector<std::string> flows;
    auto *self_cmd = app.add_subcommand("self-verify", "Compare two flows on one device");
    add_plan_flags(self_cmd, flags, true);
    self_cmd->add_option("--device", device_id, "Device id from the registry")->required();
    self_cmd->add_option("--flows", flows, "Two flow ids (default: the graph's first two)")->delimiter(',')->expected(2);
    self_cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
    self_cmd->add_option("--threads", threads, "Worker threads for job dispatch")->capture_default_str();

    std::optional<int> subset;
    std::vector<std::size_t> subsample_sizes;
    std::size_t subsample_trials = 1000;
    std::string report_path;
    auto *report_cmd = app.add_subcommand("report", "Recompute the report from persisted counts");
    report_cmd->add_option("--out", out_dir, "Run directory")->capture_default_str();
    report_cmd->add_option("--subset", subset, "Override the number of instances averaged");
    report_cmd->add_option("--report", report_path, "Where to write the report (default <out>/report.json)");
    report_cmd->add_option("--subsample", subsample_sizes, "Subset sizes for a convergence table")->delimiter(',');
    report_cmd->add_option("--trials", subsample_trials, "Random subsets per size")->capture_default_str();

    std::string plot_dir;
    auto *plots_cmd = app.add_subcommand("plots", "Write CSV plot data from a run directory");
    plots_cmd->add_option("--out", out_dir, "Run directory")->capture_default_str();
    plots_cmd->add_option("--plot-dir", plot_dir, "Destination (default <out>/plots)");

    std::string instance_file;
    auto *oracle_cmd = app.add_subcommand("oracle", "Noiseless exact distribution of an instance file");
    oracle_cmd->add_option("--instance", instance_file, "Instance JSON")->required()->check(CLI::ExistingFile);

    NoiseModel serve_noise;
    std::string serve_id = "external";
    auto *serve_cmd = app.add_subcommand("device-serve", "Serve the external-device protocol on stdin/stdout");
    serve_cmd->add_option("--device-id", serve_id, "Device id stamped on replies")->capture_default_str();
    serve_cmd->add_option("--depolarizing", serve_noise.depolarizing, "Global depolarizing strength");
    serve_cmd->add_option("--readout", serve_noise.readout_flip, "Per-wire readout flip probabilities")
        ->delimiter(',');
    serve_cmd->add_option("--noise-seed", serve_noise.seed, "Noise seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*plan_cmd) {
            const DeviceRegistry registry = registry_from_json(read_json_file(flags.devices));
            ExperimentPlan plan = plan_from_flags(flags, &registry);
            plan.validate();
            write_json_file(std::filesystem::path(out_dir) / "plan.json", plan_to_json(plan));
            std::printf("wrote %s/plan.json: %zu participants, %zu pairs\n", out_dir.c_str(), plan.participants.size(),
                        plan.pairs().size());
            return 0;
        }
        if (*run_cmd) {
            const DeviceRegistry registry = registry_from_json(read_json_file(flags.devices));
            const ExperimentPlan plan = plan_from_flags(flags, &registry);
            return finish(run_experiment(plan, registry, {out_dir, threads}));
        }
        if (*self_cmd) {
            const DeviceRegistry registry = registry_from_json(read_json_file(flags.devices));
            ExperimentPlan plan = plan_from_flags(flags, nullptr);
            if (flows.empty()) {
                if (plan.graph.flows.size() < 2) throw Error(ErrorKind::kPlanInvalid, "graph has fewer than two flows");
                flows = {plan.graph.flows[0].id, plan.graph.flows[1].id};
            }
            return finish(self_verify(plan, registry.find(device_id), flows[0], flows[1], {out_dir, threads}));
        }
        if (*report_cmd) {
            const CrossCheckReport report = build_report(out_dir, subset);
            const std::filesystem::path path =
                report_path.empty() ? std::filesystem::path(out_dir) / "report.json" : std::filesystem::path(report_path);
            write_json_file(path, report.to_json());
            const int code = finish(report);
            if (!subsample_sizes.empty()) {
                for (const PairResult &p : report.pairs) {
                    std::vector<double> values;
                    for (const InstanceResult &ir : p.instances) values.push_back(ir.l2.value);
                    std::vector<std::size_t> sizes;
                    for (std::size_t s : subsample_sizes) {
                        if (s <= values.size()) sizes.push_back(s);
                    }
                    std::printf("subsampling %s vs %s (%zu instances)\n  size      mean    spread  subsets\n",
                                p.a.label().c_str(), p.b.label().c_str(), values.size());
                    for (const SubsampleRow &row : subsample_analysis(values, sizes, subsample_trials, report.seed)) {
                        std::printf("  %4zu  %8.5f  %8.5f  %7zu%s\n", row.size, row.mean, row.spread, row.subsets,
                                    row.exhaustive ? " (all)" : "");
                    }
                }
            }
            return code;
        }
        if (*plots_cmd) {
            const CrossCheckReport report = build_report(out_dir);
            const std::filesystem::path dir =
                plot_dir.empty() ? std::filesystem::path(out_dir) / "plots" : std::filesystem::path(plot_dir);
            for (const auto &path : emit_plots(report, dir)) std::printf("wrote %s\n", path.c_str());
            return 0;
        }
        if (*oracle_cmd) {
            const InstanceFile inst = instance_from_json(read_json_file(instance_file));
            const FlowSpec &flow = inst.graph.flow(inst.flow_id);
            const AngleSet angles = rewrite_angles(inst.graph.graph, flow, inst.angles, inst.bits);
            const OutcomeDistribution d = exact_distribution(compile_to_circuit(inst.graph.graph, flow, angles));
            std::cout << distribution_csv(d);
            return 0;
        }
        if (*serve_cmd) {
            serve_noise.validate();
            serve_device(std::cin, std::cout, serve_id, serve_noise);
            return 0;
        }
    } catch (const Error &e) {
        std::fprintf(stderr, "xverify: %s\n", e.what());
        return exit_code(e.kind());
    } catch (const std::exception &e) {
        std::fprintf(stderr, "xverify: %s\n", e.what());
        return 1;
    }
    return 0;
}
