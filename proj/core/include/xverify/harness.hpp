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

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "xverify/error.hpp"
#include "xverify/graphs.hpp"
#include "xverify/io.hpp"
#include "xverify/patterns.hpp"
#include "xverify/simulator.hpp"
#include "xverify/verifier.hpp"

namespace xverify {

// ---------------------------------------------------------------------------
// Devices

enum class Backend { kLocal, kReplay, kExternal };

std::string_view to_string(Backend backend);

/// One registry entry. `flow_id` is the flow the device runs in `run`.
struct DeviceConfig {
    std::string device_id;
    Backend backend = Backend::kLocal;
    std::string flow_id;
    NoiseModel noise;                      // local
    std::filesystem::path replay_dir;      // replay: holds <circuit_ref>.json
    std::vector<std::string> command;      // external: argv of the server
};

struct DeviceRegistry {
    std::vector<DeviceConfig> devices;

    /// Throws PlanInvalid.
    [[nodiscard]] const DeviceConfig &find(const std::string &device_id) const;
};

/// {"devices": [{"device_id", "backend": "local"|"replay"|"external",
///               "flow", "noise": {...}, "dir": "...", "command": [...]}]}
Json registry_to_json(const DeviceRegistry &registry);
DeviceRegistry registry_from_json(const Json &json);

struct JobRequest {
    std::string circuit_ref;
    Circuit circuit;
    std::uint64_t shots = 0;
    std::uint64_t seed = 0;
};

/// A device turns one job into a CountsTable with exactly `shots` shots over
/// the circuit's wires. Implementations are safe to call from several threads.
class Device {
   public:
    virtual ~Device() = default;

    [[nodiscard]] virtual const std::string &id() const = 0;
    /// Throws DeviceFailure.
    virtual CountsTable run(const JobRequest &job) = 0;
    /// Whether a failed job should be retried (and then excluded) rather than
    /// aborting the run.
    [[nodiscard]] virtual bool retryable() const { return false; }
};

/// Statevector simulation under a noise model.
class LocalDevice final : public Device {
   public:
    LocalDevice(std::string device_id, NoiseModel noise);

    [[nodiscard]] const std::string &id() const override { return id_; }
    CountsTable run(const JobRequest &job) override;
    [[nodiscard]] const NoiseModel &noise() const { return noise_; }

   private:
    std::string id_;
    NoiseModel noise_;
};

/// Serves previously persisted counts; a missing job is a DeviceFailure.
class ReplayDevice final : public Device {
   public:
    ReplayDevice(std::string device_id, std::filesystem::path directory);

    [[nodiscard]] const std::string &id() const override { return id_; }
    CountsTable run(const JobRequest &job) override;

   private:
    std::string id_;
    std::filesystem::path directory_;
};

/// Line-delimited JSON over a spawned command's stdin/stdout.
/// Request:  {"circuit_ref", "circuit", "shots", "seed"}
/// Response: a counts-table object, or {"error": "..."}.
/// The process is restarted after any failure.
class ExternalDevice final : public Device {
   public:
    ExternalDevice(std::string device_id, std::vector<std::string> command);
    ~ExternalDevice() override;
    ExternalDevice(const ExternalDevice &) = delete;
    ExternalDevice &operator=(const ExternalDevice &) = delete;

    [[nodiscard]] const std::string &id() const override { return id_; }
    CountsTable run(const JobRequest &job) override;
    [[nodiscard]] bool retryable() const override { return true; }

   private:
    void start();
    void stop();

    std::string id_;
    std::vector<std::string> command_;
    std::mutex mutex_;
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string buffer_;
};

std::unique_ptr<Device> make_device(const DeviceConfig &config);

/// Serves the external protocol on the given streams with a local simulator
/// until end of input. Malformed requests get {"error": ...} replies.
void serve_device(std::istream &in, std::ostream &out, const std::string &device_id, const NoiseModel &noise);

// ---------------------------------------------------------------------------
// Plans

/// A device running one flow.
struct Participant {
    std::string device_id;
    std::string flow_id;

    [[nodiscard]] std::string label() const { return device_id + ":" + flow_id; }
    bool operator==(const Participant &) const = default;
};

struct ExperimentPlan {
    BuiltinGraph graph;
    std::vector<Participant> participants;
    int instance_count = 200;
    int comparison_subset = 34;
    std::uint64_t shots = 10000;
    int jobs_per_instance = 4;
    std::vector<double> grid = pi_over_4_grid();
    std::uint64_t seed = 0;
    /// Compare participants whose circuits have the same width.
    bool allow_equal_width = false;
    /// Random stabilizer/mask rewrite of every job.
    bool blind = true;
    /// Noiseless-theory columns and persisted distributions (non-scalable).
    bool theory = true;
    /// Explicit instances; generated from `seed` and `grid` when empty.
    std::vector<AngleSet> instances;

    /// Throws PlanInvalid (or the graph/flow error that makes it invalid).
    void validate() const;
    /// Participant index pairs (a, b) to compare; a has no more outputs than b.
    [[nodiscard]] std::vector<std::pair<int, int>> pairs() const;
    [[nodiscard]] AngleSet instance(int index) const;
};

Json plan_to_json(const ExperimentPlan &plan);
ExperimentPlan plan_from_json(const Json &json);

// ---------------------------------------------------------------------------
// Reports

struct ScatterRow {
    int instance = 0;
    std::string a_bits;
    std::string b_bits;
    double x = 0.0;  // Pr_A(a)
    double y = 0.0;  // scale * Pr_B(b)
};

struct InstanceResult {
    int instance = 0;
    L2Estimate l2;
    std::optional<double> model_l2;    // exact, from the local noise models; theory only
    std::optional<double> a_vs_ideal;
    std::optional<double> b_vs_ideal;
};

struct PairResult {
    Participant a;
    Participant b;
    int n_c = 0;
    int n_v = 0;
    int scale_exponent = 0;
    std::vector<InstanceResult> instances;  // every surviving instance, ascending
    std::vector<int> subset;                // instances averaged, ascending
    std::vector<int> excluded;              // instances dropped after failures
    double mean_l2 = 0.0;
    double mean_l2_std_error = 0.0;  // statistical, from per-instance errors
    double instance_spread = 0.0;    // standard deviation across the subset
    std::optional<double> mean_model_l2;
    std::optional<double> mean_a_vs_ideal;
    std::optional<double> mean_b_vs_ideal;
    std::vector<ScatterRow> scatter;  // model distributions, subset instances
    std::optional<RegressionResult> regression;
};

struct DeviceSummary {
    std::string participant;
    double mean_l2 = 0.0;
    double std_error = 0.0;
    int comparisons = 0;
};

struct SanityRow {
    std::string participant;
    int n_outputs = 0;
    DotEstimate collision;
    SanityFlag flag = SanityFlag::kOther;
};

struct AuditRecord {
    std::string device_id;
    std::string circuit_ref;
    int pair = 0;
    int instance = 0;
    int attempts = 0;
    std::string error;
};

struct CrossCheckReport {
    std::string graph;
    std::uint64_t seed = 0;
    std::uint64_t shots = 0;
    int jobs_per_instance = 0;
    int instance_count = 0;
    int comparison_subset = 0;
    std::vector<PairResult> pairs;
    std::vector<DeviceSummary> devices;
    std::vector<SanityRow> sanity;
    std::vector<AuditRecord> audit;
    /// False when some pair has fewer surviving instances than the subset.
    bool complete = true;

    [[nodiscard]] Json to_json() const;
};

struct RunOptions {
    std::filesystem::path out_dir = "out";
    int threads = 1;
};

/// Generates instances, dispatches every job, persists
///   <out>/plan.json, <out>/devices.json, <out>/instances/<i>.json,
///   <out>/counts/<device>/<circuit_ref>.json, <out>/jobs.json, <out>/report.json
/// and returns the report recomputed from those files.
/// Throws PlanInvalid, DeviceFailure.
CrossCheckReport run_experiment(const ExperimentPlan &plan, const DeviceRegistry &registry,
                                const RunOptions &options);

/// Runs two flows of one device against each other.
CrossCheckReport self_verify(const ExperimentPlan &plan, const DeviceConfig &device, const std::string &flow_a,
                             const std::string &flow_b, const RunOptions &options);

/// Recomputes the report from persisted files only. `subset` overrides the
/// plan's comparison_subset. Throws IncompleteData.
CrossCheckReport build_report(const std::filesystem::path &out_dir, std::optional<int> subset = std::nullopt);

/// Writes scatter_<pair>.csv, regression_<pair>.csv and bars.csv. Throws
/// MissingDistributions (writing nothing) when no pair carries distributions.
std::vector<std::filesystem::path> emit_plots(const CrossCheckReport &report, const std::filesystem::path &out_dir);

/// CLI exit code for an error kind: 2 plan invalid, 3 device failure,
/// 4 verification data incomplete, 1 otherwise.
int exit_code(ErrorKind kind);

}  // namespace xverify
