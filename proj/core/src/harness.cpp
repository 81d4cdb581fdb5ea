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

#include <fcntl.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <array>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "xverify/bits.hpp"
#include "xverify/rng.hpp"

namespace xverify {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Registry

std::string_view to_string(Backend backend) {
    switch (backend) {
        case Backend::kLocal: return "local";
        case Backend::kReplay: return "replay";
        case Backend::kExternal: return "external";
    }
    return "unknown";
}

const DeviceConfig &DeviceRegistry::find(const std::string &device_id) const {
    for (const auto &d : devices) {
        if (d.device_id == device_id) return d;
    }
    throw Error(ErrorKind::kPlanInvalid, "device '" + device_id + "' is not in the registry");
}

Json registry_to_json(const DeviceRegistry &registry) {
    Json list = Json::array();
    for (const auto &d : registry.devices) {
        Json o{{"device_id", d.device_id}, {"backend", std::string(to_string(d.backend))}, {"flow", d.flow_id}};
        switch (d.backend) {
            case Backend::kLocal: o["noise"] = noise_to_json(d.noise); break;
            case Backend::kReplay: o["dir"] = d.replay_dir.string(); break;
            case Backend::kExternal: o["command"] = d.command; break;
        }
        list.push_back(o);
    }
    return Json{{"devices", list}};
}

DeviceRegistry registry_from_json(const Json &json) {
    if (!json.is_object() || !json.contains("devices") || !json.at("devices").is_array()) {
        throw Error(ErrorKind::kParse, "registry needs a 'devices' array");
    }
    DeviceRegistry registry;
    std::set<std::string> seen;
    for (const Json &o : json.at("devices")) {
        DeviceConfig d;
        d.device_id = o.value("device_id", std::string{});
        if (d.device_id.empty()) throw Error(ErrorKind::kParse, "registry entry without device_id");
        if (!seen.insert(d.device_id).second) {
            throw Error(ErrorKind::kPlanInvalid, "device '" + d.device_id + "' is registered twice");
        }
        d.flow_id = o.value("flow", std::string{});
        const std::string backend = o.value("backend", std::string{"local"});
        if (backend == "local") {
            d.backend = Backend::kLocal;
            if (o.contains("noise")) d.noise = noise_from_json(o.at("noise"));
        } else if (backend == "replay") {
            d.backend = Backend::kReplay;
            d.replay_dir = o.value("dir", std::string{});
        } else if (backend == "external") {
            d.backend = Backend::kExternal;
            d.command = o.value("command", std::vector<std::string>{});
            if (d.command.empty()) throw Error(ErrorKind::kParse, "external device '" + d.device_id + "' has no command");
        } else {
            throw Error(ErrorKind::kParse, "unknown backend '" + backend + "'");
        }
        registry.devices.push_back(std::move(d));
    }
    return registry;
}

// ---------------------------------------------------------------------------
// Devices

namespace {

void check_result(const std::string &device, const JobRequest &job, const CountsTable &t) {
    if (t.shots != job.shots || t.n_bits != job.circuit.num_wires()) {
        throw Error(ErrorKind::kDeviceFailure, "device '" + device + "' returned " + std::to_string(t.shots) +
                                                   " shots over " + std::to_string(t.n_bits) + " bits for job '" +
                                                   job.circuit_ref + "', expected " + std::to_string(job.shots) +
                                                   " over " + std::to_string(job.circuit.num_wires()));
    }
}

}  // namespace

LocalDevice::LocalDevice(std::string device_id, NoiseModel noise) : id_(std::move(device_id)), noise_(std::move(noise)) {
    noise_.validate();
}

CountsTable LocalDevice::run(const JobRequest &job) {
    CountsTable t = sample(job.circuit, job.shots, noise_, job.seed);
    t.device_id = id_;
    t.circuit_ref = job.circuit_ref;
    return t;
}

ReplayDevice::ReplayDevice(std::string device_id, fs::path directory)
    : id_(std::move(device_id)), directory_(std::move(directory)) {}

CountsTable ReplayDevice::run(const JobRequest &job) {
    const fs::path path = directory_ / (job.circuit_ref + ".json");
    if (!fs::exists(path)) {
        throw Error(ErrorKind::kDeviceFailure, "replay device '" + id_ + "' has no counts for job '" + job.circuit_ref +
                                                   "' (" + path.string() + ")");
    }
    CountsTable t;
    try {
        t = counts_from_json(read_json_file(path));
    } catch (const Error &e) {
        throw Error(ErrorKind::kDeviceFailure, "replay device '" + id_ + "': " + e.what());
    }
    check_result(id_, job, t);
    t.device_id = id_;
    t.circuit_ref = job.circuit_ref;
    return t;
}

ExternalDevice::ExternalDevice(std::string device_id, std::vector<std::string> command)
    : id_(std::move(device_id)), command_(std::move(command)) {
    // A server that dies mid-request must surface as a failed write, not
    // terminate the whole process.
    static std::once_flag once;
    std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

ExternalDevice::~ExternalDevice() { stop(); }

void ExternalDevice::start() {
    int in[2], out[2];
    if (pipe2(in, O_CLOEXEC) != 0) throw Error(ErrorKind::kDeviceFailure, "pipe: " + std::string(std::strerror(errno)));
    if (pipe2(out, O_CLOEXEC) != 0) {
        close(in[0]);
        close(in[1]);
        throw Error(ErrorKind::kDeviceFailure, "pipe: " + std::string(std::strerror(errno)));
    }
    std::vector<char *> argv;
    for (auto &a : command_) argv.push_back(a.data());
    argv.push_back(nullptr);
    const pid_t pid = fork();
    if (pid < 0) throw Error(ErrorKind::kDeviceFailure, "fork: " + std::string(std::strerror(errno)));
    if (pid == 0) {
        dup2(in[0], STDIN_FILENO);
        dup2(out[1], STDOUT_FILENO);
        execvp(argv[0], argv.data());
        _exit(127);
    }
    close(in[0]);
    close(out[1]);
    pid_ = pid;
    to_child_ = in[1];
    from_child_ = out[0];
    buffer_.clear();
}

void ExternalDevice::stop() {
    if (to_child_ >= 0) close(to_child_);
    if (from_child_ >= 0) close(from_child_);
    to_child_ = from_child_ = -1;
    if (pid_ > 0) {
        kill(pid_, SIGTERM);
        waitpid(pid_, nullptr, 0);
    }
    pid_ = -1;
    buffer_.clear();
}

CountsTable ExternalDevice::run(const JobRequest &job) {
    std::lock_guard lock(mutex_);
    auto fail = [&](const std::string &why) -> CountsTable {
        stop();
        throw Error(ErrorKind::kDeviceFailure, "external device '" + id_ + "' on job '" + job.circuit_ref + "': " + why);
    };
    if (pid_ < 0) start();

    const std::string request = Json{{"circuit_ref", job.circuit_ref},
                                     {"circuit", circuit_to_json(job.circuit)},
                                     {"shots", job.shots},
                                     {"seed", job.seed}}
                                    .dump() +
                                "\n";
    for (std::size_t done = 0; done < request.size();) {
        const ssize_t w = write(to_child_, request.data() + done, request.size() - done);
        if (w < 0 && errno == EINTR) continue;
        if (w <= 0) return fail("write failed: " + std::string(std::strerror(errno)));
        done += static_cast<std::size_t>(w);
    }
    std::size_t newline;
    while ((newline = buffer_.find('\n')) == std::string::npos) {
        char chunk[4096];
        const ssize_t r = read(from_child_, chunk, sizeof chunk);
        if (r < 0 && errno == EINTR) continue;
        if (r <= 0) return fail("server closed its output");
        buffer_.append(chunk, static_cast<std::size_t>(r));
    }
    const std::string line = buffer_.substr(0, newline);
    buffer_.erase(0, newline + 1);

    CountsTable t;
    try {
        const Json reply = Json::parse(line);
        if (reply.contains("error")) return fail("server error: " + reply.at("error").dump());
        t = counts_from_json(reply);
    } catch (const nlohmann::json::exception &e) {
        return fail(std::string("malformed reply: ") + e.what());
    } catch (const Error &e) {
        if (e.kind() == ErrorKind::kDeviceFailure) throw;
        return fail(std::string("malformed reply: ") + e.what());
    }
    try {
        check_result(id_, job, t);
    } catch (const Error &e) {
        return fail(e.what());
    }
    t.device_id = id_;
    t.circuit_ref = job.circuit_ref;
    return t;
}

std::unique_ptr<Device> make_device(const DeviceConfig &config) {
    switch (config.backend) {
        case Backend::kLocal: return std::make_unique<LocalDevice>(config.device_id, config.noise);
        case Backend::kReplay: return std::make_unique<ReplayDevice>(config.device_id, config.replay_dir);
        case Backend::kExternal: return std::make_unique<ExternalDevice>(config.device_id, config.command);
    }
    throw Error(ErrorKind::kPlanInvalid, "unknown backend");
}

void serve_device(std::istream &in, std::ostream &out, const std::string &device_id, const NoiseModel &noise) {
    LocalDevice device(device_id, noise);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        Json reply;
        try {
            const Json request = Json::parse(line);
            JobRequest job{request.value("circuit_ref", std::string{}), circuit_from_json(request.at("circuit")),
                           request.at("shots").get<std::uint64_t>(), request.value("seed", std::uint64_t{0})};
            reply = counts_to_json(device.run(job));
        } catch (const std::exception &e) {
            reply = Json{{"error", e.what()}};
        }
        out << reply.dump() << '\n' << std::flush;
    }
}

// ---------------------------------------------------------------------------
// Plans

namespace {

bool valid_device_id(const std::string &id) {
    return !id.empty() && std::all_of(id.begin(), id.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    }) && id != "." && id != "..";
}

void plan_fail(const std::string &why) { throw Error(ErrorKind::kPlanInvalid, why); }

}  // namespace

void ExperimentPlan::validate() const {
    if (participants.size() < 2) plan_fail("need at least two participants (device, flow)");
    std::set<std::string> labels;
    for (const auto &p : participants) {
        if (!valid_device_id(p.device_id)) plan_fail("device id '" + p.device_id + "' must match [A-Za-z0-9._-]+");
        if (!labels.insert(p.label()).second) plan_fail("participant '" + p.label() + "' appears twice");
        const FlowSpec *flow = nullptr;
        for (const auto &f : graph.flows) {
            if (f.id == p.flow_id) flow = &f;
        }
        if (flow == nullptr) plan_fail("graph '" + graph.graph.name() + "' has no flow '" + p.flow_id + "'");
        const FlowReport report = validate_flow(graph.graph, *flow);
        if (!report.valid()) {
            plan_fail("flow '" + p.flow_id + "' is invalid: " + std::string(to_string(report.violations[0].kind)));
        }
        if (static_cast<int>(flow->outputs.size()) > kMaxWires) {
            plan_fail("flow '" + p.flow_id + "' needs more than " + std::to_string(kMaxWires) + " wires");
        }
    }
    if (instance_count < 1) plan_fail("instance_count must be positive");
    if (comparison_subset < 1 || comparison_subset > instance_count) {
        plan_fail("comparison_subset must be in [1, instance_count]");
    }
    if (shots < 3) plan_fail("shots per job must be at least 3");
    if (jobs_per_instance < 1) plan_fail("jobs_per_instance must be positive");
    if (grid.empty()) plan_fail("angle grid is empty");
    if (!instances.empty()) {
        if (static_cast<int>(instances.size()) != instance_count) plan_fail("explicit instances must number instance_count");
        for (const auto &a : instances) {
            for (Vertex v : graph.graph.vertices()) {
                if (!a.contains(v)) plan_fail("explicit instance lacks an angle for vertex " + std::to_string(v));
            }
        }
    }
    if (pairs().empty()) {
        plan_fail("no comparable pair: all participants have the same circuit width (use allow_equal_width)");
    }
}

std::vector<std::pair<int, int>> ExperimentPlan::pairs() const {
    std::vector<std::pair<int, int>> out;
    auto width = [&](int i) { return graph.flow(participants[i].flow_id).outputs.size(); };
    for (int i = 0; i < static_cast<int>(participants.size()); ++i) {
        for (int j = i + 1; j < static_cast<int>(participants.size()); ++j) {
            if (width(i) == width(j) && !allow_equal_width) continue;
            out.emplace_back(width(j) < width(i) ? std::pair{j, i} : std::pair{i, j});
        }
    }
    return out;
}

AngleSet ExperimentPlan::instance(int index) const {
    if (!instances.empty()) return instances.at(static_cast<std::size_t>(index));
    return random_instance(graph.graph, grid, derive_seed(seed, {hash_tag("instance"), static_cast<std::uint64_t>(index)}));
}

Json plan_to_json(const ExperimentPlan &plan) {
    Json participants = Json::array();
    for (const auto &p : plan.participants) participants.push_back(Json{{"device_id", p.device_id}, {"flow", p.flow_id}});
    Json out{{"graph", graph_to_json(plan.graph)},
             {"participants", participants},
             {"instance_count", plan.instance_count},
             {"comparison_subset", plan.comparison_subset},
             {"shots", plan.shots},
             {"jobs_per_instance", plan.jobs_per_instance},
             {"grid", plan.grid},
             {"seed", plan.seed},
             {"allow_equal_width", plan.allow_equal_width},
             {"blind", plan.blind},
             {"theory", plan.theory}};
    if (!plan.instances.empty()) {
        Json list = Json::array();
        for (const auto &a : plan.instances) list.push_back(angles_to_json(a));
        out["instances"] = list;
    }
    return out;
}

ExperimentPlan plan_from_json(const Json &json) {
    if (!json.is_object()) throw Error(ErrorKind::kParse, "plan must be an object");
    ExperimentPlan plan;
    try {
        const Json &g = json.at("graph");
        plan.graph = g.is_string() ? load_graph(g.get<std::string>()) : graph_from_json(g);
        for (const Json &p : json.at("participants")) {
            plan.participants.push_back({p.at("device_id").get<std::string>(), p.at("flow").get<std::string>()});
        }
        plan.instance_count = json.value("instance_count", plan.instance_count);
        plan.comparison_subset = json.value("comparison_subset", plan.comparison_subset);
        plan.shots = json.value("shots", plan.shots);
        plan.jobs_per_instance = json.value("jobs_per_instance", plan.jobs_per_instance);
        plan.grid = json.value("grid", plan.grid);
        plan.seed = json.value("seed", plan.seed);
        plan.allow_equal_width = json.value("allow_equal_width", plan.allow_equal_width);
        plan.blind = json.value("blind", plan.blind);
        plan.theory = json.value("theory", plan.theory);
        if (json.contains("instances")) {
            for (const Json &a : json.at("instances")) plan.instances.push_back(angles_from_json(a));
        }
    } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorKind::kParse, std::string("plan: ") + e.what());
    }
    return plan;
}

// ---------------------------------------------------------------------------
// Jobs

namespace {

constexpr std::string_view kManifest = "jobs.json";

char side_letter(Side s) { return s == Side::kA ? 'a' : 'b'; }

struct PlannedJob {
    int pair = 0;
    Side side = Side::kA;
    int instance = 0;
    int index = 0;
    Participant who;
    std::string circuit_ref;
    std::vector<int> fix;
    std::vector<int> mask;
    std::uint64_t seed = 0;
    Circuit circuit;
};

std::vector<RelationSpec> relations(const ExperimentPlan &plan) {
    std::vector<RelationSpec> out;
    for (auto [a, b] : plan.pairs()) {
        out.push_back(relate_outcomes(plan.graph.graph, plan.graph.flow(plan.participants[a].flow_id),
                                      plan.graph.flow(plan.participants[b].flow_id)));
    }
    return out;
}

std::map<Vertex, int> fix_outcomes(const RelationSpec &rel, Side side, const std::vector<int> &fix) {
    std::map<Vertex, int> out;
    const auto fixed = rel.fixed_positions(side);
    for (std::size_t i = 0; i < fixed.size(); ++i) out[fixed[i]] = fix[i];
    return out;
}

std::vector<PlannedJob> plan_jobs(const ExperimentPlan &plan) {
    const auto pairs = plan.pairs();
    const auto rels = relations(plan);
    const OpenGraph &graph = plan.graph.graph;
    std::vector<AngleSet> instances;
    for (int i = 0; i < plan.instance_count; ++i) instances.push_back(plan.instance(i));

    std::vector<PlannedJob> jobs;
    for (int p = 0; p < static_cast<int>(pairs.size()); ++p) {
        for (Side side : {Side::kA, Side::kB}) {
            const Participant &who = plan.participants[side == Side::kA ? pairs[p].first : pairs[p].second];
            const FlowSpec &flow = plan.graph.flow(who.flow_id);
            const auto fixed = rels[p].fixed_positions(side);
            for (int i = 0; i < plan.instance_count; ++i) {
                for (int j = 0; j < plan.jobs_per_instance; ++j) {
                    const std::initializer_list<std::uint64_t> path{
                        static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(side),
                        static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j)};
                    PlannedJob job;
                    job.pair = p;
                    job.side = side;
                    job.instance = i;
                    job.index = j;
                    job.who = who;
                    char ref[64];
                    std::snprintf(ref, sizeof ref, "p%d-%c-i%04d-j%d", p, side_letter(side), i, j);
                    job.circuit_ref = ref;

                    Rng fix_rng(derive_seed(plan.seed, {hash_tag("fix"), derive_seed(0, path)}));
                    for (std::size_t f = 0; f < fixed.size(); ++f) job.fix.push_back(fix_rng.bit());
                    AngleSet angles = branch_angles(graph, flow, instances[i], fix_outcomes(rels[p], side, job.fix));
                    if (plan.blind) {
                        const RandomizationBits bits = RandomizationBits::random(
                            graph, flow, derive_seed(plan.seed, {hash_tag("blind"), derive_seed(0, path)}));
                        angles = rewrite_angles(graph, flow, angles, bits);
                        job.mask = outcome_mask(graph, flow, bits);
                    } else {
                        job.mask.assign(flow.outputs.size(), 0);
                    }
                    job.circuit = compile_to_circuit(graph, flow, angles);
                    job.seed = derive_seed(plan.seed, {hash_tag(who.device_id), hash_tag(job.circuit_ref)});
                    jobs.push_back(std::move(job));
                }
            }
        }
    }
    return jobs;
}

fs::path counts_path(const fs::path &out_dir, const std::string &device, const std::string &ref) {
    return out_dir / "counts" / device / (ref + ".json");
}

}  // namespace

CrossCheckReport run_experiment(const ExperimentPlan &plan, const DeviceRegistry &registry, const RunOptions &options) {
    plan.validate();
    std::map<std::string, std::unique_ptr<Device>> devices;
    DeviceRegistry used;
    for (const auto &p : plan.participants) {
        if (devices.count(p.device_id)) continue;
        const DeviceConfig &config = registry.find(p.device_id);
        devices.emplace(p.device_id, make_device(config));
        used.devices.push_back(config);
    }
    const std::vector<PlannedJob> jobs = plan_jobs(plan);

    const fs::path &out = options.out_dir;
    fs::create_directories(out);
    write_json_file(out / "plan.json", plan_to_json(plan));
    write_json_file(out / "devices.json", registry_to_json(used));
    for (int i = 0; i < plan.instance_count; ++i) {
        const FlowSpec &flow = plan.graph.flow(plan.participants.front().flow_id);
        InstanceFile file{plan.graph, flow.id, plan.instance(i), RandomizationBits::zeros(plan.graph.graph, flow),
                          derive_seed(plan.seed, {hash_tag("instance"), static_cast<std::uint64_t>(i)})};
        char name[32];
        std::snprintf(name, sizeof name, "%04d.json", i);
        write_json_file(out / "instances" / name, instance_to_json(file));
    }

    // Each job owns its seed and its output file, so the dispatch order and
    // the number of workers cannot change any persisted byte.
    std::vector<int> attempts(jobs.size(), 0);
    std::vector<std::string> errors(jobs.size());
    std::vector<char> ok(jobs.size(), 0);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            const PlannedJob &job = jobs[i];
            Device &device = *devices.at(job.who.device_id);
            const int max_attempts = device.retryable() ? 3 : 1;
            for (int a = 1; a <= max_attempts && !ok[i]; ++a) {
                attempts[i] = a;
                try {
                    CountsTable t = device.run({job.circuit_ref, job.circuit, plan.shots, job.seed});
                    check_result(device.id(), {job.circuit_ref, job.circuit, plan.shots, job.seed}, t);
                    write_json_file(counts_path(out, job.who.device_id, job.circuit_ref), counts_to_json(t));
                    ok[i] = 1;
                } catch (const std::exception &e) {
                    errors[i] = e.what();
                }
            }
        }
    };
    const int threads = std::max(1, options.threads);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    }

    Json list = Json::array();
    Json audit = Json::array();
    const std::string *fatal = nullptr;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const PlannedJob &job = jobs[i];
        list.push_back(Json{{"pair", job.pair},
                            {"side", std::string(1, side_letter(job.side))},
                            {"instance", job.instance},
                            {"job", job.index},
                            {"device_id", job.who.device_id},
                            {"flow", job.who.flow_id},
                            {"circuit_ref", job.circuit_ref},
                            {"fix", job.fix},
                            {"mask", job.mask},
                            {"shots", plan.shots},
                            {"seed", job.seed},
                            {"status", ok[i] ? "ok" : "failed"},
                            {"attempts", attempts[i]}});
        if (!ok[i]) {
            if (!devices.at(job.who.device_id)->retryable()) {
                if (fatal == nullptr) fatal = &errors[i];
            } else {
                audit.push_back(Json{{"device_id", job.who.device_id},
                                     {"circuit_ref", job.circuit_ref},
                                     {"pair", job.pair},
                                     {"instance", job.instance},
                                     {"attempts", attempts[i]},
                                     {"error", errors[i]}});
            }
        }
    }
    write_json_file(out / kManifest, Json{{"jobs", list}, {"audit", audit}});
    if (fatal != nullptr) throw Error(ErrorKind::kDeviceFailure, *fatal);

    CrossCheckReport report = build_report(out);
    write_json_file(out / "report.json", report.to_json());
    return report;
}

CrossCheckReport self_verify(const ExperimentPlan &plan, const DeviceConfig &device, const std::string &flow_a,
                             const std::string &flow_b, const RunOptions &options) {
    ExperimentPlan p = plan;
    p.participants = {{device.device_id, flow_a}, {device.device_id, flow_b}};
    DeviceRegistry registry{{device}};
    return run_experiment(p, registry, options);
}

// ---------------------------------------------------------------------------
// Report assembly

namespace {

/// Per-fix model distributions of one side, embedded in the variable set.
/// `noise` empty means the noiseless theory.
struct SideModel {
    PVector pvector;
    OutcomeDistribution reference;  // distribution at the reference fix
};

SideModel side_model(const ExperimentPlan &plan, const RelationSpec &rel, Side side, const AngleSet &angles,
                     const NoiseModel *noise) {
    const FlowSpec &flow = rel.flow(side);
    const auto fixed = rel.fixed_positions(side);
    const int f = static_cast<int>(fixed.size());
    std::map<std::uint64_t, OutcomeDistribution> per_fix;
    for (std::uint64_t c = 0; c < (std::uint64_t{1} << f); ++c) {
        const Circuit circuit =
            compile_to_circuit(plan.graph.graph, flow,
                               branch_angles(plan.graph.graph, flow, angles, fix_outcomes(rel, side, bits_of(c, f))));
        OutcomeDistribution d = exact_distribution(circuit);
        if (noise != nullptr) d = apply_noise(d, *noise);
        per_fix.emplace(c, std::move(d));
    }
    std::vector<int> ref;
    for (auto [v, b] : rel.reference_outcomes(side)) ref.push_back(b);
    SideModel m{assemble_pvector(per_fix, rel, side), per_fix.at(index_of(ref))};
    return m;
}

double mean_of(const std::vector<double> &v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double> &v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double combined_error(const std::vector<double> &errors) {
    double s = 0.0;
    for (double e : errors) s += e * e;
    return errors.empty() ? 0.0 : std::sqrt(s) / static_cast<double>(errors.size());
}

std::vector<int> choose_subset(const ExperimentPlan &plan, int subset, const std::set<int> &excluded) {
    std::vector<int> perm(static_cast<std::size_t>(plan.instance_count));
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(derive_seed(plan.seed, {hash_tag("subset")}));
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);
    std::vector<int> chosen;
    for (int i : perm) {
        if (static_cast<int>(chosen.size()) == subset) break;
        if (!excluded.count(i)) chosen.push_back(i);
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

struct ManifestJob {
    int pair;
    Side side;
    int instance;
    std::string device_id;
    std::string circuit_ref;
    std::vector<int> fix;
    std::vector<int> mask;
    bool ok;
};

}  // namespace

CrossCheckReport build_report(const fs::path &out_dir, std::optional<int> subset) {
    for (const char *name : {"plan.json", "devices.json", "jobs.json"}) {
        if (!fs::exists(out_dir / name)) {
            throw Error(ErrorKind::kIncompleteData, "missing '" + (out_dir / name).string() + "'");
        }
    }
    ExperimentPlan plan = plan_from_json(read_json_file(out_dir / "plan.json"));
    if (subset) plan.comparison_subset = *subset;
    plan.validate();
    const DeviceRegistry registry = registry_from_json(read_json_file(out_dir / "devices.json"));
    const Json manifest = read_json_file(out_dir / kManifest);

    const auto pairs = plan.pairs();
    const auto rels = relations(plan);

    std::vector<ManifestJob> mjobs;
    for (const Json &j : manifest.at("jobs")) {
        mjobs.push_back({j.at("pair").get<int>(), j.at("side").get<std::string>() == "a" ? Side::kA : Side::kB,
                         j.at("instance").get<int>(), j.at("device_id").get<std::string>(),
                         j.at("circuit_ref").get<std::string>(), j.at("fix").get<std::vector<int>>(),
                         j.at("mask").get<std::vector<int>>(), j.at("status").get<std::string>() == "ok"});
    }

    CrossCheckReport report;
    report.graph = plan.graph.graph.name();
    report.seed = plan.seed;
    report.shots = plan.shots;
    report.jobs_per_instance = plan.jobs_per_instance;
    report.instance_count = plan.instance_count;
    report.comparison_subset = plan.comparison_subset;
    for (const Json &a : manifest.at("audit")) {
        report.audit.push_back({a.at("device_id").get<std::string>(), a.at("circuit_ref").get<std::string>(),
                                a.at("pair").get<int>(), a.at("instance").get<int>(), a.at("attempts").get<int>(),
                                a.at("error").get<std::string>()});
    }

    // Group unmasked jobs: [pair][side][instance].
    using Jobs = std::vector<FixedJob>;
    std::vector<std::array<std::vector<Jobs>, 2>> grouped(pairs.size());
    std::vector<std::set<int>> excluded(pairs.size());
    std::map<std::string, std::vector<double>> self_rates;  // participant label -> per-job collision rates
    for (auto &g : grouped) {
        for (auto &s : g) s.resize(static_cast<std::size_t>(plan.instance_count));
    }
    for (const ManifestJob &j : mjobs) {
        if (j.pair < 0 || j.pair >= static_cast<int>(pairs.size()) || j.instance < 0 ||
            j.instance >= plan.instance_count) {
            throw Error(ErrorKind::kIncompleteData, "manifest job '" + j.circuit_ref + "' does not match the plan");
        }
        if (!j.ok) {
            excluded[j.pair].insert(j.instance);
            continue;
        }
        const fs::path path = counts_path(out_dir, j.device_id, j.circuit_ref);
        if (!fs::exists(path)) throw Error(ErrorKind::kIncompleteData, "missing counts file '" + path.string() + "'");
        CountsTable t = counts_from_json(read_json_file(path)).xored(index_of(j.mask));
        const auto [ia, ib] = pairs[j.pair];
        const Participant &who = plan.participants[j.side == Side::kA ? ia : ib];
        self_rates[who.label()].push_back(self_collision_estimate(t).value);
        grouped[j.pair][j.side == Side::kA ? 0 : 1][j.instance].push_back({std::move(t), j.fix});
    }

    auto noise_of = [&](const Participant &p) -> const NoiseModel * {
        const DeviceConfig &d = registry.find(p.device_id);
        return d.backend == Backend::kLocal ? &d.noise : nullptr;
    };

    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const RelationSpec &rel = rels[p];
        PairResult pr;
        pr.a = plan.participants[pairs[p].first];
        pr.b = plan.participants[pairs[p].second];
        pr.n_c = rel.n_c();
        pr.n_v = rel.n_v();
        pr.scale_exponent = rel.scale_exponent;
        pr.excluded.assign(excluded[p].begin(), excluded[p].end());
        pr.subset = choose_subset(plan, plan.comparison_subset, excluded[p]);
        if (static_cast<int>(pr.subset.size()) < plan.comparison_subset) report.complete = false;
        const std::set<int> in_subset(pr.subset.begin(), pr.subset.end());

        const NoiseModel *noise_a = noise_of(pr.a);
        const NoiseModel *noise_b = noise_of(pr.b);
        const bool both_local = noise_a != nullptr && noise_b != nullptr;
        const auto related = related_outcomes(rel);
        const int na = static_cast<int>(rel.outputs(Side::kA).size());
        const int nb = static_cast<int>(rel.outputs(Side::kB).size());

        std::vector<double> l2s, l2_errors, models, a_ideal, b_ideal;
        std::vector<Point> points;
        for (int i = 0; i < plan.instance_count; ++i) {
            if (excluded[p].count(i)) continue;
            const Jobs &ja = grouped[p][0][i];
            const Jobs &jb = grouped[p][1][i];
            if (ja.empty() || jb.empty()) {
                throw Error(ErrorKind::kIncompleteData, "instance " + std::to_string(i) + " of pair " +
                                                            std::to_string(p) + " has no jobs");
            }
            InstanceResult ir;
            ir.instance = i;
            ir.l2 = l2_collision_estimate(ja, jb, rel);

            const AngleSet angles = plan.instance(i);
            std::optional<SideModel> model_a, model_b, ideal;
            if (plan.theory && both_local) {
                model_a = side_model(plan, rel, Side::kA, angles, noise_a);
                model_b = side_model(plan, rel, Side::kB, angles, noise_b);
                ir.model_l2 = l2_exact(model_a->pvector, model_b->pvector).value;
            }
            if (plan.theory) {
                ideal = side_model(plan, rel, Side::kA, angles, nullptr);
                const double ii = ideal->pvector.dot(ideal->pvector);
                ir.a_vs_ideal = ir.l2.aa.value - 2.0 * overlap_estimate(ja, rel, Side::kA, ideal->pvector).value + ii;
                ir.b_vs_ideal = ir.l2.bb.value - 2.0 * overlap_estimate(jb, rel, Side::kB, ideal->pvector).value + ii;
                if (in_subset.count(i)) {
                    const SideModel ma = model_a ? *model_a
                                                 : side_model(plan, rel, Side::kA, angles, noise_a);
                    const SideModel mb = model_b ? *model_b
                                                 : side_model(plan, rel, Side::kB, angles, noise_b);
                    for (const RelatedOutcome &r : related) {
                        ScatterRow row{i, to_bitstring(r.a_index, na), to_bitstring(r.b_index, nb),
                                       ma.reference[r.a_index], rel.scale() * mb.reference[r.b_index]};
                        points.push_back({row.x, row.y});
                        pr.scatter.push_back(std::move(row));
                    }
                }
            }
            if (in_subset.count(i)) {
                l2s.push_back(ir.l2.value);
                l2_errors.push_back(ir.l2.std_error);
                if (ir.model_l2) models.push_back(*ir.model_l2);
                if (ir.a_vs_ideal) a_ideal.push_back(*ir.a_vs_ideal);
                if (ir.b_vs_ideal) b_ideal.push_back(*ir.b_vs_ideal);
            }
            pr.instances.push_back(std::move(ir));
        }
        pr.mean_l2 = mean_of(l2s);
        pr.mean_l2_std_error = combined_error(l2_errors);
        pr.instance_spread = stddev_of(l2s);
        if (!models.empty()) pr.mean_model_l2 = mean_of(models);
        if (!a_ideal.empty()) pr.mean_a_vs_ideal = mean_of(a_ideal);
        if (!b_ideal.empty()) pr.mean_b_vs_ideal = mean_of(b_ideal);
        if (points.size() >= 3) {
            try {
                pr.regression = total_least_squares(points);
            } catch (const Error &e) {
                if (e.kind() != ErrorKind::kDegenerateInput) throw;
            }
        }
        report.pairs.push_back(std::move(pr));
    }

    for (const Participant &who : plan.participants) {
        DeviceSummary s;
        s.participant = who.label();
        std::vector<double> values, errors;
        for (const PairResult &pr : report.pairs) {
            if (pr.a == who || pr.b == who) {
                values.push_back(pr.mean_l2);
                errors.push_back(pr.mean_l2_std_error);
            }
        }
        s.comparisons = static_cast<int>(values.size());
        s.mean_l2 = mean_of(values);
        s.std_error = combined_error(errors);
        report.devices.push_back(s);

        const auto it = self_rates.find(who.label());
        if (it != self_rates.end() && !it->second.empty()) {
            SanityRow row;
            row.participant = who.label();
            row.n_outputs = static_cast<int>(plan.graph.flow(who.flow_id).outputs.size());
            const auto &rates = it->second;
            row.collision = {mean_of(rates), stddev_of(rates) / std::sqrt(static_cast<double>(rates.size())),
                             EstimatorKind::kCollision, plan.shots * rates.size(), rates.size()};
            row.flag = sanity_classify(row.collision, row.n_outputs);
            report.sanity.push_back(row);
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Serialization and plots

namespace {

Json estimate_json(const DotEstimate &e) { return Json{{"value", e.value}, {"std_error", e.std_error}}; }

Json regression_json(const RegressionResult &r) {
    return Json{{"slope", r.slope},
                {"slope_std_error", r.slope_std_error},
                {"slope_formatted", format_uncertainty(r.slope, r.slope_std_error)},
                {"intercept", r.intercept},
                {"intercept_std_error", r.intercept_std_error},
                {"slope_intercept_covariance", r.slope_intercept_covariance}};
}

std::string file_label(const PairResult &pr) {
    std::string s = pr.a.label() + "__" + pr.b.label();
    std::replace(s.begin(), s.end(), ':', '-');
    return s;
}

}  // namespace

Json CrossCheckReport::to_json() const {
    Json out{{"graph", graph},
             {"seed", seed},
             {"shots", shots},
             {"jobs_per_instance", jobs_per_instance},
             {"instance_count", instance_count},
             {"comparison_subset", comparison_subset},
             {"complete", complete}};
    Json pair_list = Json::array();
    for (const PairResult &pr : pairs) {
        Json p{{"a", pr.a.label()},
               {"b", pr.b.label()},
               {"n_c", pr.n_c},
               {"n_v", pr.n_v},
               {"scale", std::ldexp(1.0, pr.scale_exponent)},
               {"mean_l2", pr.mean_l2},
               {"mean_l2_std_error", pr.mean_l2_std_error},
               {"mean_l2_formatted", format_uncertainty(pr.mean_l2, pr.mean_l2_std_error)},
               {"instance_spread", pr.instance_spread},
               {"subset", pr.subset},
               {"excluded", pr.excluded}};
        if (pr.mean_model_l2 || pr.mean_a_vs_ideal || pr.mean_b_vs_ideal) {
            Json t{{"non_scalable", true}};
            if (pr.mean_model_l2) t["mean_model_l2"] = *pr.mean_model_l2;
            if (pr.mean_a_vs_ideal) t["mean_a_vs_ideal_l2"] = *pr.mean_a_vs_ideal;
            if (pr.mean_b_vs_ideal) t["mean_b_vs_ideal_l2"] = *pr.mean_b_vs_ideal;
            p["theory"] = t;
        }
        if (pr.regression) p["regression"] = regression_json(*pr.regression);
        Json insts = Json::array();
        for (const InstanceResult &ir : pr.instances) {
            Json o{{"instance", ir.instance},          {"l2", ir.l2.value},
                   {"l2_std_error", ir.l2.std_error}, {"aa", estimate_json(ir.l2.aa)},
                   {"ab", estimate_json(ir.l2.ab)},   {"bb", estimate_json(ir.l2.bb)}};
            if (ir.model_l2) o["model_l2"] = *ir.model_l2;
            if (ir.a_vs_ideal) o["a_vs_ideal_l2"] = *ir.a_vs_ideal;
            if (ir.b_vs_ideal) o["b_vs_ideal_l2"] = *ir.b_vs_ideal;
            insts.push_back(o);
        }
        p["instances"] = insts;
        if (!pr.scatter.empty()) {
            Json rows = Json::array();
            for (const ScatterRow &r : pr.scatter) {
                rows.push_back(Json{{"instance", r.instance}, {"a", r.a_bits}, {"b", r.b_bits}, {"x", r.x}, {"y", r.y}});
            }
            p["distributions"] = rows;
        }
        pair_list.push_back(p);
    }
    out["pairs"] = pair_list;
    Json dev = Json::array();
    for (const DeviceSummary &d : devices) {
        dev.push_back(Json{{"participant", d.participant},
                           {"mean_l2", d.mean_l2},
                           {"std_error", d.std_error},
                           {"comparisons", d.comparisons}});
    }
    out["devices"] = dev;
    Json san = Json::array();
    for (const SanityRow &s : sanity) {
        san.push_back(Json{{"participant", s.participant},
                           {"n_outputs", s.n_outputs},
                           {"collision", s.collision.value},
                           {"std_error", s.collision.std_error},
                           {"uniform_floor", std::ldexp(1.0, -s.n_outputs)},
                           {"flag", std::string(to_string(s.flag))}});
    }
    out["sanity"] = san;
    Json aud = Json::array();
    for (const AuditRecord &a : audit) {
        aud.push_back(Json{{"device_id", a.device_id},
                           {"circuit_ref", a.circuit_ref},
                           {"pair", a.pair},
                           {"instance", a.instance},
                           {"attempts", a.attempts},
                           {"error", a.error}});
    }
    out["audit"] = aud;
    return out;
}

std::vector<fs::path> emit_plots(const CrossCheckReport &report, const fs::path &out_dir) {
    const bool any = std::any_of(report.pairs.begin(), report.pairs.end(),
                                 [](const PairResult &p) { return !p.scatter.empty(); });
    if (!any) {
        throw Error(ErrorKind::kMissingDistributions,
                    "report carries no distributions (run with theory columns enabled)");
    }
    std::vector<fs::path> written;
    for (const PairResult &pr : report.pairs) {
        if (pr.scatter.empty()) continue;
        std::ostringstream s;
        s << "instance,a_bits,b_bits,x,y\n";
        double max_x = 0.0;
        for (const ScatterRow &r : pr.scatter) {
            s << r.instance << ',' << r.a_bits << ',' << r.b_bits << ',' << format_number(r.x) << ','
              << format_number(r.y) << '\n';
            max_x = std::max(max_x, r.x);
        }
        const fs::path scatter = out_dir / ("scatter_" + file_label(pr) + ".csv");
        write_text_file(scatter, s.str());
        written.push_back(scatter);
        if (pr.regression) {
            std::ostringstream r;
            r << "x,fit,lower,upper\n";
            constexpr int kSteps = 20;
            for (int k = 0; k <= kSteps; ++k) {
                const double x = max_x * k / kSteps;
                const double fit = pr.regression->intercept + pr.regression->slope * x;
                const double h = pr.regression->band_halfwidth(x);
                r << format_number(x) << ',' << format_number(fit) << ',' << format_number(fit - h) << ','
                  << format_number(fit + h) << '\n';
            }
            const fs::path reg = out_dir / ("regression_" + file_label(pr) + ".csv");
            write_text_file(reg, r.str());
            written.push_back(reg);
        }
    }
    std::ostringstream bars;
    bars << "kind,label,mean_l2,std_error\n";
    for (const PairResult &pr : report.pairs) {
        bars << "pair," << pr.a.label() << " vs " << pr.b.label() << ',' << format_number(pr.mean_l2) << ','
             << format_number(pr.mean_l2_std_error) << '\n';
    }
    for (const DeviceSummary &d : report.devices) {
        bars << "device," << d.participant << ',' << format_number(d.mean_l2) << ',' << format_number(d.std_error)
             << '\n';
    }
    const fs::path bar_path = out_dir / "bars.csv";
    write_text_file(bar_path, bars.str());
    written.push_back(bar_path);
    return written;
}

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::kPlanInvalid:
        case ErrorKind::kIncompatibleFlows:
        case ErrorKind::kInvalidFlow:
        case ErrorKind::kUnknownName:
            return 2;
        case ErrorKind::kDeviceFailure: return 3;
        case ErrorKind::kIncompleteData:
        case ErrorKind::kMissingDistributions:
            return 4;
        default: return 1;
    }
}

}  // namespace xverify
