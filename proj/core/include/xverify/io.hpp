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

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "xverify/circuit.hpp"
#include "xverify/graphs.hpp"
#include "xverify/patterns.hpp"
#include "xverify/simulator.hpp"

namespace xverify {

using Json = nlohmann::ordered_json;

/// Parses a file; throws Parse with the path on I/O or syntax errors.
Json read_json_file(const std::filesystem::path &path);

/// Writes `value` pretty-printed (2-space indent, trailing newline) through a
/// temporary file and rename, creating parent directories.
void write_json_file(const std::filesystem::path &path, const Json &value);

void write_text_file(const std::filesystem::path &path, std::string_view text);

// Graph files: {"name", "vertices", "edges": [[u, v], ...], "inputs", "outputs",
//               "flows": [{"id", "successor": {"u": v, ...}, "order"}]}
Json graph_to_json(const BuiltinGraph &graph);
/// Throws Parse plus any graph validation error.
BuiltinGraph graph_from_json(const Json &json);
/// A built-in name, or a path to a graph file.
BuiltinGraph load_graph(std::string_view name_or_path);

Json flow_to_json(const FlowSpec &flow);
FlowSpec flow_from_json(const OpenGraph &graph, const Json &json);

Json angles_to_json(const AngleSet &angles);
AngleSet angles_from_json(const Json &json);

Json bits_to_json(const std::map<Vertex, int> &bits);
std::map<Vertex, int> bits_from_json(const Json &json);

/// Instance files: {"graph": name or graph object, "flow_id", "angles",
/// "k", "r", "seed"}. k and r may be omitted (all zero).
struct InstanceFile {
    BuiltinGraph graph;
    std::string flow_id;
    AngleSet angles;
    RandomizationBits bits;
    std::uint64_t seed = 0;
};
Json instance_to_json(const InstanceFile &instance, bool embed_graph = false);
InstanceFile instance_from_json(const Json &json);

// Counts files: {"device_id", "circuit_ref", "shots", "seed", "counts": {"010": n}}
Json counts_to_json(const CountsTable &counts);
/// Infers n_bits from the keys (or "n_bits" when present) and validates.
CountsTable counts_from_json(const Json &json);

Json circuit_to_json(const Circuit &circuit);
Circuit circuit_from_json(const Json &json);

Json noise_to_json(const NoiseModel &noise);
NoiseModel noise_from_json(const Json &json);

/// "bits,probability" rows, big-endian bit strings.
std::string distribution_csv(const OutcomeDistribution &distribution);

/// Fixed-format number for CSV output (17 significant digits).
std::string format_number(double value);

}  // namespace xverify
