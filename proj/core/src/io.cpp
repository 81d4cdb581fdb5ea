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

#include "xverify/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "xverify/bits.hpp"
#include "xverify/error.hpp"

namespace xverify {

namespace fs = std::filesystem;

Json read_json_file(const fs::path &path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::kParse, "cannot open '" + path.string() + "'");
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorKind::kParse, "'" + path.string() + "': " + e.what());
    }
}

void write_text_file(const fs::path &path, std::string_view text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::kParse, "cannot write '" + tmp.string() + "'");
        out << text;
        if (!out) throw Error(ErrorKind::kParse, "short write to '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

void write_json_file(const fs::path &path, const Json &value) { write_text_file(path, value.dump(2) + "\n"); }

namespace {

template <typename T>
T get(const Json &json, std::string_view key, std::string_view context) {
    auto it = json.find(std::string(key));
    if (it == json.end()) throw Error(ErrorKind::kParse, std::string(context) + ": missing '" + std::string(key) + "'");
    try {
        return it->template get<T>();
    } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorKind::kParse, std::string(context) + ": bad '" + std::string(key) + "': " + e.what());
    }
}

Vertex vertex_key(const std::string &key) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(key, &used);
        if (used != key.size()) throw std::invalid_argument(key);
        return v;
    } catch (const std::exception &) {
        throw Error(ErrorKind::kParse, "vertex key '" + key + "' is not an integer");
    }
}

}  // namespace

Json flow_to_json(const FlowSpec &flow) {
    Json succ = Json::object();
    for (auto [v, s] : flow.successor) succ[std::to_string(v)] = s;
    return Json{{"id", flow.id}, {"successor", succ}, {"order", flow.order}};
}

FlowSpec flow_from_json(const OpenGraph &graph, const Json &json) {
    std::map<Vertex, Vertex> succ;
    const Json s = get<Json>(json, "successor", "flow");
    if (!s.is_object()) throw Error(ErrorKind::kParse, "flow: 'successor' must be an object");
    for (const auto &[k, v] : s.items()) {
        if (!v.is_number_integer()) throw Error(ErrorKind::kParse, "flow: successor of " + k + " is not an integer");
        succ[vertex_key(k)] = v.get<Vertex>();
    }
    return FlowSpec::make(graph, get<std::string>(json, "id", "flow"), std::move(succ),
                          get<std::vector<Vertex>>(json, "order", "flow"));
}

Json graph_to_json(const BuiltinGraph &graph) {
    const OpenGraph &g = graph.graph;
    Json edges = Json::array();
    for (auto [u, v] : g.edges()) edges.push_back({u, v});
    Json flows = Json::array();
    for (const FlowSpec &f : graph.flows) flows.push_back(flow_to_json(f));
    return Json{{"name", g.name()},     {"vertices", g.vertices()}, {"edges", edges},
                {"inputs", g.inputs()}, {"outputs", g.outputs()},   {"flows", flows}};
}

BuiltinGraph graph_from_json(const Json &json) {
    if (!json.is_object()) throw Error(ErrorKind::kParse, "graph must be an object");
    std::vector<Edge> edges;
    for (const Json &e : get<Json>(json, "edges", "graph")) {
        if (!e.is_array() || e.size() != 2) throw Error(ErrorKind::kParse, "graph: edges must be [u, v] pairs");
        edges.emplace_back(e[0].get<Vertex>(), e[1].get<Vertex>());
    }
    BuiltinGraph out{OpenGraph::build(get<std::vector<Vertex>>(json, "vertices", "graph"), std::move(edges),
                                      get<std::vector<Vertex>>(json, "inputs", "graph"),
                                      get<std::vector<Vertex>>(json, "outputs", "graph"),
                                      json.value("name", std::string{})),
                     {}};
    if (json.contains("flows")) {
        for (const Json &f : json.at("flows")) out.flows.push_back(flow_from_json(out.graph, f));
    }
    return out;
}

BuiltinGraph load_graph(std::string_view name_or_path) {
    const auto names = builtin_graph_names();
    if (std::find(names.begin(), names.end(), name_or_path) != names.end()) return builtin_graph(name_or_path);
    const fs::path path{std::string(name_or_path)};
    if (!fs::exists(path)) {
        throw Error(ErrorKind::kUnknownName, "'" + std::string(name_or_path) + "' is neither a built-in graph nor a file");
    }
    return graph_from_json(read_json_file(path));
}

Json angles_to_json(const AngleSet &angles) {
    Json out = Json::object();
    for (auto [v, a] : angles.values()) out[std::to_string(v)] = a;
    return out;
}

AngleSet angles_from_json(const Json &json) {
    if (!json.is_object()) throw Error(ErrorKind::kParse, "angles must be an object keyed by vertex");
    AngleSet angles;
    for (const auto &[k, v] : json.items()) {
        if (!v.is_number()) throw Error(ErrorKind::kParse, "angle of vertex " + k + " is not a number");
        angles.set(vertex_key(k), v.get<double>());
    }
    return angles;
}

Json bits_to_json(const std::map<Vertex, int> &bits) {
    Json out = Json::object();
    for (auto [v, b] : bits) out[std::to_string(v)] = b;
    return out;
}

std::map<Vertex, int> bits_from_json(const Json &json) {
    if (!json.is_object()) throw Error(ErrorKind::kParse, "bits must be an object keyed by vertex");
    std::map<Vertex, int> bits;
    for (const auto &[k, v] : json.items()) {
        if (!v.is_number_integer() || (v.get<int>() != 0 && v.get<int>() != 1)) {
            throw Error(ErrorKind::kParse, "bit of vertex " + k + " must be 0 or 1");
        }
        bits[vertex_key(k)] = v.get<int>();
    }
    return bits;
}

Json instance_to_json(const InstanceFile &instance, bool embed_graph) {
    Json g = embed_graph ? graph_to_json(instance.graph) : Json(instance.graph.graph.name());
    return Json{{"graph", g},
                {"flow_id", instance.flow_id},
                {"angles", angles_to_json(instance.angles)},
                {"k", bits_to_json(instance.bits.k)},
                {"r", bits_to_json(instance.bits.r)},
                {"seed", instance.seed}};
}

InstanceFile instance_from_json(const Json &json) {
    if (!json.is_object()) throw Error(ErrorKind::kParse, "instance must be an object");
    InstanceFile out;
    const Json g = get<Json>(json, "graph", "instance");
    out.graph = g.is_string() ? load_graph(g.get<std::string>()) : graph_from_json(g);
    out.flow_id = get<std::string>(json, "flow_id", "instance");
    const FlowSpec &flow = out.graph.flow(out.flow_id);
    out.angles = angles_from_json(get<Json>(json, "angles", "instance"));
    out.bits = RandomizationBits::zeros(out.graph.graph, flow);
    if (json.contains("k")) out.bits.k = bits_from_json(json.at("k"));
    if (json.contains("r")) out.bits.r = bits_from_json(json.at("r"));
    out.seed = json.value("seed", std::uint64_t{0});
    return out;
}

Json counts_to_json(const CountsTable &counts) {
    Json c = Json::object();
    for (const auto &[k, n] : counts.counts) c[k] = n;
    Json out{{"device_id", counts.device_id},
             {"circuit_ref", counts.circuit_ref},
             {"n_bits", counts.n_bits},
             {"shots", counts.shots},
             {"seed", counts.seed},
             {"counts", c}};
    if (counts.first_collision) out["first_collision"] = *counts.first_collision;
    return out;
}

CountsTable counts_from_json(const Json &json) {
    if (!json.is_object()) throw Error(ErrorKind::kParse, "counts table must be an object");
    CountsTable t;
    t.device_id = json.value("device_id", std::string{});
    t.circuit_ref = json.value("circuit_ref", std::string{});
    t.shots = get<std::uint64_t>(json, "shots", "counts table");
    t.seed = json.value("seed", std::uint64_t{0});
    const Json c = get<Json>(json, "counts", "counts table");
    if (!c.is_object()) throw Error(ErrorKind::kParse, "counts table: 'counts' must be an object");
    int width = json.contains("n_bits") ? json.at("n_bits").get<int>() : -1;
    for (const auto &[k, v] : c.items()) {
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
            throw Error(ErrorKind::kParse, "counts table: count of '" + k + "' must be a non-negative integer");
        }
        from_bitstring(k);
        if (width < 0) width = static_cast<int>(k.size());
        t.counts[k] = v.get<std::uint64_t>();
    }
    t.n_bits = std::max(width, 0);
    if (json.contains("first_collision")) t.first_collision = json.at("first_collision").get<std::uint64_t>();
    t.validate();
    return t;
}

Json circuit_to_json(const Circuit &circuit) {
    Json gates = Json::array();
    for (const Gate &g : circuit.gates()) {
        if (const auto *j = std::get_if<JGate>(&g)) {
            Json o{{"op", "J"}, {"wire", j->wire}, {"angle", j->angle}};
            if (j->vertex >= 0) o["vertex"] = j->vertex;
            gates.push_back(o);
        } else if (const auto *cz = std::get_if<CzGate>(&g)) {
            gates.push_back(Json{{"op", "CZ"}, {"a", cz->a}, {"b", cz->b}});
        } else {
            const auto &op = std::get<OpaqueGate>(g);
            gates.push_back(Json{{"op", op.name}, {"wires", op.wires}});
        }
    }
    return Json{{"num_wires", circuit.num_wires()}, {"wire_to_vertex", circuit.wire_to_vertex()}, {"gates", gates}};
}

Circuit circuit_from_json(const Json &json) {
    if (!json.is_object()) throw Error(ErrorKind::kParse, "circuit must be an object");
    Circuit c(get<int>(json, "num_wires", "circuit"),
              json.contains("wire_to_vertex") ? json.at("wire_to_vertex").get<std::vector<Vertex>>()
                                              : std::vector<Vertex>{});
    for (const Json &g : get<Json>(json, "gates", "circuit")) {
        const auto op = get<std::string>(g, "op", "gate");
        if (op == "J") {
            c.j(get<int>(g, "wire", "J gate"), get<double>(g, "angle", "J gate"), g.value("vertex", -1));
        } else if (op == "CZ") {
            c.cz(get<int>(g, "a", "CZ gate"), get<int>(g, "b", "CZ gate"));
        } else {
            c.add(OpaqueGate{op, g.value("wires", std::vector<int>{})});
        }
    }
    return c;
}

Json noise_to_json(const NoiseModel &noise) {
    return Json{{"depolarizing", noise.depolarizing}, {"readout_flip", noise.readout_flip}, {"seed", noise.seed}};
}

NoiseModel noise_from_json(const Json &json) {
    if (!json.is_object()) throw Error(ErrorKind::kParse, "noise model must be an object");
    NoiseModel n;
    n.depolarizing = json.value("depolarizing", 0.0);
    n.readout_flip = json.value("readout_flip", std::vector<double>{});
    n.seed = json.value("seed", std::uint64_t{0});
    n.validate();
    return n;
}

std::string format_number(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

std::string distribution_csv(const OutcomeDistribution &distribution) {
    std::ostringstream out;
    out << "bits,probability\n";
    for (std::uint64_t b = 0; b < distribution.size(); ++b) {
        out << to_bitstring(b, distribution.n_bits()) << ',' << format_number(distribution[b]) << '\n';
    }
    return out.str();
}

}  // namespace xverify
