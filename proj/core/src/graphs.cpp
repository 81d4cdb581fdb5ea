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

#include "xverify/graphs.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <queue>
#include <set>
#include <string>

#include "xverify/error.hpp"

namespace xverify {

namespace {

std::string vstr(Vertex v) { return std::to_string(v); }

Edge normalized(Edge e) { return e.first < e.second ? e : Edge{e.second, e.first}; }

void require_subset(const std::vector<Vertex> &subset, const std::set<Vertex> &all, const char *what) {
    std::set<Vertex> seen;
    for (Vertex v : subset) {
        if (!all.contains(v)) throw Error(ErrorKind::kUnknownVertex, std::string(what) + " vertex " + vstr(v));
        if (!seen.insert(v).second) {
            throw Error(ErrorKind::kUnknownVertex, std::string(what) + " lists vertex " + vstr(v) + " twice");
        }
    }
}

}  // namespace

OpenGraph OpenGraph::build(std::vector<Vertex> vertices, std::vector<Edge> edges, std::vector<Vertex> inputs,
                           std::vector<Vertex> outputs, std::string name) {
    std::set<Vertex> all;
    for (Vertex v : vertices) {
        if (!all.insert(v).second) throw Error(ErrorKind::kUnknownVertex, "vertex " + vstr(v) + " declared twice");
    }
    if (all.empty()) throw Error(ErrorKind::kDisconnected, "graph has no vertices");

    OpenGraph g;
    g.name_ = std::move(name);
    for (Vertex v : vertices) g.adjacency_[v];
    std::set<Edge> seen;
    for (Edge e : edges) {
        if (e.first == e.second) throw Error(ErrorKind::kSelfLoop, "edge (" + vstr(e.first) + "," + vstr(e.first) + ")");
        if (!all.contains(e.first) || !all.contains(e.second)) {
            throw Error(ErrorKind::kUnknownVertex, "edge (" + vstr(e.first) + "," + vstr(e.second) + ")");
        }
        e = normalized(e);
        if (!seen.insert(e).second) {
            throw Error(ErrorKind::kDuplicateEdge, "edge (" + vstr(e.first) + "," + vstr(e.second) + ")");
        }
        g.adjacency_[e.first].push_back(e.second);
        g.adjacency_[e.second].push_back(e.first);
    }
    require_subset(inputs, all, "input");
    require_subset(outputs, all, "output");
    if (inputs.size() != outputs.size()) {
        throw Error(ErrorKind::kUnequalIOSize, std::to_string(inputs.size()) + " inputs vs " +
                                                   std::to_string(outputs.size()) + " outputs");
    }

    // connectivity
    std::set<Vertex> reached{vertices.front()};
    std::queue<Vertex> frontier;
    frontier.push(vertices.front());
    while (!frontier.empty()) {
        Vertex v = frontier.front();
        frontier.pop();
        for (Vertex u : g.adjacency_[v]) {
            if (reached.insert(u).second) frontier.push(u);
        }
    }
    if (reached.size() != all.size()) {
        throw Error(ErrorKind::kDisconnected, std::to_string(all.size() - reached.size()) + " vertices unreachable");
    }

    for (auto &[v, nb] : g.adjacency_) std::sort(nb.begin(), nb.end());
    g.vertices_ = std::move(vertices);
    g.edges_.assign(seen.begin(), seen.end());
    g.inputs_ = std::move(inputs);
    g.outputs_ = std::move(outputs);
    return g;
}

bool OpenGraph::contains(Vertex v) const { return adjacency_.contains(v); }

bool OpenGraph::adjacent(Vertex u, Vertex v) const {
    auto it = adjacency_.find(u);
    return it != adjacency_.end() && std::binary_search(it->second.begin(), it->second.end(), v);
}

const std::vector<Vertex> &OpenGraph::neighbors(Vertex v) const {
    auto it = adjacency_.find(v);
    if (it == adjacency_.end()) throw Error(ErrorKind::kUnknownVertex, "vertex " + vstr(v));
    return it->second;
}

OpenGraph OpenGraph::without_edge(Edge edge) const {
    edge = normalized(edge);
    std::vector<Edge> kept;
    for (const Edge &e : edges_) {
        if (e != edge) kept.push_back(e);
    }
    return build(vertices_, std::move(kept), inputs_, outputs_, name_);
}

// ---------------------------------------------------------------------------
// Flows

FlowSpec FlowSpec::make(const OpenGraph &graph, std::string id, std::map<Vertex, Vertex> successor,
                        std::vector<Vertex> order) {
    FlowSpec f;
    f.id = std::move(id);
    std::set<Vertex> image;
    for (auto [v, s] : successor) image.insert(s);
    for (Vertex v : graph.vertices()) {
        if (!successor.contains(v)) f.outputs.push_back(v);
        if (!image.contains(v)) f.inputs.push_back(v);
    }
    std::sort(f.inputs.begin(), f.inputs.end());
    std::sort(f.outputs.begin(), f.outputs.end());
    f.successor = std::move(successor);
    f.order = std::move(order);
    return f;
}

bool FlowSpec::is_output(Vertex v) const { return std::binary_search(outputs.begin(), outputs.end(), v); }

std::size_t FlowSpec::position(Vertex v) const {
    auto it = std::find(order.begin(), order.end(), v);
    return static_cast<std::size_t>(it - order.begin());
}

std::string_view to_string(FlowViolationKind kind) {
    switch (kind) {
        case FlowViolationKind::kUnknownVertex: return "unknown-vertex";
        case FlowViolationKind::kNonNeighborSuccessor: return "non-neighbor-successor";
        case FlowViolationKind::kNonInjectiveSuccessor: return "non-injective-successor";
        case FlowViolationKind::kOrderViolation: return "order-violation";
        case FlowViolationKind::kOrderIncomplete: return "order-incomplete";
        case FlowViolationKind::kOutputHasSuccessor: return "output-has-successor";
        case FlowViolationKind::kMissingSuccessor: return "missing-successor";
        case FlowViolationKind::kIoMismatch: return "io-mismatch";
    }
    return "unknown";
}

bool FlowReport::has(FlowViolationKind kind) const {
    return std::any_of(violations.begin(), violations.end(), [&](const FlowViolation &v) { return v.kind == kind; });
}

FlowReport validate_flow(const OpenGraph &graph, const FlowSpec &flow) {
    FlowReport report;
    auto add = [&](FlowViolationKind kind, Vertex v, std::string detail) {
        report.violations.push_back({kind, v, std::move(detail)});
    };

    bool references_ok = true;
    auto known = [&](Vertex v, const char *where) {
        if (graph.contains(v)) return true;
        add(FlowViolationKind::kUnknownVertex, v, std::string("in ") + where);
        references_ok = false;
        return false;
    };
    for (auto [v, s] : flow.successor) {
        known(v, "successor domain");
        known(s, "successor image");
    }
    for (Vertex v : flow.order) known(v, "order");
    for (Vertex v : flow.inputs) known(v, "inputs");
    for (Vertex v : flow.outputs) known(v, "outputs");
    if (!references_ok) return report;

    // declared outputs must be exactly the vertices without successor
    for (Vertex v : graph.vertices()) {
        const bool has_succ = flow.successor.contains(v);
        if (flow.is_output(v) && has_succ) add(FlowViolationKind::kOutputHasSuccessor, v, "output " + vstr(v));
        if (!flow.is_output(v) && !has_succ) add(FlowViolationKind::kMissingSuccessor, v, "non-output " + vstr(v));
    }

    std::map<Vertex, Vertex> preimage;
    for (auto [v, s] : flow.successor) {
        if (!graph.adjacent(v, s)) {
            add(FlowViolationKind::kNonNeighborSuccessor, v, vstr(v) + " -> " + vstr(s) + " is not an edge");
        }
        auto [it, fresh] = preimage.emplace(s, v);
        if (!fresh) {
            add(FlowViolationKind::kNonInjectiveSuccessor, s,
                vstr(it->second) + " and " + vstr(v) + " both map to " + vstr(s));
        }
    }
    std::vector<Vertex> derived_inputs;
    for (Vertex v : graph.vertices()) {
        if (!preimage.contains(v)) derived_inputs.push_back(v);
    }
    std::sort(derived_inputs.begin(), derived_inputs.end());
    if (derived_inputs != flow.inputs) add(FlowViolationKind::kIoMismatch, -1, "declared inputs differ from flow sources");
    if (flow.inputs.size() != flow.outputs.size()) add(FlowViolationKind::kIoMismatch, -1, "|inputs| != |outputs|");

    // order must be a permutation of the non-output vertices
    std::set<Vertex> ordered(flow.order.begin(), flow.order.end());
    std::set<Vertex> nonoutputs;
    for (auto [v, s] : flow.successor) nonoutputs.insert(v);
    if (ordered != nonoutputs || ordered.size() != flow.order.size()) {
        add(FlowViolationKind::kOrderIncomplete, -1, "order is not a permutation of the non-output vertices");
        return report;
    }

    auto before = [&](Vertex a, Vertex b) {
        // outputs are measured last
        if (flow.is_output(b)) return !flow.is_output(a);
        if (flow.is_output(a)) return false;
        return flow.position(a) < flow.position(b);
    };
    for (auto [v, s] : flow.successor) {
        if (!graph.contains(s)) continue;
        if (!before(v, s)) add(FlowViolationKind::kOrderViolation, v, vstr(v) + " must precede its successor " + vstr(s));
        for (Vertex w : graph.neighbors(s)) {
            if (w != v && !before(v, w)) {
                add(FlowViolationKind::kOrderViolation, v,
                    vstr(v) + " must precede " + vstr(w) + " (neighbor of successor " + vstr(s) + ")");
            }
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Built-ins

const FlowSpec &BuiltinGraph::flow(std::string_view id) const {
    for (const FlowSpec &f : flows) {
        if (f.id == id) return f;
    }
    throw Error(ErrorKind::kUnknownName, "flow " + std::string(id) + " on graph " + graph.name());
}

namespace {

BuiltinGraph make_h6() {
    auto g = OpenGraph::build({1, 2, 3, 4, 5, 6}, {{1, 3}, {3, 5}, {2, 4}, {4, 6}, {3, 4}}, {1, 2}, {5, 6}, "H6");
    auto a = FlowSpec::make(g, "flow-a", {{1, 3}, {2, 4}, {3, 5}, {4, 6}}, {1, 2, 3, 4});
    auto b = FlowSpec::make(g, "flow-b", {{1, 3}, {3, 4}, {4, 6}}, {1, 3, 4});
    return {g, {a, b}};
}

BuiltinGraph make_box(int length) {
    std::vector<Vertex> vertices(2 * length);
    std::iota(vertices.begin(), vertices.end(), 1);
    std::vector<Edge> edges;
    for (int i = 1; i < length; ++i) {
        edges.push_back({i, i + 1});
        edges.push_back({length + i, length + i + 1});
    }
    for (int i = 1; i <= length; ++i) edges.push_back({i, length + i});
    auto g = OpenGraph::build(vertices, edges, {1, length + 1}, {length, 2 * length},
                              "BOX_2x" + std::to_string(length));

    std::map<Vertex, Vertex> rows;
    std::vector<Vertex> column_major;
    for (int i = 1; i < length; ++i) {
        rows[i] = i + 1;
        rows[length + i] = length + i + 1;
        column_major.push_back(i);
        column_major.push_back(length + i);
    }
    std::map<Vertex, Vertex> columns;
    std::vector<Vertex> top;
    for (int i = 1; i <= length; ++i) {
        columns[i] = length + i;
        top.push_back(i);
    }
    return {g,
            {FlowSpec::make(g, "left-to-right", rows, column_major),
             FlowSpec::make(g, "top-to-bottom", columns, top)}};
}

}  // namespace

BuiltinGraph builtin_graph(std::string_view name) {
    if (name == "H6") return make_h6();
    if (name == "BOX_2x4") return make_box(4);
    if (name == "BOX_2x5") return make_box(5);
    throw Error(ErrorKind::kUnknownName, "no built-in graph named '" + std::string(name) + "'");
}

std::vector<std::string> builtin_graph_names() { return {"H6", "BOX_2x4", "BOX_2x5"}; }

// ---------------------------------------------------------------------------
// Circuit -> graph

CircuitGraph graph_from_circuit(const Circuit &circuit, VertexConvention convention) {
    const auto &gates = circuit.gates();
    const int n = circuit.num_wires();
    for (const Gate &g : gates) {
        if (const auto *op = std::get_if<OpaqueGate>(&g)) {
            throw Error(ErrorKind::kUnsupportedGate, "gate '" + op->name + "' is neither J nor CZ");
        }
    }

    CircuitGraph out;
    out.wires = n;
    out.j_gates = static_cast<int>(circuit.count_j());

    std::vector<std::vector<Vertex>> chains(n);
    std::vector<Vertex> measurement_order;
    std::set<Edge> edges;
    auto toggle = [&](Vertex u, Vertex v) {
        Edge e = normalized({u, v});
        if (!edges.erase(e)) edges.insert(e);
    };

    if (convention == VertexConvention::kFirstJIsInput) {
        const bool tagged = std::all_of(gates.begin(), gates.end(), [](const Gate &g) {
            const auto *j = std::get_if<JGate>(&g);
            return j == nullptr || j->vertex >= 0;
        });
        std::vector<Vertex> label(gates.size(), -1);
        Vertex next = 1;
        for (std::size_t i = 0; i < gates.size(); ++i) {
            if (const auto *j = std::get_if<JGate>(&gates[i])) {
                label[i] = tagged ? j->vertex : next++;
                chains[j->wire].push_back(label[i]);
            }
        }
        for (int w = 0; w < n; ++w) {
            if (chains[w].empty()) {
                throw Error(ErrorKind::kUnsupportedGate, "wire " + std::to_string(w) + " carries no J gate");
            }
        }
        auto next_j = [&](std::size_t from, int wire) -> Vertex {
            for (std::size_t i = from + 1; i < gates.size(); ++i) {
                const auto *j = std::get_if<JGate>(&gates[i]);
                if (j != nullptr && j->wire == wire) return label[i];
            }
            throw Error(ErrorKind::kUnsupportedGate,
                        "CZ on wire " + std::to_string(wire) + " is not followed by a J gate");
        };
        for (std::size_t i = 0; i < gates.size(); ++i) {
            if (const auto *c = std::get_if<CzGate>(&gates[i])) toggle(next_j(i, c->a), next_j(i, c->b));
        }
        for (std::size_t i = 0; i < gates.size(); ++i) {
            const auto *j = std::get_if<JGate>(&gates[i]);
            if (j != nullptr && chains[j->wire].back() != label[i]) measurement_order.push_back(label[i]);
        }
        out.identified_inputs = n;
    } else {
        Vertex next = 1;
        std::vector<Vertex> current(n);
        for (int w = 0; w < n; ++w) {
            current[w] = next++;
            chains[w].push_back(current[w]);
        }
        for (const Gate &g : gates) {
            if (const auto *j = std::get_if<JGate>(&g)) {
                measurement_order.push_back(current[j->wire]);
                current[j->wire] = next++;
                chains[j->wire].push_back(current[j->wire]);
            } else {
                const auto &c = std::get<CzGate>(g);
                toggle(current[c.a], current[c.b]);
            }
        }
        out.identified_inputs = 0;
    }

    std::vector<Vertex> vertices, inputs, outputs;
    std::map<Vertex, Vertex> successor;
    for (const auto &chain : chains) {
        inputs.push_back(chain.front());
        outputs.push_back(chain.back());
        for (std::size_t i = 0; i < chain.size(); ++i) {
            vertices.push_back(chain[i]);
            if (i + 1 < chain.size()) {
                toggle(chain[i], chain[i + 1]);
                successor[chain[i]] = chain[i + 1];
            }
        }
    }
    std::sort(vertices.begin(), vertices.end());
    std::sort(inputs.begin(), inputs.end());
    std::sort(outputs.begin(), outputs.end());
    out.graph = OpenGraph::build(vertices, {edges.begin(), edges.end()}, inputs, outputs);
    out.flow = FlowSpec::make(out.graph, "from-circuit", std::move(successor), std::move(measurement_order));
    return out;
}

// ---------------------------------------------------------------------------
// Isomorphism

bool isomorphic(const OpenGraph &a, const OpenGraph &b, bool respect_io) {
    if (a.size() != b.size() || a.edges().size() != b.edges().size()) return false;
    if (respect_io && (a.inputs().size() != b.inputs().size() || a.outputs().size() != b.outputs().size())) {
        return false;
    }
    const auto &va = a.vertices();
    const auto &vb = b.vertices();
    auto tag = [&](const OpenGraph &g, Vertex v) {
        if (!respect_io) return 0;
        const bool in = std::find(g.inputs().begin(), g.inputs().end(), v) != g.inputs().end();
        const bool out = std::find(g.outputs().begin(), g.outputs().end(), v) != g.outputs().end();
        return (in ? 1 : 0) + (out ? 2 : 0);
    };
    std::vector<Vertex> order(va.begin(), va.end());
    std::sort(order.begin(), order.end(), [&](Vertex x, Vertex y) {
        return a.neighbors(x).size() > a.neighbors(y).size();
    });

    std::map<Vertex, Vertex> forward;
    std::set<Vertex> used;
    std::function<bool(std::size_t)> extend = [&](std::size_t depth) -> bool {
        if (depth == order.size()) return true;
        Vertex x = order[depth];
        for (Vertex y : vb) {
            if (used.contains(y)) continue;
            if (a.neighbors(x).size() != b.neighbors(y).size() || tag(a, x) != tag(b, y)) continue;
            bool consistent = true;
            for (auto [mx, my] : forward) {
                if (a.adjacent(x, mx) != b.adjacent(y, my)) {
                    consistent = false;
                    break;
                }
            }
            if (!consistent) continue;
            forward[x] = y;
            used.insert(y);
            if (extend(depth + 1)) return true;
            forward.erase(x);
            used.erase(y);
        }
        return false;
    };
    return extend(0);
}

}  // namespace xverify
