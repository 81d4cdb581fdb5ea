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

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "xverify/circuit.hpp"

namespace xverify {

using Edge = std::pair<Vertex, Vertex>;

/// Simple connected graph with designated input and output vertex lists.
/// Immutable after construction; edges are stored with first < second and
/// sorted.
class OpenGraph {
   public:
    /// Validates and builds. Vertex order is preserved as given.
    /// Throws Error{DuplicateEdge, SelfLoop, Disconnected, UnequalIOSize, UnknownVertex}.
    static OpenGraph build(std::vector<Vertex> vertices, std::vector<Edge> edges, std::vector<Vertex> inputs,
                           std::vector<Vertex> outputs, std::string name = {});

    [[nodiscard]] const std::string &name() const noexcept { return name_; }
    [[nodiscard]] const std::vector<Vertex> &vertices() const noexcept { return vertices_; }
    [[nodiscard]] const std::vector<Edge> &edges() const noexcept { return edges_; }
    [[nodiscard]] const std::vector<Vertex> &inputs() const noexcept { return inputs_; }
    [[nodiscard]] const std::vector<Vertex> &outputs() const noexcept { return outputs_; }
    [[nodiscard]] std::size_t size() const noexcept { return vertices_.size(); }

    [[nodiscard]] bool contains(Vertex v) const;
    [[nodiscard]] bool adjacent(Vertex u, Vertex v) const;
    /// Ascending neighbor list; throws UnknownVertex.
    [[nodiscard]] const std::vector<Vertex> &neighbors(Vertex v) const;

    /// Same graph with `edge` removed (re-validated, so may throw Disconnected).
    [[nodiscard]] OpenGraph without_edge(Edge edge) const;

    /// Empty graph; only useful as a placeholder before assignment.
    OpenGraph() = default;

   private:
    std::string name_;
    std::vector<Vertex> vertices_;
    std::vector<Edge> edges_;
    std::vector<Vertex> inputs_;
    std::vector<Vertex> outputs_;
    std::map<Vertex, std::vector<Vertex>> adjacency_;
};

/// One information flow over an OpenGraph: successor map over the non-output
/// vertices plus a total measurement order over them. Outputs are measured
/// after every non-output vertex. The flow's own input/output sets may differ
/// from the graph's defaults (flow ambiguity).
struct FlowSpec {
    std::string id;
    std::map<Vertex, Vertex> successor;
    std::vector<Vertex> order;
    std::vector<Vertex> inputs;   // ascending
    std::vector<Vertex> outputs;  // ascending

    /// Derives inputs/outputs from the successor map on `graph`.
    static FlowSpec make(const OpenGraph &graph, std::string id, std::map<Vertex, Vertex> successor,
                         std::vector<Vertex> order);

    [[nodiscard]] bool is_output(Vertex v) const;
    /// Position in the measurement order; outputs share position order.size().
    [[nodiscard]] std::size_t position(Vertex v) const;

    bool operator==(const FlowSpec &) const = default;
};

enum class FlowViolationKind {
    kUnknownVertex,
    kNonNeighborSuccessor,
    kNonInjectiveSuccessor,
    kOrderViolation,
    kOrderIncomplete,
    kOutputHasSuccessor,
    kMissingSuccessor,
    kIoMismatch,
};

std::string_view to_string(FlowViolationKind kind);

struct FlowViolation {
    FlowViolationKind kind;
    Vertex vertex;
    std::string detail;
};

struct FlowReport {
    std::vector<FlowViolation> violations;

    [[nodiscard]] bool valid() const noexcept { return violations.empty(); }
    [[nodiscard]] bool has(FlowViolationKind kind) const;
};

/// Checks the causal-flow conditions. Violations are data, never thrown.
FlowReport validate_flow(const OpenGraph &graph, const FlowSpec &flow);

struct BuiltinGraph {
    OpenGraph graph;
    std::vector<FlowSpec> flows;

    [[nodiscard]] const FlowSpec &flow(std::string_view id) const;
};

/// Built-in graphs:
///   H6       vertices 1..6 labelled as in the H-shaped example; flows
///            "flow-a" (1->3->5, 2->4->6) and "flow-b" (1->3->4->6; 2 and 5
///            are both input and output).
///   BOX_2x4, BOX_2x5
///            2xL ladder, top row 1..L, bottom row L+1..2L; flows
///            "left-to-right" (2 outputs {L, 2L}) and "top-to-bottom"
///            (L outputs, the bottom row).
/// Throws UnknownName.
BuiltinGraph builtin_graph(std::string_view name);
std::vector<std::string> builtin_graph_names();

enum class VertexConvention {
    /// The first J gate on a wire is that wire's input vertex; |V| = M.
    kFirstJIsInput,
    /// A separate |+> vertex per wire precedes its J gates; |V| = N + M.
    kSeparateInputVertex,
};

struct CircuitGraph {
    OpenGraph graph;
    FlowSpec flow;
    int wires = 0;              // N
    int j_gates = 0;            // M
    int identified_inputs = 0;  // vertices shared between inputs and J gates
};

/// Rebuilds the open graph and wire-order flow of a J/CZ circuit on |+>^N.
/// J gates carrying vertex tags keep their labels under kFirstJIsInput.
/// Throws UnsupportedGate.
CircuitGraph graph_from_circuit(const Circuit &circuit,
                                VertexConvention convention = VertexConvention::kFirstJIsInput);

/// Brute-force (backtracking) isomorphism test. With `respect_io`, inputs must
/// map onto inputs and outputs onto outputs as sets.
bool isomorphic(const OpenGraph &a, const OpenGraph &b, bool respect_io = false);

}  // namespace xverify
