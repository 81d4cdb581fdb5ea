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

#include "xverify/patterns.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "xverify/bits.hpp"
#include "xverify/error.hpp"
#include "xverify/rng.hpp"

namespace xverify {

double wrap_angle(double radians) {
    double a = std::fmod(radians, kTwoPi);
    if (a < 0.0) a += kTwoPi;
    if (a >= kTwoPi) a = 0.0;
    return a;
}

double angle_distance(double a, double b) {
    const double d = wrap_angle(a - b);
    return std::min(d, kTwoPi - d);
}

AngleSet::AngleSet(const std::map<Vertex, double> &angles) {
    for (auto [v, a] : angles) set(v, a);
}

double AngleSet::at(Vertex v) const {
    auto it = angles_.find(v);
    if (it == angles_.end()) throw Error(ErrorKind::kMissingAngle, "no angle for vertex " + std::to_string(v));
    return it->second;
}

bool AngleSet::equivalent(const AngleSet &other, double tolerance) const {
    if (angles_.size() != other.angles_.size()) return false;
    for (auto [v, a] : angles_) {
        if (!other.contains(v) || angle_distance(a, other.at(v)) > tolerance) return false;
    }
    return true;
}

RandomizationBits RandomizationBits::zeros(const OpenGraph &graph, const FlowSpec &flow) {
    RandomizationBits bits;
    for (Vertex v : graph.vertices()) bits.k[v] = 0;
    for (Vertex v : flow.outputs) bits.r[v] = 0;
    return bits;
}

RandomizationBits RandomizationBits::random(const OpenGraph &graph, const FlowSpec &flow, std::uint64_t seed) {
    Rng rng(seed);
    RandomizationBits bits;
    for (Vertex v : graph.vertices()) bits.k[v] = rng.bit();
    for (Vertex v : flow.outputs) bits.r[v] = rng.bit();
    return bits;
}

namespace {

void require_valid(const OpenGraph &graph, const FlowSpec &flow) {
    FlowReport report = validate_flow(graph, flow);
    if (!report.valid()) {
        const FlowViolation &first = report.violations.front();
        throw Error(ErrorKind::kInvalidFlow,
                    "flow '" + flow.id + "': " + std::string(to_string(first.kind)) + " " + first.detail);
    }
}

void require_angles(const OpenGraph &graph, const AngleSet &angles) {
    for (Vertex v : graph.vertices()) {
        if (!angles.contains(v)) throw Error(ErrorKind::kMissingAngle, "no angle for vertex " + std::to_string(v));
    }
}

void require_bits(const OpenGraph &graph, const FlowSpec &flow, const RandomizationBits &bits) {
    std::set<Vertex> kdom, rdom;
    for (auto [v, b] : bits.k) {
        if (b != 0 && b != 1) throw Error(ErrorKind::kBitsShapeMismatch, "k must be 0/1");
        kdom.insert(v);
    }
    for (auto [v, b] : bits.r) {
        if (b != 0 && b != 1) throw Error(ErrorKind::kBitsShapeMismatch, "r must be 0/1");
        rdom.insert(v);
    }
    if (kdom != std::set<Vertex>(graph.vertices().begin(), graph.vertices().end())) {
        throw Error(ErrorKind::kBitsShapeMismatch, "k must cover exactly the graph vertices");
    }
    if (rdom != std::set<Vertex>(flow.outputs.begin(), flow.outputs.end())) {
        throw Error(ErrorKind::kBitsShapeMismatch, "r must cover exactly the outputs of flow '" + flow.id + "'");
    }
}

}  // namespace

Circuit compile_to_circuit(const OpenGraph &graph, const FlowSpec &flow, const AngleSet &angles) {
    require_valid(graph, flow);
    require_angles(graph, angles);

    const auto &outputs = flow.outputs;
    Circuit circuit(static_cast<int>(outputs.size()), outputs);

    // Follow each input along the flow to find the wire (= output) it feeds.
    std::map<Vertex, int> wire_of;
    for (Vertex in : flow.inputs) {
        Vertex end = in;
        while (flow.successor.contains(end)) end = flow.successor.at(end);
        const int wire = static_cast<int>(std::lower_bound(outputs.begin(), outputs.end(), end) - outputs.begin());
        wire_of[in] = wire;
    }

    std::set<Vertex> alive(flow.inputs.begin(), flow.inputs.end());
    for (Vertex a : flow.inputs) {
        for (Vertex b : graph.neighbors(a)) {
            if (a < b && alive.contains(b)) circuit.cz(wire_of.at(a), wire_of.at(b));
        }
    }
    for (Vertex v : flow.order) {
        const int wire = wire_of.at(v);
        circuit.j(wire, angles.at(v), v);
        alive.erase(v);
        const Vertex next = flow.successor.at(v);
        wire_of[next] = wire;
        for (Vertex u : graph.neighbors(next)) {
            if (u != v && alive.contains(u)) circuit.cz(wire_of.at(u), wire);
        }
        alive.insert(next);
    }
    for (Vertex out : outputs) circuit.j(wire_of.at(out), angles.at(out), out);
    return circuit;
}

AngleSet rewrite_angles(const OpenGraph &graph, const FlowSpec &flow, const AngleSet &angles,
                        const RandomizationBits &bits) {
    require_bits(graph, flow, bits);
    require_angles(graph, angles);
    AngleSet out;
    for (Vertex v : graph.vertices()) {
        int shift = 0;
        for (Vertex u : graph.neighbors(v)) shift += bits.k.at(u);
        if (flow.is_output(v)) shift += bits.r.at(v);
        const double sign = bits.k.at(v) != 0 ? -1.0 : 1.0;
        out.set(v, sign * angles.at(v) + std::numbers::pi * (shift % 2));
    }
    return out;
}

std::vector<int> outcome_mask(const OpenGraph &graph, const FlowSpec &flow, const RandomizationBits &bits) {
    require_bits(graph, flow, bits);
    std::vector<int> mask;
    mask.reserve(flow.outputs.size());
    for (Vertex v : flow.outputs) mask.push_back(bits.r.at(v));
    return mask;
}

AngleSet branch_angles(const OpenGraph &graph, const FlowSpec &flow, const AngleSet &angles,
                       const std::map<Vertex, int> &nonoutput_outcomes) {
    require_valid(graph, flow);
    require_angles(graph, angles);
    for (auto [v, s] : nonoutput_outcomes) {
        if (!graph.contains(v) || flow.is_output(v)) {
            throw Error(ErrorKind::kInvalidFlow, "vertex " + std::to_string(v) + " is not a non-output of '" +
                                                     flow.id + "'");
        }
    }
    std::map<Vertex, double> raw(angles.values().begin(), angles.values().end());
    for (Vertex v : flow.order) {
        auto it = nonoutput_outcomes.find(v);
        if (it == nonoutput_outcomes.end() || it->second == 0) continue;
        const Vertex next = flow.successor.at(v);
        raw[next] = -raw[next];
        for (Vertex u : graph.neighbors(next)) {
            if (u != v) raw[u] += std::numbers::pi;
        }
    }
    return AngleSet(raw);
}

// ---------------------------------------------------------------------------
// Relations

double RelationSpec::scale() const { return std::ldexp(1.0, scale_exponent); }

std::vector<Vertex> RelationSpec::fixed_positions(Side side) const {
    const auto &outs = outputs(side);
    std::vector<Vertex> fixed;
    for (Vertex v : variable_set) {
        if (!std::binary_search(outs.begin(), outs.end(), v)) fixed.push_back(v);
    }
    return fixed;
}

std::map<Vertex, int> RelationSpec::reference_outcomes(Side side) const {
    std::map<Vertex, int> out;
    for (Vertex v : fixed_positions(side)) out[v] = reference_bits.count(v) ? reference_bits.at(v) : 0;
    return out;
}

RelationSpec relate_outcomes(const OpenGraph &graph, const FlowSpec &flow_a, const FlowSpec &flow_b) {
    for (const FlowSpec *f : {&flow_a, &flow_b}) {
        FlowReport report = validate_flow(graph, *f);
        if (!report.valid()) {
            throw Error(ErrorKind::kIncompatibleFlows, "flow '" + f->id + "' is not valid on graph '" +
                                                           graph.name() + "'");
        }
    }
    RelationSpec rel;
    rel.graph = graph.name();
    rel.flow_a = flow_a;
    rel.flow_b = flow_b;
    std::set_intersection(flow_a.outputs.begin(), flow_a.outputs.end(), flow_b.outputs.begin(), flow_b.outputs.end(),
                          std::back_inserter(rel.shared_outputs));
    std::set_union(flow_a.outputs.begin(), flow_a.outputs.end(), flow_b.outputs.begin(), flow_b.outputs.end(),
                   std::back_inserter(rel.variable_set));
    rel.scale_exponent = static_cast<int>(flow_b.outputs.size()) - static_cast<int>(flow_a.outputs.size());
    rel.mask.assign(flow_b.outputs.size(), 0);
    for (Vertex v : rel.variable_set) {
        if (!std::binary_search(rel.shared_outputs.begin(), rel.shared_outputs.end(), v)) rel.reference_bits[v] = 0;
    }
    return rel;
}

std::vector<RelatedOutcome> related_outcomes(const RelationSpec &relation) {
    const auto &oa = relation.outputs(Side::kA);
    const auto &ob = relation.outputs(Side::kB);
    const int na = static_cast<int>(oa.size());
    const int nb = static_cast<int>(ob.size());
    auto ref = [&](Vertex v) { return relation.reference_bits.count(v) ? relation.reference_bits.at(v) : 0; };

    std::vector<RelatedOutcome> out;
    for (std::uint64_t a = 0; a < (std::uint64_t{1} << na); ++a) {
        bool in_domain = true;
        std::map<Vertex, int> value;
        for (int p = 0; p < na; ++p) {
            value[oa[p]] = bit_at(a, na, p);
            if (!std::binary_search(ob.begin(), ob.end(), oa[p]) && value[oa[p]] != ref(oa[p])) in_domain = false;
        }
        if (!in_domain) continue;
        std::uint64_t b = 0;
        for (int p = 0; p < nb; ++p) {
            const int bit = (value.count(ob[p]) ? value[ob[p]] : ref(ob[p])) ^ relation.mask.at(p);
            b = with_bit(b, nb, p, bit);
        }
        out.push_back({a, b});
    }
    return out;
}

std::vector<double> pi_over_4_grid() {
    std::vector<double> grid;
    for (int i = 0; i < 8; ++i) grid.push_back(i * std::numbers::pi / 4.0);
    return grid;
}

AngleSet random_instance(const OpenGraph &graph, const std::vector<double> &grid, std::uint64_t seed) {
    if (grid.empty()) throw Error(ErrorKind::kEmptyGrid, "angle grid is empty");
    Rng rng(seed);
    AngleSet angles;
    for (Vertex v : graph.vertices()) angles.set(v, grid[rng.index(grid.size())]);
    return angles;
}

}  // namespace xverify
