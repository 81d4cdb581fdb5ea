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

#include "xverify/circuit.hpp"

#include <algorithm>
#include <string>

#include "xverify/error.hpp"

namespace xverify {

Circuit::Circuit(int num_wires, std::vector<Vertex> wire_to_vertex)
    : num_wires_(num_wires), wire_to_vertex_(std::move(wire_to_vertex)) {
    if (num_wires < 0) throw Error(ErrorKind::kShapeMismatch, "negative wire count");
    if (!wire_to_vertex_.empty() && static_cast<int>(wire_to_vertex_.size()) != num_wires) {
        throw Error(ErrorKind::kShapeMismatch, "wire_to_vertex must name one vertex per wire");
    }
}

void Circuit::check_wire(int wire) const {
    if (wire < 0 || wire >= num_wires_) {
        throw Error(ErrorKind::kShapeMismatch, "gate references undeclared wire " + std::to_string(wire));
    }
}

Circuit &Circuit::j(int wire, double angle, Vertex vertex) { return add(JGate{wire, angle, vertex}); }

Circuit &Circuit::cz(int a, int b) { return add(CzGate{a, b}); }

Circuit &Circuit::add(Gate gate) {
    if (const auto *g = std::get_if<JGate>(&gate)) {
        check_wire(g->wire);
    } else if (const auto *c = std::get_if<CzGate>(&gate)) {
        check_wire(c->a);
        check_wire(c->b);
        if (c->a == c->b) throw Error(ErrorKind::kShapeMismatch, "CZ needs two distinct wires");
    } else {
        for (int w : std::get<OpaqueGate>(gate).wires) check_wire(w);
    }
    gates_.push_back(std::move(gate));
    return *this;
}

std::size_t Circuit::count_j() const {
    return static_cast<std::size_t>(std::count_if(gates_.begin(), gates_.end(), [](const Gate &g) {
        return std::holds_alternative<JGate>(g);
    }));
}

}  // namespace xverify
