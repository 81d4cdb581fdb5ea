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

#include <string>
#include <variant>
#include <vector>

namespace xverify {

using Vertex = int;

/// J(angle) = H * Rz(angle) on one wire. `vertex` names the graph vertex whose
/// measurement the gate realizes, or -1 when the circuit did not come from a
/// pattern.
struct JGate {
    int wire = 0;
    double angle = 0.0;
    Vertex vertex = -1;

    bool operator==(const JGate &) const = default;
};

struct CzGate {
    int a = 0;
    int b = 0;

    bool operator==(const CzGate &) const = default;
};

/// Anything else read from a file. Only carried so that consumers can reject it.
struct OpaqueGate {
    std::string name;
    std::vector<int> wires;

    bool operator==(const OpaqueGate &) const = default;
};

using Gate = std::variant<JGate, CzGate, OpaqueGate>;

/// Ordered gate list on `num_wires` wires, each initialized to |+>, followed by
/// a computational-basis measurement of every wire. Wire w carries the graph
/// output vertex wire_to_vertex()[w] when compiled from a pattern.
class Circuit {
   public:
    Circuit() = default;
    explicit Circuit(int num_wires, std::vector<Vertex> wire_to_vertex = {});

    Circuit &j(int wire, double angle, Vertex vertex = -1);
    Circuit &cz(int a, int b);
    Circuit &add(Gate gate);

    [[nodiscard]] int num_wires() const noexcept { return num_wires_; }
    [[nodiscard]] const std::vector<Gate> &gates() const noexcept { return gates_; }
    [[nodiscard]] const std::vector<Vertex> &wire_to_vertex() const noexcept { return wire_to_vertex_; }
    [[nodiscard]] std::size_t count_j() const;

    bool operator==(const Circuit &) const = default;

   private:
    void check_wire(int wire) const;

    int num_wires_ = 0;
    std::vector<Gate> gates_;
    std::vector<Vertex> wire_to_vertex_;
};

}  // namespace xverify
