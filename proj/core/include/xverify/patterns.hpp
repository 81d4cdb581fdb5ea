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
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "xverify/circuit.hpp"
#include "xverify/graphs.hpp"

namespace xverify {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Reduces to [0, 2pi).
double wrap_angle(double radians);

/// Circular distance between two angles, in [0, pi].
double angle_distance(double a, double b);

/// Measurement angle per vertex, stored modulo 2pi.
class AngleSet {
   public:
    AngleSet() = default;
    explicit AngleSet(const std::map<Vertex, double> &angles);

    void set(Vertex v, double radians) { angles_[v] = wrap_angle(radians); }
    [[nodiscard]] bool contains(Vertex v) const { return angles_.contains(v); }
    /// Throws MissingAngle.
    [[nodiscard]] double at(Vertex v) const;
    [[nodiscard]] const std::map<Vertex, double> &values() const noexcept { return angles_; }
    [[nodiscard]] std::size_t size() const noexcept { return angles_.size(); }

    /// True when both sets cover the same vertices and agree modulo 2pi.
    [[nodiscard]] bool equivalent(const AngleSet &other, double tolerance = 1e-12) const;

   private:
    std::map<Vertex, double> angles_;
};

/// k: one stabilizer exponent per graph vertex. r: one mask bit per flow output.
struct RandomizationBits {
    std::map<Vertex, int> k;
    std::map<Vertex, int> r;

    static RandomizationBits zeros(const OpenGraph &graph, const FlowSpec &flow);
    static RandomizationBits random(const OpenGraph &graph, const FlowSpec &flow, std::uint64_t seed);
};

/// Circuit for the all-zero branch of the pattern: one wire per flow output
/// (ascending vertex id), every vertex contributes J(angle) in measurement
/// order and the outputs' J gates set the final measurement basis.
/// Throws InvalidFlow, MissingAngle.
Circuit compile_to_circuit(const OpenGraph &graph, const FlowSpec &flow, const AngleSet &angles);

/// Applies the graph-state stabilizer product prod_v K_v^{k_v} and the output
/// mask bits r:  a~_v = (-1)^{k_v} a_v + pi * (sum_{u in N(v)} k_u + r_v [v output]).
/// Throws BitsShapeMismatch.
AngleSet rewrite_angles(const OpenGraph &graph, const FlowSpec &flow, const AngleSet &angles,
                        const RandomizationBits &bits);

/// XOR mask over the flow outputs (ascending) such that
/// Pr(b | angles) = Pr(b ^ mask | rewrite_angles(angles, bits)).
/// The stabilizer factors are absorbed by the rewritten angles, so only r survives.
/// Throws BitsShapeMismatch.
std::vector<int> outcome_mask(const OpenGraph &graph, const FlowSpec &flow, const RandomizationBits &bits);

/// Angles whose all-zero-branch circuit reproduces the pattern branch where the
/// listed non-output vertices gave the listed outcomes (unlisted ones gave 0):
///   Pr_pattern(s, b | angles) = 2^{-(n - n_O)} Pr_circuit(b | branch_angles(...)).
/// Each outcome 1 at v is traded for K_{f(v)}: negate the angle of f(v) and
/// shift every other neighbor of f(v) by pi. Throws InvalidFlow, MissingAngle.
AngleSet branch_angles(const OpenGraph &graph, const FlowSpec &flow, const AngleSet &angles,
                       const std::map<Vertex, int> &nonoutput_outcomes);

enum class Side { kA, kB };

/// How the outputs of two flows on one graph relate.
struct RelationSpec {
    std::string graph;
    FlowSpec flow_a;
    FlowSpec flow_b;
    std::vector<Vertex> shared_outputs;  // ascending, size n_c
    std::vector<Vertex> variable_set;    // ascending union of both output sets, size n_v
    int scale_exponent = 0;              // scale = 2^(n_OB - n_OA)
    std::vector<int> mask;               // over flow_b outputs
    /// Assumed values on the symmetric difference of the output sets. A vertex
    /// in outputs(B) \ outputs(A) is a non-output of A (and vice versa).
    std::map<Vertex, int> reference_bits;

    [[nodiscard]] double scale() const;
    [[nodiscard]] int n_c() const { return static_cast<int>(shared_outputs.size()); }
    [[nodiscard]] int n_v() const { return static_cast<int>(variable_set.size()); }
    [[nodiscard]] const FlowSpec &flow(Side side) const { return side == Side::kA ? flow_a : flow_b; }
    [[nodiscard]] const std::vector<Vertex> &outputs(Side side) const { return flow(side).outputs; }
    /// Variable-set vertices that are non-outputs of `side`: fixed, not sampled.
    [[nodiscard]] std::vector<Vertex> fixed_positions(Side side) const;
    /// Reference outcomes for `side`'s non-output vertices inside the variable set.
    [[nodiscard]] std::map<Vertex, int> reference_outcomes(Side side) const;
};

/// Throws IncompatibleFlows when either flow is invalid on `graph`.
RelationSpec relate_outcomes(const OpenGraph &graph, const FlowSpec &flow_a, const FlowSpec &flow_b);

/// One related pair of outcome indices: Pr_A(a_index) = scale * Pr_B(b_index),
/// where A runs branch_angles(reference_outcomes(A)) and B runs
/// branch_angles(reference_outcomes(B)) rewritten with bits whose mask is `mask`.
struct RelatedOutcome {
    std::uint64_t a_index;
    std::uint64_t b_index;
};
std::vector<RelatedOutcome> related_outcomes(const RelationSpec &relation);

/// The 8-point grid {0, pi/4, ..., 7pi/4}.
std::vector<double> pi_over_4_grid();

/// Independent uniform draw per vertex from `grid`. Throws EmptyGrid.
AngleSet random_instance(const OpenGraph &graph, const std::vector<double> &grid, std::uint64_t seed);

}  // namespace xverify
