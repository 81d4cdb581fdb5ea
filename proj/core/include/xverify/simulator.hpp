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
#include <optional>
#include <string>
#include <vector>

#include "xverify/circuit.hpp"

namespace xverify {

inline constexpr int kMaxWires = 12;

/// Exact probabilities over n_bits-bit strings, big-endian over wire order.
class OutcomeDistribution {
   public:
    OutcomeDistribution() = default;
    /// Throws InvalidDistribution unless the size is a power of two, entries
    /// are in [0, 1] and they sum to 1 within 1e-10.
    explicit OutcomeDistribution(std::vector<double> probs);

    static OutcomeDistribution uniform(int n_bits);
    static OutcomeDistribution point(int n_bits, std::uint64_t index);

    [[nodiscard]] int n_bits() const noexcept { return n_bits_; }
    [[nodiscard]] std::size_t size() const noexcept { return probs_.size(); }
    [[nodiscard]] double operator[](std::uint64_t index) const { return probs_[index]; }
    [[nodiscard]] const std::vector<double> &probs() const noexcept { return probs_; }
    /// sum_b p(b)^2
    [[nodiscard]] double collision() const;
    /// p'(b) = p(b ^ mask)
    [[nodiscard]] OutcomeDistribution xored(std::uint64_t mask) const;

   private:
    int n_bits_ = 0;
    std::vector<double> probs_;
};

/// Empirical counts from one job. Keys are n_bits-character bit strings.
struct CountsTable {
    std::string device_id;
    std::string circuit_ref;
    int n_bits = 0;
    std::uint64_t shots = 0;
    std::uint64_t seed = 0;
    std::map<std::string, std::uint64_t> counts;
    /// 1-based shot index of the first repeated string, when known.
    std::optional<std::uint64_t> first_collision;

    /// Throws ShapeMismatch when counts do not sum to shots or keys have the wrong width.
    void validate() const;
    /// Relabels every key b as b ^ mask.
    [[nodiscard]] CountsTable xored(std::uint64_t mask) const;

    bool operator==(const CountsTable &) const = default;
};

/// Output-level device imperfection: global depolarizing mix with the uniform
/// distribution, then independent per-wire readout bit flips.
struct NoiseModel {
    double depolarizing = 0.0;
    /// Flip probability per wire; missing trailing wires are noiseless and
    /// extra entries are ignored.
    std::vector<double> readout_flip;
    std::uint64_t seed = 0;

    /// Throws InvalidNoise.
    void validate() const;
    [[nodiscard]] bool noiseless() const;

    /// Readout errors of qubits 2, 3, 4 of the five-qubit transmon chip used
    /// for the 3-qubit runs: [3.5, 1.5, 1.6] * 1e-2.
    static NoiseModel transmon_readout_defaults();

    bool operator==(const NoiseModel &) const = default;
};

/// |+>^N through the gate list, measured in the computational basis.
/// Throws TooManyWires, UnsupportedGate.
OutcomeDistribution exact_distribution(const Circuit &circuit);

OutcomeDistribution apply_noise(const OutcomeDistribution &distribution, const NoiseModel &noise);

/// i.i.d. shots from `distribution`; reproducible given seed.
CountsTable sample_distribution(const OutcomeDistribution &distribution, std::uint64_t shots, std::uint64_t seed);

/// i.i.d. shots from apply_noise(exact_distribution(circuit), noise). The
/// stream seed combines `seed` with noise.seed. Throws TooManyWires,
/// InsufficientShots.
CountsTable sample(const Circuit &circuit, std::uint64_t shots, const NoiseModel &noise, std::uint64_t seed);

/// Empirical frequencies, zero where unobserved.
std::vector<double> frequencies(const CountsTable &counts);

}  // namespace xverify
