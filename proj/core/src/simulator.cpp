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

#include "xverify/simulator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <numeric>
#include <string>
#include <unordered_set>

#include "xverify/bits.hpp"
#include "xverify/error.hpp"
#include "xverify/rng.hpp"

namespace xverify {

OutcomeDistribution::OutcomeDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
    const std::size_t n = probs_.size();
    if (n == 0 || (n & (n - 1)) != 0) {
        throw Error(ErrorKind::kInvalidDistribution, "size " + std::to_string(n) + " is not a power of two");
    }
    n_bits_ = std::countr_zero(n);
    double total = 0.0;
    for (double &p : probs_) {
        if (!(p >= -1e-15 && p <= 1.0 + 1e-12)) {
            throw Error(ErrorKind::kInvalidDistribution, "probability " + std::to_string(p) + " outside [0,1]");
        }
        p = std::clamp(p, 0.0, 1.0);
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-10) {
        throw Error(ErrorKind::kInvalidDistribution, "probabilities sum to " + std::to_string(total));
    }
}

OutcomeDistribution OutcomeDistribution::uniform(int n_bits) {
    const std::size_t n = std::size_t{1} << n_bits;
    return OutcomeDistribution(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

OutcomeDistribution OutcomeDistribution::point(int n_bits, std::uint64_t index) {
    std::vector<double> p(std::size_t{1} << n_bits, 0.0);
    p.at(index) = 1.0;
    return OutcomeDistribution(std::move(p));
}

double OutcomeDistribution::collision() const {
    return std::accumulate(probs_.begin(), probs_.end(), 0.0, [](double acc, double p) { return acc + p * p; });
}

OutcomeDistribution OutcomeDistribution::xored(std::uint64_t mask) const {
    std::vector<double> out(probs_.size());
    for (std::size_t b = 0; b < probs_.size(); ++b) out[b] = probs_[b ^ mask];
    return OutcomeDistribution(std::move(out));
}

void CountsTable::validate() const {
    std::uint64_t total = 0;
    for (const auto &[key, c] : counts) {
        if (static_cast<int>(key.size()) != n_bits) {
            throw Error(ErrorKind::kShapeMismatch, "key '" + key + "' is not " + std::to_string(n_bits) + " bits");
        }
        from_bitstring(key);
        total += c;
    }
    if (total != shots) {
        throw Error(ErrorKind::kShapeMismatch,
                    "counts sum to " + std::to_string(total) + " but shots = " + std::to_string(shots));
    }
}

CountsTable CountsTable::xored(std::uint64_t mask) const {
    CountsTable out = *this;
    out.counts.clear();
    for (const auto &[key, c] : counts) out.counts[to_bitstring(from_bitstring(key) ^ mask, n_bits)] += c;
    return out;
}

void NoiseModel::validate() const {
    auto ok = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!ok(depolarizing)) throw Error(ErrorKind::kInvalidNoise, "depolarizing strength outside [0,1]");
    for (double f : readout_flip) {
        if (!ok(f)) throw Error(ErrorKind::kInvalidNoise, "readout flip probability outside [0,1]");
    }
}

bool NoiseModel::noiseless() const {
    return depolarizing == 0.0 && std::all_of(readout_flip.begin(), readout_flip.end(), [](double f) { return f == 0.0; });
}

NoiseModel NoiseModel::transmon_readout_defaults() { return NoiseModel{0.0, {3.5e-2, 1.5e-2, 1.6e-2}, 0}; }

OutcomeDistribution exact_distribution(const Circuit &circuit) {
    const int n = circuit.num_wires();
    if (n > kMaxWires) {
        throw Error(ErrorKind::kTooManyWires, std::to_string(n) + " wires exceeds " + std::to_string(kMaxWires));
    }
    using amp = std::complex<double>;
    const std::size_t dim = std::size_t{1} << n;
    std::vector<amp> psi(dim, amp(1.0 / std::sqrt(static_cast<double>(dim)), 0.0));
    const double h = 1.0 / std::sqrt(2.0);

    for (const Gate &gate : circuit.gates()) {
        if (const auto *j = std::get_if<JGate>(&gate)) {
            // J(a) = H diag(1, e^{ia})
            const std::size_t bit = std::size_t{1} << (n - 1 - j->wire);
            const amp phase = std::polar(1.0, j->angle);
            for (std::size_t i = 0; i < dim; ++i) {
                if ((i & bit) != 0) continue;
                const amp a0 = psi[i];
                const amp a1 = psi[i | bit] * phase;
                psi[i] = h * (a0 + a1);
                psi[i | bit] = h * (a0 - a1);
            }
        } else if (const auto *c = std::get_if<CzGate>(&gate)) {
            const std::size_t both = (std::size_t{1} << (n - 1 - c->a)) | (std::size_t{1} << (n - 1 - c->b));
            for (std::size_t i = 0; i < dim; ++i) {
                if ((i & both) == both) psi[i] = -psi[i];
            }
        } else {
            throw Error(ErrorKind::kUnsupportedGate, "cannot simulate gate '" + std::get<OpaqueGate>(gate).name + "'");
        }
    }
    std::vector<double> probs(dim);
    double total = 0.0;
    for (std::size_t i = 0; i < dim; ++i) total += probs[i] = std::norm(psi[i]);
    for (double &p : probs) p /= total;
    return OutcomeDistribution(std::move(probs));
}

OutcomeDistribution apply_noise(const OutcomeDistribution &distribution, const NoiseModel &noise) {
    noise.validate();
    const int n = distribution.n_bits();
    const double lambda = noise.depolarizing;
    const double floor = lambda / static_cast<double>(distribution.size());
    std::vector<double> p(distribution.size());
    for (std::size_t b = 0; b < p.size(); ++b) p[b] = (1.0 - lambda) * distribution[b] + floor;

    for (int w = 0; w < n && w < static_cast<int>(noise.readout_flip.size()); ++w) {
        const double f = noise.readout_flip[static_cast<std::size_t>(w)];
        if (f == 0.0) continue;
        const std::size_t bit = std::size_t{1} << (n - 1 - w);
        for (std::size_t b = 0; b < p.size(); ++b) {
            if ((b & bit) != 0) continue;
            const double p0 = p[b];
            const double p1 = p[b | bit];
            p[b] = (1.0 - f) * p0 + f * p1;
            p[b | bit] = f * p0 + (1.0 - f) * p1;
        }
    }
    return OutcomeDistribution(std::move(p));
}

CountsTable sample_distribution(const OutcomeDistribution &distribution, std::uint64_t shots, std::uint64_t seed) {
    if (shots < 1) throw Error(ErrorKind::kInsufficientShots, "need at least one shot");
    const int n = distribution.n_bits();
    std::vector<double> cdf(distribution.size());
    std::partial_sum(distribution.probs().begin(), distribution.probs().end(), cdf.begin());
    std::vector<std::uint64_t> hist(distribution.size(), 0);
    Rng rng(seed);
    std::optional<std::uint64_t> first_collision;
    for (std::uint64_t s = 0; s < shots; ++s) {
        const double u = rng.uniform() * cdf.back();
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        std::size_t b = static_cast<std::size_t>(it - cdf.begin());
        if (b >= cdf.size()) b = cdf.size() - 1;
        if (hist[b]++ > 0 && !first_collision) first_collision = s + 1;
    }
    CountsTable table;
    table.n_bits = n;
    table.shots = shots;
    table.seed = seed;
    table.first_collision = first_collision;
    for (std::size_t b = 0; b < hist.size(); ++b) {
        if (hist[b] > 0) table.counts[to_bitstring(b, n)] = hist[b];
    }
    return table;
}

CountsTable sample(const Circuit &circuit, std::uint64_t shots, const NoiseModel &noise, std::uint64_t seed) {
    OutcomeDistribution d = apply_noise(exact_distribution(circuit), noise);
    return sample_distribution(d, shots, derive_seed(seed, {noise.seed}));
}

std::vector<double> frequencies(const CountsTable &counts) {
    std::vector<double> f(std::size_t{1} << counts.n_bits, 0.0);
    if (counts.shots == 0) return f;
    for (const auto &[key, c] : counts.counts) {
        f[from_bitstring(key)] = static_cast<double>(c) / static_cast<double>(counts.shots);
    }
    return f;
}

}  // namespace xverify
