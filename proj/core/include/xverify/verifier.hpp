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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xverify/patterns.hpp"
#include "xverify/simulator.hpp"

namespace xverify {

/// Probability vector over the 2^{n_v} strings of a relation's variable set
/// (big-endian over variable_set). Entries sum to one.
struct PVector {
    std::vector<Vertex> variable_set;
    std::vector<double> probs;
    std::string source;

    [[nodiscard]] double dot(const PVector &other) const;
};

/// Uniform embedding: p(m) = 2^{-(n_v - n_O)} q(m restricted to side's outputs).
/// Throws ShapeMismatch.
PVector build_pvector(const OutcomeDistribution &distribution, const RelationSpec &relation, Side side,
                      std::string source = {});

/// Embedding with one distribution per assignment of the side's fixed
/// positions (key = big-endian index over relation.fixed_positions(side)):
/// p(m) = 2^{-f} q_{fix(m)}(m restricted to outputs). Every fix must be present.
/// Throws ShapeMismatch.
PVector assemble_pvector(const std::map<std::uint64_t, OutcomeDistribution> &per_fix, const RelationSpec &relation,
                         Side side, std::string source = {});

enum class EstimatorKind { kExact, kCollision, kOverlap };

std::string_view to_string(EstimatorKind kind);

struct DotEstimate {
    double value = 0.0;
    double std_error = 0.0;
    EstimatorKind estimator = EstimatorKind::kExact;
    std::uint64_t samples = 0;
    std::uint64_t jobs = 0;
};

/// Squared l2 distance value = aa - 2 ab + bb.
struct L2Estimate {
    double value = 0.0;
    double std_error = 0.0;
    DotEstimate aa;
    DotEstimate ab;
    DotEstimate bb;
};

/// Throws VariableSetMismatch.
L2Estimate l2_exact(const PVector &a, const PVector &b);

/// Sampled outputs of one job, already unmasked, over relation.outputs(side),
/// together with the outcomes the job fixed on relation.fixed_positions(side).
struct FixedJob {
    CountsTable counts;
    std::vector<int> fix;
};

/// Unbiased pairwise-collision estimate of sum_b q(b)^2 in the table's own
/// output space, with delete-one jackknife error. Throws InsufficientShots.
DotEstimate self_collision_estimate(const CountsTable &counts);

enum class SelfCollisionMode {
    /// Average within-job collision rates over jobs whose fixes were drawn
    /// uniformly; unbiased for p.p.
    kRandomFixes,
    /// Use only jobs at the reference fix and assume sum q^2 is the same for
    /// every fix.
    kReferenceFixOnly,
};

/// p.p in the variable-set space: output-space collision rate times 2^{-(n_v - n_O)}.
/// Throws InsufficientShots, RelationMismatch.
DotEstimate self_collision_estimate(std::span<const FixedJob> jobs, const RelationSpec &relation, Side side,
                                    SelfCollisionMode mode = SelfCollisionMode::kRandomFixes);

/// Cross-collision frequency between assembled n_v-bit strings of A and B,
/// unbiased for p_A . p_B. Throws InsufficientShots, RelationMismatch.
DotEstimate cross_collision_estimate(std::span<const FixedJob> jobs_a, std::span<const FixedJob> jobs_b,
                                     const RelationSpec &relation);

/// All three terms from samples, with a joint jackknife error that accounts
/// for the terms sharing samples.
L2Estimate l2_collision_estimate(std::span<const FixedJob> jobs_a, std::span<const FixedJob> jobs_b,
                                 const RelationSpec &relation,
                                 SelfCollisionMode mode = SelfCollisionMode::kRandomFixes);

/// sum_m f(m) p_ref(m) for the empirical n_v-space frequencies f of `jobs`;
/// unbiased for p_side . p_ref.
DotEstimate overlap_estimate(std::span<const FixedJob> jobs, const RelationSpec &relation, Side side,
                             const PVector &reference);

/// Empirical n_v-space frequencies of `jobs`.
PVector empirical_pvector(std::span<const FixedJob> jobs, const RelationSpec &relation, Side side,
                          std::string source = {});

enum class SanityFlag { kUniformSuspect, kPorterThomasLike, kOther };

std::string_view to_string(SanityFlag flag);

/// Compares an output-space collision estimate against 2^{-n_O} (uniform) and
/// 2 * 2^{-n_O} (Porter-Thomas), each within 3 standard errors.
SanityFlag sanity_classify(const DotEstimate &pp, int n_outputs);

struct Point {
    double x = 0.0;
    double y = 0.0;
};

struct RegressionResult {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_std_error = 0.0;
    double intercept_std_error = 0.0;
    double slope_intercept_covariance = 0.0;
    /// 3-sigma half-width of the fitted mean at each input abscissa.
    std::vector<double> prediction_band_halfwidths;

    [[nodiscard]] double band_halfwidth(double x) const;
};

/// Orthogonal-distance line fit. With per-point errors the axes are first
/// scaled by the RMS error of each coordinate (Deming ratio). Standard errors
/// are delete-one jackknife estimates.
/// Throws DegenerateInput (fewer than 3 points, all coincident, or a
/// vertical best-fit line).
RegressionResult total_least_squares(std::span<const Point> points, std::span<const double> x_err = {},
                                     std::span<const double> y_err = {});

struct FidelityBound {
    double alpha_id = 0.0;
    double f_min = 0.0;
    bool bell_violation = false;
};

/// alpha_ID = sum_i lambda_i <O_i>; F_min = (alpha_ID - M + 4) / 4; violation iff alpha_ID > M - 2.
/// Coefficients default to +1. Throws OutOfRangeExpectation.
FidelityBound fidelity_lower_bound(std::span<const double> expectations, int m,
                                   std::span<const double> coefficients = {});

/// F_min from an already-summed alpha_ID.
FidelityBound fidelity_lower_bound_from_alpha(double alpha_id, int m);

struct SubsampleRow {
    std::size_t size = 0;
    double mean = 0.0;
    double spread = 0.0;
    std::size_t subsets = 0;
    bool exhaustive = false;
};

/// For each size s: mean and one-sigma spread of subset means over random
/// s-subsets (drawn without replacement). When C(n, s) <= trials every subset
/// is enumerated instead. Throws SubsetTooLarge.
std::vector<SubsampleRow> subsample_analysis(std::span<const double> values, std::span<const std::size_t> sizes,
                                             std::size_t trials, std::uint64_t seed);

/// "0.0330(12)"-style value with its uncertainty in the last two digits.
std::string format_uncertainty(double value, double error);

}  // namespace xverify
