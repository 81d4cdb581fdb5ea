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

#include "xverify/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>
#include <string>

#include "xverify/bits.hpp"
#include "xverify/error.hpp"
#include "xverify/rng.hpp"

namespace xverify {

double PVector::dot(const PVector &other) const {
    if (variable_set != other.variable_set || probs.size() != other.probs.size()) {
        throw Error(ErrorKind::kVariableSetMismatch, "p-vectors live on different variable sets");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) s += probs[i] * other.probs[i];
    return s;
}

namespace {

// Where each variable-set position comes from for one side.
struct Layout {
    int n_v = 0;
    int n_out = 0;
    int n_fix = 0;
    std::vector<int> output_position;  // per variable position, or -1
    std::vector<int> fix_position;     // per variable position, or -1

    Layout(const RelationSpec &relation, Side side) {
        const auto &outs = relation.outputs(side);
        const auto fixed = relation.fixed_positions(side);
        n_v = relation.n_v();
        n_out = static_cast<int>(outs.size());
        n_fix = static_cast<int>(fixed.size());
        for (Vertex v : relation.variable_set) {
            auto o = std::find(outs.begin(), outs.end(), v);
            auto f = std::find(fixed.begin(), fixed.end(), v);
            output_position.push_back(o == outs.end() ? -1 : static_cast<int>(o - outs.begin()));
            fix_position.push_back(f == fixed.end() ? -1 : static_cast<int>(f - fixed.begin()));
        }
        if (static_cast<int>(outs.size()) > n_v) {
            throw Error(ErrorKind::kRelationMismatch, "side outputs are not inside the variable set");
        }
    }

    [[nodiscard]] std::uint64_t assemble(std::uint64_t out_index, std::uint64_t fix_index) const {
        std::uint64_t m = 0;
        for (int p = 0; p < n_v; ++p) {
            const int bit = output_position[p] >= 0 ? bit_at(out_index, n_out, output_position[p])
                                                    : bit_at(fix_index, n_fix, fix_position[p]);
            m = with_bit(m, n_v, p, bit);
        }
        return m;
    }
};

struct JobData {
    std::uint64_t shots = 0;
    double pair_collisions = 0.0;  // sum_b c_b (c_b - 1), output space
    bool eligible = true;
    std::map<std::uint64_t, std::uint64_t> assembled;  // n_v string -> count
};

struct SideData {
    int n_fix = 0;
    std::vector<JobData> jobs;
    std::map<std::uint64_t, std::uint64_t> totals;
    std::uint64_t shots = 0;
};

SideData collect(std::span<const FixedJob> jobs, const RelationSpec &relation, Side side) {
    Layout layout(relation, side);
    const auto reference = relation.reference_outcomes(side);
    std::vector<int> reference_fix;
    for (auto [v, b] : reference) reference_fix.push_back(b);

    SideData data;
    data.n_fix = layout.n_fix;
    for (const FixedJob &job : jobs) {
        if (job.counts.n_bits != layout.n_out) {
            throw Error(ErrorKind::kRelationMismatch, "job '" + job.counts.circuit_ref + "' has " +
                                                          std::to_string(job.counts.n_bits) + " output bits, expected " +
                                                          std::to_string(layout.n_out));
        }
        if (static_cast<int>(job.fix.size()) != layout.n_fix ||
            std::any_of(job.fix.begin(), job.fix.end(), [](int b) { return b != 0 && b != 1; })) {
            throw Error(ErrorKind::kRelationMismatch, "job '" + job.counts.circuit_ref + "' has a malformed fix");
        }
        JobData jd;
        jd.eligible = job.fix == reference_fix;
        const std::uint64_t fix_index = index_of(job.fix);
        for (const auto &[key, c] : job.counts.counts) {
            if (c == 0) continue;
            const std::uint64_t m = layout.assemble(from_bitstring(key), fix_index);
            jd.assembled[m] += c;
            jd.shots += c;
            jd.pair_collisions += static_cast<double>(c) * static_cast<double>(c - 1);
            data.totals[m] += c;
        }
        data.shots += jd.shots;
        data.jobs.push_back(std::move(jd));
    }
    return data;
}

double theta(double collisions, double shots) { return collisions / (shots * (shots - 1.0)); }

struct Deletion {
    double weight;
    double aa;
    double ab;
};

double jackknife_variance(const std::vector<Deletion> &units, double (*stat)(const Deletion &, const void *),
                          const void *ctx) {
    double n = 0.0, mean = 0.0;
    for (const auto &u : units) {
        n += u.weight;
        mean += u.weight * stat(u, ctx);
    }
    if (n < 2.0) return std::numeric_limits<double>::infinity();
    mean /= n;
    double ss = 0.0;
    for (const auto &u : units) {
        const double d = stat(u, ctx) - mean;
        ss += u.weight * d * d;
    }
    return (n - 1.0) / n * ss;
}

// Self-collision term for one side, scaled into the variable-set space.
struct SelfTerm {
    bool use_jobs = false;
    std::vector<std::size_t> members;  // eligible job indices
    double value = 0.0;
};

SelfTerm self_term(const SideData &side, SelfCollisionMode mode) {
    SelfTerm t;
    for (std::size_t j = 0; j < side.jobs.size(); ++j) {
        if (mode == SelfCollisionMode::kRandomFixes || side.jobs[j].eligible) t.members.push_back(j);
    }
    if (t.members.empty()) throw Error(ErrorKind::kInsufficientShots, "no job at the reference fix");
    double sum = 0.0;
    for (std::size_t j : t.members) {
        const auto &job = side.jobs[j];
        if (job.shots < 2) throw Error(ErrorKind::kInsufficientShots, "a job has fewer than 2 shots");
        sum += theta(job.pair_collisions, static_cast<double>(job.shots));
    }
    const double scale = std::ldexp(1.0, -side.n_fix);
    t.value = scale * sum / static_cast<double>(t.members.size());
    t.use_jobs = t.members.size() >= 2 && side.jobs.size() >= 2;
    return t;
}

// Delete-one units for `side`. Each unit reports the side's self term and the
// cross sum with `other` after deletion.
std::vector<Deletion> deletions(const SideData &side, const SelfTerm &self, const SideData *other, double cross_sum) {
    const double scale = std::ldexp(1.0, -side.n_fix);
    const double other_shots = other != nullptr ? static_cast<double>(other->shots) : 1.0;
    auto other_count = [&](std::uint64_t m) -> double {
        if (other == nullptr) return 0.0;
        auto it = other->totals.find(m);
        return it == other->totals.end() ? 0.0 : static_cast<double>(it->second);
    };
    std::vector<double> thetas(side.jobs.size(), 0.0);
    double theta_sum = 0.0;
    std::vector<bool> member(side.jobs.size(), false);
    for (std::size_t j : self.members) {
        member[j] = true;
        thetas[j] = theta(side.jobs[j].pair_collisions, static_cast<double>(side.jobs[j].shots));
        theta_sum += thetas[j];
    }
    const double k = static_cast<double>(self.members.size());
    const double total = static_cast<double>(side.shots);

    std::vector<Deletion> units;
    if (self.use_jobs) {
        for (std::size_t j = 0; j < side.jobs.size(); ++j) {
            const auto &job = side.jobs[j];
            double aa = self.value;
            if (member[j]) aa = scale * (theta_sum - thetas[j]) / (k - 1.0);
            double removed = 0.0;
            for (auto [m, c] : job.assembled) removed += static_cast<double>(c) * other_count(m);
            const double remaining = total - static_cast<double>(job.shots);
            const double ab = remaining > 0 ? (cross_sum - removed) / (remaining * other_shots) : 0.0;
            units.push_back({1.0, aa, ab});
        }
        return units;
    }
    // Per-shot units, grouped by (job, assembled string). Distinct outputs of
    // one job assemble to distinct strings, so counts match output counts.
    for (std::size_t j = 0; j < side.jobs.size(); ++j) {
        const auto &job = side.jobs[j];
        const double n = static_cast<double>(job.shots);
        for (auto [m, c] : job.assembled) {
            double aa = self.value;
            if (member[j]) {
                const double t = n > 2.0 ? (job.pair_collisions - 2.0 * (static_cast<double>(c) - 1.0)) /
                                               ((n - 1.0) * (n - 2.0))
                                         : thetas[j];
                aa = scale * (theta_sum - thetas[j] + t) / k;
            }
            const double ab = total > 1.0 ? (cross_sum - other_count(m)) / ((total - 1.0) * other_shots) : 0.0;
            units.push_back({static_cast<double>(c), aa, ab});
        }
    }
    return units;
}

double cross_sum_of(const SideData &a, const SideData &b) {
    double s = 0.0;
    for (auto [m, c] : a.totals) {
        auto it = b.totals.find(m);
        if (it != b.totals.end()) s += static_cast<double>(c) * static_cast<double>(it->second);
    }
    return s;
}

// Per-shot deletions on side B see B as "side" and A as "other"; the cross
// sum is symmetric so the same helper serves both sides.

}  // namespace

PVector build_pvector(const OutcomeDistribution &distribution, const RelationSpec &relation, Side side,
                      std::string source) {
    Layout layout(relation, side);
    if (distribution.n_bits() != layout.n_out) {
        throw Error(ErrorKind::kShapeMismatch, "distribution has " + std::to_string(distribution.n_bits()) +
                                                   " bits, side has " + std::to_string(layout.n_out) + " outputs");
    }
    std::map<std::uint64_t, OutcomeDistribution> per_fix;
    for (std::uint64_t f = 0; f < (std::uint64_t{1} << layout.n_fix); ++f) per_fix.emplace(f, distribution);
    return assemble_pvector(per_fix, relation, side, std::move(source));
}

PVector assemble_pvector(const std::map<std::uint64_t, OutcomeDistribution> &per_fix, const RelationSpec &relation,
                         Side side, std::string source) {
    Layout layout(relation, side);
    PVector p;
    p.variable_set = relation.variable_set;
    p.source = std::move(source);
    p.probs.assign(std::size_t{1} << layout.n_v, 0.0);
    const double scale = std::ldexp(1.0, -layout.n_fix);
    for (std::uint64_t f = 0; f < (std::uint64_t{1} << layout.n_fix); ++f) {
        auto it = per_fix.find(f);
        if (it == per_fix.end()) {
            throw Error(ErrorKind::kShapeMismatch, "missing distribution for fix " + to_bitstring(f, layout.n_fix));
        }
        if (it->second.n_bits() != layout.n_out) throw Error(ErrorKind::kShapeMismatch, "distribution width mismatch");
        for (std::uint64_t b = 0; b < it->second.size(); ++b) p.probs[layout.assemble(b, f)] = scale * it->second[b];
    }
    return p;
}

std::string_view to_string(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::kExact: return "exact";
        case EstimatorKind::kCollision: return "collision";
        case EstimatorKind::kOverlap: return "overlap";
    }
    return "unknown";
}

L2Estimate l2_exact(const PVector &a, const PVector &b) {
    if (a.variable_set != b.variable_set || a.probs.size() != b.probs.size()) {
        throw Error(ErrorKind::kVariableSetMismatch, "p-vectors live on different variable sets");
    }
    L2Estimate e;
    e.aa = {a.dot(a), 0.0, EstimatorKind::kExact, 0, 0};
    e.ab = {a.dot(b), 0.0, EstimatorKind::kExact, 0, 0};
    e.bb = {b.dot(b), 0.0, EstimatorKind::kExact, 0, 0};
    double direct = 0.0;
    for (std::size_t i = 0; i < a.probs.size(); ++i) {
        const double d = a.probs[i] - b.probs[i];
        direct += d * d;
    }
    // The difference form is exact to rounding; the components reproduce it
    // to ~1e-16.
    e.value = direct;
    return e;
}

DotEstimate self_collision_estimate(const CountsTable &counts) {
    if (counts.shots < 2) throw Error(ErrorKind::kInsufficientShots, "self collisions need at least 2 shots");
    const double n = static_cast<double>(counts.shots);
    double collisions = 0.0;
    for (const auto &[key, c] : counts.counts) collisions += static_cast<double>(c) * static_cast<double>(c - 1);
    DotEstimate e{theta(collisions, n), std::numeric_limits<double>::infinity(), EstimatorKind::kCollision,
                  counts.shots, 1};
    if (counts.shots >= 3) {
        std::vector<Deletion> units;
        for (const auto &[key, c] : counts.counts) {
            const double t = (collisions - 2.0 * (static_cast<double>(c) - 1.0)) / ((n - 1.0) * (n - 2.0));
            units.push_back({static_cast<double>(c), t, 0.0});
        }
        e.std_error = std::sqrt(jackknife_variance(
            units, [](const Deletion &d, const void *) { return d.aa; }, nullptr));
    }
    return e;
}

DotEstimate self_collision_estimate(std::span<const FixedJob> jobs, const RelationSpec &relation, Side side,
                                    SelfCollisionMode mode) {
    SideData data = collect(jobs, relation, side);
    SelfTerm self = self_term(data, mode);
    auto units = deletions(data, self, nullptr, 0.0);
    const double var = jackknife_variance(units, [](const Deletion &d, const void *) { return d.aa; }, nullptr);
    return {self.value, std::sqrt(var), EstimatorKind::kCollision, data.shots, data.jobs.size()};
}

DotEstimate cross_collision_estimate(std::span<const FixedJob> jobs_a, std::span<const FixedJob> jobs_b,
                                     const RelationSpec &relation) {
    SideData a = collect(jobs_a, relation, Side::kA);
    SideData b = collect(jobs_b, relation, Side::kB);
    if (a.shots < 2 || b.shots < 2) throw Error(ErrorKind::kInsufficientShots, "cross collisions need 2 shots per side");
    const double s = cross_sum_of(a, b);
    const double value = s / (static_cast<double>(a.shots) * static_cast<double>(b.shots));
    SelfTerm none_a, none_b;
    none_a.use_jobs = a.jobs.size() >= 2;
    none_b.use_jobs = b.jobs.size() >= 2;
    auto stat = [](const Deletion &d, const void *) { return d.ab; };
    const double var = jackknife_variance(deletions(a, none_a, &b, s), stat, nullptr) +
                       jackknife_variance(deletions(b, none_b, &a, s), stat, nullptr);
    return {value, std::sqrt(var), EstimatorKind::kCollision, a.shots + b.shots, a.jobs.size() + b.jobs.size()};
}

L2Estimate l2_collision_estimate(std::span<const FixedJob> jobs_a, std::span<const FixedJob> jobs_b,
                                 const RelationSpec &relation, SelfCollisionMode mode) {
    SideData a = collect(jobs_a, relation, Side::kA);
    SideData b = collect(jobs_b, relation, Side::kB);
    SelfTerm sa = self_term(a, mode);
    SelfTerm sb = self_term(b, mode);
    const double s = cross_sum_of(a, b);
    const double ab = s / (static_cast<double>(a.shots) * static_cast<double>(b.shots));

    auto units_a = deletions(a, sa, &b, s);
    auto units_b = deletions(b, sb, &a, s);
    struct Ctx {
        double other_self;
    };
    auto l2_stat = [](const Deletion &d, const void *ctx) {
        return d.aa - 2.0 * d.ab + static_cast<const Ctx *>(ctx)->other_self;
    };
    Ctx ca{sb.value}, cb{sa.value};
    const double var_l2 = jackknife_variance(units_a, l2_stat, &ca) + jackknife_variance(units_b, l2_stat, &cb);

    auto aa_stat = [](const Deletion &d, const void *) { return d.aa; };
    auto ab_stat = [](const Deletion &d, const void *) { return d.ab; };
    L2Estimate e;
    e.aa = {sa.value, std::sqrt(jackknife_variance(units_a, aa_stat, nullptr)), EstimatorKind::kCollision, a.shots,
            a.jobs.size()};
    e.bb = {sb.value, std::sqrt(jackknife_variance(units_b, aa_stat, nullptr)), EstimatorKind::kCollision, b.shots,
            b.jobs.size()};
    e.ab = {ab,
            std::sqrt(jackknife_variance(units_a, ab_stat, nullptr) + jackknife_variance(units_b, ab_stat, nullptr)),
            EstimatorKind::kCollision, a.shots + b.shots, a.jobs.size() + b.jobs.size()};
    e.value = e.aa.value - 2.0 * e.ab.value + e.bb.value;
    e.std_error = std::sqrt(var_l2);
    return e;
}

DotEstimate overlap_estimate(std::span<const FixedJob> jobs, const RelationSpec &relation, Side side,
                             const PVector &reference) {
    if (reference.variable_set != relation.variable_set) {
        throw Error(ErrorKind::kVariableSetMismatch, "reference p-vector is on another variable set");
    }
    SideData data = collect(jobs, relation, side);
    if (data.shots < 2) throw Error(ErrorKind::kInsufficientShots, "overlap needs at least 2 shots");
    const double n = static_cast<double>(data.shots);
    double total = 0.0;
    for (auto [m, c] : data.totals) total += static_cast<double>(c) * reference.probs[m];

    std::vector<Deletion> units;
    if (data.jobs.size() >= 2) {
        for (const auto &job : data.jobs) {
            double removed = 0.0;
            for (auto [m, c] : job.assembled) removed += static_cast<double>(c) * reference.probs[m];
            const double rest = n - static_cast<double>(job.shots);
            units.push_back({1.0, 0.0, rest > 0 ? (total - removed) / rest : 0.0});
        }
    } else {
        for (auto [m, c] : data.totals) {
            units.push_back({static_cast<double>(c), 0.0, (total - reference.probs[m]) / (n - 1.0)});
        }
    }
    const double var = jackknife_variance(units, [](const Deletion &d, const void *) { return d.ab; }, nullptr);
    return {total / n, std::sqrt(var), EstimatorKind::kOverlap, data.shots, data.jobs.size()};
}

PVector empirical_pvector(std::span<const FixedJob> jobs, const RelationSpec &relation, Side side,
                          std::string source) {
    SideData data = collect(jobs, relation, side);
    PVector p;
    p.variable_set = relation.variable_set;
    p.source = std::move(source);
    p.probs.assign(std::size_t{1} << relation.n_v(), 0.0);
    if (data.shots == 0) return p;
    for (auto [m, c] : data.totals) p.probs[m] = static_cast<double>(c) / static_cast<double>(data.shots);
    return p;
}

std::string_view to_string(SanityFlag flag) {
    switch (flag) {
        case SanityFlag::kUniformSuspect: return "uniform-suspect";
        case SanityFlag::kPorterThomasLike: return "porter-thomas-like";
        case SanityFlag::kOther: return "other";
    }
    return "unknown";
}

SanityFlag sanity_classify(const DotEstimate &pp, int n_outputs) {
    const double uniform = std::ldexp(1.0, -n_outputs);
    const double tolerance = 3.0 * pp.std_error;
    if (std::abs(pp.value - uniform) <= tolerance) return SanityFlag::kUniformSuspect;
    if (std::abs(pp.value - 2.0 * uniform) <= tolerance) return SanityFlag::kPorterThomasLike;
    return SanityFlag::kOther;
}

// ---------------------------------------------------------------------------
// Regression

double RegressionResult::band_halfwidth(double x) const {
    const double var = intercept_std_error * intercept_std_error + 2.0 * x * slope_intercept_covariance +
                       x * x * slope_std_error * slope_std_error;
    return 3.0 * std::sqrt(std::max(var, 0.0));
}

namespace {

struct Line {
    double slope;
    double intercept;
};

// Orthogonal fit in coordinates (x / sx, y / sy); returns the line in the
// original coordinates.
Line orthogonal_fit(std::span<const Point> pts, double sx, double sy, std::size_t skip) {
    double n = 0.0, mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i == skip) continue;
        n += 1.0;
        mx += pts[i].x / sx;
        my += pts[i].y / sy;
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i == skip) continue;
        const double dx = pts[i].x / sx - mx;
        const double dy = pts[i].y / sy - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    const double scale = std::max({sxx, syy, 1e-300});
    if (sxx + syy <= 1e-28 * std::max(1.0, mx * mx + my * my)) {
        throw Error(ErrorKind::kDegenerateInput, "all points coincide");
    }
    double slope;
    if (std::abs(sxy) <= 1e-14 * scale) {
        if (syy >= sxx) throw Error(ErrorKind::kDegenerateInput, "best-fit line is vertical or direction is ambiguous");
        slope = 0.0;
    } else {
        const double d = syy - sxx;
        slope = (d + std::sqrt(d * d + 4.0 * sxy * sxy)) / (2.0 * sxy);
    }
    const double slope_xy = slope * sy / sx;
    return {slope_xy, my * sy - slope_xy * mx * sx};
}

double rms(std::span<const double> v) {
    double s = 0.0;
    for (double e : v) s += e * e;
    return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

RegressionResult total_least_squares(std::span<const Point> points, std::span<const double> x_err,
                                     std::span<const double> y_err) {
    if (points.size() < 3) throw Error(ErrorKind::kDegenerateInput, "need at least 3 points");
    double sx = 1.0, sy = 1.0;
    if (!x_err.empty() || !y_err.empty()) {
        if (x_err.size() != points.size() || y_err.size() != points.size()) {
            throw Error(ErrorKind::kDegenerateInput, "per-point errors must match the number of points");
        }
        sx = rms(x_err);
        sy = rms(y_err);
        if (!(sx > 0.0) || !(sy > 0.0)) throw Error(ErrorKind::kDegenerateInput, "errors must be positive");
    }
    const std::size_t none = points.size();
    const Line full = orthogonal_fit(points, sx, sy, none);

    const double n = static_cast<double>(points.size());
    std::vector<Line> loo;
    loo.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) loo.push_back(orthogonal_fit(points, sx, sy, i));
    double ms = 0.0, mi = 0.0;
    for (const Line &l : loo) {
        ms += l.slope;
        mi += l.intercept;
    }
    ms /= n;
    mi /= n;
    double vs = 0.0, vi = 0.0, cov = 0.0;
    for (const Line &l : loo) {
        vs += (l.slope - ms) * (l.slope - ms);
        vi += (l.intercept - mi) * (l.intercept - mi);
        cov += (l.slope - ms) * (l.intercept - mi);
    }
    const double f = (n - 1.0) / n;

    RegressionResult r;
    r.slope = full.slope;
    r.intercept = full.intercept;
    r.slope_std_error = std::sqrt(f * vs);
    r.intercept_std_error = std::sqrt(f * vi);
    r.slope_intercept_covariance = f * cov;
    for (const Point &p : points) r.prediction_band_halfwidths.push_back(r.band_halfwidth(p.x));
    return r;
}

// ---------------------------------------------------------------------------

FidelityBound fidelity_lower_bound_from_alpha(double alpha_id, int m) {
    return {alpha_id, (alpha_id - m + 4.0) / 4.0, alpha_id > m - 2};
}

FidelityBound fidelity_lower_bound(std::span<const double> expectations, int m, std::span<const double> coefficients) {
    if (static_cast<int>(expectations.size()) != m) {
        throw Error(ErrorKind::kOutOfRangeExpectation, "expected " + std::to_string(m) + " expectation values");
    }
    if (!coefficients.empty() && coefficients.size() != expectations.size()) {
        throw Error(ErrorKind::kOutOfRangeExpectation, "one coefficient per expectation value");
    }
    double alpha = 0.0;
    for (std::size_t i = 0; i < expectations.size(); ++i) {
        const double e = expectations[i];
        if (!(e >= -1.0 && e <= 1.0)) {
            throw Error(ErrorKind::kOutOfRangeExpectation, "expectation " + std::to_string(e) + " outside [-1, 1]");
        }
        alpha += (coefficients.empty() ? 1.0 : coefficients[i]) * e;
    }
    return fidelity_lower_bound_from_alpha(alpha, m);
}

namespace {

double binomial(std::size_t n, std::size_t k) {
    double r = 1.0;
    for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    return r;
}

double subset_mean(std::span<const double> values, std::vector<std::size_t> idx) {
    std::sort(idx.begin(), idx.end());
    double s = 0.0;
    for (std::size_t i : idx) s += values[i];
    return s / static_cast<double>(idx.size());
}

}  // namespace

std::vector<SubsampleRow> subsample_analysis(std::span<const double> values, std::span<const std::size_t> sizes,
                                             std::size_t trials, std::uint64_t seed) {
    std::vector<SubsampleRow> rows;
    for (std::size_t size : sizes) {
        if (size == 0 || size > values.size()) {
            throw Error(ErrorKind::kSubsetTooLarge, "subset size " + std::to_string(size) + " with " +
                                                        std::to_string(values.size()) + " values");
        }
        std::vector<double> means;
        SubsampleRow row;
        row.size = size;
        if (binomial(values.size(), size) <= static_cast<double>(trials)) {
            row.exhaustive = true;
            std::vector<std::size_t> idx(size);
            std::iota(idx.begin(), idx.end(), 0);
            while (true) {
                means.push_back(subset_mean(values, idx));
                // next combination in lexicographic order
                std::size_t i = size;
                while (i > 0 && idx[i - 1] == values.size() - size + i - 1) --i;
                if (i == 0) break;
                ++idx[i - 1];
                for (std::size_t j = i; j < size; ++j) idx[j] = idx[j - 1] + 1;
            }
        } else {
            Rng rng(derive_seed(seed, {size}));
            std::vector<std::size_t> pool(values.size());
            for (std::size_t t = 0; t < trials; ++t) {
                std::iota(pool.begin(), pool.end(), 0);
                for (std::size_t i = 0; i < size; ++i) {
                    std::swap(pool[i], pool[i + rng.index(pool.size() - i)]);
                }
                means.push_back(subset_mean(values, {pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(size)}));
            }
        }
        double mean = 0.0;
        for (double m : means) mean += m;
        mean /= static_cast<double>(means.size());
        double var = 0.0;
        for (double m : means) var += (m - mean) * (m - mean);
        row.mean = mean;
        row.spread = std::sqrt(var / static_cast<double>(means.size()));
        row.subsets = means.size();
        rows.push_back(row);
    }
    return rows;
}

std::string format_uncertainty(double value, double error) {
    char buf[64];
    if (!(error > 1e-12 * std::max(1.0, std::abs(value))) || !std::isfinite(error)) {
        std::snprintf(buf, sizeof buf, "%.6g", value);
        return buf;
    }
    // two significant digits of uncertainty
    int decimals = static_cast<int>(std::ceil(-std::log10(error))) + 1;
    decimals = std::clamp(decimals, 0, 15);
    const double digits = std::round(error * std::pow(10.0, decimals));
    std::snprintf(buf, sizeof buf, "%.*f(%.0f)", decimals, value, digits);
    return buf;
}

}  // namespace xverify
