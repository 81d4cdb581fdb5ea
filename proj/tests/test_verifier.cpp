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

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "xverify/bits.hpp"
#include "xverify/error.hpp"
#include "xverify/rng.hpp"

#include "models.hpp"

using namespace xverify;
using namespace xverify::models;

namespace {

struct Stats {
    double mean = 0, sd = 0;
};

double rms(const std::vector<double> &v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s / static_cast<double>(v.size()));
}

Stats stats(const std::vector<double> &v) {
    Stats s;
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    for (double x : v) s.sd += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(s.sd / static_cast<double>(v.size() - 1));
    return s;
}

}  // namespace

TEST(PVectorTest, UniformEmbeddingAndAssembly) {
    const auto h6 = builtin_graph("H6");
    const auto rel = relate_outcomes(h6.graph, h6.flow("flow-a"), h6.flow("flow-b"));
    const OutcomeDistribution q({0.1, 0.2, 0.3, 0.4});
    const PVector p = build_pvector(q, rel, Side::kA, "q");
    ASSERT_EQ(p.probs.size(), 8u);
    EXPECT_NEAR(std::accumulate(p.probs.begin(), p.probs.end(), 0.0), 1.0, 1e-15);
    // variable set (2, 5, 6); A outputs (5, 6); vertex 2 is spread uniformly
    EXPECT_DOUBLE_EQ(p.probs[0b011], 0.2);
    EXPECT_DOUBLE_EQ(p.probs[0b111], 0.2);
    EXPECT_EQ(p.source, "q");
    EXPECT_THROW(build_pvector(OutcomeDistribution::uniform(3), rel, Side::kA), Error);
    EXPECT_THROW(assemble_pvector({{0, q}}, rel, Side::kA), Error);  // fix 1 missing
}

TEST(PVectorTest, IdealFlowsAgreeExactly) {
    for (const auto &name : builtin_graph_names()) {
        const auto b = builtin_graph(name);
        const auto rel = relate_outcomes(b.graph, b.flows[0], b.flows[1]);
        for (std::uint64_t s = 0; s < 10; ++s) {
            const AngleSet a = random_instance(b.graph, pi_over_4_grid(), s);
            const auto l2 = l2_exact(model_pvector(b, rel, Side::kA, a, {}), model_pvector(b, rel, Side::kB, a, {}));
            EXPECT_NEAR(l2.value, 0.0, 1e-14) << name;
            EXPECT_NEAR(l2.aa.value - 2 * l2.ab.value + l2.bb.value, 0.0, 1e-14);
        }
    }
}

TEST(L2Exact, MismatchedSetsThrow) {
    PVector a{{1, 2}, {0.5, 0.5, 0, 0}, ""};
    PVector b{{1, 3}, {0.5, 0.5, 0, 0}, ""};
    try {
        l2_exact(a, b);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::kVariableSetMismatch);
    }
    EXPECT_DOUBLE_EQ(l2_exact(a, a).value, 0.0);
}

TEST(SelfCollision, UnbiasedWithCalibratedJackknife) {
    const OutcomeDistribution d({0.4, 0.3, 0.2, 0.1});
    std::vector<double> values, errors;
    for (std::uint64_t s = 0; s < 400; ++s) {
        const auto e = self_collision_estimate(sample_distribution(d, 500, s));
        values.push_back(e.value);
        errors.push_back(e.std_error);
    }
    const Stats v = stats(values);
    EXPECT_NEAR(v.mean, d.collision(), 4 * v.sd / std::sqrt(400.0));
    const double mean_error = std::accumulate(errors.begin(), errors.end(), 0.0) / 400.0;
    EXPECT_NEAR(mean_error / v.sd, 1.0, 0.15);
}

TEST(SelfCollision, NeedsTwoShots) {
    CountsTable one;
    one.n_bits = 1;
    one.shots = 1;
    one.counts = {{"0", 1}};
    try {
        self_collision_estimate(one);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::kInsufficientShots);
    }
}

TEST(SelfCollision, UniformSamplerHitsTheFloor) {
    for (int n : {2, 3, 5}) {
        std::vector<double> values;
        int uniform = 0;
        for (std::uint64_t s = 0; s < 200; ++s) {
            const auto e = self_collision_estimate(sample_distribution(OutcomeDistribution::uniform(n), 10000, s));
            values.push_back(e.value);
            uniform += sanity_classify(e, n) == SanityFlag::kUniformSuspect ? 1 : 0;
        }
        EXPECT_NEAR(stats(values).mean, std::ldexp(1.0, -n), 4 * stats(values).sd / std::sqrt(200.0));
        EXPECT_GE(uniform, 190) << n;
    }
}

TEST(Sanity, PorterThomasAndOther) {
    // Half the strings at twice the uniform weight: sum p^2 = 2 / 2^n.
    std::vector<double> half(16, 0.0);
    for (int i = 0; i < 8; ++i) half[2 * i] = 1.0 / 8;
    const auto pt = self_collision_estimate(sample_distribution(OutcomeDistribution(half), 20000, 1));
    EXPECT_EQ(sanity_classify(pt, 4), SanityFlag::kPorterThomasLike);
    const auto point = self_collision_estimate(sample_distribution(OutcomeDistribution::point(4, 3), 1000, 1));
    EXPECT_EQ(sanity_classify(point, 4), SanityFlag::kOther);
}

TEST(VariableSpace, SelfCrossAndL2AreUnbiased) {
    const auto b = builtin_graph("BOX_2x4");
    const auto rel = relate_outcomes(b.graph, b.flows[0], b.flows[1]);
    const AngleSet a = random_instance(b.graph, pi_over_4_grid(), 21);
    NoiseModel noisy;
    noisy.depolarizing = 0.3;
    const PVector pa = model_pvector(b, rel, Side::kA, a, {});
    const PVector pb = model_pvector(b, rel, Side::kB, a, noisy);
    const auto exact = l2_exact(pa, pb);

    std::vector<double> aa, ab, bb, l2, se_aa, se_bb, se_l2;
    int covered = 0;
    for (std::uint64_t s = 0; s < 150; ++s) {
        const auto ja = make_jobs(b, rel, Side::kA, a, {}, 4, 2000, 2 * s);
        const auto jb = make_jobs(b, rel, Side::kB, a, noisy, 4, 2000, 2 * s + 1);
        const auto e = l2_collision_estimate(ja, jb, rel);
        aa.push_back(e.aa.value);
        ab.push_back(e.ab.value);
        bb.push_back(e.bb.value);
        l2.push_back(e.value);
        se_aa.push_back(e.aa.std_error);
        se_bb.push_back(e.bb.std_error);
        se_l2.push_back(e.std_error);
        covered += std::abs(e.value - exact.value) < 4 * e.std_error ? 1 : 0;
        EXPECT_NEAR(self_collision_estimate(ja, rel, Side::kA).value, e.aa.value, 1e-15);
        EXPECT_NEAR(cross_collision_estimate(ja, jb, rel).value, e.ab.value, 1e-15);
    }
    const double root = std::sqrt(150.0);
    EXPECT_NEAR(stats(aa).mean, exact.aa.value, 4 * stats(aa).sd / root);
    EXPECT_NEAR(stats(ab).mean, exact.ab.value, 4 * stats(ab).sd / root);
    EXPECT_NEAR(stats(l2).mean, exact.value, 4 * stats(l2).sd / root);
    // Self terms: job-level jackknife is calibrated.
    EXPECT_NEAR(rms(se_aa) / stats(aa).sd, 1.0, 0.25);
    EXPECT_NEAR(rms(se_bb) / stats(bb).sd, 1.0, 0.25);
    // The two-sided delete-one jackknife counts the fix-by-shot interaction of
    // the cross term on both sides, so the combined error is conservative.
    const double ratio = rms(se_l2) / stats(l2).sd;
    EXPECT_GT(ratio, 0.9);
    EXPECT_LT(ratio, 1.8);
    EXPECT_GE(covered, 145);
}

TEST(VariableSpace, SingleJobErrorsAreConditionalOnTheFix) {
    // One job per side: per-shot units see shot noise only, so the error is
    // calibrated for a given fix.
    const auto b = builtin_graph("BOX_2x4");
    const auto rel = relate_outcomes(b.graph, b.flows[0], b.flows[1]);
    const AngleSet a = random_instance(b.graph, pi_over_4_grid(), 4);
    const std::vector<int> fix_a(rel.fixed_positions(Side::kA).size(), 0);
    const std::vector<int> fix_b(rel.fixed_positions(Side::kB).size(), 0);
    std::vector<double> values, errors;
    for (std::uint64_t s = 0; s < 200; ++s) {
        const auto e = l2_collision_estimate(make_jobs(b, rel, Side::kA, a, {}, 1, 3000, 3 * s, &fix_a),
                                             make_jobs(b, rel, Side::kB, a, {}, 1, 3000, 3 * s + 1, &fix_b), rel);
        ASSERT_GT(e.std_error, 0.0);
        values.push_back(e.value);
        errors.push_back(e.std_error);
    }
    EXPECT_NEAR(rms(errors) / stats(values).sd, 1.0, 0.25);
}

TEST(VariableSpace, ReferenceFixOnlyModeUsesReferenceJobs) {
    const auto h6 = builtin_graph("H6");
    const auto rel = relate_outcomes(h6.graph, h6.flow("flow-a"), h6.flow("flow-b"));
    const AngleSet a = random_instance(h6.graph, pi_over_4_grid(), 4);
    std::vector<FixedJob> jobs{{sample_distribution(OutcomeDistribution::uniform(2), 100, 1), {1}}};
    EXPECT_THROW(self_collision_estimate(jobs, rel, Side::kA, SelfCollisionMode::kReferenceFixOnly), Error);
    jobs.push_back({sample_distribution(OutcomeDistribution::point(2, 0), 100, 1), {0}});
    const auto e = self_collision_estimate(jobs, rel, Side::kA, SelfCollisionMode::kReferenceFixOnly);
    EXPECT_DOUBLE_EQ(e.value, 0.5);  // point mass, times 2^-1
}

TEST(VariableSpace, RejectsMalformedJobs) {
    const auto h6 = builtin_graph("H6");
    const auto rel = relate_outcomes(h6.graph, h6.flow("flow-a"), h6.flow("flow-b"));
    std::vector<FixedJob> wide{{sample_distribution(OutcomeDistribution::uniform(3), 10, 1), {0}}};
    EXPECT_THROW(self_collision_estimate(wide, rel, Side::kA), Error);
    std::vector<FixedJob> bad_fix{{sample_distribution(OutcomeDistribution::uniform(2), 10, 1), {0, 1}}};
    EXPECT_THROW(self_collision_estimate(bad_fix, rel, Side::kA), Error);
}

TEST(Overlap, UnbiasedAgainstReference) {
    const auto h6 = builtin_graph("H6");
    const auto rel = relate_outcomes(h6.graph, h6.flow("flow-a"), h6.flow("flow-b"));
    const AngleSet a = random_instance(h6.graph, pi_over_4_grid(), 8);
    NoiseModel noisy;
    noisy.readout_flip = {0.1, 0.1, 0.1};
    const PVector ideal = model_pvector(h6, rel, Side::kA, a, {});
    const PVector pb = model_pvector(h6, rel, Side::kB, a, noisy);
    std::vector<double> v, errors;
    for (std::uint64_t s = 0; s < 200; ++s) {
        const auto e = overlap_estimate(make_jobs(h6, rel, Side::kB, a, noisy, 4, 1000, s), rel, Side::kB, ideal);
        v.push_back(e.value);
        errors.push_back(e.std_error);
    }
    EXPECT_NEAR(stats(v).mean, pb.dot(ideal), 4 * stats(v).sd / std::sqrt(200.0));
    EXPECT_NEAR(rms(errors) / stats(v).sd, 1.0, 0.2);
    const PVector emp = empirical_pvector(make_jobs(h6, rel, Side::kB, a, noisy, 4, 1000, 1), rel, Side::kB);
    EXPECT_NEAR(std::accumulate(emp.probs.begin(), emp.probs.end(), 0.0), 1.0, 1e-12);
}

TEST(Regression, ExactLine) {
    std::vector<Point> pts;
    for (int i = 0; i < 10; ++i) pts.push_back({i * 0.1, 2.0 * i * 0.1 + 1.0});
    const auto r = total_least_squares(pts);
    EXPECT_NEAR(r.slope, 2.0, 1e-12);
    EXPECT_NEAR(r.intercept, 1.0, 1e-12);
    EXPECT_NEAR(r.slope_std_error, 0.0, 1e-10);
    ASSERT_EQ(r.prediction_band_halfwidths.size(), pts.size());
}

TEST(Regression, SwappingAxesInvertsTheSlope) {
    Rng rng(3);
    std::vector<Point> pts, swapped;
    for (int i = 0; i < 50; ++i) {
        const double x = rng.uniform();
        const Point p{x + 0.02 * rng.normal(), 0.7 * x + 0.02 * rng.normal()};
        pts.push_back(p);
        swapped.push_back({p.y, p.x});
    }
    EXPECT_NEAR(total_least_squares(pts).slope * total_least_squares(swapped).slope, 1.0, 1e-12);
}

TEST(Regression, DemingScalingFollowsAxisUnits) {
    Rng rng(5);
    std::vector<Point> pts, scaled;
    std::vector<double> ex, ey, ey_scaled;
    for (int i = 0; i < 60; ++i) {
        const double x = rng.uniform();
        const Point p{x + 0.01 * rng.normal(), 0.85 * x + 0.03 * rng.normal()};
        pts.push_back(p);
        scaled.push_back({p.x, 10 * p.y});
        ex.push_back(0.01);
        ey.push_back(0.03);
        ey_scaled.push_back(0.3);
    }
    const auto r = total_least_squares(pts, ex, ey);
    const auto s = total_least_squares(scaled, ex, ey_scaled);
    EXPECT_NEAR(s.slope, 10 * r.slope, 1e-9);
    EXPECT_NEAR(r.slope, 0.85, 0.1);
    EXPECT_THROW(total_least_squares(pts, ex, {}), Error);
}

TEST(Regression, DegenerateInputs) {
    auto kind = [](std::vector<Point> pts) {
        try {
            total_least_squares(pts);
        } catch (const Error &e) {
            return e.kind();
        }
        return ErrorKind::kParse;
    };
    EXPECT_EQ(kind({{0, 0}, {1, 1}}), ErrorKind::kDegenerateInput);
    EXPECT_EQ(kind({{1, 1}, {1, 1}, {1, 1}}), ErrorKind::kDegenerateInput);
    EXPECT_EQ(kind({{1, 0}, {1, 1}, {1, 2}}), ErrorKind::kDegenerateInput);  // vertical
}

TEST(Regression, BandGrowsAwayFromTheData) {
    Rng rng(9);
    std::vector<Point> pts;
    for (int i = 0; i < 40; ++i) {
        const double x = 0.4 + 0.2 * rng.uniform();
        pts.push_back({x, x + 0.01 * rng.normal()});
    }
    const auto r = total_least_squares(pts);
    EXPECT_LT(r.band_halfwidth(0.5), r.band_halfwidth(2.0));
    EXPECT_GT(r.band_halfwidth(0.5), 0.0);
}

TEST(Fidelity, BoundAndThreshold) {
    const std::vector<double> perfect(7, 1.0);
    const auto f = fidelity_lower_bound(perfect, 7);
    EXPECT_DOUBLE_EQ(f.alpha_id, 7.0);
    EXPECT_DOUBLE_EQ(f.f_min, 1.0);
    EXPECT_TRUE(f.bell_violation);
    EXPECT_NEAR(fidelity_lower_bound_from_alpha(5.56, 7).f_min, 0.64, 1e-12);
    EXPECT_FALSE(fidelity_lower_bound_from_alpha(5.0, 7).bell_violation);
    EXPECT_TRUE(fidelity_lower_bound_from_alpha(std::nextafter(5.0, 6.0), 7).bell_violation);
    const std::vector<double> weights(7, -1.0);
    EXPECT_DOUBLE_EQ(fidelity_lower_bound(perfect, 7, weights).alpha_id, -7.0);
    EXPECT_THROW(fidelity_lower_bound(std::vector<double>{1.2, 0, 0, 0, 0, 0, 0}, 7), Error);
    EXPECT_THROW(fidelity_lower_bound(perfect, 6), Error);
}

TEST(Subsample, ExhaustiveAndMonteCarlo) {
    std::vector<double> values;
    Rng rng(1);
    for (int i = 0; i < 200; ++i) values.push_back(rng.normal());
    const std::vector<std::size_t> sizes{5, 34, 199, 200};
    const auto rows = subsample_analysis(values, sizes, 2000, 7);
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_TRUE(rows[3].exhaustive);
    EXPECT_EQ(rows[3].spread, 0.0);
    EXPECT_TRUE(rows[2].exhaustive);  // C(200,199) = 200 <= 2000
    EXPECT_EQ(rows[2].subsets, 200u);
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / 200;
    double pop = 0;
    for (double v : values) pop += (v - mean) * (v - mean);
    pop = std::sqrt(pop / 200);
    for (int k : {0, 1}) {
        const double s = static_cast<double>(rows[k].size);
        const double predicted = pop / std::sqrt(s) * std::sqrt((200 - s) / 199);
        EXPECT_NEAR(rows[k].spread / predicted, 1.0, 0.1);
        EXPECT_NEAR(rows[k].mean, mean, 4 * predicted / std::sqrt(2000.0));
    }
    EXPECT_GT(rows[0].spread, rows[1].spread);
    EXPECT_THROW(subsample_analysis(values, std::vector<std::size_t>{201}, 10, 1), Error);
}

TEST(Format, Uncertainty) {
    EXPECT_EQ(format_uncertainty(0.0330, 0.0012), "0.0330(12)");
    EXPECT_EQ(format_uncertainty(1.04, 0.02), "1.040(20)");
    EXPECT_EQ(format_uncertainty(0.5, 0.0), "0.5");
}
