#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "daub/idealized_analysis.hpp"

using namespace daub;

namespace {

SyntheticCurveSpec inverse(double a, double c) {
    SyntheticCurveSpec s;
    s.family = CurveFamily::inverse;
    s.asymptote = a;
    s.scale = c;
    return s;
}

DaubConfig config(SampleCount b, double r, SampleCount N, double delta) {
    DaubConfig c;
    c.b = b;
    c.r = r;
    c.N = N;
    c.delta = delta;
    return c;
}

const Verdict* find(const std::vector<Verdict>& vs, const std::string& check, std::optional<LearnerId> who) {
    for (const auto& v : vs)
        if (v.check == check && v.learner == who) return &v;
    return nullptr;
}

}  // namespace

TEST(Ratio, RecoversSimpleFractions) {
    auto two = Ratio::from(2.0);
    ASSERT_TRUE(two);
    EXPECT_EQ(two->num, 2);
    EXPECT_EQ(two->den, 1);
    auto three_halves = Ratio::from(1.5);
    ASSERT_TRUE(three_halves);
    EXPECT_EQ(three_halves->num, 3);
    EXPECT_EQ(three_halves->den, 2);
    EXPECT_FALSE(Ratio::from(std::sqrt(2.0)).has_value());
}

TEST(ScaledLeq, ExactIntegerComparisons) {
    // 2500 <= 2 * 1250 holds with equality; strict fails.
    EXPECT_TRUE(detail::scaled_leq(2500, 2, 1, 1250, false));
    EXPECT_FALSE(detail::scaled_leq(2500, 2, 1, 1250, true));
    // 3 * 1e15 range stays exact in 128-bit
    EXPECT_TRUE(detail::scaled_leq(3e15, 3, 1, 1e15, false));
    EXPECT_FALSE(detail::scaled_leq(3e15 + 1, 3, 1, 1e15, false));
}

TEST(ComputeNStar, Examples) {
    // u(l) = 0.9 - 0.001 l, f* = 0.85: first l with u < 0.85 is 51 in exact
    // arithmetic; use integers scaled by 1000 to keep it exact here.
    auto u_scaled = [](SampleCount l) { return static_cast<double>(900 - l); };
    EXPECT_EQ(compute_n_star(u_scaled, 850.0, 1000), 51);
    auto u = [](SampleCount l) { return 0.9 - 0.001 * static_cast<double>(l); };
    EXPECT_EQ(compute_n_star(u, 0.85, 1000), 51);
    auto high = [](SampleCount) { return 0.99; };
    EXPECT_EQ(compute_n_star(high, 0.9, 1000), 1000);
}

TEST(ComputeNStar, InverseCurveMatchesBruteForce) {
    DaubConfig c = config(1000, 2.0, 10000, 0.01);
    auto spec = inverse(0.95, 500.0);
    auto p = IdealProblem::make({inverse(0.99, 1.0), spec}, c);
    // brute-force oracle with f* = 0.94 as in the worked example
    auto f = [](double n) { return 0.95 - 500.0 / n; };
    SampleCount oracle = c.N;
    for (SampleCount l = 2; l <= c.N; ++l) {
        const double g = f(l) + static_cast<double>(c.N - l) * (f(l) - f(l - 1));
        const double t = std::min(1.0, 0.95 + 0.05 / std::sqrt(static_cast<double>(l)));
        if (std::clamp(std::min(t, g), 0.0, 1.0) < 0.94) {
            oracle = l;
            break;
        }
    }
    auto u = [&](SampleCount l) { return p.upper_bound(1, l); };
    EXPECT_EQ(compute_n_star(u, 0.94, c.N, 2), oracle);
    EXPECT_GT(oracle, 2);
    EXPECT_LT(oracle, c.N);
}

TEST(ComputeNDelta, Examples) {
    const SampleCount N = 10000;
    const double delta = 0.05, cc = 100.0;
    auto f = [&](SampleCount n) { return 1.0 - cc * delta / static_cast<double>(n); };
    const auto nd = compute_n_delta(f, delta, N, 1);
    EXPECT_LE(std::abs(static_cast<double>(nd) - std::sqrt(cc * static_cast<double>(N))), 2.0);

    auto steep = [&](SampleCount n) { return 2.0 * delta / static_cast<double>(N) * static_cast<double>(n); };
    EXPECT_EQ(compute_n_delta(steep, delta, N, 1), N);
    auto flat_f = [](SampleCount) { return 0.7; };
    EXPECT_EQ(compute_n_delta(flat_f, delta, N, 1), 2);
    EXPECT_EQ(compute_n_delta(flat_f, delta, N, 4), 5);
}

TEST(IdealProblem, RejectsBadCurvesAndFindsBest) {
    auto c = config(100, 2.0, 12800, 0.01);
    auto p = IdealProblem::make({inverse(0.8, 10.0), inverse(0.9, 10.0), inverse(0.85, 10.0)}, c);
    EXPECT_EQ(p.i_star, 1u);
    EXPECT_DOUBLE_EQ(p.f_star, 0.9 - 10.0 / 12800.0);
    EXPECT_EQ(p.suboptimal(), (std::set<LearnerId>{0, 2}));
    EXPECT_THROW(IdealProblem::make({inverse(0.9, 500.0)}, c), ConfigError);  // negative at b
    EXPECT_THROW(IdealProblem::make({}, c), ConfigError);
}

TEST(DaubStar, TwoInverseCurvesAllVerdictsPass) {
    auto c = config(20, 2.0, 10240, 0.04);
    auto p = IdealProblem::make({inverse(0.95, 10.0), inverse(0.90, 10.0)}, c);
    ASSERT_EQ(p.suboptimal(), (std::set<LearnerId>{1}));
    auto res = run_daub_star(p);
    EXPECT_EQ(res.report.selected, 0u);
    for (const auto& v : res.verdicts) EXPECT_TRUE(v.passed) << v.check << ": " << v.detail;
    for (auto check : {"allocation_per_step", "allocation_total", "cost_vs_n_star", "cost_vs_n_delta", "n_star_le_n_delta"})
        EXPECT_NE(find(res.verdicts, check, 1u), nullptr) << check;
    EXPECT_NE(find(res.verdicts, "selected_cost", 0u), nullptr);
    EXPECT_NE(find(res.verdicts, "selected_optimal", 0u), nullptr);

    // Recompute learner 1's cost directly from the emitted trace.
    double trace_cost = 0.0;
    for (const auto& rec : res.report.records)
        if (rec.learner == 1) trace_cost += rec.cost;
    const auto& th = res.thresholds[1];
    const double lifted = static_cast<double>(std::max(th.n_star, schedule_sizes(c)[2]));
    EXPECT_LE(trace_cost, 4.0 * lifted);
    EXPECT_EQ(*res.report.regret, trace_cost);
}

TEST(DaubStar, SingleLearnerHasNoRegret) {
    auto p = IdealProblem::make({inverse(0.9, 10.0)}, config(100, 2.0, 12800, 0.01));
    auto res = run_daub_star(p);
    EXPECT_TRUE(res.suboptimal.empty());
    EXPECT_EQ(*res.report.regret, 0.0);
    EXPECT_TRUE(all_passed(res.verdicts));
}

TEST(DaubStar, CappedLastStepIsFlaggedInDetail) {
    // 100..800 then 1000: the selected learner pays 2500 > 2 * 1000.
    auto p = IdealProblem::make({inverse(0.9, 10.0)}, config(100, 2.0, 1000, 0.01));
    auto res = run_daub_star(p);
    const auto* v = find(res.verdicts, "selected_cost", 0u);
    ASSERT_NE(v, nullptr);
    EXPECT_FALSE(v->passed);
    EXPECT_NE(v->detail.find("capped"), std::string::npos);
}

TEST(DaubStar, SuperlinearCostsPassCostChecks) {
    std::mt19937_64 rng(61);
    std::uniform_real_distribution<double> a(0.6, 0.95), sc(0.5, 60.0), p(1.0, 1.6), k(1.0, 4.0);
    for (int t = 0; t < 40; ++t) {
        std::vector<SyntheticCurveSpec> specs;
        for (int i = 0; i < 6; ++i) {
            auto s = inverse(a(rng), sc(rng));
            s.cost_exponent = p(rng);
            s.cost_scale = k(rng);
            specs.push_back(s);
        }
        auto res = run_daub_star(IdealProblem::make(specs, config(128, 1.5, 2187, 0.01)));
        for (const auto& v : res.verdicts)
            EXPECT_TRUE(v.passed) << v.check << ": " << v.detail;
    }
}

TEST(UbValidity, Examples) {
    auto v = verify_ub_validity(inverse(1.0, 100.0), 10000, 1, schedule_sizes(100, 2.0, 10000));
    EXPECT_TRUE(v.passed) << v.detail;

    // constant f with no training-accuracy slack: bound equals f(N) exactly
    SyntheticCurveSpec flat;
    flat.family = CurveFamily::flat;
    flat.asymptote = 0.7;
    flat.overfit_margin = 0.0;
    for (SampleCount n : schedule_sizes(100, 2.0, 10000)) {
        auto f = [&](SampleCount m) { return exact_accuracy(flat, static_cast<double>(m)); };
        EXPECT_EQ(combined_bound(exact_train_accuracy(flat, n), projected_bound(f(n), ideal_derivative(f, n, 1), n, 10000)),
                  0.7);
    }
    EXPECT_TRUE(verify_ub_validity(flat, 10000, 1, schedule_sizes(100, 2.0, 10000)).passed);
}

TEST(UbValidity, CounterexampleFixtureIsFlagged) {
    const auto table = load_replay_csv(std::filesystem::path(DAUB_FIXTURES_DIR) / "ub_counterexample.csv");
    auto f = [&](SampleCount n) { return replay_train_eval(table, n).val_acc; };
    auto t = [&](SampleCount n) { return replay_train_eval(table, n).train_acc; };
    const SampleCount N = table.rows.back().n;
    auto bad = find_well_behaved_violation(f, 1, N);
    ASSERT_TRUE(bad.has_value());
    EXPECT_EQ(*bad, 401);
    auto v = verify_ub_validity(f, t, N, 1, {100, 200, 400, 800, 1000});
    EXPECT_FALSE(v.passed);
    EXPECT_NE(v.detail.find("n=100"), std::string::npos) << v.detail;
}

TEST(FastDecay, HoldsForFamiliesAndFailsForLinearGrowth) {
    auto f = [](SampleCount n) { return 0.9 - 50.0 / static_cast<double>(n); };
    EXPECT_TRUE(fast_decay_surrogate(f, 10000, 1).passed);
    // n * f'(n) grows for a convex curve
    auto convex = [](SampleCount n) { return 1e-9 * static_cast<double>(n) * static_cast<double>(n); };
    EXPECT_FALSE(fast_decay_surrogate(convex, 10000, 1).passed);
}

TEST(RegretTrend, AllOptimalPoolHasZeroRegret) {
    auto family = [](SampleCount N) {
        return IdealProblem::make({inverse(0.9, 5.0), inverse(0.9, 6.0)}, config(10, 2.0, N, 0.01));
    };
    for (const auto& row : regret_trend(family, {1000, 10000, 100000})) EXPECT_EQ(row.regret, 0.0);
}

TEST(RegretTrend, FlatSuboptimalLearnerCostsOnlyItsBootstrap) {
    SyntheticCurveSpec flat;
    flat.family = CurveFamily::flat;
    flat.asymptote = 0.5;
    auto family = [&](SampleCount N) {
        return IdealProblem::make({inverse(0.9, 5.0), flat}, config(10, 2.0, N, 0.01));
    };
    auto rows = regret_trend(family, {1000, 10000, 100000, 1000000});
    for (const auto& row : rows) EXPECT_EQ(row.regret, 10.0 + 20.0 + 40.0);
    EXPECT_TRUE(strictly_decreasing_ratio(rows));
    // ratio ~ 1/N: each tenfold N cuts it by roughly ten
    for (std::size_t k = 1; k < rows.size(); ++k) EXPECT_LT(rows[k].ratio * 5.0, rows[k - 1].ratio);
}

TEST(LowerBound, ReferenceInstance) {
    auto inst = lower_bound_instance(0.05, 10000, 100.0);
    EXPECT_EQ(inst.n_delta, 1000);
    EXPECT_EQ(inst.gamma_n_delta, 618);
    EXPECT_NEAR(inst.gamma, 0.6180339887, 1e-10);
    EXPECT_NEAR(1.0 / inst.d, 1.0 - inst.gamma, 1e-12);
    for (const auto& v : inst.verdicts) EXPECT_TRUE(v.passed) << v.check << ": " << v.detail;
    EXPECT_EQ(inst.verdicts.size(), 5u);
}

// When sqrt(cN) is not an integer the breakpoint must round up, otherwise the
// gap at N falls short of delta by about (d-1)/2 * delta/N.
TEST(LowerBound, GapReachesDeltaOffIntegerRoots) {
    std::mt19937_64 rng(123);
    int checked = 0;
    while (checked < 200) {
        const SampleCount N = 1000 + static_cast<SampleCount>(rng() % 50000);
        const double c = 20.0 + static_cast<double>(rng() % 10000) / 10000.0 * static_cast<double>(N) / 4.0;
        const double delta = 0.01 + 0.19 * static_cast<double>(rng() % 1000) / 1000.0;
        LowerBoundInstance inst;
        try {
            inst = lower_bound_instance(delta, N, c);
        } catch (const DomainError&) {
            continue;
        }
        ++checked;
        const double root = std::sqrt(c * static_cast<double>(N));
        EXPECT_GE(static_cast<double>(inst.n_delta), root);
        EXPECT_LT(static_cast<double>(inst.n_delta), root + 1.0);
        EXPECT_GE(inst.modified(N) - inst.flattened(N), delta - kAccuracySlack) << "N=" << N << " c=" << c;
        EXPECT_TRUE(all_passed(inst.verdicts));
    }
}

TEST(LowerBound, RejectsImpossibleParameters) {
    EXPECT_THROW(lower_bound_instance(0.05, 100, 1000.0), DomainError);  // sqrt(cN) > N
    EXPECT_THROW(lower_bound_instance(0.0, 10000, 100.0), DomainError);
    EXPECT_THROW(lower_bound_instance(0.05, 10000, -1.0), DomainError);
}

// Observations taken at n <= floor(gamma n_delta) cannot tell the pair apart.
TEST(LowerBound, PrefixTraceIsIndistinguishable) {
    auto inst = lower_bound_instance(0.05, 10000, 100.0);
    const auto sizes = schedule_sizes(20, 2.0, 10000);
    for (SampleCount n : sizes) {
        if (n > inst.gamma_n_delta) {
            EXPECT_NE(inst.modified(n), inst.flattened(n));
            break;
        }
        EXPECT_EQ(inst.modified(n), inst.flattened(n));
    }
    // and the modified curve is the better one at N
    EXPECT_GT(inst.modified(10000), inst.flattened(10000));
}
