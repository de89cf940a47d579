#include <gtest/gtest.h>

#include <cmath>

#include "nlpar/nlpar.hpp"
#include "support/oracles.hpp"

using namespace nlpar;

namespace {

BarrierCheckOptions quick() {
    BarrierCheckOptions o;
    o.h = 1.0 / 32;
    return o;
}

double holder_exterior(const Point<1>& x, double) { return std::sqrt(std::max(0.0, std::abs(x[0]) - 1.0)); }

}  // namespace

TEST(LateralBarrier, ConstantOneFailsOnlyFirstCondition) {
    BarrierCandidate<1> one;
    one.psi = [](const Point<1>&, double) { return 1.0; };
    one.kappa = 1.0;
    const auto r = verify_lateral_barrier(one, 0.5, quick());
    EXPECT_FALSE(r.zero_at_origin_slice);
    EXPECT_TRUE(r.supersolution_outside);
    EXPECT_TRUE(r.at_least_one_outside);
    EXPECT_FALSE(r.pass);
}

TEST(LateralBarrier, SearchFindsCandidate) {
    const auto res = search_lateral_barrier<1>(0.5, quick());
    ASSERT_TRUE(res.found) << res.to_json().dump();
    EXPECT_GE(res.c, 1.0 - 1e-12);  // (iii) needs the cap reached at |x| = 2
    EXPECT_DOUBLE_EQ(res.kappa, 1.0 / res.c_t);
    std::printf("lateral barrier: c=%.4g c_t=%.4g kappa=%.4g after %d candidates\n", res.c, res.c_t, res.kappa,
                res.tried);
}

TEST(LateralBarrier, ScalingPreservesConditions) {
    const auto res = search_lateral_barrier<1>(0.5, quick());
    ASSERT_TRUE(res.found);
    auto cand = lateral_candidate<1>(res.c, res.c_t, 0.5);
    auto base = cand.psi;
    cand.psi = [base](const Point<1>& x, double t) { return 1.5 * base(x, t); };
    cand.bound *= 1.5;
    const auto r = verify_lateral_barrier(cand, 0.5, quick());
    EXPECT_TRUE(r.zero_at_origin_slice);
    EXPECT_TRUE(r.supersolution_outside);
    EXPECT_TRUE(r.at_least_one_outside);
}

TEST(LateralBarrier, TooSmallCapFailsThirdCondition) {
    auto cand = lateral_candidate<1>(0.5, 1.0, 0.5);
    const auto r = verify_lateral_barrier(cand, 0.5, quick());
    EXPECT_FALSE(r.at_least_one_outside);
    EXPECT_NEAR(r.worst_iii, 0.5, 1e-12);
}

TEST(LateralBarrier, CandidateIsNonnegative) {
    auto cand = lateral_candidate<2>(1.0, 0.3, 0.5);
    for (double t : {-3.0, -1.0, 0.0})
        for (double x : {0.0, 0.9, 1.1, 3.0}) EXPECT_GE(cand.psi({x, 0.3}, t), 0.0);
}

TEST(BumpBarrier, ResidualNonnegative) {
    const auto bb = bump_barrier<1>(standard_bump<1>, 1.0, 1.0, 1.0 / 64, 4.0, 1e-3);
    EXPECT_TRUE(bb.residual_ok) << bb.min_residual;
    EXPECT_GT(bb.slope, 0.0);
    EXPECT_DOUBLE_EQ(bb.candidate.psi(Point<1>{0.0}, 0.0), 0.0);
}

TEST(BumpBarrier, NonnegativeFromTimeZeroOn) {
    // for s < 0 the slope term pulls psi below zero near the origin, so only s >= 0 is checked
    const auto bb = bump_barrier<1>(standard_bump<1>, 1.0, 1.0, 1.0 / 32);
    for (double s : {0.0, 0.1, 1.0})
        for (double y = -3.0; y <= 3.0; y += 0.125) EXPECT_GE(bb.candidate.psi(Point<1>{y}, s), 0.0) << y << " " << s;
    EXPECT_LT(bb.candidate.psi(Point<1>{0.0}, -0.5), 0.0);
}

TEST(BumpBarrier, AffineInTime) {
    const auto bb = bump_barrier<1>(standard_bump<1>, 1.0, 2.0, 1.0 / 32);
    const Point<1> y{0.3};
    const double a = bb.candidate.psi(y, -0.5), b = bb.candidate.psi(y, -0.25), c = bb.candidate.psi(y, 0.0);
    EXPECT_NEAR(b - a, c - b, 1e-14);
    EXPECT_NEAR((c - a) / 0.5, bb.slope, 1e-12);
}

TEST(BumpBarrier, RejectsBadBump) {
    auto bad_range = [](const Point<1>& y) { return 2.0 * standard_bump<1>(y); };
    auto bad_support = [](const Point<1>& y) { return std::abs(y[0]) < 1.5 ? 0.5 * std::abs(y[0]) : 1.0; };
    auto bad_origin = [](const Point<1>& y) { return std::min(1.0, 0.1 + std::abs(y[0])); };
    EXPECT_THROW(bump_barrier<1>(bad_range, 1.0, 1.0, 1.0 / 16), PreconditionError);
    EXPECT_THROW(bump_barrier<1>(bad_support, 1.0, 1.0, 1.0 / 16), PreconditionError);
    EXPECT_THROW(bump_barrier<1>(bad_origin, 1.0, 1.0, 1.0 / 16), PreconditionError);
}

TEST(Compose, LateralVanishesWithoutData) {
    const auto m = compose_lateral_modulus(Modulus::identity(), Modulus::identity(), 2.0, 0.5, 0.0);
    for (double v : m.values()) EXPECT_EQ(v, 0.0);
}

TEST(Compose, InitialVanishesWithoutData) {
    const auto m = compose_initial_modulus(Modulus::identity(), Modulus::identity(), 0.0);
    for (double v : m.values()) EXPECT_EQ(v, 0.0);
}

TEST(Compose, LateralMatchesDenseScan) {
    const auto id = Modulus::identity();
    const auto m = compose_lateral_modulus(id, id, 1.0, 1.0, 1.0);
    // compared at table knots: between knots the table is a chord
    for (std::size_t k : {1u, 40u, 100u, 160u, 220u, 256u}) {
        const double d = m.knots()[k];
        const double dense = oracle::dense_log_min(
            [d](double r) { return std::max(3.0 * r, r) + 2.0 * d / (r * r); }, 1e-4, 1.0, 100000);
        const double got = m.values()[k];
        EXPECT_LE(got, dense + 1e-12);
        EXPECT_NEAR(got, dense, 1e-6 * std::max(1.0, dense)) << d;
    }
}

TEST(Compose, InitialMatchesDenseScan) {
    const auto id = Modulus::identity();
    const auto m = compose_initial_modulus(id, id, 1.0);
    for (std::size_t k : {1u, 40u, 100u, 160u, 220u, 256u}) {
        const double d = m.knots()[k];
        const double dense =
            oracle::dense_log_min([d](double r) { return r + 2.0 * (d / (r * r) + d / r); }, 1e-4, 1.0, 100000);
        EXPECT_NEAR(m.values()[k], dense, 1e-6) << d;
    }
}

TEST(Compose, InfimumBound) {
    const auto rho = Modulus::analytic([](double d) { return std::sqrt(d); });
    const auto rho0 = Modulus::analytic([](double d) { return std::pow(d, 0.3); });
    const auto m = compose_lateral_modulus(rho, rho0, 4.0, 0.5, 2.0);
    for (double d : {1e-5, 1e-3, 0.1})
        for (double r : numerics::logspace(1e-4, 1.0, 40)) {
            const double bound = rho(std::max(3.0 * r, 4.0 * std::pow(r, 0.5))) + 4.0 * rho0(d / (r * r));
            EXPECT_LE(m(d), bound + 1e-12);
        }
}

TEST(Compose, OutputsAreModuli) {
    const auto rho = Modulus::analytic([](double d) { return std::pow(d, 0.4); });
    const auto a = compose_lateral_modulus(rho, rho, 3.0, 0.8, 1.5);
    const auto b = compose_initial_modulus(rho, rho, 1.5);
    for (const auto* m : {&a, &b}) {
        EXPECT_TRUE(m->is_nondecreasing());
        EXPECT_TRUE(m->vanishes_at_zero());
        EXPECT_LT(m->values()[1], m->values().back());
    }
}

TEST(Modulus, TableInterpolatesAndSaturates) {
    Modulus m({0.0, 1.0, 2.0}, {0.0, 1.0, 1.5});
    EXPECT_DOUBLE_EQ(m(0.5), 0.5);
    EXPECT_DOUBLE_EQ(m(1.5), 1.25);
    EXPECT_DOUBLE_EQ(m(10.0), 1.5);
    EXPECT_DOUBLE_EQ(m.concavity_defect(), 0.0);
    EXPECT_THROW(Modulus({0.5, 1.0}, {0.0, 1.0}), ParameterError);
    EXPECT_NE(m.csv().find("1,1"), std::string::npos);
}

TEST(MeasuredModulus, ConstantFieldIsZero) {
    Grid<1> g(1.0 / 32, 4.0);
    auto u = Field<1>::from_rule(g, {-1.0, -0.5, 0.0}, [](const Point<1>&, double) { return 3.0; },
                                 TailModel<1>::zero());
    const auto m = measure_boundary_modulus(u, Point<1>{}, 1.0);
    for (double v : m.values()) EXPECT_EQ(v, 0.0);
}

TEST(MeasuredModulus, MatchesBruteForce) {
    Grid<2> g(1.0 / 8, 2.0);
    auto rule = [](const Point<2>& x, double t) { return std::sin(3.0 * x[0]) * std::cos(2.0 * x[1] + t); };
    auto u = Field<2>::from_rule(g, {-0.5, -0.25, 0.0}, rule, TailModel<2>::zero());
    const auto m = measure_boundary_modulus(u, Point<2>{}, 1.0);
    for (std::size_t k = 1; k < m.knots().size(); ++k) {
        const double d = m.knots()[k];
        double best = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (!(norm(g.point(i)) < 1.0)) continue;
            for (std::size_t j = 0; j < g.size(); ++j) {
                if (norm_inf(g.point(i) - g.point(j)) > d + 1e-12) continue;
                for (std::size_t a = 0; a < 3; ++a)
                    for (std::size_t b = 0; b < 3; ++b) {
                        if (std::abs(u.times()[a] - u.times()[b]) > d + 1e-12) continue;
                        best = std::max(best, std::abs(u.value(i, a) - u.value(j, b)));
                    }
            }
        }
        EXPECT_NEAR(m.values()[k], std::max(best, m.values()[k - 1]), 1e-15) << d;
    }
    EXPECT_TRUE(m.is_nondecreasing());
}

TEST(MeasuredModulus, HolderBoundaryDataGivesPositiveExponent) {
    DirichletProblem<1> p;
    p.op = OperatorSpec<1>::linear(make_fractional_kernel<1>(1.0));
    p.g = holder_exterior;
    p.g_growth = 0.5;
    p.g_bound = 1.0;
    GridParams gp;
    gp.h = 1.0 / 64;
    gp.grid_radius = 4.0;
    const auto sol = solve_dirichlet(p, gp);
    const auto m = measure_boundary_modulus(sol.field, Point<1>{}, 1.0);
    EXPECT_TRUE(m.is_nondecreasing());
    const auto fit = fit_modulus_exponent(m, 1.0 / 64, 0.5);
    EXPECT_GT(fit.exponent, 0.1);
    EXPECT_GT(fit.r2, 0.9);
}

TEST(MeasuredModulus, FitNeedsThreePoints) {
    const auto m = Modulus::identity();
    EXPECT_THROW(fit_modulus_exponent(Modulus({0.0, 0.5, 1.0}, {0.0, 0.5, 1.0}), 0.1, 1.0), InsufficientData);
    const auto fit = fit_modulus_exponent(m, 1e-4, 1.0);
    EXPECT_NEAR(fit.exponent, 1.0, 1e-10);
}

TEST(RuleModulus, SquareRootProfile) {
    auto f = [](const Point<1>& x, double) { return std::sqrt(std::abs(x[0])); };
    const auto m = rule_modulus<1>(f, 1.0 / 256, 2.0, -0.1, 0.05);
    const auto fit = fit_modulus_exponent(m, 1.0 / 256, 0.25);
    EXPECT_NEAR(fit.exponent, 0.5, 0.05);
}
