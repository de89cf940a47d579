// One PASS/FAIL line per acceptance criterion. Tolerances are fixed here, not read from configs.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "nlpar/nlpar.hpp"
#include "oracles.hpp"

using namespace nlpar;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string format(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

int failures = 0;

void report(int id, const char* name, double budget_s, const std::function<Verdict()>& body) {
    const auto t0 = Clock::now();
    Verdict v;
    try {
        v = body();
    } catch (const std::exception& e) {
        v = {false, std::string("exception: ") + e.what()};
    }
    const double dt = seconds_since(t0);
    const bool in_time = budget_s <= 0 || dt < budget_s;
    const bool pass = v.pass && in_time;
    failures += !pass;
    std::printf("%s [%d] %s: %s; %.1f s%s\n", pass ? "PASS" : "FAIL", id, name, v.detail.c_str(), dt,
                in_time ? "" : format(" exceeds budget %.0f s", budget_s).c_str());
    std::fflush(stdout);
}

GridParams grid_params(double h, double R) {
    GridParams p;
    p.h = h;
    p.grid_radius = R;
    return p;
}

// 1. Discrete operator versus the spectral fine-grid oracle.
Verdict oracle_equivalence() {
    auto u = Field<1>::from_rule(Grid<1>(1.0 / 64, 8.0), {0.0}, [](const Point<1>& x, double) { return std::exp(-x[0] * x[0]); },
                                 TailModel<1>::zero());
    const auto k = make_fractional_kernel<1>(1.0);
    const std::vector<double> xs = {0.0, 0.5, -0.5};
    const auto ref = oracle::spectral_fractional_1d([](double x) { return std::exp(-x * x); }, 1.0, normalization_ratio(1, 1.0), xs);
    double worst = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        worst = std::max(worst, std::abs(linear_apply(k, u, {xs[i]}, 0.0) - ref[i]) / std::abs(ref[i]));
    return {worst < 1e-3, format("max relative error %.2e (tol 1e-3)", worst)};
}

// 2. Ordered data give ordered solutions.
Verdict comparison_suite() {
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> U(-1.0, 1.0), S(0.5, 1.5), L(1.0, 2.0), C(0.5, 1.5);
    double worst = -INFINITY;
    const int pairs = 200;
    for (int trial = 0; trial < pairs; ++trial) {
        const double sigma = S(rng), lambda = L(rng);
        DirichletProblem<1> pu;
        switch (trial % 3) {
            case 0: pu.op = OperatorSpec<1>::pucci_plus(sigma, lambda); break;
            case 1: pu.op = OperatorSpec<1>::pucci_minus(sigma, lambda); break;
            default: {
                std::vector<std::vector<KernelSpec<1>>> fam(2);
                for (auto& row : fam)
                    for (int b = 0; b < 2; ++b) row.push_back(make_fractional_kernel<1>(sigma, std::clamp(C(rng), 1.0 / lambda, lambda), lambda));
                pu.op = OperatorSpec<1>::inf_sup(fam);
            }
        }
        const double a = U(rng), b = U(rng), w = 1.0 + std::abs(U(rng)), gap = 0.5 * std::abs(U(rng));
        const double bump_amp = std::abs(U(rng)), fshift = 0.5 * std::abs(U(rng));
        auto pv = pu;
        pu.exterior_tail = pv.exterior_tail = TailKind::Zero;
        pu.g = [=](const Point<1>& x, double t) { return a * std::cos(w * x[0] + t) + b * std::exp(-x[0] * x[0]); };
        // v's data dominate u's: a constant gap plus a nonnegative bump
        pv.g = [=](const Point<1>& x, double t) {
            return pu.g(x, t) + gap + bump_amp * std::max(0.0, 1.0 - std::abs(x[0] - 1.5));
        };
        pu.f = [=](const Point<1>& x, double) { return b * std::sin(x[0]); };
        pv.f = [=](const Point<1>& x, double t) { return pu.f(x, t) + fshift; };
        const auto gp = grid_params(1.0 / 64, 4.0);
        auto ru = solve_dirichlet(pu, gp);
        auto rv = solve_dirichlet(pv, gp);
        if (ru.field.times() != rv.field.times()) return {false, "time lattices differ"};
        for (std::size_t j = 0; j < ru.field.time_count(); ++j)
            for (std::size_t i = 0; i < ru.field.grid().size(); ++i)
                worst = std::max(worst, ru.field.value(i, j) - rv.field.value(i, j));
    }
    return {worst <= 1e-10, format("%d pairs, max(u - v) = %.3e (tol 1e-10)", pairs, worst)};
}

// 3. Jump of the time derivative at t = -1/2.
Verdict counterexample() {
    const double sigma = 1.0;
    const auto rep = counterexample_experiment<1>(sigma, 1.0, grid_params(1.0 / 64, 4.0));
    // M+ of the ring indicator at the origin: both increments equal 1 on 2 <= |y| < 3, weight Lambda = 1
    const double closed_form = 4.0 * (2.0 - sigma) * (std::pow(2.0, -sigma) - std::pow(3.0, -sigma)) / sigma;
    const bool pre_ok = rep.pre_jump_sup <= 1e-6;
    const bool slope_ok = rep.post_jump_slope > 0.5 * rep.predicted_slope;
    const bool prediction_ok = std::abs(rep.predicted_slope - closed_form) <= 0.02 * closed_form;
    return {pre_ok && slope_ok && prediction_ok && rep.jump_detected,
            format("pre-jump sup %.2e (tol 1e-6), slope %.4f vs 0.5 x prediction %.4f, prediction vs closed form %.4f",
                   rep.pre_jump_sup, rep.post_jump_slope, 0.5 * rep.predicted_slope, closed_form)};
}

// 4. Lipschitz-in-time propagation on three benchmarks.
Verdict time_regularity() {
    std::vector<std::pair<std::string, DirichletProblem<1>>> cases;
    {
        DirichletProblem<1> p;
        p.op = OperatorSpec<1>::pucci_minus(1.0, 1.5);
        p.g = [](const Point<1>& x, double t) { return std::exp(-x[0] * x[0] / 0.64) + 0.5 * t; };
        p.g_bound = 1.5;
        p.f = [](const Point<1>&, double) { return 0.25; };
        cases.emplace_back("pucci-", p);
    }
    {
        DirichletProblem<1> p;
        p.op = OperatorSpec<1>::linear(make_fractional_kernel<1>(0.75));
        p.g = [](const Point<1>& x, double t) { return std::exp(-0.5 * x[0] * x[0]) * std::cos(t); };
        p.g_bound = 1.0;
        cases.emplace_back("linear", p);
    }
    {
        DirichletProblem<1> p;
        p.op = OperatorSpec<1>::pucci_plus(1.5, 1.25);
        p.g = [](const Point<1>& x, double t) {
            const double r2 = x[0] * x[0];
            return (r2 < 4.0 ? std::pow(1.0 - r2 / 4.0, 3) : 0.0) * (t + 1.0);
        };
        p.g_bound = 1.0;
        p.f = [](const Point<1>& x, double) { return 0.1 * std::cos(x[0]); };
        cases.emplace_back("pucci+", p);
    }
    bool ok = true;
    std::string detail;
    for (const auto& [name, p] : cases) {
        const auto rep = time_regularity_experiment(p, grid_params(1.0 / 64, 4.0));
        const double q = rep.quotient_fit ? rep.quotient_fit->exponent : -1.0;
        const bool this_ok = rep.hypothesis_ok && rep.initial_bound_ok && rep.worst_initial_ratio <= 1.0 + 1e-8 && q > 0.05;
        ok = ok && this_ok;
        detail += format("%s%s ratio %.4f alpha %.2f", detail.empty() ? "" : ", ", name.c_str(), rep.worst_initial_ratio, q);
    }
    return {ok, detail + " (ratio <= 1 + 1e-8, alpha > 0.05)"};
}

// 5. Parabolic rescaling identity and composition of rescalings.
Verdict scaling() {
    auto u = [](const Point<1>& x) { return std::exp(-x[0] * x[0]); };
    const double hv = 1.0 / 64;
    double worst_ratio = 0.0;
    for (double sigma : {0.5, 1.0, 1.5}) {
        const double tol = 5.0 * std::pow(hv, 2.0 - sigma);
        for (const auto& op : {OperatorSpec<1>::linear(make_fractional_kernel<1>(sigma, 1.3, 2.0)),
                               OperatorSpec<1>::linear(reference_kernel<1>(sigma, 2.0, 0.25))}) {
            const auto& k = op.family[0][0];
            for (double beta : {0.5, 0.25}) {
                auto fu = Field<1>::stationary(Grid<1>(beta * hv, 4.0), u, 0.0, 1.0);
                auto fv = Field<1>::stationary(Grid<1>(hv, 4.0), [&](const Point<1>& x) { return u(beta * x); }, 0.0, 1.0);
                const auto kb = rescale_operator(op, beta).family[0][0];
                for (double x : {0.0, 0.25, 0.5}) {
                    const double lhs = linear_apply(kb, fv, {x}, 0.0);
                    const double rhs = std::pow(beta, sigma) * linear_apply(k, fu, {beta * x}, 0.0);
                    worst_ratio = std::max(worst_ratio, std::abs(lhs - rhs) / std::abs(rhs) / tol);
                }
            }
        }
    }
    // composing rescalings equals rescaling by the product, bit for bit
    const auto op = OperatorSpec<1>::linear(kernel_from_json<1>({{"type", "sin_x"}, {"sigma", 1.2}, {"lambda", 2.0}, {"amplitude", 0.3}}));
    auto w = Field<1>::stationary(Grid<1>(1.0 / 32, 4.0), [](const Point<1>& x) { return std::cos(2 * x[0]) / (1 + x[0] * x[0]); }, 0.0, 1.0);
    bool exact = true;
    for (double a : {0.5, 0.25})
        for (double b : {0.5, 0.125}) {
            const auto twice = rescale_operator(rescale_operator(op, a), b);
            const auto once = rescale_operator(op, a * b);
            exact = exact && twice.family[0][0].scale == once.family[0][0].scale;
            for (double x : {0.1, 0.7}) exact = exact && infsup_apply(twice, w, {x}, 0.0) == infsup_apply(once, w, {x}, 0.0);
        }
    return {worst_ratio <= 1.0 && exact,
            format("worst relative error / (5 h^(2-sigma)) = %.3f (must be <= 1), composition exact: %s", worst_ratio,
                   exact ? "yes" : "no")};
}

// 6. Pucci duality and the ellipticity sandwich.
Verdict pucci_identities() {
    std::mt19937_64 rng(606);
    std::uniform_real_distribution<double> amp(-1.0, 1.0), cen(-1.5, 1.5), wid(0.3, 1.2), S(0.3, 1.8), L(1.0, 2.5),
        coef(0.5, 2.0);
    const Grid<1> g(1.0 / 32, 4.0);
    auto random_field = [&]() {
        double a[3], c[3], w[3];
        for (int i = 0; i < 3; ++i) a[i] = amp(rng), c[i] = cen(rng), w[i] = wid(rng);
        return Field<1>::stationary(g, [=](const Point<1>& x) {
            double s = 0.0;
            for (int i = 0; i < 3; ++i) s += a[i] * std::exp(-(x[0] - c[i]) * (x[0] - c[i]) / (w[i] * w[i]));
            return s;
        }, 0.0, 3.0);
    };
    double duality = 0.0;
    for (int i = 0; i < 100; ++i) {
        const auto u = random_field();
        const auto m = u.map([](double v) { return -v; }, 0.0, 3.0);
        const double sigma = S(rng), lambda = L(rng);
        for (double x : {-0.5, 0.0, 0.35}) {
            const double p = pucci_plus(m, {x}, 0.0, sigma, lambda), q = -pucci_minus(u, {x}, 0.0, sigma, lambda);
            duality = std::max(duality, std::abs(p - q) / std::max(1.0, std::abs(q)));
        }
    }
    double sandwich = -INFINITY;
    for (int i = 0; i < 100; ++i) {
        const double sigma = S(rng), lambda = L(rng);
        std::vector<std::vector<KernelSpec<1>>> fam(2);
        for (auto& row : fam)
            for (int b = 0; b < 2; ++b)
                row.push_back(make_fractional_kernel<1>(sigma, std::clamp(coef(rng), 1.0 / lambda, lambda), lambda));
        const double base = 0.5 * (1.0 / lambda + lambda), am = 0.9 * (lambda - base);
        const double amp_x = am * amp(rng);
        fam[1].push_back(make_variable_kernel<1>(
            sigma, lambda, [=](const Point<1>& x, double, const Point<1>&) { return base + amp_x * std::sin(3 * x[0]); }, false, true));
        const auto op = OperatorSpec<1>::inf_sup(fam);
        const auto u = random_field(), v = random_field();
        const auto d = combine(u, v, [](double a, double b) { return a - b; });
        for (double x : {-0.3, 0.6}) {
            const double diff = infsup_apply(op, u, {x}, 0.0) - infsup_apply(op, v, {x}, 0.0);
            sandwich = std::max(sandwich, pucci_minus(d, {x}, 0.0, sigma, lambda) - diff);
            sandwich = std::max(sandwich, diff - pucci_plus(d, {x}, 0.0, sigma, lambda));
        }
    }
    return {duality <= 1e-12 && sandwich <= 1e-10,
            format("duality defect %.2e (tol 1e-12), sandwich violation %.2e (tol 1e-10)", duality, sandwich)};
}

// 7. Empirical boundary modulus for Holder-1/2 exterior data.
Verdict boundary_modulus() {
    auto run = [](double h) {
        DirichletProblem<1> p;
        p.op = OperatorSpec<1>::linear(make_fractional_kernel<1>(1.0));
        p.g = [](const Point<1>& x, double) { return std::sqrt(std::max(0.0, std::abs(x[0]) - 1.0)); };
        p.g_growth = 0.5;
        p.g_bound = 1.0;
        const auto sol = solve_dirichlet(p, grid_params(h, 4.0));
        return fit_modulus_exponent(measure_boundary_modulus(sol.field, p.center, p.radius), 0.03, 0.5);
    };
    const auto coarse = run(1.0 / 64), fine = run(1.0 / 128);
    const double drift = std::abs(fine.exponent - coarse.exponent) / coarse.exponent;
    const bool ok = coarse.exponent >= 0.1 && fine.exponent >= 0.1 && coarse.r2 >= 0.9 && fine.r2 >= 0.9 && drift < 0.2;
    return {ok, format("alpha %.3f (R2 %.3f) at h=1/64, %.3f (R2 %.3f) at h=1/128, drift %.1f%% (alpha >= 0.1, R2 >= 0.9, drift < 20%%)",
                       coarse.exponent, coarse.r2, fine.exponent, fine.r2, 100 * drift)};
}

// 8. Coefficient gap scales linearly and flatness decay persists.
Verdict cordes() {
    const double sigma = 1.5, base = 0.25;
    const std::vector<double> etas = {0.01, 0.02, 0.04, 0.08};
    const double lambda = cordes_lambda(etas.back(), base, sigma, 1);
    BankGeometry geo;
    const auto bank = generate_test_bank<1>(2024, 40, geo);
    const auto ref = OperatorSpec<1>::linear(reference_kernel<1>(sigma, lambda, base));
    std::vector<double> lx, ly;
    for (double eta : etas) {
        const auto est = scale_norm(OperatorSpec<1>::linear(cordes_kernel<1>(sigma, lambda, eta, base)), ref, bank);
        lx.push_back(std::log(eta));
        ly.push_back(std::log(est.value));
    }
    const double slope = numerics::linear_fit(lx, ly)[1];
    CordesConfig c0;
    c0.sigma = sigma;
    c0.base = base;
    c0.eta = 0.0;
    CordesConfig c1 = c0;
    c1.eta = 0.05;
    const auto r0 = cordes_nirenberg_experiment<1>(c0);
    const auto r1 = cordes_nirenberg_experiment<1>(c1);
    const double ratio = r1.flatness.decay_ratio / r0.flatness.decay_ratio;
    const bool ok = std::abs(slope - 1.0) <= 0.15 && ratio <= 2.0 && ratio >= 0.5 && r1.hypothesis_ok;
    return {ok, format("log-log slope %.4f (1 +- 0.15), decay ratio %.4f vs baseline %.4f, quotient %.3f (within 2x)", slope,
                       r1.flatness.decay_ratio, r0.flatness.decay_ratio, ratio)};
}

// 9. Convergence order against the exact bump integral.
Verdict convergence() {
    auto f = [](const Point<1>& x) { return std::abs(x[0]) < 1.0 ? std::pow(1.0 - x[0] * x[0], 5) : 0.0; };
    bool ok = true;
    std::string detail;
    for (double sigma : {0.5, 1.5}) {
        const auto k = make_fractional_kernel<1>(sigma);
        std::vector<double> err;
        for (double h : {1.0 / 32, 1.0 / 64, 1.0 / 128}) {
            auto u = Field<1>::from_rule(Grid<1>(h, 4.0), {0.0}, [&](const Point<1>& x, double) { return f(x); }, TailModel<1>::zero());
            double e = 0.0;
            for (double x : {0.0, 0.25, 0.5})
                e = std::max(e, std::abs(linear_apply(k, u, {x}, 0.0) - oracle::bump_operator_exact(x, 5, sigma)));
            err.push_back(e);
        }
        const double order = std::log2(err[1] / err[2]);
        const double need = sigma < 1 ? 1.5 : 0.8;
        ok = ok && order >= need;
        detail += format("%ssigma %.1f order %.2f (>= %.1f)", detail.empty() ? "" : ", ", sigma, order, need);
    }
    return {ok, detail};
}

}  // namespace

int main() {
    report(1, "oracle equivalence", 10, oracle_equivalence);
    report(2, "comparison on random ordered pairs", 300, comparison_suite);
    report(3, "time-derivative jump", 120, counterexample);
    report(4, "time regularity bound", 300, time_regularity);
    report(5, "scaling invariance", 0, scaling);
    report(6, "Pucci duality and sandwich", 0, pucci_identities);
    report(7, "boundary modulus", 0, boundary_modulus);
    report(8, "coefficient-gap persistence", 900, cordes);
    report(9, "convergence order", 0, convergence);
    std::printf("%d of 9 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
