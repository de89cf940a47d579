#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "evolution.hpp"
#include "field.hpp"
#include "kernel.hpp"
#include "nonlocal.hpp"
#include "regularity.hpp"
#include "serialize.hpp"

namespace nlpar {

/// Quadratic polynomial on B_radius(center), decaying oscillating tail outside.
template <std::size_t Dim>
struct TestFunction {
    Point<Dim> center{};
    double radius = 0.5;
    double c0 = 0.0;
    Point<Dim> grad{};
    std::array<std::array<double, Dim>, Dim> hess{};
    double c_t = 0.0;
    double tail_amplitude = 0.0;
    Point<Dim> tail_frequency{};
    double tail_phase = 0.0;
    double tail_decay = 1.0;  // n + sigma0 + 0.1

    // normalization records
    double l1_omega = 0.0;
    double quadratic_constant = 0.0;
    double M = 0.0;

    double operator()(const Point<Dim>& y, double s) const {
        const auto z = y - center;
        const double r = norm(z);
        if (r < radius) {
            double q = 0.0;
            for (std::size_t a = 0; a < Dim; ++a)
                for (std::size_t b = 0; b < Dim; ++b) q += z[a] * hess[a][b] * z[b];
            return c0 + dot(grad, z) + 0.5 * q + c_t * s;
        }
        return tail_amplitude * std::min(1.0, std::pow(r, -tail_decay)) * std::cos(dot(tail_frequency, y) + tail_phase);
    }

    Field<Dim> sample(const Grid<Dim>& grid, double t = 0.0) const {
        const TestFunction self = *this;
        SpaceTimeRule<Dim> rule = [self](const Point<Dim>& y, double s) { return self(y, s); };
        return Field<Dim>::from_rule(grid, {t}, rule, TailModel<Dim>::from_rule(rule, 0.0, std::abs(tail_amplitude)));
    }

    /// sup over y in B1(center) of |u(y) - u(center) - (y - center).grad| / |y - center|^2 by dense sampling.
    double sampled_quadratic_constant(int per_axis = 4001) const {
        double best = 0.0;
        const double u0 = (*this)(center, 0.0);
        auto visit = [&](const Point<Dim>& z) {
            const double r2 = dot(z, z);
            if (r2 == 0.0 || r2 > 1.0) return;
            best = std::max(best, std::abs((*this)(center + z, 0.0) - u0 - dot(grad, z)) / r2);
        };
        if constexpr (Dim == 1) {
            for (int i = 0; i < per_axis; ++i) visit({-1.0 + 2.0 * i / (per_axis - 1)});
        } else {
            const int radial = std::max(64, per_axis / 10), angular = 256;
            for (int i = 1; i <= radial; ++i)
                for (int k = 0; k < angular; ++k) {
                    const double r = static_cast<double>(i) / radial, th = 2.0 * M_PI * k / angular;
                    visit({r * std::cos(th), r * std::sin(th)});
                }
        }
        return best;
    }
};

struct BankGeometry {
    double h = 1.0 / 64;
    double grid_radius = 4.0;
    double sigma0 = 1.0;
    double center_extent = 0.5;  // centers drawn in the box of this half-width, snapped to nodes
    double r_min = 0.25, r_max = 1.0;
    double coefficient_bound = 1.0;
    double tail_bound = 1.0;

    nlohmann::json to_json() const {
        return {{"h", h}, {"grid_radius", grid_radius}, {"sigma0", sigma0}, {"center_extent", center_extent},
                {"r_min", r_min}, {"r_max", r_max}, {"coefficient_bound", coefficient_bound}, {"tail_bound", tail_bound}};
    }
};

template <std::size_t Dim>
struct TestBank {
    std::uint64_t seed = 0;
    BankGeometry geometry;
    std::vector<TestFunction<Dim>> members;

    Grid<Dim> grid() const { return Grid<Dim>(geometry.h, geometry.grid_radius); }
    std::size_t size() const { return members.size(); }
};

/// Deterministic bank from a seeded mt19937_64. Each member is normalized by its minimal valid M.
template <std::size_t Dim>
TestBank<Dim> generate_test_bank(std::uint64_t seed, std::size_t size, const BankGeometry& geo = {}) {
    if (size < 1) throw ParameterError("bank size must be at least 1");
    TestBank<Dim> bank;
    bank.seed = seed;
    bank.geometry = geo;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0), pos(0.0, 1.0);
    const Grid<Dim> grid = bank.grid();
    const WeightOmega<Dim> omega(geo.sigma0);
    for (std::size_t m = 0; m < size; ++m) {
        TestFunction<Dim> f;
        for (std::size_t d = 0; d < Dim; ++d) f.center[d] = std::round(geo.center_extent * unit(rng) / geo.h) * geo.h;
        f.radius = geo.r_min + (geo.r_max - geo.r_min) * pos(rng);
        const double c = geo.coefficient_bound;
        f.c0 = c * unit(rng);
        for (std::size_t d = 0; d < Dim; ++d) f.grad[d] = c * unit(rng);
        for (std::size_t a = 0; a < Dim; ++a)
            for (std::size_t b = a; b < Dim; ++b) f.hess[a][b] = f.hess[b][a] = c * unit(rng);
        f.c_t = c * unit(rng);
        f.tail_amplitude = geo.tail_bound * unit(rng);
        for (std::size_t d = 0; d < Dim; ++d) f.tail_frequency[d] = 4.0 * unit(rng);
        f.tail_phase = M_PI * unit(rng);
        f.tail_decay = static_cast<double>(Dim) + geo.sigma0 + 0.1;
        f.l1_omega = omega_l1_norm(f.sample(grid), 0.0, omega);
        f.quadratic_constant = f.sampled_quadratic_constant();
        f.M = std::max(f.l1_omega, f.quadratic_constant);
        bank.members.push_back(f);
    }
    return bank;
}

struct NormEstimate {
    double value = 0.0;
    std::size_t bank_size = 0;
    std::uint64_t seed = 0;
    std::vector<double> trace;  // running maximum after each member
    std::size_t skipped = 0;
    bool lower_bound = true;

    nlohmann::json to_json() const {
        return {{"value", value}, {"bank_size", bank_size}, {"seed", seed}, {"trace", trace}, {"skipped", skipped},
                {"lower_bound", lower_bound}};
    }
};

namespace detail {

template <std::size_t Dim>
std::vector<Point<Dim>> member_points(const TestFunction<Dim>& f, double h, int extra) {
    std::vector<Point<Dim>> pts = {f.center};
    // a few nodes inside B_{r/2}(center) along the axes
    for (int k = 1; k <= extra; ++k) {
        const double off = std::floor(0.5 * f.radius * k / (extra + 1) / h) * h;
        for (std::size_t d = 0; d < Dim; ++d) {
            auto p = f.center;
            p[d] += (k % 2 ? off : -off);
            pts.push_back(p);
        }
    }
    return pts;
}

template <std::size_t Dim, class Eval>
NormEstimate norm_over_bank(const TestBank<Dim>& bank, Eval&& eval, int extra_points, double t) {
    NormEstimate est;
    est.bank_size = bank.size();
    est.seed = bank.seed;
    const auto grid = bank.grid();
    for (const auto& f : bank.members) {
        const auto field = f.sample(grid, t);
        double best = 0.0;
        bool ok = true;
        try {
            for (const auto& x : member_points(f, grid.h(), extra_points)) {
                const double v = eval(field.slice(0), x);
                if (!std::isfinite(v)) {
                    ok = false;
                    break;
                }
                best = std::max(best, std::abs(v) / (1.0 + f.M));
            }
        } catch (const DivergenceError&) {
            ok = false;
        }
        if (!ok) ++est.skipped;
        else est.value = std::max(est.value, best);
        est.trace.push_back(est.value);
    }
    return est;
}

}  // namespace detail

/// sup over bank members and evaluation nodes of |I(u, x, t)| / (1 + M). A lower bound of the true norm.
template <std::size_t Dim>
NormEstimate operator_norm(const OperatorSpec<Dim>& op, const TestBank<Dim>& bank, double t = 0.0,
                           int extra_points = 0, QuadratureScheme scheme = {}) {
    OperatorEvaluator<Dim> ev(op, bank.grid(), scheme);
    return detail::norm_over_bank(bank, [&](const SliceView<Dim>& u, const Point<Dim>& x) { return ev.apply(u, x); },
                                  extra_points, t);
}

/// Norm of the difference I_a - I_b.
template <std::size_t Dim>
NormEstimate operator_norm(const OperatorSpec<Dim>& a, const OperatorSpec<Dim>& b, const TestBank<Dim>& bank,
                           double t = 0.0, int extra_points = 0, QuadratureScheme scheme = {}) {
    const auto grid = bank.grid();
    OperatorEvaluator<Dim> ea(a, grid, scheme), eb(b, grid, scheme);
    return detail::norm_over_bank(
        bank, [&](const SliceView<Dim>& u, const Point<Dim>& x) { return ea.apply(u, x) - eb.apply(u, x); },
        extra_points, t);
}

/// Kernels K_beta(x,t;y) = beta^{n+sigma} K(beta x, beta^sigma t, beta y); Pucci operators are fixed.
template <std::size_t Dim>
OperatorSpec<Dim> rescale_operator(const OperatorSpec<Dim>& op, double beta) {
    if (!(beta > 0.0 && beta <= 1.0)) throw ParameterError("beta must lie in (0, 1]");
    OperatorSpec<Dim> out = op;
    if (op.is_pucci() || beta == 1.0) return out;
    for (auto& row : out.family)
        for (auto& k : row) k.scale *= beta;
    return out;
}

inline std::vector<double> default_betas() { return {1.0, 0.5, 0.25, 0.125, 0.0625}; }

struct ScaleNormEstimate {
    double value = 0.0;
    double argmax_beta = 1.0;
    std::vector<double> betas;
    std::vector<NormEstimate> per_beta;

    nlohmann::json to_json() const {
        nlohmann::json pb = nlohmann::json::array();
        for (std::size_t i = 0; i < betas.size(); ++i)
            pb.push_back({{"beta", betas[i]}, {"norm", per_beta[i].value}, {"skipped", per_beta[i].skipped}});
        return {{"value", value}, {"argmax_beta", argmax_beta}, {"per_beta", pb}, {"lower_bound", true}};
    }
};

template <std::size_t Dim>
ScaleNormEstimate scale_norm(const OperatorSpec<Dim>& op, const TestBank<Dim>& bank,
                             const std::vector<double>& betas = default_betas(), double t = 0.0) {
    ScaleNormEstimate s;
    s.betas = betas;
    for (double b : betas) {
        s.per_beta.push_back(operator_norm(rescale_operator(op, b), bank, t));
        if (s.per_beta.back().value > s.value) s.value = s.per_beta.back().value, s.argmax_beta = b;
    }
    return s;
}

/// Scale norm of the difference I_a - I_b, both rescaled by the same beta.
template <std::size_t Dim>
ScaleNormEstimate scale_norm(const OperatorSpec<Dim>& a, const OperatorSpec<Dim>& b, const TestBank<Dim>& bank,
                             const std::vector<double>& betas = default_betas(), double t = 0.0) {
    ScaleNormEstimate s;
    s.betas = betas;
    for (double beta : betas) {
        s.per_beta.push_back(operator_norm(rescale_operator(a, beta), rescale_operator(b, beta), bank, t));
        if (s.per_beta.back().value > s.value) s.value = s.per_beta.back().value, s.argmax_beta = beta;
    }
    return s;
}

/// Unit-coefficient integral of |delta(u, x; y)|, the majorant used in the coefficient-gap sandwich.
template <std::size_t Dim>
double absolute_increment_integral(const Quadrature<Dim>& q, const SliceView<Dim>& u, const Point<Dim>& x) {
    return integrate_increments(q, u, x, [](double d, const Point<Dim>&) { return std::abs(d); }, true);
}

struct WeakConvergenceReport {
    // deviations[k][m]: max over the half-ball of |I_k v_m - I_last v_m|
    std::vector<std::vector<double>> deviations;
    std::vector<double> worst;  // max over members, per k

    nlohmann::json to_json() const { return {{"worst", worst}, {"deviations", deviations}}; }
};

/// Deviation of each operator from the last one (the proxy limit) on every bank member,
/// maximized over nodes of B_{r/2}(center).
template <std::size_t Dim>
WeakConvergenceReport weak_convergence_test(const std::vector<OperatorSpec<Dim>>& seq, const TestBank<Dim>& bank,
                                            std::size_t max_points = 9, QuadratureScheme scheme = {}) {
    if (seq.empty()) throw ParameterError("operator sequence must be nonempty");
    const auto grid = bank.grid();
    std::vector<OperatorEvaluator<Dim>> evs;
    evs.reserve(seq.size());
    for (const auto& op : seq) evs.emplace_back(op, grid, scheme);
    WeakConvergenceReport rep;
    rep.deviations.assign(seq.size(), std::vector<double>(bank.size(), 0.0));
    for (std::size_t m = 0; m < bank.size(); ++m) {
        const auto& f = bank.members[m];
        const auto field = f.sample(grid);
        std::vector<Point<Dim>> pts;
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (norm(grid.point(i) - f.center) < 0.5 * f.radius) pts.push_back(grid.point(i));
        const std::size_t stride = std::max<std::size_t>(1, pts.size() / max_points);
        for (std::size_t p = 0; p < pts.size(); p += stride) {
            const double limit = evs.back().apply(field.slice(0), pts[p]);
            for (std::size_t k = 0; k < seq.size(); ++k)
                rep.deviations[k][m] = std::max(rep.deviations[k][m], std::abs(evs[k].apply(field.slice(0), pts[p]) - limit));
        }
    }
    for (const auto& row : rep.deviations) rep.worst.push_back(*std::max_element(row.begin(), row.end()));
    return rep;
}

template <std::size_t Dim>
KernelSpec<Dim> reference_kernel(double sigma, double lambda, double base = 0.25) {
    return kernel_from_json<Dim>({{"type", "reference"}, {"sigma", sigma}, {"lambda", lambda}, {"base", base}});
}

template <std::size_t Dim>
KernelSpec<Dim> cordes_kernel(double sigma, double lambda, double eta, double base = 0.25) {
    return kernel_from_json<Dim>(
        {{"type", "cordes"}, {"sigma", sigma}, {"lambda", lambda}, {"eta", eta}, {"base", base}});
}

/// Lambda admitting a0 (1 + eta sin x) with a0 in [1, 1 + base], and the gradient bound of the reference
/// kernel: |y| |a0'(y)| <= base / 2, so |y|^{n+sigma+1} |DK| <= (2 - sigma)((n + sigma)(1 + base) + base / 2).
inline double cordes_lambda(double eta, double base, double sigma, std::size_t dim) {
    const double e = std::abs(eta);
    const double grad = (2.0 - sigma) * ((static_cast<double>(dim) + sigma) * (1.0 + base) + 0.5 * base);
    return std::max({1.0, (1.0 + base) * (1.0 + e), 1.0 / (1.0 - std::min(e, 0.999)), grad});
}

struct CordesConfig {
    double sigma = 1.5;
    double eta = 0.05;
    double base = 0.25;
    double eta_max = 0.25;  // declared smallness threshold for the coefficient gap
    GridParams grid;
    double flat_lambda = 0.5;
    int flat_k_max = 8;
    std::size_t bank_size = 0;  // 0 skips the scale-norm measurement
    std::uint64_t seed = 1;

    CordesConfig() {
        grid.h = 1.0 / 64;
        grid.grid_radius = 4.0;
    }
};

template <std::size_t Dim>
struct CordesReport {
    double eta = 0.0;
    double lambda = 1.0;
    bool reference_in_L1 = false;
    double measured_gap = 0.0;  // max |a - a0| / a0 over sampled x in B1, y
    bool hypothesis_ok = false;
    FlatnessReport<Dim> flatness;
    std::optional<HolderFit> gradient_fit;
    std::string gradient_fit_error;
    bool c1alpha_holds = false;
    std::optional<ScaleNormEstimate> difference_scale_norm;
    CflRecord cfl;

    nlohmann::json to_json() const {
        nlohmann::json j = {{"eta", eta}, {"lambda", lambda}, {"reference_in_L1", reference_in_L1},
                            {"measured_gap", measured_gap}, {"hypothesis_ok", hypothesis_ok},
                            {"flatness", flatness.to_json()}, {"c1alpha_holds", c1alpha_holds}, {"cfl", cfl.to_json()}};
        if (gradient_fit) j["gradient_holder"] = gradient_fit->to_json();
        else j["gradient_holder_error"] = gradient_fit_error;
        if (difference_scale_norm) j["difference_scale_norm"] = difference_scale_norm->to_json();
        return j;
    }
};

/// Exterior and initial datum for the perturbation runs: smooth, bounded, nonzero gradient at the origin.
template <std::size_t Dim>
double cordes_datum(const Point<Dim>& x, double) {
    return std::cos(x[0] - 0.5) * std::exp(-dot(x, x) / 8.0);
}

/// Solves with a(x, y) = a0(y)(1 + eta sin x0) and measures flatness decay and gradient regularity at the origin.
template <std::size_t Dim>
CordesReport<Dim> cordes_nirenberg_experiment(const CordesConfig& cfg) {
    CordesReport<Dim> rep;
    rep.eta = cfg.eta;
    rep.lambda = cordes_lambda(cfg.eta, cfg.base, cfg.sigma, Dim);
    const auto k0 = reference_kernel<Dim>(cfg.sigma, rep.lambda, cfg.base);
    const auto k = cordes_kernel<Dim>(cfg.sigma, rep.lambda, cfg.eta, cfg.base);
    auto plan = SamplePlan<Dim>::uniform(Dim == 1 ? 24 : 8, 1.0, 2.0, 2);
    rep.reference_in_L1 = check_L1_membership(k0, plan).pass;
    for (const auto& x : plan.xs) {
        if (norm(x) > 1.0) continue;
        for (const auto& y : plan.ys) {
            const double a0 = k0.coefficient(x, 0.0, y);
            rep.measured_gap = std::max(rep.measured_gap, std::abs(k.coefficient(x, 0.0, y) - a0) / a0);
        }
    }
    rep.hypothesis_ok = rep.reference_in_L1 && rep.measured_gap <= std::abs(cfg.eta) * (1.0 + 1e-12) &&
                        std::abs(cfg.eta) <= cfg.eta_max;

    DirichletProblem<Dim> p;
    p.op = OperatorSpec<Dim>::linear(k);
    p.g = cordes_datum<Dim>;
    p.g_bound = 1.0;
    const auto sol = solve_dirichlet(p, cfg.grid);
    rep.cfl = sol.cfl;
    const auto& u = sol.field;
    const Point<Dim> origin{};
    rep.flatness = flatness_sequence(u, origin, 0.0, cfg.sigma, cfg.flat_lambda, std::nullopt, cfg.flat_k_max);
    rep.c1alpha_holds = rep.flatness.decay_ratio > 0.0 &&
                        rep.flatness.decay_ratio <= std::pow(cfg.flat_lambda, 1.0 + rep.flatness.alpha);

    // Central-difference gradient (first component) on interior nodes.
    const auto& g = u.grid();
    std::vector<std::vector<double>> slices(u.time_count(), std::vector<double>(g.size(), 0.0));
    for (std::size_t j = 0; j < u.time_count(); ++j)
        for (std::size_t i : sol.interior) {
            auto idx = g.index(i);
            auto lo = idx, hi = idx;
            lo[0] -= 1, hi[0] += 1;
            slices[j][i] = (u.value(g.flat(hi), j) - u.value(g.flat(lo), j)) / (2.0 * g.h());
        }
    Field<Dim> grad(g, u.times(), std::move(slices), TailModel<Dim>::zero());
    try {
        rep.gradient_fit = fit_holder_exponent(grad, origin, 0.0, cfg.sigma, 1);
    } catch (const InsufficientData& e) {
        rep.gradient_fit_error = e.what();
    }

    if (cfg.bank_size > 0) {
        BankGeometry geo;
        geo.h = cfg.grid.h;
        geo.grid_radius = cfg.grid.grid_radius;
        const auto bank = generate_test_bank<Dim>(cfg.seed, cfg.bank_size, geo);
        rep.difference_scale_norm = scale_norm(p.op, OperatorSpec<Dim>::linear(k0), bank);
    }
    return rep;
}

}  // namespace nlpar
