#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "evolution.hpp"
#include "field.hpp"
#include "modulus.hpp"
#include "nonlocal.hpp"

namespace nlpar {

template <std::size_t Dim>
struct BarrierCandidate {
    SpaceTimeRule<Dim> psi;
    double kappa = 1.0;
    std::string provenance;  // "lateral" or "bump"
    nlohmann::json params = nlohmann::json::object();
    double bound = 1.0;      // sup of |psi| on the checked window, for the tail model
};

/// psi_c(x, t) = min(1, c ((|x| - 1)^+)^{sigma0 / 2}) - c_t t, with kappa = 1 / c_t.
template <std::size_t Dim>
BarrierCandidate<Dim> lateral_candidate(double c, double c_t, double sigma0) {
    if (!(c > 0.0) || !(c_t > 0.0)) throw ParameterError("candidate parameters must be positive");
    BarrierCandidate<Dim> b;
    b.psi = [c, c_t, sigma0](const Point<Dim>& x, double t) {
        const double s = std::max(0.0, norm(x) - 1.0);
        return std::min(1.0, c * std::pow(s, 0.5 * sigma0)) - c_t * t;
    };
    b.kappa = 1.0 / c_t;
    b.provenance = "lateral";
    b.params = {{"c", c}, {"c_t", c_t}, {"sigma0", sigma0}};
    b.bound = 3.0;
    return b;
}

struct BarrierCheckOptions {
    double h = 1.0 / 64;
    double grid_radius = 4.0;
    double lambda = 1.0;
    std::vector<double> sigmas;  // orders at which (ii) is checked; empty means {sigma0}
    int time_samples = 5;
    double tol = 1e-9;
    QuadratureScheme quadrature{2, 4.0};
};

struct BarrierReport {
    bool zero_at_origin_slice = false;   // (i)
    bool supersolution_outside = false;  // (ii)
    bool at_least_one_outside = false;   // (iii)
    double worst_i = 0.0, worst_ii = 0.0, worst_iii = 0.0;
    double worst_ii_location = 0.0;
    bool pass = false;

    nlohmann::json to_json() const {
        return {{"condition_i", {{"pass", zero_at_origin_slice}, {"worst", worst_i}}},
                {"condition_ii", {{"pass", supersolution_outside}, {"worst", worst_ii}, {"at_radius", worst_ii_location}}},
                {"condition_iii", {{"pass", at_least_one_outside}, {"worst", worst_iii}}},
                {"pass", pass}};
    }
};

/// Checks (i) psi = 0 on B1 x {0}, (ii) psi_t - M+ psi >= -tol for 1 < |x| on the grid (the cusp at
/// |x| = 1 is excluded), (iii) psi >= 1 outside B2 x [-kappa, 0], on a grid covering B_R x [-2 kappa, 0].
template <std::size_t Dim>
BarrierReport verify_lateral_barrier(const BarrierCandidate<Dim>& cand, double sigma0, const BarrierCheckOptions& o = {}) {
    BarrierReport r;
    Grid<Dim> grid(o.h, o.grid_radius);
    const double t0 = -2.0 * cand.kappa;
    std::vector<double> times;
    for (int k = 0; k < o.time_samples; ++k) times.push_back(t0 * (1.0 - static_cast<double>(k) / (o.time_samples - 1)));

    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto x = grid.point(i);
        if (norm(x) < 1.0) r.worst_i = std::max(r.worst_i, std::abs(cand.psi(x, 0.0)));
        for (double t : times) {
            const bool outside = norm(x) >= 2.0 || t < -cand.kappa;
            if (outside) r.worst_iii = std::max(r.worst_iii, 1.0 - cand.psi(x, t));
        }
    }
    r.zero_at_origin_slice = r.worst_i <= o.tol;
    r.at_least_one_outside = r.worst_iii <= o.tol;

    const std::vector<double> sigmas = o.sigmas.empty() ? std::vector<double>{sigma0} : o.sigmas;
    const auto tail = TailModel<Dim>::from_rule(cand.psi, 0.0, cand.bound);
    const double dt = std::pow(o.h, sigma0);
    r.worst_ii = 0.0;
    for (double sigma : sigmas) {
        OperatorEvaluator<Dim> ev(OperatorSpec<Dim>::pucci_plus(sigma, o.lambda), grid, o.quadrature);
        for (double t : times) {
            std::vector<double> now(grid.size()), before(grid.size());
            for (std::size_t i = 0; i < grid.size(); ++i) {
                now[i] = cand.psi(grid.point(i), t);
                before[i] = cand.psi(grid.point(i), t - dt);
            }
            const SliceView<Dim> view{&grid, now, t, &tail};
            for (std::size_t i = 0; i < grid.size(); ++i) {
                const auto x = grid.point(i);
                if (!(norm(x) > 1.0 + 1e-12)) continue;
                const double res = (now[i] - before[i]) / dt - ev.apply(view, x);
                if (-res > r.worst_ii) r.worst_ii = -res, r.worst_ii_location = norm(x);
            }
        }
    }
    r.supersolution_outside = r.worst_ii <= o.tol;
    r.pass = r.zero_at_origin_slice && r.supersolution_outside && r.at_least_one_outside;
    return r;
}

template <std::size_t Dim>
struct BarrierSearchResult {
    bool found = false;
    double c = 0.0, c_t = 0.0, kappa = 0.0;
    BarrierReport report;
    int tried = 0;

    nlohmann::json to_json() const {
        return {{"found", found}, {"c", c}, {"c_t", c_t}, {"kappa", kappa}, {"tried", tried}, {"report", report.to_json()}};
    }
};

/// Scans c ascending, then c_t ascending, over log-spaced values in [lo, hi]; returns the first passing pair.
template <std::size_t Dim>
BarrierSearchResult<Dim> search_lateral_barrier(double sigma0, const BarrierCheckOptions& o = {}, double lo = 0.1,
                                                double hi = 10.0, int per_axis = 9) {
    BarrierSearchResult<Dim> out;
    const auto axis = numerics::logspace(lo, hi, per_axis);
    for (double c : axis)
        for (double ct : axis) {
            ++out.tried;
            auto cand = lateral_candidate<Dim>(c, ct, sigma0);
            auto rep = verify_lateral_barrier(cand, sigma0, o);
            if (rep.pass) {
                out.found = true;
                out.c = c, out.c_t = ct, out.kappa = cand.kappa;
                out.report = rep;
                return out;
            }
        }
    return out;
}

/// Smooth bump with b(0) = 0 and 1 - b supported in B1.
template <std::size_t Dim>
double standard_bump(const Point<Dim>& y) {
    double r2 = 0.0;
    for (std::size_t d = 0; d < Dim; ++d) r2 += y[d] * y[d];
    if (r2 >= 1.0) return 1.0;
    return 1.0 - std::exp(r2 / (r2 - 1.0));
}

template <std::size_t Dim>
struct BumpBarrier {
    BarrierCandidate<Dim> candidate;
    double slope = 0.0;  // ||M+ b||_inf over the grid
    double min_residual = 0.0;
    bool residual_ok = false;
};

/// psi(y, s) = b(y) + ||M+ b||_inf s, with the sup norm maximized over the grid.
template <std::size_t Dim>
BumpBarrier<Dim> bump_barrier(const std::function<double(const Point<Dim>&)>& b, double sigma, double lambda,
                              double h = 1.0 / 64, double grid_radius = 4.0, double tol = 1e-3) {
    Grid<Dim> grid(h, grid_radius);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto y = grid.point(i);
        const double v = b(y);
        if (v < 0.0 || v > 1.0) throw PreconditionError("bump must take values in [0, 1]");
        if (norm(y) >= 1.0 && v != 1.0) throw PreconditionError("1 - b must be supported in B1");
    }
    if (b(Point<Dim>{}) != 0.0) throw PreconditionError("bump must vanish at the origin");
    auto bf = Field<Dim>::stationary(grid, b, 0.0, 1.0);
    OperatorEvaluator<Dim> ev(OperatorSpec<Dim>::pucci_plus(sigma, lambda), grid, QuadratureScheme{2, grid_radius});
    std::vector<double> mb(grid.size());
    double sup = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        mb[i] = ev.apply(bf.slice(0), grid.point(i));
        sup = std::max(sup, std::abs(mb[i]));
    }
    BumpBarrier<Dim> out;
    out.slope = sup;
    out.candidate.psi = [b, sup](const Point<Dim>& y, double s) { return b(y) + sup * s; };
    out.candidate.kappa = 1.0;
    out.candidate.provenance = "bump";
    out.candidate.params = {{"slope", sup}, {"sigma", sigma}, {"lambda", lambda}};
    // psi_t - M+ psi = slope - M+ b at every node (the time shift does not change increments)
    out.min_residual = INFINITY;
    for (double v : mb) out.min_residual = std::min(out.min_residual, sup - v);
    out.residual_ok = out.min_residual >= -tol;
    return out;
}

/// Modulus of a space-time rule sampled on a grid over B_R x [t0, 0], all pairs (box norm in 2D).
template <std::size_t Dim>
Modulus rule_modulus(const SpaceTimeRule<Dim>& f, double h, double grid_radius, double t0, double dt, double d_max = 1.0) {
    Grid<Dim> grid(h, grid_radius);
    const long n = std::max(2L, static_cast<long>(std::ceil(-t0 / dt)));
    std::vector<double> times;
    for (long j = 0; j <= n; ++j) times.push_back(t0 * (1.0 - static_cast<double>(j) / n));
    auto field = Field<Dim>::from_rule(grid, times, f, TailModel<Dim>::zero());
    return measure_boundary_modulus(field, Point<Dim>{}, grid_radius * std::sqrt(static_cast<double>(Dim)) + 1.0, d_max);
}

}  // namespace nlpar
