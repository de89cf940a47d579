#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "evolution.hpp"
#include "field.hpp"
#include "nonlocal.hpp"
#include "numerics.hpp"

namespace nlpar {

/// Space-time region B_radius(center) x [t_lo, t_hi].
template <std::size_t Dim>
struct Region {
    Point<Dim> center{};
    double radius = 1.0;
    double t_lo = -INFINITY;
    double t_hi = INFINITY;
};

/// max |u(x,t) - u(y,s)| / (|x-y| + |t-s|^{1/sigma})^alpha over sampled pairs in the region.
/// Nodes are thinned to at most `max_points` space-time samples by uniform striding.
template <std::size_t Dim>
double parabolic_holder_seminorm(const Field<Dim>& u, const Region<Dim>& region, double alpha, double sigma,
                                 std::size_t max_points = 3000) {
    if (!(alpha > 0.0) || !(sigma > 0.0)) throw ParameterError("seminorm needs alpha > 0 and sigma > 0");
    const auto& g = u.grid();
    std::vector<std::size_t> nodes, slices;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (norm(g.point(i) - region.center) <= region.radius + 1e-12) nodes.push_back(i);
    for (std::size_t j = 0; j < u.time_count(); ++j)
        if (u.times()[j] >= region.t_lo - 1e-12 && u.times()[j] <= region.t_hi + 1e-12) slices.push_back(j);
    std::size_t stride_t = 1, stride_x = 1;
    while ((slices.size() / stride_t) * (nodes.size() / stride_x) > max_points) {
        if (slices.size() / stride_t > nodes.size() / stride_x / 8 + 1) ++stride_t;
        else ++stride_x;
    }
    struct Sample {
        Point<Dim> x;
        double t, v;
    };
    std::vector<Sample> s;
    for (std::size_t a = 0; a < slices.size(); a += stride_t)
        for (std::size_t b = 0; b < nodes.size(); b += stride_x)
            s.push_back({g.point(nodes[b]), u.times()[slices[a]], u.value(nodes[b], slices[a])});
    double best = 0.0;
    for (std::size_t a = 0; a < s.size(); ++a)
        for (std::size_t b = a + 1; b < s.size(); ++b) {
            const double dist = norm(s[a].x - s[b].x) + std::pow(std::abs(s[a].t - s[b].t), 1.0 / sigma);
            if (dist == 0.0) continue;
            best = std::max(best, std::abs(s[a].v - s[b].v) / std::pow(dist, alpha));
        }
    return best;
}

struct HolderFit {
    double exponent = 0.0;      // clamped to [0, 2]
    double raw_exponent = 0.0;
    double prefactor = 0.0;
    double r2 = 0.0;
    double residual = 0.0;      // rms of the log regression
    std::vector<double> radii, oscillations;

    nlohmann::json to_json() const {
        return {{"exponent", exponent}, {"raw_exponent", raw_exponent}, {"prefactor", prefactor}, {"r2", r2},
                {"residual", residual}, {"radii", radii}, {"oscillations", oscillations}};
    }
};

namespace detail {

inline HolderFit fit_power(const std::vector<double>& r, const std::vector<double>& osc) {
    std::vector<double> lx, ly;
    HolderFit f;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (!(osc[i] > 0.0)) continue;
        lx.push_back(std::log(r[i]));
        ly.push_back(std::log(osc[i]));
        f.radii.push_back(r[i]);
        f.oscillations.push_back(osc[i]);
    }
    if (lx.size() < 3) throw InsufficientData("fewer than 3 usable scales");
    const auto [a, b, r2] = numerics::linear_fit(lx, ly);
    double ss = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) ss += std::pow(ly[i] - a - b * lx[i], 2);
    f.raw_exponent = b;
    f.exponent = std::clamp(b, 0.0, 2.0);
    f.prefactor = std::exp(a);
    f.r2 = r2;
    f.residual = std::sqrt(ss / static_cast<double>(lx.size()));
    return f;
}

}  // namespace detail

/// Regresses log osc(u) over B_{2^-k}(x0) x (t0 - 2^{-sigma k}, t0] against log 2^-k.
/// Scales whose ball holds fewer than two grid spacings are dropped.
template <std::size_t Dim>
HolderFit fit_holder_exponent(const Field<Dim>& u, const Point<Dim>& x0, double t0, double sigma, int k_min = 1,
                              int k_max = 30) {
    const auto& g = u.grid();
    std::vector<double> radii, osc;
    for (int k = k_min; k <= k_max; ++k) {
        const double r = std::ldexp(1.0, -k);
        if (r < 2.0 * g.h()) break;
        const double t_lo = t0 - std::pow(r, sigma);
        double lo = INFINITY, hi = -INFINITY;
        for (std::size_t j = 0; j < u.time_count(); ++j) {
            const double t = u.times()[j];
            if (!(t > t_lo) || t > t0 + 1e-12) continue;
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (norm(g.point(i) - x0) >= r) continue;
                lo = std::min(lo, u.value(i, j));
                hi = std::max(hi, u.value(i, j));
            }
        }
        if (!std::isfinite(lo)) continue;
        radii.push_back(r);
        osc.push_back(hi - lo);
    }
    return detail::fit_power(radii, osc);
}

template <std::size_t Dim>
struct FlatnessRecord {
    int k = 0;
    double radius = 0.0;
    double a = 0.0;
    Point<Dim> b{};
    double sup_error = 0.0;
    double lambda = 0.5;
    double target = 0.0;        // lambda^{k(1+alpha)}
    double a_increment = 0.0;   // |a_k - a_{k-1}|
    double b_increment = 0.0;   // lambda^{k-1} |b_k - b_{k-1}|
};

template <std::size_t Dim>
struct FlatnessReport {
    std::vector<FlatnessRecord<Dim>> records;
    double lambda = 0.5, alpha = 0.4;
    bool truncated = false;
    int requested = 0;
    double decay_ratio = 0.0;    // geometric mean of successive sup-error ratios
    double fitted_constant = 0.0;  // max_k of sup_error, increments over lambda^{k(1+alpha)}

    nlohmann::json to_json() const {
        nlohmann::json rec = nlohmann::json::array();
        for (const auto& r : records) {
            rec.push_back({{"k", r.k}, {"radius", r.radius}, {"a", r.a}, {"b", std::vector<double>(r.b.begin(), r.b.end())},
                           {"sup_error", r.sup_error}, {"lambda", r.lambda}, {"target", r.target},
                           {"a_increment", r.a_increment}, {"b_increment", r.b_increment}});
        }
        return {{"lambda", lambda}, {"alpha", alpha}, {"truncated", truncated}, {"requested", requested},
                {"decay_ratio", decay_ratio}, {"fitted_constant", fitted_constant}, {"records", rec}};
    }
};

inline double default_flatness_alpha(double sigma) { return std::min(0.9 * (sigma - 1.0), 0.4); }

/// Least-squares affine fits l_k(x) = a_k + b_k (x - x0) on B_{lambda^k}(x0) x (t0 - lambda^{sigma k}, t0].
template <std::size_t Dim>
FlatnessReport<Dim> flatness_sequence(const Field<Dim>& u, const Point<Dim>& x0, double t0, double sigma,
                                      double lambda = 0.5, std::optional<double> alpha = std::nullopt,
                                      int k_max = 8) {
    if (!(lambda > 0.0 && lambda < 1.0)) throw ParameterError("lambda must lie in (0, 1)");
    FlatnessReport<Dim> rep;
    rep.lambda = lambda;
    rep.alpha = alpha ? *alpha : default_flatness_alpha(sigma);
    rep.requested = k_max;
    const auto& g = u.grid();
    constexpr std::size_t P = Dim + 1;
    for (int k = 0; k <= k_max; ++k) {
        const double r = std::pow(lambda, k);
        if (r < 3.0 * g.h()) {
            rep.truncated = true;
            break;
        }
        const double t_lo = t0 - std::pow(r, sigma);
        std::vector<std::pair<Point<Dim>, double>> pts;
        for (std::size_t j = 0; j < u.time_count(); ++j) {
            const double t = u.times()[j];
            if (!(t > t_lo) || t > t0 + 1e-12) continue;
            for (std::size_t i = 0; i < g.size(); ++i) {
                const auto z = g.point(i) - x0;
                if (norm(z) < r) pts.push_back({(1.0 / r) * z, u.value(i, j)});
            }
        }
        double A[P][P] = {}, rhs[P] = {};
        for (const auto& [z, v] : pts) {
            double row[P];
            row[0] = 1.0;
            for (std::size_t d = 0; d < Dim; ++d) row[d + 1] = z[d];
            for (std::size_t p = 0; p < P; ++p) {
                rhs[p] += row[p] * v;
                for (std::size_t q = 0; q < P; ++q) A[p][q] += row[p] * row[q];
            }
        }
        // Gaussian elimination with partial pivoting on the small normal system.
        for (std::size_t c = 0; c < P; ++c) {
            std::size_t piv = c;
            for (std::size_t r2 = c + 1; r2 < P; ++r2)
                if (std::abs(A[r2][c]) > std::abs(A[piv][c])) piv = r2;
            if (std::abs(A[piv][c]) < 1e-300) throw InsufficientData("degenerate flatness cylinder");
            std::swap(A[c], A[piv]);
            std::swap(rhs[c], rhs[piv]);
            for (std::size_t r2 = c + 1; r2 < P; ++r2) {
                const double m = A[r2][c] / A[c][c];
                for (std::size_t q = c; q < P; ++q) A[r2][q] -= m * A[c][q];
                rhs[r2] -= m * rhs[c];
            }
        }
        double sol[P];
        for (std::size_t c = P; c-- > 0;) {
            double acc = rhs[c];
            for (std::size_t q = c + 1; q < P; ++q) acc -= A[c][q] * sol[q];
            sol[c] = acc / A[c][c];
        }
        FlatnessRecord<Dim> rec;
        rec.k = k;
        rec.radius = r;
        rec.lambda = lambda;
        rec.a = sol[0];
        for (std::size_t d = 0; d < Dim; ++d) rec.b[d] = sol[d + 1] / r;
        for (const auto& [z, v] : pts) {
            double l = sol[0];
            for (std::size_t d = 0; d < Dim; ++d) l += sol[d + 1] * z[d];
            rec.sup_error = std::max(rec.sup_error, std::abs(v - l));
        }
        rec.target = std::pow(lambda, k * (1.0 + rep.alpha));
        if (!rep.records.empty()) {
            const auto& prev = rep.records.back();
            rec.a_increment = std::abs(rec.a - prev.a);
            rec.b_increment = prev.radius * norm(rec.b - prev.b);
        }
        rep.records.push_back(rec);
    }
    double logsum = 0.0;
    int ratios = 0;
    for (std::size_t i = 1; i < rep.records.size(); ++i) {
        const double a = rep.records[i - 1].sup_error, b = rep.records[i].sup_error;
        if (a > 0.0 && b > 0.0) logsum += std::log(b / a), ++ratios;
    }
    rep.decay_ratio = ratios ? std::exp(logsum / ratios) : 0.0;
    for (const auto& r : rep.records) {
        const double prev_target = r.k > 0 ? std::pow(lambda, (r.k - 1) * (1.0 + rep.alpha)) : r.target;
        rep.fitted_constant = std::max({rep.fitted_constant, r.sup_error / r.target, r.a_increment / prev_target,
                                        r.b_increment / prev_target});
    }
    return rep;
}

template <std::size_t Dim>
struct TimeRegularityReport {
    double c0_measured = 0.0;   // max |M+- u0| over interior nodes
    double c0 = 0.0;            // value used for M (declared or measured)
    double f_sup = 0.0;
    double g_lipschitz = 0.0;
    double M = 0.0;
    bool hypothesis_ok = true;
    double worst_initial_ratio = 0.0;  // max |u(x,t) - u(x,t_begin)| / (M (t - t_begin))
    bool initial_bound_ok = false;
    double worst_shift_ratio = 0.0;    // max |u(x,t+h) - u(x,t)| / (M h) over dyadic lattice shifts
    bool shift_bound_ok = false;
    std::optional<HolderFit> quotient_fit;
    std::string quotient_fit_error;
    double slack = 1e-8;

    bool pass() const { return initial_bound_ok && shift_bound_ok; }

    nlohmann::json to_json() const {
        nlohmann::json j = {{"c0_measured", c0_measured}, {"c0", c0}, {"f_sup", f_sup}, {"g_lipschitz", g_lipschitz},
                            {"M", M}, {"hypothesis_ok", hypothesis_ok}, {"worst_initial_ratio", worst_initial_ratio},
                            {"initial_bound_ok", initial_bound_ok}, {"worst_shift_ratio", worst_shift_ratio},
                            {"shift_bound_ok", shift_bound_ok}, {"slack", slack}};
        if (quotient_fit) j["quotient_holder"] = quotient_fit->to_json();
        else j["quotient_holder_error"] = quotient_fit_error;
        return j;
    }
};

namespace detail {

/// Time-Lipschitz constant of g over exterior grid nodes and far sample points, on the given time lattice.
template <std::size_t Dim>
double exterior_time_lipschitz(const DirichletProblem<Dim>& p, const Grid<Dim>& grid, const std::vector<double>& times) {
    std::vector<Point<Dim>> pts;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (!p.interior(grid.point(i))) pts.push_back(grid.point(i));
    const int dirs = Dim == 1 ? 2 : 16;
    for (int k = 0; k <= 14; ++k) {
        const double r = grid.radius() * std::ldexp(1.0, k);
        for (int d = 0; d < dirs; ++d) {
            Point<Dim> e{};
            if constexpr (Dim == 1) e[0] = d == 0 ? r : -r;
            else e = {r * std::cos(2.0 * M_PI * d / dirs), r * std::sin(2.0 * M_PI * d / dirs)};
            pts.push_back(e);
        }
    }
    double lip = 0.0;
    for (const auto& x : pts) {
        double prev = p.g(x, times[0]);
        for (std::size_t j = 1; j < times.size(); ++j) {
            const double cur = p.g(x, times[j]);
            lip = std::max(lip, std::abs(cur - prev) / (times[j] - times[j - 1]));
            prev = cur;
        }
    }
    return lip;
}

}  // namespace detail

/// Solves the problem and checks the Lipschitz-in-time propagation with M = max(C0 + sup|f|, Lip_t g).
template <std::size_t Dim>
TimeRegularityReport<Dim> time_regularity_experiment(const DirichletProblem<Dim>& problem, const GridParams& params,
                                                     std::optional<double> declared_c0 = std::nullopt,
                                                     SolveResult<Dim>* keep = nullptr) {
    TimeRegularityReport<Dim> rep;
    auto sol = solve_dirichlet(problem, params);
    const auto& u = sol.field;
    const auto& g = u.grid();
    QuadratureScheme scheme = params.quadrature;
    scheme.eval_radius = std::max(scheme.eval_radius, norm(problem.center) + problem.radius);
    OperatorEvaluator<Dim> plus(OperatorSpec<Dim>::pucci_plus(problem.op.sigma, problem.op.lambda), g, scheme);
    OperatorEvaluator<Dim> minus(OperatorSpec<Dim>::pucci_minus(problem.op.sigma, problem.op.lambda), g, scheme);
    const auto s0 = u.slice(0);
    for (std::size_t i : sol.interior) {
        const auto x = g.point(i);
        rep.c0_measured = std::max({rep.c0_measured, std::abs(plus.apply(s0, x)), std::abs(minus.apply(s0, x))});
        for (double t : u.times()) rep.f_sup = std::max(rep.f_sup, std::abs(problem.f(x, t)));
    }
    rep.c0 = declared_c0 ? *declared_c0 : rep.c0_measured;
    rep.hypothesis_ok = rep.c0_measured <= rep.c0 * (1.0 + 1e-12);
    rep.g_lipschitz = detail::exterior_time_lipschitz(problem, g, u.times());
    rep.M = std::max(rep.c0 + rep.f_sup, rep.g_lipschitz);

    const double tb = u.times()[0];
    for (std::size_t j = 1; j < u.time_count(); ++j) {
        const double span = u.times()[j] - tb;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double diff = std::abs(u.value(i, j) - u.value(i, 0));
            const double bound = rep.M * span;
            rep.worst_initial_ratio = std::max(rep.worst_initial_ratio, bound > 0 ? diff / bound : (diff > 0 ? INFINITY : 0.0));
        }
    }
    rep.initial_bound_ok = rep.worst_initial_ratio <= 1.0 + rep.slack;

    const std::size_t nt = u.time_count();
    for (std::size_t m = 1; m < nt; m *= 2)
        for (std::size_t j = 0; j + m < nt; ++j) {
            const double h = u.times()[j + m] - u.times()[j];
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double diff = std::abs(u.value(i, j + m) - u.value(i, j));
                const double bound = rep.M * h;
                rep.worst_shift_ratio =
                    std::max(rep.worst_shift_ratio, bound > 0 ? diff / bound : (diff > 0 ? INFINITY : 0.0));
            }
        }
    rep.shift_bound_ok = rep.worst_shift_ratio <= 1.0 + rep.slack;

    // Difference quotient w = (u(t + h) - u(t)) / h with h a fixed lattice multiple.
    const std::size_t m = std::max<std::size_t>(1, (nt - 1) / 16);
    std::vector<double> wt;
    std::vector<std::vector<double>> ws;
    for (std::size_t j = 0; j + m < nt; ++j) {
        const double h = u.times()[j + m] - u.times()[j];
        std::vector<double> w(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) w[i] = (u.value(i, j + m) - u.value(i, j)) / h;
        wt.push_back(u.times()[j]);
        ws.push_back(std::move(w));
    }
    Field<Dim> wf(g, wt, std::move(ws), TailModel<Dim>::zero());
    try {
        rep.quotient_fit = fit_holder_exponent(wf, problem.center, wt.back(), problem.op.sigma, 2);
    } catch (const InsufficientData& e) {
        rep.quotient_fit_error = e.what();
    }
    if (keep) *keep = std::move(sol);
    return rep;
}

template <std::size_t Dim>
struct CounterexampleReport {
    double sigma = 1.0;
    double c1 = 0.0;
    int halvings = 0;
    bool ring = true;
    double subsolution_violation = 0.0;
    double pre_jump_sup = 0.0;
    double pre_jump_slope = 0.0;
    double post_jump_slope = 0.0;
    double predicted_slope = 0.0;  // M+ chi(0) evaluated by the discrete operator
    double dt = 0.0;
    double jump_time = -0.5;
    bool jump_detected = false;
    std::vector<double> trajectory_t, trajectory_u;  // u(0, t)

    nlohmann::json to_json() const {
        return {{"sigma", sigma}, {"c1", c1}, {"halvings", halvings}, {"ring", ring},
                {"subsolution_violation", subsolution_violation}, {"pre_jump_sup", pre_jump_sup},
                {"pre_jump_slope", pre_jump_slope}, {"post_jump_slope", post_jump_slope},
                {"predicted_slope", predicted_slope}, {"dt", dt}, {"jump_time", jump_time},
                {"jump_detected", jump_detected}};
    }
};

/// Exterior datum: 0 before t = -1/2, c1 (t + 1/2) + indicator of the ring 2 <= |x| < 3 from t = -1/2 on.
template <std::size_t Dim>
SpaceTimeRule<Dim> ring_datum(double c1, bool ring) {
    return [c1, ring](const Point<Dim>& x, double t) {
        if (t < -0.5) return 0.0;
        const double r = norm(x);
        return c1 * (t + 0.5) + (ring && r >= 2.0 && r < 3.0 ? 1.0 : 0.0);
    };
}

/// Fractional heat equation in B1 with the ring datum; the time derivative at x = 0 jumps at t = -1/2.
template <std::size_t Dim>
CounterexampleReport<Dim> counterexample_experiment(double sigma, double c1, const GridParams& params,
                                                    bool ring = true, double sub_tol = 1e-9) {
    CounterexampleReport<Dim> rep;
    rep.sigma = sigma;
    rep.ring = ring;
    DirichletProblem<Dim> p;
    p.op = OperatorSpec<Dim>::linear(make_fractional_kernel<Dim>(sigma));
    p.discontinuous_in_time = true;
    p.g_bound = 1.0 + std::abs(c1);
    Grid<Dim> grid(params.h, params.grid_radius);
    const auto times = time_lattice(-1.0, 0.0, cfl_timestep(grid, p.op, params.quadrature).dt_max, params.dt);
    for (;; ++rep.halvings) {
        p.g = ring_datum<Dim>(c1, ring);
        p.g_bound = 1.0 + std::abs(c1);
        auto cand = Field<Dim>::from_rule(grid, times, p.g, p.tail());
        const auto res = residual_check(cand, p, Sense::Sub, sub_tol, params.quadrature);
        rep.subsolution_violation = res.max_violation;
        if (res.pass) break;
        if (rep.halvings >= 10) throw PreconditionError("ring datum is not a subsolution after 10 halvings");
        c1 *= 0.5;
    }
    rep.c1 = c1;
    const auto sol = solve_dirichlet(p, params);
    const auto& u = sol.field;
    rep.dt = u.time_step();
    const std::size_t origin = u.grid().flat(*u.grid().node_at(Point<Dim>{}));
    const std::size_t jump = u.time_index(-0.5);
    rep.jump_time = u.times()[jump];
    for (std::size_t j = 0; j <= jump; ++j)
        for (std::size_t i : sol.interior) rep.pre_jump_sup = std::max(rep.pre_jump_sup, std::abs(u.value(i, j)));
    for (std::size_t j = 1; j <= jump; ++j)
        rep.pre_jump_slope =
            std::max(rep.pre_jump_slope, std::abs(u.value(origin, j) - u.value(origin, j - 1)) / (u.times()[j] - u.times()[j - 1]));
    rep.post_jump_slope = (u.value(origin, jump + 1) - u.value(origin, jump)) / (u.times()[jump + 1] - u.times()[jump]);
    for (std::size_t j = 0; j < u.time_count(); ++j) {
        rep.trajectory_t.push_back(u.times()[j]);
        rep.trajectory_u.push_back(u.value(origin, j));
    }
    // Discrete M+ of the ring indicator at the origin.
    auto chi = Field<Dim>::stationary(
        grid, [](const Point<Dim>& x) { const double r = norm(x); return r >= 2.0 && r < 3.0 ? 1.0 : 0.0; }, 0.0, 1.0);
    QuadratureScheme scheme = params.quadrature;
    scheme.eval_radius = std::max(scheme.eval_radius, 1.0);
    OperatorEvaluator<Dim> plus(OperatorSpec<Dim>::pucci_plus(sigma, 1.0), grid, scheme);
    rep.predicted_slope = ring ? plus.apply(chi.slice(0), Point<Dim>{}) : 0.0;
    rep.jump_detected = rep.post_jump_slope >= 10.0 * rep.pre_jump_slope && rep.post_jump_slope >= 1e-4;
    return rep;
}

/// Exact value of the fractional operator applied to the ring indicator at the origin, in one dimension.
inline double ring_operator_at_origin_1d(double sigma) {
    return 4.0 * (2.0 - sigma) * (std::pow(2.0, -sigma) - std::pow(3.0, -sigma)) / sigma;
}

}  // namespace nlpar
