#pragma once

#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "field.hpp"
#include "kernel.hpp"
#include "nonlocal.hpp"

namespace nlpar {

/// u_t - I u = f in B_radius(center) x (t_begin, t_end], u = g outside the ball and at t_begin.
template <std::size_t Dim>
struct DirichletProblem {
    OperatorSpec<Dim> op;
    SpaceTimeRule<Dim> f = [](const Point<Dim>&, double) { return 0.0; };
    SpaceTimeRule<Dim> g = [](const Point<Dim>&, double) { return 0.0; };
    TailKind exterior_tail = TailKind::Rule;  // Rule: g beyond the grid; Zero: g vanishes beyond the grid
    double g_growth = 0.0;
    double g_bound = 0.0;
    Point<Dim> center{};
    double radius = 1.0;
    double t_begin = -1.0;
    double t_end = 0.0;
    bool discontinuous_in_time = false;

    TailModel<Dim> tail() const {
        if (exterior_tail == TailKind::Zero) return TailModel<Dim>::zero();
        return TailModel<Dim>::from_rule(g, g_growth, g_bound);
    }

    bool interior(const Point<Dim>& x) const { return norm(x - center) < radius; }

    void validate() const {
        op.validate();
        if (!(radius > 0.0)) throw ParameterError("domain radius must be positive");
        if (!(t_end > t_begin)) throw ParameterError("time interval must be nonempty");
    }
};

struct GridParams {
    double h = 1.0 / 64;
    double grid_radius = 8.0;
    QuadratureScheme quadrature;
    double dt = 0.0;  // 0 selects the largest stable step

    nlohmann::json to_json() const {
        return {{"h", h}, {"R_grid", grid_radius}, {"quadrature", quadrature.to_json()}, {"dt", dt}};
    }
};

struct CflRecord {
    double dt_max = 0.0;        // h^sigma / (2 Lambda W_tot)
    double weight_total = 0.0;  // W_tot: h^sigma times the diagonal mass
    double dt = 0.0;
    long steps = 0;

    nlohmann::json to_json() const {
        return {{"dt_max", dt_max}, {"W_tot", weight_total}, {"dt", dt}, {"steps", steps}};
    }
};

namespace detail {

template <std::size_t Dim>
void require_L0(const OperatorSpec<Dim>& op, const Grid<Dim>& grid) {
    if (op.is_pucci()) return;
    auto plan = SamplePlan<Dim>::uniform(Dim == 1 ? 9 : 5, grid.radius(), 2.0, 3);
    for (const auto& row : op.family)
        for (const auto& k : row) {
            auto rep = check_L0_membership(k, plan);
            if (!rep.pass || k.lambda > op.lambda)
                throw PreconditionError("operator is not elliptic with respect to L0 with the declared Lambda");
        }
}

}  // namespace detail

/// Largest explicit step keeping u + dt (I u + f) order preserving in the grid values.
template <std::size_t Dim>
CflRecord cfl_timestep(const Grid<Dim>& grid, const OperatorSpec<Dim>& op, const QuadratureScheme& scheme = {}) {
    op.validate();
    detail::require_L0(op, grid);
    auto q = quadrature_for<Dim>(grid.h(), grid.radius(), op.sigma, scheme);
    CflRecord c;
    const double hs = std::pow(grid.h(), op.sigma);
    c.weight_total = hs * q->diagonal_mass();
    c.dt_max = hs / (2.0 * op.lambda * c.weight_total);
    c.dt = c.dt_max;
    return c;
}

template <std::size_t Dim>
struct EvolutionState {
    std::vector<double> values;
    double time = 0.0;
    long step = 0;
    CflRecord cfl;
};

/// Sequential per-step solver. Per-node evaluations within a step are independent.
template <std::size_t Dim>
class Stepper {
public:
    Stepper(const DirichletProblem<Dim>& problem, const GridParams& params)
        : problem_(problem), grid_(params.h, params.grid_radius), scheme_(params.quadrature), tail_(problem.tail()) {
        problem_.validate();
        if (params.grid_radius < 4.0) throw ParameterError("grid radius must be at least 4");
        scheme_.eval_radius = std::max(scheme_.eval_radius, norm(problem.center) + problem.radius);
        eval_ = std::make_unique<OperatorEvaluator<Dim>>(problem_.op, grid_, scheme_);
        cfl_ = cfl_timestep(grid_, problem_.op, scheme_);
        for (std::size_t i = 0; i < grid_.size(); ++i)
            if (problem_.interior(grid_.point(i))) interior_.push_back(i);
    }

    const Grid<Dim>& grid() const { return grid_; }
    const CflRecord& cfl() const { return cfl_; }
    const std::vector<std::size_t>& interior_nodes() const { return interior_; }
    const TailModel<Dim>& tail() const { return tail_; }
    const OperatorEvaluator<Dim>& evaluator() const { return *eval_; }
    const DirichletProblem<Dim>& problem() const { return problem_; }

    EvolutionState<Dim> initial_state() const {
        EvolutionState<Dim> s;
        s.time = problem_.t_begin;
        s.values.resize(grid_.size());
        for (std::size_t i = 0; i < grid_.size(); ++i) s.values[i] = problem_.g(grid_.point(i), s.time);
        s.cfl = cfl_;
        return s;
    }

    /// Forward Euler on interior nodes, exterior nodes refreshed from g at `t_next`.
    EvolutionState<Dim> step(const EvolutionState<Dim>& s, double dt, double t_next) const {
        if (!(dt > 0.0)) throw ParameterError("time step must be positive");
        if (dt > cfl_.dt_max * (1.0 + 1e-12)) throw CflViolation("time step exceeds the monotonicity bound");
        EvolutionState<Dim> out;
        out.values.resize(grid_.size());
        out.time = t_next;
        out.step = s.step + 1;
        out.cfl = s.cfl;
        for (std::size_t i = 0; i < grid_.size(); ++i) out.values[i] = problem_.g(grid_.point(i), t_next);
        const SliceView<Dim> view{&grid_, s.values, s.time, &tail_};
        for (std::size_t i : interior_) {
            const auto x = grid_.point(i);
            out.values[i] = s.values[i] + dt * (eval_->apply(view, x) + problem_.f(x, s.time));
        }
        return out;
    }

    EvolutionState<Dim> step(const EvolutionState<Dim>& s, double dt) const { return step(s, dt, s.time + dt); }

private:
    DirichletProblem<Dim> problem_;
    Grid<Dim> grid_;
    QuadratureScheme scheme_;
    TailModel<Dim> tail_;
    std::unique_ptr<OperatorEvaluator<Dim>> eval_;
    CflRecord cfl_;
    std::vector<std::size_t> interior_;
};

template <std::size_t Dim>
EvolutionState<Dim> step_explicit(const DirichletProblem<Dim>& problem, const GridParams& params,
                                  const EvolutionState<Dim>& state, double dt) {
    return Stepper<Dim>(problem, params).step(state, dt);
}

template <std::size_t Dim>
struct SolveResult {
    Field<Dim> field;
    CflRecord cfl;
    double wall_time_s = 0.0;
    std::vector<std::size_t> interior;
};

/// Time lattice t_j = t_begin + span j / N with N even, so the midpoint of the interval is a lattice time.
inline std::vector<double> time_lattice(double t_begin, double t_end, double dt_max, double dt_request = 0.0) {
    const double span = t_end - t_begin;
    const double target = dt_request > 0.0 ? std::min(dt_request, dt_max) : dt_max;
    long n = static_cast<long>(std::ceil(span / target - 1e-9));
    if (n % 2) ++n;
    n = std::max(n, 2L);
    std::vector<double> t(static_cast<std::size_t>(n + 1));
    for (long j = 0; j <= n; ++j) t[static_cast<std::size_t>(j)] = t_begin + span * (static_cast<double>(j) / n);
    t.back() = t_end;
    return t;
}

template <std::size_t Dim>
SolveResult<Dim> solve_dirichlet(const DirichletProblem<Dim>& problem, const GridParams& params) {
    const auto start = std::chrono::steady_clock::now();
    Stepper<Dim> stepper(problem, params);
    const auto times = time_lattice(problem.t_begin, problem.t_end, stepper.cfl().dt_max, params.dt);
    std::vector<std::vector<double>> slices;
    slices.reserve(times.size());
    auto state = stepper.initial_state();
    slices.push_back(state.values);
    for (std::size_t j = 1; j < times.size(); ++j) {
        state = stepper.step(state, times[j] - times[j - 1], times[j]);
        slices.push_back(state.values);
    }
    SolveResult<Dim> r{Field<Dim>(stepper.grid(), times, std::move(slices), stepper.tail()), stepper.cfl(), 0.0,
                       stepper.interior_nodes()};
    r.cfl.dt = times[1] - times[0];
    r.cfl.steps = static_cast<long>(times.size()) - 1;
    r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

enum class Sense { Sub, Super };

template <std::size_t Dim>
struct ResidualReport {
    Sense sense = Sense::Sub;
    double max_violation = 0.0;
    Point<Dim> location{};
    double location_time = 0.0;
    std::size_t location_node = 0;
    bool pass = true;
    double tol = 0.0;

    nlohmann::json to_json() const {
        nlohmann::json loc = nlohmann::json::array();
        for (double v : location) loc.push_back(v);
        return {{"sense", sense == Sense::Sub ? "sub" : "super"},
                {"max_violation", max_violation},
                {"location", loc},
                {"time", location_time},
                {"tol", tol},
                {"pass", pass}};
    }
};

/// r = (u(t_j) - u(t_{j-1})) / dt - I u(t_j) - f on interior nodes of the candidate's own grid.
/// Sub-sense violation is max r^+, super-sense violation is max r^-.
template <std::size_t Dim>
ResidualReport<Dim> residual_check(const Field<Dim>& candidate, const DirichletProblem<Dim>& problem, Sense sense,
                                   double tol = 1e-9, QuadratureScheme scheme = {}) {
    ResidualReport<Dim> rep;
    rep.sense = sense;
    rep.tol = tol;
    scheme.eval_radius = std::max(scheme.eval_radius, norm(problem.center) + problem.radius);
    OperatorEvaluator<Dim> ev(problem.op, candidate.grid(), scheme);
    const auto& g = candidate.grid();
    std::vector<std::size_t> nodes;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (problem.interior(g.point(i))) nodes.push_back(i);
    rep.max_violation = -INFINITY;
    for (std::size_t j = 1; j < candidate.time_count(); ++j) {
        const double dt = candidate.times()[j] - candidate.times()[j - 1];
        const auto view = candidate.slice(j);
        for (std::size_t i : nodes) {
            const auto x = g.point(i);
            const double ut = (candidate.value(i, j) - candidate.value(i, j - 1)) / dt;
            const double r = ut - ev.apply(view, x) - problem.f(x, candidate.times()[j]);
            const double v = sense == Sense::Sub ? r : -r;
            if (v > rep.max_violation) {
                rep.max_violation = v;
                rep.location = x;
                rep.location_time = candidate.times()[j];
                rep.location_node = i;
            }
        }
    }
    rep.max_violation = std::max(rep.max_violation, 0.0);
    rep.pass = rep.max_violation <= tol;
    return rep;
}

}  // namespace nlpar
