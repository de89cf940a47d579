#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "barrier.hpp"
#include "errors.hpp"
#include "evolution.hpp"
#include "metrics.hpp"
#include "modulus.hpp"
#include "regularity.hpp"
#include "serialize.hpp"
#include "version.hpp"

namespace nlpar {

/// 64-bit FNV-1a of the canonical dump. Object keys are sorted by the json type, so the hash
/// does not depend on key order in the file.
inline std::string config_hash(const json& j) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : j.dump()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class ArtifactWriter {
public:
    explicit ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

    const std::filesystem::path& dir() const { return dir_; }
    const std::vector<std::string>& files() const { return files_; }

    void text(const std::string& name, const std::string& content) {
        std::ofstream out(dir_ / name, std::ios::binary);
        out << content;
        if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
        files_.push_back(name);
    }

    void json_file(const std::string& name, const json& j) { text(name, j.dump(2) + "\n"); }

    void csv(const std::string& name, const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
        std::string s;
        for (std::size_t i = 0; i < header.size(); ++i) s += (i ? "," : "") + header[i];
        s += "\n";
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + fmt(r[i]);
            s += "\n";
        }
        text(name, s);
    }

private:
    std::filesystem::path dir_;
    std::vector<std::string> files_;
};

struct Check {
    std::string name;
    bool pass = false;
    json detail = json::object();
};

struct RunOutcome {
    std::vector<Check> checks;
    bool hypothesis_ok = true;
    bool discontinuous_data = false;  // exterior data sampled left-continuously across a jump in time
    json cfl = nullptr;

    void check(const std::string& name, bool pass, json detail = json::object()) {
        checks.push_back({name, pass, std::move(detail)});
    }
    bool pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

namespace config {

inline const json& section(const json& cfg, const std::string& key) {
    static const json empty = json::object();
    return cfg.contains(key) ? cfg[key] : empty;
}

inline bool flag_at(const json& j, const std::string& key, const std::string& where, bool fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_boolean()) throw ConfigError(where + "." + key, "expected true or false");
    return j[key].get<bool>();
}

inline std::string string_at(const json& j, const std::string& key, const std::string& where, const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_string()) throw ConfigError(where + "." + key, "expected a string");
    return j[key].get<std::string>();
}

inline double positive_at(const json& j, const std::string& key, const std::string& where, double fallback) {
    const double v = detail::number_at(j, key, where, fallback);
    if (!(v > 0.0)) throw ConfigError(where + "." + key, "must be positive");
    return v;
}

inline std::vector<double> numbers_at(const json& j, const std::string& key, const std::string& where,
                                      std::vector<double> fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_array()) throw ConfigError(where + "." + key, "expected an array of numbers");
    std::vector<double> v;
    for (std::size_t i = 0; i < j[key].size(); ++i) {
        if (!j[key][i].is_number()) throw ConfigError(where + "." + key + "[" + std::to_string(i) + "]", "expected a number");
        v.push_back(j[key][i].get<double>());
    }
    return v;
}

template <std::size_t Dim>
Point<Dim> point_at(const json& j, const std::string& key, const std::string& where) {
    Point<Dim> p{};
    const auto v = numbers_at(j, key, where, {});
    if (v.empty()) return p;
    if (v.size() != Dim) throw ConfigError(where + "." + key, "expected " + std::to_string(Dim) + " coordinates");
    for (std::size_t d = 0; d < Dim; ++d) p[d] = v[d];
    return p;
}

inline QuadratureScheme quadrature(const json& j, const std::string& where) {
    detail::require_keys(j, where, {"kappa", "eval_radius", "far_octaves", "far_per_octave", "directions"});
    QuadratureScheme q;
    q.kappa = static_cast<int>(detail::number_at(j, "kappa", where, q.kappa));
    q.eval_radius = positive_at(j, "eval_radius", where, q.eval_radius);
    q.far_octaves = static_cast<int>(detail::number_at(j, "far_octaves", where, q.far_octaves));
    q.far_per_octave = static_cast<int>(detail::number_at(j, "far_per_octave", where, q.far_per_octave));
    q.directions = static_cast<int>(detail::number_at(j, "directions", where, q.directions));
    if (q.kappa < 1 || q.far_octaves < 1 || q.far_per_octave < 1 || q.directions < 2)
        throw ConfigError(where, "quadrature counts out of range");
    return q;
}

inline GridParams grid(const json& j, const std::string& where = "grid") {
    detail::require_keys(j, where, {"h", "grid_radius", "dt", "quadrature"});
    GridParams g;
    g.h = positive_at(j, "h", where, 1.0 / 64);
    g.grid_radius = positive_at(j, "grid_radius", where, 4.0);
    g.dt = detail::number_at(j, "dt", where, 0.0);
    if (g.dt < 0.0) throw ConfigError(where + ".dt", "must be nonnegative");
    if (j.contains("quadrature")) g.quadrature = quadrature(j["quadrature"], where + ".quadrature");
    return g;
}

/// Data rule offset + amplitude S((x - center) / width) + time_slope t.
template <std::size_t Dim>
struct DataRule {
    SpaceTimeRule<Dim> rule;
    double bound = 0.0;
    double growth = 0.0;
    bool zero = false;
};

template <std::size_t Dim>
DataRule<Dim> data(const json& j, const std::string& where, double t_extent = 1.0) {
    detail::require_keys(j, where, {"shape", "amplitude", "center", "width", "offset", "time_slope"});
    const std::string shape = string_at(j, "shape", where, "zero");
    const double amp = detail::number_at(j, "amplitude", where, 1.0);
    const double width = positive_at(j, "width", where, 1.0);
    const double offset = detail::number_at(j, "offset", where, 0.0);
    const double slope = detail::number_at(j, "time_slope", where, 0.0);
    const auto center = point_at<Dim>(j, "center", where);
    std::function<double(const Point<Dim>&)> s;
    double sup = 1.0, growth = 0.0;
    if (shape == "zero") {
        s = [](const Point<Dim>&) { return 0.0; };
        sup = 0.0;
    } else if (shape == "constant") {
        s = [](const Point<Dim>&) { return 1.0; };
    } else if (shape == "bump") {
        s = [](const Point<Dim>& z) {
            const double r2 = dot(z, z);
            return r2 < 1.0 ? std::pow(1.0 - r2, 3) : 0.0;
        };
    } else if (shape == "gaussian") {
        s = [](const Point<Dim>& z) { return std::exp(-dot(z, z)); };
    } else if (shape == "holder_half") {
        // square root of the distance to the unit ball
        s = [](const Point<Dim>& z) { return std::sqrt(std::max(0.0, norm(z) - 1.0)); };
        growth = 0.5;
    } else if (shape == "smooth") {
        s = [](const Point<Dim>& z) { return cordes_datum<Dim>(z, 0.0); };
    } else if (shape == "linear") {
        s = [](const Point<Dim>& z) { return z[0]; };
        growth = 1.0;
    } else {
        throw ConfigError(where + ".shape", "unknown shape '" + shape + "'");
    }
    DataRule<Dim> d;
    d.zero = shape == "zero" && offset == 0.0 && slope == 0.0;
    d.rule = [s, amp, width, offset, slope, center](const Point<Dim>& x, double t) {
        return offset + amp * s((1.0 / width) * (x - center)) + slope * t;
    };
    d.growth = growth;
    // |S((x - c) / w)| <= (|x| + |c|)^growth / w^growth for the growing shapes
    const double spread = growth > 0 ? std::pow((1.0 + norm(center)) / width, growth) : 1.0;
    d.bound = std::abs(offset) + std::abs(amp) * sup * spread + std::abs(slope) * t_extent;
    return d;
}

template <std::size_t Dim>
DirichletProblem<Dim> problem(const json& cfg) {
    DirichletProblem<Dim> p;
    if (!cfg.contains("operator")) throw ConfigError("operator", "missing operator section");
    p.op = operator_from_json<Dim>(cfg["operator"], "operator");
    const json& j = section(cfg, "problem");
    const std::string where = "problem";
    detail::require_keys(j, where, {"g", "f", "tail", "center", "radius", "t_begin", "t_end"});
    p.center = point_at<Dim>(j, "center", where);
    p.radius = positive_at(j, "radius", where, 1.0);
    p.t_begin = detail::number_at(j, "t_begin", where, -1.0);
    p.t_end = detail::number_at(j, "t_end", where, 0.0);
    if (!(p.t_end > p.t_begin)) throw ConfigError(where + ".t_end", "must exceed t_begin");
    const double extent = std::max(std::abs(p.t_begin), std::abs(p.t_end));
    if (j.contains("g")) {
        auto g = data<Dim>(j["g"], where + ".g", extent);
        p.g = g.rule;
        p.g_bound = g.bound;
        p.g_growth = g.growth;
    }
    if (j.contains("f")) p.f = data<Dim>(j["f"], where + ".f", extent).rule;
    const std::string tail = string_at(j, "tail", where, "rule");
    if (tail == "rule") p.exterior_tail = TailKind::Rule;
    else if (tail == "zero") p.exterior_tail = TailKind::Zero;
    else throw ConfigError(where + ".tail", "expected 'rule' or 'zero'");
    try {
        p.validate();
    } catch (const ParameterError& e) {
        throw ConfigError(where, e.what());
    }
    return p;
}

inline BankGeometry bank_geometry(const json& j, const std::string& where, const GridParams& g) {
    detail::require_keys(j, where, {"sigma0", "center_extent", "r_min", "r_max", "coefficient_bound", "tail_bound"});
    BankGeometry b;
    b.h = g.h;
    b.grid_radius = g.grid_radius;
    b.sigma0 = positive_at(j, "sigma0", where, b.sigma0);
    b.center_extent = detail::number_at(j, "center_extent", where, b.center_extent);
    b.r_min = positive_at(j, "r_min", where, b.r_min);
    b.r_max = positive_at(j, "r_max", where, b.r_max);
    b.coefficient_bound = positive_at(j, "coefficient_bound", where, b.coefficient_bound);
    b.tail_bound = positive_at(j, "tail_bound", where, b.tail_bound);
    if (b.r_min > b.r_max || b.r_max > 1.0) throw ConfigError(where, "need 0 < r_min <= r_max <= 1");
    return b;
}

}  // namespace config

namespace detail {

template <std::size_t Dim>
std::vector<std::string> coordinate_header(const std::string& last) {
    std::vector<std::string> h;
    for (std::size_t d = 0; d < Dim; ++d) h.push_back("x" + std::to_string(d));
    h.push_back(last);
    return h;
}

template <std::size_t Dim>
void write_field(ArtifactWriter& out, const SolveResult<Dim>& sol, const DirichletProblem<Dim>& p) {
    const auto& u = sol.field;
    const auto& g = u.grid();
    const std::size_t last = u.time_count() - 1;
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < g.size(); ++i) {
        std::vector<double> r;
        const auto x = g.point(i);
        r.insert(r.end(), x.begin(), x.end());
        r.push_back(u.value(i, last));
        rows.push_back(std::move(r));
    }
    out.csv("final.csv", coordinate_header<Dim>("u"), rows);
    const auto idx = g.node_at(p.center);
    if (idx) {
        const std::size_t c = g.flat(*idx);
        std::vector<std::vector<double>> traj;
        for (std::size_t j = 0; j < u.time_count(); ++j) traj.push_back({u.times()[j], u.value(c, j)});
        out.csv("trajectory.csv", {"t", "u_center"}, traj);
    }
    out.json_file("field.json", {{"n", Dim}, {"h", g.h()}, {"R_grid", g.radius()}, {"dt", sol.cfl.dt},
                                 {"steps", u.time_count() - 1}, {"t_begin", u.times().front()},
                                 {"t_end", u.times().back()}, {"tail", to_string(u.tail().kind)}});
}

template <std::size_t Dim>
std::pair<double, double> data_range(const Field<Dim>& u, const std::vector<std::size_t>& interior) {
    std::vector<char> inside(u.grid().size(), 0);
    for (std::size_t i : interior) inside[i] = 1;
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t j = 0; j < u.time_count(); ++j)
        for (std::size_t i = 0; i < u.grid().size(); ++i)
            if (!inside[i] || j == 0) lo = std::min(lo, u.value(i, j)), hi = std::max(hi, u.value(i, j));
    return {lo, hi};
}

}  // namespace detail

namespace experiments {

using Runner = std::function<RunOutcome(const json&, ArtifactWriter&)>;

template <std::size_t Dim>
RunOutcome solve(const json& cfg, ArtifactWriter& out) {
    detail::require_keys(config::section(cfg, "params"), "params", {"modulus", "modulus_fit"});
    detail::require_keys(config::section(cfg, "tolerances"), "tolerances", {"maximum_principle", "min_exponent", "min_r2"});
    const auto& params = config::section(cfg, "params");
    const auto& tol = config::section(cfg, "tolerances");
    const auto p = config::problem<Dim>(cfg);
    const auto gp = config::grid(config::section(cfg, "grid"));
    const auto sol = solve_dirichlet(p, gp);
    RunOutcome r;
    r.cfl = sol.cfl.to_json();
    detail::write_field(out, sol, p);
    const bool forced = config::section(cfg, "problem").contains("f");
    if (!forced) {
        const auto [lo, hi] = detail::data_range(sol.field, sol.interior);
        const double t = config::positive_at(tol, "maximum_principle", "tolerances", 1e-12);
        double umin = INFINITY, umax = -INFINITY;
        for (std::size_t j = 0; j < sol.field.time_count(); ++j)
            for (std::size_t i : sol.interior) umin = std::min(umin, sol.field.value(i, j)), umax = std::max(umax, sol.field.value(i, j));
        r.check("maximum_principle", umin >= lo - t && umax <= hi + t,
                {{"u_min", umin}, {"u_max", umax}, {"data_min", lo}, {"data_max", hi}});
    }
    if (config::flag_at(params, "modulus", "params", false)) {
        const auto m = measure_boundary_modulus(sol.field, p.center, p.radius);
        std::vector<std::vector<double>> rows;
        for (std::size_t k = 0; k < m.knots().size(); ++k) rows.push_back({m.knots()[k], m.values()[k]});
        out.csv("modulus.csv", {"d", "rho"}, rows);
        const auto range = config::numbers_at(params, "modulus_fit", "params", {gp.h, 0.5});
        if (range.size() != 2) throw ConfigError("params.modulus_fit", "expected [d_lo, d_hi]");
        const auto fit = fit_modulus_exponent(m, range[0], range[1]);
        const double min_exp = config::positive_at(tol, "min_exponent", "tolerances", 0.1);
        const double min_r2 = config::positive_at(tol, "min_r2", "tolerances", 0.9);
        json fj = {{"exponent", fit.exponent}, {"prefactor", fit.prefactor}, {"r2", fit.r2}, {"points", fit.points}};
        out.json_file("modulus_fit.json", fj);
        r.check("boundary_exponent", fit.exponent >= min_exp && fit.r2 >= min_r2, fj);
    }
    return r;
}

template <std::size_t Dim>
RunOutcome barrier(const json& cfg, ArtifactWriter& out) {
    const auto& params = config::section(cfg, "params");
    detail::require_keys(params, "params", {"sigma0", "lambda", "c", "c_t", "lo", "hi", "per_axis", "bump", "bump_sigma"});
    detail::require_keys(config::section(cfg, "tolerances"), "tolerances", {"residual", "bump_residual"});
    const auto& tol = config::section(cfg, "tolerances");
    const auto gp = config::grid(config::section(cfg, "grid"));
    BarrierCheckOptions o;
    o.h = gp.h;
    o.grid_radius = gp.grid_radius;
    o.lambda = config::positive_at(params, "lambda", "params", 1.0);
    o.tol = config::positive_at(tol, "residual", "tolerances", 1e-9);
    if (config::section(cfg, "grid").contains("quadrature")) o.quadrature = gp.quadrature;
    const double sigma0 = config::positive_at(params, "sigma0", "params", 0.5);
    RunOutcome r;
    json report;
    if (params.contains("c") || params.contains("c_t")) {
        const auto cand = lateral_candidate<Dim>(config::positive_at(params, "c", "params", 1.0),
                                                 config::positive_at(params, "c_t", "params", 0.1), sigma0);
        const auto rep = verify_lateral_barrier(cand, sigma0, o);
        report["lateral"] = {{"params", cand.params}, {"kappa", cand.kappa}, {"report", rep.to_json()}};
        r.check("lateral_barrier", rep.pass, rep.to_json());
    } else {
        const auto res = search_lateral_barrier<Dim>(sigma0, o, config::positive_at(params, "lo", "params", 0.1),
                                                     config::positive_at(params, "hi", "params", 10.0),
                                                     static_cast<int>(config::positive_at(params, "per_axis", "params", 9)));
        report["lateral"] = res.to_json();
        r.check("lateral_barrier_found", res.found, res.to_json());
    }
    if (config::flag_at(params, "bump", "params", true)) {
        const double s = config::positive_at(params, "bump_sigma", "params", 1.0);
        const auto bb = bump_barrier<Dim>(standard_bump<Dim>, s, o.lambda, gp.h, gp.grid_radius,
                                          config::positive_at(tol, "bump_residual", "tolerances", 1e-3));
        json bj = {{"slope", bb.slope}, {"min_residual", bb.min_residual}, {"residual_ok", bb.residual_ok}, {"sigma", s}};
        report["bump"] = bj;
        r.check("bump_barrier", bb.residual_ok, bj);
    }
    out.json_file("barrier.json", report);
    return r;
}

template <std::size_t Dim>
RunOutcome holder(const json& cfg, ArtifactWriter& out) {
    const auto& params = config::section(cfg, "params");
    detail::require_keys(params, "params", {"alpha", "k_min", "k_max"});
    detail::require_keys(config::section(cfg, "tolerances"), "tolerances", {"min_exponent"});
    const auto p = config::problem<Dim>(cfg);
    const auto gp = config::grid(config::section(cfg, "grid"));
    const auto sol = solve_dirichlet(p, gp);
    RunOutcome r;
    r.cfl = sol.cfl.to_json();
    const auto fit = fit_holder_exponent(sol.field, p.center, p.t_end, p.op.sigma,
                                         static_cast<int>(detail::number_at(params, "k_min", "params", 1)),
                                         static_cast<int>(detail::number_at(params, "k_max", "params", 30)));
    const double alpha = config::positive_at(params, "alpha", "params", 0.5);
    Region<Dim> reg{p.center, 0.5 * p.radius, p.t_end - 0.25 * (p.t_end - p.t_begin), p.t_end};
    const double semi = parabolic_holder_seminorm(sol.field, reg, alpha, p.op.sigma);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < fit.radii.size(); ++i) rows.push_back({fit.radii[i], fit.oscillations[i]});
    out.csv("oscillation.csv", {"radius", "oscillation"}, rows);
    json rep = fit.to_json();
    rep["seminorm"] = {{"alpha", alpha}, {"value", semi}};
    out.json_file("holder.json", rep);
    const double min_exp = config::positive_at(config::section(cfg, "tolerances"), "min_exponent", "tolerances", 0.05);
    r.check("holder_exponent", fit.exponent >= min_exp, {{"exponent", fit.exponent}, {"min", min_exp}});
    return r;
}

template <std::size_t Dim>
RunOutcome flatness(const json& cfg, ArtifactWriter& out) {
    const auto& params = config::section(cfg, "params");
    detail::require_keys(params, "params", {"lambda", "alpha", "k_max"});
    detail::require_keys(config::section(cfg, "tolerances"), "tolerances", {"max_decay_ratio"});
    const auto& tol = config::section(cfg, "tolerances");
    const auto p = config::problem<Dim>(cfg);
    const auto gp = config::grid(config::section(cfg, "grid"));
    const auto sol = solve_dirichlet(p, gp);
    RunOutcome r;
    r.cfl = sol.cfl.to_json();
    std::optional<double> alpha;
    if (params.contains("alpha")) alpha = detail::number_at(params, "alpha", "params");
    const auto rep = flatness_sequence(sol.field, p.center, p.t_end, p.op.sigma,
                                       detail::number_at(params, "lambda", "params", 0.5), alpha,
                                       static_cast<int>(detail::number_at(params, "k_max", "params", 8)));
    std::vector<std::vector<double>> rows;
    for (const auto& rec : rep.records)
        rows.push_back({static_cast<double>(rec.k), rec.radius, rec.a, rec.b[0], rec.sup_error, rec.target,
                        rec.a_increment, rec.b_increment});
    out.csv("flatness.csv", {"k", "radius", "a", "b0", "sup_error", "target", "a_increment", "b_increment"}, rows);
    out.json_file("flatness.json", rep.to_json());
    bool nonneg = true;
    for (const auto& rec : rep.records) nonneg &= rec.sup_error >= 0.0;
    r.check("sup_errors_nonnegative", nonneg);
    if (tol.contains("max_decay_ratio")) {
        const double m = config::positive_at(tol, "max_decay_ratio", "tolerances", 1.0);
        r.check("decay_ratio", rep.decay_ratio > 0.0 && rep.decay_ratio <= m, {{"decay_ratio", rep.decay_ratio}, {"max", m}});
    }
    return r;
}

template <std::size_t Dim>
RunOutcome time_reg(const json& cfg, ArtifactWriter& out) {
    const auto& params = config::section(cfg, "params");
    detail::require_keys(params, "params", {"c0"});
    detail::require_keys(config::section(cfg, "tolerances"), "tolerances", {"min_quotient_exponent"});
    const auto p = config::problem<Dim>(cfg);
    const auto gp = config::grid(config::section(cfg, "grid"));
    std::optional<double> c0;
    if (params.contains("c0")) c0 = detail::number_at(params, "c0", "params");
    SolveResult<Dim> sol;
    const auto rep = time_regularity_experiment(p, gp, c0, &sol);
    RunOutcome r;
    r.cfl = sol.cfl.to_json();
    r.hypothesis_ok = rep.hypothesis_ok;
    detail::write_field(out, sol, p);
    out.json_file("time_reg.json", rep.to_json());
    r.check("initial_bound", rep.initial_bound_ok, {{"worst_ratio", rep.worst_initial_ratio}, {"M", rep.M}});
    r.check("shift_bound", rep.shift_bound_ok, {{"worst_ratio", rep.worst_shift_ratio}});
    const double min_q = config::positive_at(config::section(cfg, "tolerances"), "min_quotient_exponent", "tolerances", 0.05);
    const double q = rep.quotient_fit ? rep.quotient_fit->exponent : -1.0;
    r.check("quotient_holder", q > min_q, {{"exponent", q}, {"min", min_q}});
    return r;
}

template <std::size_t Dim>
RunOutcome counterexample(const json& cfg, ArtifactWriter& out) {
    const auto& params = config::section(cfg, "params");
    detail::require_keys(params, "params", {"sigma", "c1", "ring"});
    detail::require_keys(config::section(cfg, "tolerances"), "tolerances", {"pre_jump", "slope_fraction"});
    const auto& tol = config::section(cfg, "tolerances");
    const auto gp = config::grid(config::section(cfg, "grid"));
    const double sigma = config::positive_at(params, "sigma", "params", 1.0);
    const bool ring = config::flag_at(params, "ring", "params", true);
    const auto rep = counterexample_experiment<Dim>(sigma, detail::number_at(params, "c1", "params", 1.0), gp, ring);
    RunOutcome r;
    std::vector<std::vector<double>> rows;
    for (std::size_t j = 0; j < rep.trajectory_t.size(); ++j) rows.push_back({rep.trajectory_t[j], rep.trajectory_u[j]});
    out.csv("trajectory.csv", {"t", "u_origin"}, rows);
    out.json_file("jump.json", rep.to_json());
    r.cfl = {{"dt", rep.dt}};
    r.discontinuous_data = ring;
    const double pre = config::positive_at(tol, "pre_jump", "tolerances", 1e-8);
    r.check("pre_jump_zero", rep.pre_jump_sup <= pre, {{"sup", rep.pre_jump_sup}, {"tol", pre}});
    if (ring) {
        const double frac = config::positive_at(tol, "slope_fraction", "tolerances", 0.5);
        r.check("jump_detected", rep.jump_detected, {{"post", rep.post_jump_slope}, {"pre", rep.pre_jump_slope}});
        r.check("slope_vs_prediction", rep.post_jump_slope >= frac * rep.predicted_slope,
                {{"post", rep.post_jump_slope}, {"predicted", rep.predicted_slope}, {"fraction", frac}});
    } else {
        r.check("no_jump_without_ring", !rep.jump_detected, {{"post", rep.post_jump_slope}});
    }
    return r;
}

template <std::size_t Dim>
TestBank<Dim> bank_from(const json& params, const GridParams& gp) {
    const json& b = params.contains("bank") ? params["bank"] : json::object();
    detail::require_keys(b, "params.bank", {"seed", "size", "geometry"});
    const auto geo = config::bank_geometry(config::section(b, "geometry"), "params.bank.geometry", gp);
    const auto size = static_cast<std::size_t>(config::positive_at(b, "size", "params.bank", 200));
    const auto seed = static_cast<std::uint64_t>(detail::number_at(b, "seed", "params.bank", 1));
    return generate_test_bank<Dim>(seed, size, geo);
}

inline void write_trace(ArtifactWriter& out, const std::string& name, const NormEstimate& e) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < e.trace.size(); ++i) rows.push_back({static_cast<double>(i + 1), e.trace[i]});
    out.csv(name, {"bank_size", "estimate"}, rows);
}

template <std::size_t Dim>
RunOutcome norm(const json& cfg, ArtifactWriter& out) {
    const auto& params = config::section(cfg, "params");
    detail::require_keys(params, "params", {"bank", "reference", "t"});
    const auto gp = config::grid(config::section(cfg, "grid"));
    if (!cfg.contains("operator")) throw ConfigError("operator", "missing operator section");
    const auto op = operator_from_json<Dim>(cfg["operator"], "operator");
    const auto bank = bank_from<Dim>(params, gp);
    const double t = detail::number_at(params, "t", "params", 0.0);
    const auto est = params.contains("reference")
                         ? operator_norm(op, operator_from_json<Dim>(params["reference"], "params.reference"), bank, t, 0, gp.quadrature)
                         : operator_norm(op, bank, t, 0, gp.quadrature);
    write_trace(out, "trace.csv", est);
    out.json_file("norm.json", est.to_json());
    RunOutcome r;
    bool monotone = true;
    for (std::size_t i = 1; i < est.trace.size(); ++i) monotone &= est.trace[i] >= est.trace[i - 1];
    r.check("trace_monotone", monotone);
    r.check("no_skipped_members", est.skipped == 0, {{"skipped", est.skipped}});
    return r;
}

template <std::size_t Dim>
RunOutcome scale_norm_run(const json& cfg, ArtifactWriter& out) {
    const auto& params = config::section(cfg, "params");
    detail::require_keys(params, "params", {"bank", "reference", "betas"});
    const auto gp = config::grid(config::section(cfg, "grid"));
    if (!cfg.contains("operator")) throw ConfigError("operator", "missing operator section");
    const auto op = operator_from_json<Dim>(cfg["operator"], "operator");
    const auto bank = bank_from<Dim>(params, gp);
    const auto betas = config::numbers_at(params, "betas", "params", default_betas());
    for (double b : betas)
        if (!(b > 0.0 && b <= 1.0)) throw ConfigError("params.betas", "each beta must lie in (0, 1]");
    const auto est = params.contains("reference")
                         ? scale_norm(op, operator_from_json<Dim>(params["reference"], "params.reference"), bank, betas)
                         : scale_norm(op, bank, betas);
    out.json_file("scale_norm.json", est.to_json());
    RunOutcome r;
    double mx = 0.0;
    for (const auto& e : est.per_beta) mx = std::max(mx, e.value);
    r.check("sup_over_betas", est.value == mx);
    return r;
}

template <std::size_t Dim>
RunOutcome weak_conv(const json& cfg, ArtifactWriter& out) {
    const auto& params = config::section(cfg, "params");
    detail::require_keys(params, "params", {"bank", "sequence"});
    const auto gp = config::grid(config::section(cfg, "grid"));
    if (!params.contains("sequence") || !params["sequence"].is_array() || params["sequence"].empty())
        throw ConfigError("params.sequence", "expected a nonempty array of operators");
    std::vector<OperatorSpec<Dim>> seq;
    for (std::size_t i = 0; i < params["sequence"].size(); ++i)
        seq.push_back(operator_from_json<Dim>(params["sequence"][i], "params.sequence[" + std::to_string(i) + "]"));
    const auto bank = bank_from<Dim>(params, gp);
    const auto rep = weak_convergence_test(seq, bank, 9, gp.quadrature);
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < rep.deviations.size(); ++k)
        for (std::size_t m = 0; m < bank.size(); ++m) rows.push_back({static_cast<double>(k), static_cast<double>(m), rep.deviations[k][m]});
    out.csv("deviations.csv", {"k", "member", "deviation"}, rows);
    out.json_file("weak_conv.json", {{"worst", rep.worst}});
    RunOutcome r;
    r.check("limit_has_zero_deviation", rep.worst.back() == 0.0);
    return r;
}

template <std::size_t Dim>
RunOutcome cordes(const json& cfg, ArtifactWriter& out) {
    const auto& params = config::section(cfg, "params");
    detail::require_keys(params, "params", {"sigma", "etas", "base", "eta_max", "flat_eta", "bank", "flat_k_max"});
    detail::require_keys(config::section(cfg, "tolerances"), "tolerances", {"slope", "decay_factor"});
    const auto& tol = config::section(cfg, "tolerances");
    const auto gp = config::grid(config::section(cfg, "grid"));
    CordesConfig base;
    base.sigma = config::positive_at(params, "sigma", "params", 1.5);
    base.base = config::positive_at(params, "base", "params", 0.25);
    base.eta_max = config::positive_at(params, "eta_max", "params", 0.25);
    base.grid = gp;
    base.flat_k_max = static_cast<int>(config::positive_at(params, "flat_k_max", "params", 8));
    const auto etas = config::numbers_at(params, "etas", "params", {0.01, 0.02, 0.04, 0.08});
    if (etas.size() < 2) throw ConfigError("params.etas", "need at least two values");
    const double flat_eta = detail::number_at(params, "flat_eta", "params", 0.05);
    RunOutcome r;

    const auto bank = bank_from<Dim>(params, gp);
    const double lambda = cordes_lambda(*std::max_element(etas.begin(), etas.end()), base.base, base.sigma, Dim);
    const auto ref = OperatorSpec<Dim>::linear(reference_kernel<Dim>(base.sigma, lambda, base.base));
    std::vector<double> lx, ly;
    std::vector<std::vector<double>> rows;
    json sn = json::array();
    for (double eta : etas) {
        const auto est = scale_norm(OperatorSpec<Dim>::linear(cordes_kernel<Dim>(base.sigma, lambda, eta, base.base)), ref, bank);
        rows.push_back({eta, est.value});
        sn.push_back({{"eta", eta}, {"scale_norm", est.to_json()}});
        lx.push_back(std::log(eta));
        ly.push_back(std::log(est.value));
        r.hypothesis_ok &= eta <= base.eta_max;
    }
    out.csv("scale_norm.csv", {"eta", "scale_norm"}, rows);
    const auto fit = numerics::linear_fit(lx, ly);
    const double slope_tol = config::positive_at(tol, "slope", "tolerances", 0.15);
    r.check("scale_norm_linear_in_eta", std::abs(fit[1] - 1.0) <= slope_tol,
            {{"slope", fit[1]}, {"fitted_constant", std::exp(fit[0])}, {"tol", slope_tol}});

    CordesConfig c0 = base;
    c0.eta = 0.0;
    CordesConfig c1 = base;
    c1.eta = flat_eta;
    const auto b0 = cordes_nirenberg_experiment<Dim>(c0);
    const auto b1 = cordes_nirenberg_experiment<Dim>(c1);
    r.hypothesis_ok &= b0.hypothesis_ok && b1.hypothesis_ok;
    r.cfl = b1.cfl.to_json();
    const double factor = config::positive_at(tol, "decay_factor", "tolerances", 2.0);
    const double ratio = b0.flatness.decay_ratio > 0 ? b1.flatness.decay_ratio / b0.flatness.decay_ratio : INFINITY;
    r.check("flatness_decay_persists", ratio <= factor && ratio >= 1.0 / factor,
            {{"baseline", b0.flatness.decay_ratio}, {"perturbed", b1.flatness.decay_ratio}, {"ratio", ratio}});
    out.json_file("cordes.json", {{"scale_norms", sn}, {"slope", fit[1]}, {"r2", fit[2]}, {"baseline", b0.to_json()},
                                  {"perturbed", b1.to_json()}});
    return r;
}

}  // namespace experiments

struct ExperimentInfo {
    std::string id;
    std::string description;
    std::function<RunOutcome(const json&, ArtifactWriter&, std::size_t)> run;
};

namespace detail {

#define NLPAR_DISPATCH(fn)                                                                              \
    [](const json& cfg, ArtifactWriter& out, std::size_t dim) -> RunOutcome {                           \
        if (dim == 1) return experiments::fn<1>(cfg, out);                                              \
        if (dim == 2) return experiments::fn<2>(cfg, out);                                              \
        throw ConfigError("dim", "only 1 and 2 are supported");                                         \
    }

}  // namespace detail

inline const std::vector<ExperimentInfo>& registry() {
    static const std::vector<ExperimentInfo> r = {
        {"solve", "Dirichlet solve; optional empirical boundary modulus", NLPAR_DISPATCH(solve)},
        {"barrier", "lateral barrier search or verification, bump barrier residual", NLPAR_DISPATCH(barrier)},
        {"holder", "dyadic oscillation fit and parabolic Holder seminorm of a solution", NLPAR_DISPATCH(holder)},
        {"flatness", "affine flatness records over shrinking cylinders", NLPAR_DISPATCH(flatness)},
        {"time-reg", "Lipschitz-in-time propagation and difference quotient regularity", NLPAR_DISPATCH(time_reg)},
        {"counterexample", "time derivative jump driven by a ring datum switched on at t = -1/2",
         NLPAR_DISPATCH(counterexample)},
        {"norm", "operator norm over a test-function bank", NLPAR_DISPATCH(norm)},
        {"scale-norm", "sup over rescalings of the operator norm", NLPAR_DISPATCH(scale_norm_run)},
        {"weak-conv", "uniform deviations of an operator sequence from its last element", NLPAR_DISPATCH(weak_conv)},
        {"cordes", "coefficient-gap scale norms and flatness persistence", NLPAR_DISPATCH(cordes)},
    };
    return r;
}

#undef NLPAR_DISPATCH

inline const ExperimentInfo* find_experiment(const std::string& id) {
    for (const auto& e : registry())
        if (e.id == id) return &e;
    return nullptr;
}

struct RunResult {
    int exit_code = 0;
    json manifest;
    std::string message;
};

/// Reads a config file. Parse failures are reported with line and column.
inline json read_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path, "cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') ++line, col = 1;
            else ++col;
        }
        throw ConfigError(path + ":" + std::to_string(line) + ":" + std::to_string(col), "malformed JSON");
    }
}

/// Runs one experiment. Exit codes: 0 pass, 1 failed check (or hypothesis violation when strict), 2 bad config.
inline RunResult run_experiment(const json& cfg, const std::string& out_override, bool strict,
                                const std::string& expected_id = "") {
    RunResult res;
    const auto start = std::chrono::steady_clock::now();
    std::string id;
    try {
        detail::require_keys(cfg, "config",
                             {"experiment", "dim", "grid", "operator", "problem", "params", "tolerances", "seed",
                              "output_dir", "description"});
        id = config::string_at(cfg, "experiment", "config", expected_id);
        if (id.empty()) throw ConfigError("experiment", "missing experiment id");
        if (!expected_id.empty() && id != expected_id)
            throw ConfigError("experiment", "config is for '" + id + "', not '" + expected_id + "'");
        const auto* info = find_experiment(id);
        if (!info) throw ConfigError("experiment", "unknown experiment '" + id + "'");
        const auto dim = static_cast<std::size_t>(detail::number_at(cfg, "dim", "config", 1));
        std::string dir = out_override;
        if (dir.empty())
            if (const char* env = std::getenv("NLPAR_OUT_DIR")) dir = std::string(env) + "/" + id;
        if (dir.empty()) dir = config::string_at(cfg, "output_dir", "config", "out/" + id);
        ArtifactWriter out(dir);
        const auto outcome = info->run(cfg, out, dim);
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        json checks = json::array();
        for (const auto& c : outcome.checks) checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
        const bool pass = outcome.pass();
        auto files = out.files();
        files.push_back("manifest.json");
        res.manifest = {{"experiment", id},
                        {"config_hash", config_hash(cfg)},
                        {"code_version", code_version},
                        {"wall_time_s", wall},
                        {"cfl", outcome.cfl},
                        {"checks", checks},
                        {"hypothesis_ok", outcome.hypothesis_ok},
                        {"discontinuous_data", outcome.discontinuous_data},
                        {"strict", strict},
                        {"artifacts", files},
                        {"pass", pass}};
        out.json_file("manifest.json", res.manifest);
        res.exit_code = (!pass || (strict && !outcome.hypothesis_ok)) ? 1 : 0;
        res.message = id + (pass ? " passed" : " failed") + (outcome.hypothesis_ok ? "" : " (hypothesis audit flagged)");
    } catch (const ConfigError& e) {
        res.exit_code = 2;
        res.message = std::string("config error at ") + e.what();
    } catch (const ParameterError& e) {
        res.exit_code = 2;
        res.message = std::string("invalid parameter: ") + e.what();
    } catch (const PreconditionError& e) {
        res.exit_code = 2;
        res.message = std::string("precondition violated: ") + e.what();
    } catch (const CflViolation& e) {
        res.exit_code = 2;
        res.message = std::string("unstable time step: ") + e.what();
    } catch (const json::exception& e) {
        res.exit_code = 2;
        res.message = std::string("config error: ") + e.what();
    } catch (const std::runtime_error& e) {
        // numerical failures (divergent integrals, too few scales for a fit) count as failed assertions
        res.exit_code = 1;
        res.message = (id.empty() ? std::string("run") : id) + " aborted: " + e.what();
    }
    return res;
}

}  // namespace nlpar
