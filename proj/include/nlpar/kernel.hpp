#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <type_traits>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "field.hpp"
#include "geometry.hpp"
#include "numerics.hpp"

namespace nlpar {

using json = nlohmann::json;

template <std::size_t Dim>
using CoefficientRule = std::function<double(const Point<Dim>& x, double t, const Point<Dim>& y)>;

/// K(x,t;y) = (2 - sigma) a(x,t,y) / |y|^{n+sigma}.
template <std::size_t Dim>
struct KernelSpec {
    double sigma = 1.0;
    double lambda = 1.0;
    CoefficientRule<Dim> rule;
    std::optional<double> constant;  // set when a does not depend on (x,t,y)
    double scale = 1.0;              // accumulated parabolic rescaling factor
    bool space_invariant = true;
    bool time_invariant = true;
    json descriptor = json::object();

    static constexpr std::size_t dimension = Dim;

    bool is_constant() const { return constant.has_value(); }

    /// a evaluated in rescaled variables: a(s x, s^sigma t, s y).
    double coefficient(const Point<Dim>& x, double t, const Point<Dim>& y) const {
        if (constant) return *constant;
        if (scale == 1.0) return rule(x, t, y);
        return rule(scale * x, std::pow(scale, sigma) * t, scale * y);
    }

    double prefactor() const { return 2.0 - sigma; }

    double kernel(const Point<Dim>& x, double t, const Point<Dim>& y) const {
        return prefactor() * coefficient(x, t, y) / std::pow(norm(y), Dim + sigma);
    }
};

namespace detail {

inline void check_order(double sigma, double lambda) {
    if (!(sigma > 0.0 && sigma < 2.0)) throw ParameterError("sigma must lie in (0, 2)");
    if (!(lambda >= 1.0) || !std::isfinite(lambda)) throw ParameterError("Lambda must be >= 1");
}

}  // namespace detail

/// Constant-coefficient kernel a = scale. scale = 1 gives the (2 - sigma)-normalized fractional Laplacian.
template <std::size_t Dim>
KernelSpec<Dim> make_fractional_kernel(double sigma, double scale = 1.0, double lambda = 1.0) {
    detail::check_order(sigma, lambda);
    if (!(scale >= 1.0 / lambda * (1.0 - 1e-15) && scale <= lambda * (1.0 + 1e-15)))
        throw ParameterError("kernel scale must lie in [1/Lambda, Lambda]");
    KernelSpec<Dim> k;
    k.sigma = sigma;
    k.lambda = lambda;
    k.constant = scale;
    k.rule = [scale](const Point<Dim>&, double, const Point<Dim>&) { return scale; };
    k.descriptor = {{"type", "constant"}, {"value", scale}};
    return k;
}

/// Kernel with an arbitrary coefficient rule. Invariance flags describe the rule's dependence.
template <std::size_t Dim>
KernelSpec<Dim> make_variable_kernel(double sigma, double lambda, CoefficientRule<Dim> rule, bool space_invariant,
                                     bool time_invariant, json descriptor = json::object()) {
    detail::check_order(sigma, lambda);
    KernelSpec<Dim> k;
    k.sigma = sigma;
    k.lambda = lambda;
    k.rule = std::move(rule);
    k.space_invariant = space_invariant;
    k.time_invariant = time_invariant;
    k.descriptor = std::move(descriptor);
    return k;
}

/// Lattices in x, t, y over which class membership is sampled.
template <std::size_t Dim>
struct SamplePlan {
    std::vector<Point<Dim>> xs;
    std::vector<double> ts;
    std::vector<Point<Dim>> ys;
    double fd_step = 0.0;        // gradient difference step; defaults to the y-lattice spacing
    double fd_slack_factor = 10.0;

    /// Uniform lattices: xs on [-x_extent, x_extent], ts on [-1, 0], ys on [-y_extent, y_extent] minus {0}.
    static SamplePlan uniform(int count, double x_extent = 1.0, double y_extent = 2.0, int time_count = 10) {
        SamplePlan p;
        auto axis = [](int m, double lo, double hi) {
            std::vector<double> v;
            for (int i = 0; i < m; ++i) v.push_back(m == 1 ? lo : lo + (hi - lo) * i / (m - 1));
            return v;
        };
        const auto xa = axis(count, -x_extent, x_extent);
        // even count keeps 0 off the y lattice
        const int ycount = count % 2 == 0 ? count : count + 1;
        const auto ya = axis(ycount, -y_extent, y_extent);
        if constexpr (Dim == 1) {
            for (double v : xa) p.xs.push_back({v});
            for (double v : ya) p.ys.push_back({v});
        } else {
            for (double a : xa)
                for (double b : xa) p.xs.push_back({a, b});
            for (double a : ya)
                for (double b : ya) p.ys.push_back({a, b});
        }
        p.ts = axis(time_count, -1.0, 0.0);
        p.fd_step = 2.0 * y_extent / (ycount - 1);
        return p;
    }

    std::size_t size() const { return xs.size() * ts.size() * ys.size(); }
};

struct MembershipReport {
    std::string kind;
    bool pass = false;
    double worst_violation = 0.0;
    double coefficient_min = 0.0;
    double coefficient_max = 0.0;
    double evenness_defect = 0.0;
    double gradient_ratio_sup = 0.0;  // sup |DK(y)| |y|^{n+sigma+1}, L1 only
    std::size_t lattice_size = 0;

    json to_json() const {
        json j = {{"kind", kind},
                  {"pass", pass},
                  {"worst_violation", worst_violation},
                  {"lattice", lattice_size},
                  {"coefficient_min", coefficient_min},
                  {"coefficient_max", coefficient_max},
                  {"evenness_defect", evenness_defect}};
        if (kind == "L1") j["gradient_ratio_sup"] = gradient_ratio_sup;
        return j;
    }
};

template <std::size_t Dim>
MembershipReport check_L0_membership(const KernelSpec<Dim>& k, const SamplePlan<Dim>& plan) {
    MembershipReport r;
    r.kind = "L0";
    r.coefficient_min = INFINITY;
    r.coefficient_max = -INFINITY;
    const double lo = 1.0 / k.lambda, hi = k.lambda;
    double worst = 0.0;
    for (const auto& x : plan.xs)
        for (double t : plan.ts)
            for (const auto& y : plan.ys) {
                if (norm(y) == 0.0) continue;
                const double a = k.coefficient(x, t, y);
                const double am = k.coefficient(x, t, -y);
                ++r.lattice_size;
                if (!std::isfinite(a)) {
                    worst = INFINITY;
                    continue;
                }
                r.coefficient_min = std::min(r.coefficient_min, a);
                r.coefficient_max = std::max(r.coefficient_max, a);
                worst = std::max({worst, a - hi, lo - a});
                r.evenness_defect = std::max(r.evenness_defect, std::abs(a - am));
            }
    r.worst_violation = std::max(worst, r.evenness_defect);
    r.pass = r.lattice_size > 0 && r.worst_violation <= 0.0;
    return r;
}

/// L1 adds |DK(y)| <= Lambda |y|^{-(n+sigma+1)} for translation-invariant kernels. The gradient is
/// taken by central differences with step fd_step / 1000 (at most 1e-4 |y|); the bound is relaxed by the relative
/// slack fd_slack_factor * (difference step).
template <std::size_t Dim>
MembershipReport check_L1_membership(const KernelSpec<Dim>& k, const SamplePlan<Dim>& plan) {
    if (!(k.space_invariant && k.time_invariant))
        throw PreconditionError("L1 membership is defined for translation-invariant kernels only");
    MembershipReport base = check_L0_membership(k, plan);
    MembershipReport r = base;
    r.kind = "L1";
    const double step = plan.fd_step > 0.0 ? plan.fd_step * 1e-3 : 1e-6;
    const Point<Dim> x0{};
    const double t0 = plan.ts.empty() ? 0.0 : plan.ts.front();
    double grad_worst = 0.0;
    for (const auto& y : plan.ys) {
        const double ry = norm(y);
        if (ry == 0.0) continue;
        const double hstep = std::min(step, 1e-4 * ry);  // keeps the truncation error uniform in |y|
        double g2 = 0.0;
        for (std::size_t d = 0; d < Dim; ++d) {
            Point<Dim> e{};
            e[d] = hstep;
            const double diff = (k.kernel(x0, t0, y + e) - k.kernel(x0, t0, y - e)) / (2.0 * hstep);
            g2 += diff * diff;
        }
        const double ratio = std::sqrt(g2) * std::pow(ry, Dim + k.sigma + 1.0);
        if (!std::isfinite(ratio)) {
            grad_worst = INFINITY;
            continue;
        }
        r.gradient_ratio_sup = std::max(r.gradient_ratio_sup, ratio);
        grad_worst = std::max(grad_worst, ratio - k.lambda * (1.0 + plan.fd_slack_factor * hstep));
    }
    r.worst_violation = std::max(base.worst_violation, grad_worst);
    r.pass = base.pass && grad_worst <= 0.0;
    return r;
}

/// omega(y) = 1 / (1 + |y|^{n+sigma0}).
template <std::size_t Dim>
struct WeightOmega {
    double sigma0 = 1.0;

    explicit WeightOmega(double s0 = 1.0) : sigma0(s0) {
        if (!(s0 > 0.0 && s0 < 2.0)) throw ParameterError("sigma0 must lie in (0, 2)");
    }

    double exponent() const { return Dim + sigma0; }
    double operator()(const Point<Dim>& y) const { return 1.0 / (1.0 + std::pow(norm(y), exponent())); }
    double radial(double r) const { return 1.0 / (1.0 + std::pow(r, exponent())); }
};

namespace detail {

/// Angular measure of the circle of radius r lying outside the square [-a, a]^2.
inline double outside_square_angle(double r, double a) {
    if (r <= a) return 0.0;
    if (r >= a * std::sqrt(2.0)) return 2.0 * M_PI;
    return 8.0 * std::acos(a / r);
}

}  // namespace detail

/// ||u(., t)||_{L1(omega)}: trapezoid over the grid plus the integral of the tail envelope outside it.
template <std::size_t Dim>
double omega_l1_norm(const Field<Dim>& u, double t, const WeightOmega<Dim>& omega) {
    const auto j = u.time_index(t);
    const auto& g = u.grid();
    const auto& vals = u.values(j);
    double grid_part = 0.0;
    const long n = g.per_dim();
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto idx = g.index(i);
        double w = 1.0;
        for (std::size_t d = 0; d < Dim; ++d)
            if (idx[d] == 0 || idx[d] == n - 1) w *= 0.5;
        grid_part += w * std::abs(vals[i]) * omega(g.point(idx));
    }
    grid_part *= std::pow(g.h(), Dim);

    const auto& tail = u.tail();
    if (tail.vanishes()) return grid_part;
    if (tail.growth >= omega.sigma0)
        throw DivergenceError("tail growth exponent must be below sigma0 for L1(omega) integrability");
    const double R = g.radius();
    auto radial = [&](double r) {
        const double env = tail.bound * std::max(std::pow(r, tail.growth), 1.0);
        const double ang = Dim == 1 ? 2.0 : detail::outside_square_angle(r, R);
        return env * ang * std::pow(r, Dim - 1) * omega.radial(r);
    };
    double tail_part = 0.0;
    const double decay = omega.sigma0 - tail.growth;
    if constexpr (Dim == 1) {
        tail_part = numerics::integrate_tail(radial, R, decay);
    } else {
        const double corner = R * std::sqrt(2.0);
        tail_part = numerics::integrate(radial, R, corner, 64, 16) + numerics::integrate_tail(radial, corner, decay);
    }
    return grid_part + tail_part;
}

/// max over the probe lattice of omega(y - x) / omega(y).
template <std::size_t Dim>
double shift_ratio_bound(const WeightOmega<Dim>& omega, const Point<Dim>& x,
                         const std::type_identity_t<std::vector<Point<Dim>>>& probe) {
    double best = 0.0;
    for (const auto& y : probe) best = std::max(best, omega(y - x) / omega(y));
    return best;
}

enum class OperatorKind { Linear, PucciPlus, PucciMinus, InfSup };

inline const char* to_string(OperatorKind k) {
    switch (k) {
        case OperatorKind::Linear: return "linear";
        case OperatorKind::PucciPlus: return "pucci_plus";
        case OperatorKind::PucciMinus: return "pucci_minus";
        case OperatorKind::InfSup: return "inf_sup";
    }
    return "?";
}

/// I u = inf over rows of sup over columns of L_K u. Pucci kinds carry no kernels.
template <std::size_t Dim>
struct OperatorSpec {
    OperatorKind kind = OperatorKind::PucciPlus;
    double sigma = 1.0;
    double lambda = 1.0;
    std::vector<std::vector<KernelSpec<Dim>>> family;

    static OperatorSpec linear(KernelSpec<Dim> k) {
        OperatorSpec s;
        s.kind = OperatorKind::Linear;
        s.sigma = k.sigma;
        s.lambda = k.lambda;
        s.family = {{std::move(k)}};
        return s;
    }
    static OperatorSpec pucci_plus(double sigma, double lambda) {
        detail::check_order(sigma, lambda);
        OperatorSpec s;
        s.kind = OperatorKind::PucciPlus;
        s.sigma = sigma;
        s.lambda = lambda;
        return s;
    }
    static OperatorSpec pucci_minus(double sigma, double lambda) {
        auto s = pucci_plus(sigma, lambda);
        s.kind = OperatorKind::PucciMinus;
        return s;
    }
    static OperatorSpec inf_sup(std::vector<std::vector<KernelSpec<Dim>>> fam) {
        OperatorSpec s;
        s.kind = OperatorKind::InfSup;
        s.family = std::move(fam);
        s.validate();
        s.sigma = s.family[0][0].sigma;
        s.lambda = 1.0;
        for (const auto& row : s.family)
            for (const auto& k : row) s.lambda = std::max(s.lambda, k.lambda);
        return s;
    }

    bool is_pucci() const { return kind == OperatorKind::PucciPlus || kind == OperatorKind::PucciMinus; }

    void validate() const {
        detail::check_order(sigma, lambda);
        if (is_pucci()) return;
        if (family.empty()) throw ParameterError("operator family must be nonempty");
        for (const auto& row : family) {
            if (row.empty()) throw ParameterError("operator family rows must be nonempty");
            for (const auto& k : row)
                if (k.sigma != family[0][0].sigma) throw ParameterError("all kernels of an operator share sigma");
        }
    }

    bool translation_invariant_in_space() const {
        if (is_pucci()) return true;
        for (const auto& row : family)
            for (const auto& k : row)
                if (!k.space_invariant) return false;
        return true;
    }

    bool translation_invariant_in_time() const {
        if (is_pucci()) return true;
        for (const auto& row : family)
            for (const auto& k : row)
                if (!k.time_invariant) return false;
        return true;
    }
};

/// Standard constant of (-Delta)^s: 4^s Gamma(n/2 + s) / (pi^{n/2} |Gamma(-s)|).
inline double fractional_laplacian_constant(int n, double s) {
    return std::pow(4.0, s) * std::tgamma(0.5 * n + s) / (std::pow(M_PI, 0.5 * n) * std::abs(std::tgamma(-s)));
}

/// Factor c such that the a = 1 operator equals -c (-Delta)^{sigma/2}.
inline double normalization_ratio(int n, double sigma) {
    return 2.0 * (2.0 - sigma) / fractional_laplacian_constant(n, 0.5 * sigma);
}

inline json normalization_metadata(int n, double sigma) {
    return {{"kernel_prefactor", 2.0 - sigma},
            {"standard_constant", fractional_laplacian_constant(n, 0.5 * sigma)},
            {"operator_equals_minus_c_times_fractional_laplacian", normalization_ratio(n, sigma)}};
}

}  // namespace nlpar
