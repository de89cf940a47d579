#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "field.hpp"
#include "numerics.hpp"

namespace nlpar {

/// Nondecreasing modulus of continuity as a piecewise-linear table with d[0] = 0, rho[0] = 0.
/// An optional exact rule is used for evaluation when present; tables saturate beyond the last knot.
class Modulus {
public:
    Modulus() = default;

    Modulus(std::vector<double> d, std::vector<double> rho) : d_(std::move(d)), rho_(std::move(rho)) {
        if (d_.size() != rho_.size() || d_.empty()) throw ParameterError("modulus table sizes differ or are empty");
        if (d_[0] != 0.0) throw ParameterError("modulus table must start at d = 0");
        for (std::size_t i = 1; i < d_.size(); ++i)
            if (!(d_[i] > d_[i - 1])) throw ParameterError("modulus knots must increase");
    }

    /// Tabulates `f` on 0 plus `knots` log-spaced points in [d_max 1e-8, d_max], keeping f as the evaluation rule.
    static Modulus analytic(std::function<double(double)> f, double d_max = 1.0, int knots = 256) {
        auto grid = default_knots(d_max, knots);
        std::vector<double> v;
        for (double x : grid) v.push_back(x == 0.0 ? 0.0 : f(x));
        Modulus m(grid, v);
        m.rule_ = std::move(f);
        return m;
    }

    static Modulus identity(double d_max = 1.0) {
        return analytic([](double d) { return d; }, d_max);
    }

    static std::vector<double> default_knots(double d_max = 1.0, int knots = 256) {
        std::vector<double> g = {0.0};
        for (double x : numerics::logspace(d_max * 1e-8, d_max, knots)) g.push_back(x);
        return g;
    }

    double operator()(double x) const {
        if (x <= 0.0) return 0.0;
        if (rule_) return rule_(x);
        if (x >= d_.back()) return rho_.back();
        const auto it = std::upper_bound(d_.begin(), d_.end(), x);
        const std::size_t i = static_cast<std::size_t>(it - d_.begin());
        const double w = (x - d_[i - 1]) / (d_[i] - d_[i - 1]);
        return rho_[i - 1] + w * (rho_[i] - rho_[i - 1]);
    }

    /// Value as d -> infinity (the saturation level of a table).
    double saturation() const { return rule_ ? rule_(1e300) : rho_.back(); }

    const std::vector<double>& knots() const { return d_; }
    const std::vector<double>& values() const { return rho_; }

    bool is_nondecreasing() const {
        for (std::size_t i = 1; i < rho_.size(); ++i)
            if (rho_[i] < rho_[i - 1]) return false;
        return true;
    }

    bool vanishes_at_zero() const { return rho_[0] == 0.0; }

    /// Largest amount by which a table value falls below the chord of its neighbours.
    double concavity_defect() const {
        double worst = 0.0;
        for (std::size_t i = 1; i + 1 < d_.size(); ++i) {
            const double w = (d_[i] - d_[i - 1]) / (d_[i + 1] - d_[i - 1]);
            const double chord = rho_[i - 1] + w * (rho_[i + 1] - rho_[i - 1]);
            worst = std::max(worst, chord - rho_[i]);
        }
        return worst;
    }

    std::string csv() const {
        std::ostringstream os;
        os << "d,rho\n";
        char buf[64];
        for (std::size_t i = 0; i < d_.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", d_[i], rho_[i]);
            os << buf;
        }
        return os.str();
    }

private:
    std::vector<double> d_, rho_;
    std::function<double(double)> rule_;
};

struct CompositionOptions {
    int r_samples = 512;
    double r_min = 1e-4;
    double r_max = 1.0;
    double d_max = 1.0;
    int knots = 256;
    bool refine = true;
};

namespace detail {

/// inf over r in (0, 1) of expr(r): log lattice, the two endpoint limits, and a golden-section
/// refinement around the best lattice sample.
inline double infimum_over_r(const std::function<double(double)>& expr, double at_zero, double at_one,
                             const CompositionOptions& o) {
    const auto rs = numerics::logspace(o.r_min, o.r_max, o.r_samples);
    double best = std::min(at_zero, at_one);
    std::size_t arg = 0;
    double lattice_best = INFINITY;
    for (std::size_t i = 0; i < rs.size(); ++i) {
        const double v = expr(rs[i]);
        if (v < lattice_best) lattice_best = v, arg = i;
    }
    best = std::min(best, lattice_best);
    if (o.refine) {
        double a = std::log(rs[arg == 0 ? 0 : arg - 1]);
        double b = std::log(rs[std::min(arg + 1, rs.size() - 1)]);
        const double g = 0.5 * (std::sqrt(5.0) - 1.0);
        double c = b - g * (b - a), d = a + g * (b - a);
        double fc = expr(std::exp(c)), fd = expr(std::exp(d));
        for (int it = 0; it < 80 && b - a > 1e-14; ++it) {
            if (fc < fd) {
                b = d, d = c, fd = fc;
                c = b - g * (b - a);
                fc = expr(std::exp(c));
            } else {
                a = c, c = d, fc = fd;
                d = a + g * (b - a);
                fd = expr(std::exp(d));
            }
        }
        best = std::min({best, fc, fd});
    }
    return best;
}

inline Modulus tabulate_infimum(const std::function<double(double, double)>& expr,
                                const std::function<double(double)>& at_zero, const std::function<double(double)>& at_one,
                                const CompositionOptions& o) {
    const auto d = Modulus::default_knots(o.d_max, o.knots);
    std::vector<double> v(d.size(), 0.0);
    for (std::size_t i = 1; i < d.size(); ++i) {
        const double di = d[i];
        v[i] = infimum_over_r([&](double r) { return expr(di, r); }, at_zero(di), at_one(di), o);
        v[i] = std::max(v[i], v[i - 1]);
    }
    return Modulus(d, v);
}

}  // namespace detail

/// rho_bar(d) = inf_r { rho(3r v kappa r^sigma0) + 2 sup|u| rho0(d / r^2) }.
inline Modulus compose_lateral_modulus(const Modulus& rho, const Modulus& rho0, double kappa, double sigma0,
                                       double sup_u, const CompositionOptions& o = {}) {
    if (!(kappa > 0.0) || !(sigma0 > 0.0) || sup_u < 0.0) throw ParameterError("invalid composition parameters");
    auto expr = [&](double d, double r) {
        return rho(std::max(3.0 * r, kappa * std::pow(r, sigma0))) + 2.0 * sup_u * rho0(d / (r * r));
    };
    auto at_zero = [&](double) { return rho(0.0) + 2.0 * sup_u * rho0.saturation(); };
    auto at_one = [&](double d) { return rho(std::max(3.0, kappa)) + 2.0 * sup_u * rho0(d); };
    return detail::tabulate_infimum(expr, at_zero, at_one, o);
}

/// rho_bar(d) = inf_r { rho(r) + 2 sup|u| (rho0(d / r^2) + d / r) }.
inline Modulus compose_initial_modulus(const Modulus& rho, const Modulus& rho0, double sup_u,
                                       const CompositionOptions& o = {}) {
    if (sup_u < 0.0) throw ParameterError("sup |u| must be nonnegative");
    auto expr = [&](double d, double r) { return rho(r) + 2.0 * sup_u * (rho0(d / (r * r)) + d / r); };
    auto at_zero = [&](double d) { return d > 0.0 && sup_u > 0.0 ? INFINITY : rho(0.0); };
    auto at_one = [&](double d) { return rho(1.0) + 2.0 * sup_u * (rho0(d) + d); };
    return detail::tabulate_infimum(expr, at_zero, at_one, o);
}

namespace detail {

/// Sliding max/min over windows of half-width w (in samples) along a strided line.
inline void sliding_extrema(const double* in, std::size_t n, std::size_t stride, long w, double* mx, double* mn) {
    std::deque<std::size_t> qmax, qmin;
    const long len = static_cast<long>(n);
    long next = 0;
    for (long i = 0; i < len; ++i) {
        const long hi = std::min(len - 1, i + w);
        while (next <= hi) {
            const double v = in[static_cast<std::size_t>(next) * stride];
            while (!qmax.empty() && in[qmax.back() * stride] <= v) qmax.pop_back();
            while (!qmin.empty() && in[qmin.back() * stride] >= v) qmin.pop_back();
            qmax.push_back(static_cast<std::size_t>(next));
            qmin.push_back(static_cast<std::size_t>(next));
            ++next;
        }
        const long lo = i - w;
        while (static_cast<long>(qmax.front()) < lo) qmax.pop_front();
        while (static_cast<long>(qmin.front()) < lo) qmin.pop_front();
        mx[static_cast<std::size_t>(i) * stride] = in[qmax.front() * stride];
        mn[static_cast<std::size_t>(i) * stride] = in[qmin.front() * stride];
    }
}

}  // namespace detail

/// Empirical modulus: for each dyadic d, max |u(x,t) - u(y,s)| over x in the ball, y on the grid,
/// with |x - y|_inf <= d and |t - s| <= d. Returned as a table on {0} and the dyadic scales.
template <std::size_t Dim>
Modulus measure_boundary_modulus(const Field<Dim>& u, const Point<Dim>& center, double radius, double d_max = 1.0) {
    const auto& g = u.grid();
    const std::size_t nt = u.time_count();
    const double dt = nt > 1 ? u.times()[1] - u.times()[0] : INFINITY;
    std::vector<std::size_t> inside;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (norm(g.point(i) - center) < radius) inside.push_back(i);
    std::vector<double> ds = {0.0}, rho = {0.0};
    const std::size_t N = g.size();
    std::vector<double> smax(N * nt), smin(N * nt), tmp1(N), tmp2(N), scratch(N);
    for (double d = g.h(); d <= d_max * (1 + 1e-12); d *= 2.0) {
        const long w = static_cast<long>(std::floor(d / g.h() + 1e-9));
        for (std::size_t j = 0; j < nt; ++j) {
            const double* in = u.values(j).data();
            double* mx = smax.data() + j * N;
            double* mn = smin.data() + j * N;
            if constexpr (Dim == 1) {
                detail::sliding_extrema(in, N, 1, w, mx, mn);
            } else {
                const std::size_t n = static_cast<std::size_t>(g.per_dim());
                for (std::size_t r = 0; r < n; ++r) {
                    detail::sliding_extrema(in + r * n, n, 1, w, tmp1.data() + r * n, tmp2.data() + r * n);
                }
                for (std::size_t c = 0; c < n; ++c) {
                    detail::sliding_extrema(tmp1.data() + c, n, n, w, mx + c, scratch.data() + c);
                    detail::sliding_extrema(tmp2.data() + c, n, n, w, scratch.data() + c, mn + c);
                }
            }
        }
        const long wt = std::isfinite(dt) ? static_cast<long>(std::floor(d / dt + 1e-9)) : 0;
        double best = 0.0;
        std::vector<double> col(nt), cmx(nt), cmn(nt), colmin(nt), dummy(nt);
        for (std::size_t i : inside) {
            for (std::size_t j = 0; j < nt; ++j) col[j] = smax[j * N + i];
            detail::sliding_extrema(col.data(), nt, 1, wt, cmx.data(), dummy.data());
            for (std::size_t j = 0; j < nt; ++j) colmin[j] = smin[j * N + i];
            detail::sliding_extrema(colmin.data(), nt, 1, wt, dummy.data(), cmn.data());
            for (std::size_t j = 0; j < nt; ++j) {
                const double v = u.value(i, j);
                best = std::max({best, cmx[j] - v, v - cmn[j]});
            }
        }
        ds.push_back(d);
        rho.push_back(std::max(best, rho.back()));
    }
    return Modulus(ds, rho);
}

struct ExponentFit {
    double exponent = 0.0;
    double prefactor = 0.0;
    double r2 = 0.0;
    int points = 0;
};

/// Regression of log rho against log d over knots in [d_lo, d_hi] with rho > 0.
inline ExponentFit fit_modulus_exponent(const Modulus& m, double d_lo, double d_hi) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < m.knots().size(); ++i) {
        const double d = m.knots()[i];
        if (d >= d_lo * (1 - 1e-12) && d <= d_hi * (1 + 1e-12) && m.values()[i] > 0.0) {
            x.push_back(std::log(d));
            y.push_back(std::log(m.values()[i]));
        }
    }
    if (x.size() < 3) throw InsufficientData("fewer than 3 usable scales for the modulus fit");
    const auto f = numerics::linear_fit(x, y);
    return {f[1], std::exp(f[0]), f[2], static_cast<int>(x.size())};
}

}  // namespace nlpar
