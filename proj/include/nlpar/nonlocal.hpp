#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>

#include "field.hpp"
#include "kernel.hpp"
#include "quadrature.hpp"

namespace nlpar {

/// delta(u, x, t; y) = u(x + y) + u(x - y) - 2 u(x) on one slice.
template <std::size_t Dim>
double second_difference(const SliceView<Dim>& u, const Point<Dim>& x, const Point<Dim>& y) {
    return u.sample(x + y) + u.sample(x - y) - 2.0 * u.sample(x);
}

template <std::size_t Dim>
double second_difference(const Field<Dim>& u, const Point<Dim>& x, double t, const Point<Dim>& y) {
    return second_difference(u.slice(u.time_index(t)), x, y);
}

/// Lambda d^+ - Lambda^{-1} d^-  (plus) or  Lambda^{-1} d^+ - Lambda d^-  (minus).
struct PucciWeight {
    double up;    // multiplier for positive increments
    double down;  // multiplier for negative increments
    double operator()(double d) const { return d > 0.0 ? up * d : down * d; }
};

inline PucciWeight pucci_weight(bool plus, double lambda) {
    return plus ? PucciWeight{lambda, 1.0 / lambda} : PucciWeight{1.0 / lambda, lambda};
}

namespace detail {

/// Values of one slice around an evaluation point, using direct lattice access when the point is a node.
template <std::size_t Dim>
struct LocalView {
    const SliceView<Dim>& u;
    Point<Dim> x;
    std::optional<Index<Dim>> node;
    double center;

    LocalView(const SliceView<Dim>& s, const Point<Dim>& at) : u(s), x(at), node(s.grid->node_at(at)) {
        center = node ? u.values[u.grid->flat(*node)] : u.sample(x);
    }

    double pair(const Index<Dim>& k, const Point<Dim>& y) const {
        if (node) {
            Index<Dim> a{}, b{};
            for (std::size_t d = 0; d < Dim; ++d) a[d] = (*node)[d] + k[d], b[d] = (*node)[d] - k[d];
            return u.at_index(a) + u.at_index(b);
        }
        return u.sample(x + y) + u.sample(x - y);
    }

    double delta(const Index<Dim>& k, const Point<Dim>& y) const { return pair(k, y) - 2.0 * center; }

    double far_delta(const Point<Dim>& y) const { return u.sample(x + y) + u.sample(x - y) - 2.0 * center; }
};

}  // namespace detail

/// Discrete  int phi(delta(u,x;y), y) (2 - sigma) |y|^{-n-sigma} dy  for a weighting phi that is
/// positively homogeneous in delta. `constant_weight` allows the closed-form far field.
template <std::size_t Dim, class Phi>
double integrate_increments(const Quadrature<Dim>& q, const SliceView<Dim>& u, const Point<Dim>& x, Phi&& phi,
                            bool constant_weight) {
    detail::LocalView<Dim> lv(u, x);
    double total = 0.0;

    for (std::size_t i = 0; i < q.offsets.size(); ++i) total += q.weights[i] * phi(lv.delta(q.offsets[i], q.ys[i]), q.ys[i]);

    const double inv_h2 = 1.0 / (q.h * q.h);
    for (std::size_t d = 0; d < Dim; ++d) {
        Index<Dim> e{};
        e[d] = 1;
        Point<Dim> yh{};
        yh[d] = q.h;
        Point<Dim> ymid{};
        ymid[d] = 0.5 * q.scheme.kappa * q.h;
        total += q.near_weight * phi(lv.delta(e, yh) * inv_h2, ymid);
    }

    const auto& tail = *u.tail;
    const double reach = norm(x) + q.grid_radius * std::sqrt(static_cast<double>(Dim));
    if (constant_weight && tail.kind == TailKind::Zero && reach <= q.cutoff * (1.0 + 1e-12)) {
        Point<Dim> y{};
        y[0] = q.cutoff;
        total += q.far_mass * phi(-2.0 * lv.center, y);
        return total;
    }
    const double gamma = tail.vanishes() ? 0.0 : tail.growth;
    const double rem = q.remainder_factor(gamma);
    for (std::size_t d = 0; d < q.directions.size(); ++d) {
        const auto& e = q.directions[d];
        double dir_sum = 0.0;
        for (std::size_t i = 0; i < q.far_radii.size(); ++i) {
            const Point<Dim> y = q.far_radii[i] * e;
            dir_sum += q.far_weights[i] * phi(lv.far_delta(y), y);
        }
        const Point<Dim> yend = q.far_end * e;
        dir_sum += rem * phi(lv.far_delta(yend), yend);
        total += q.direction_weights[d] * dir_sum;
    }
    return total;
}

/// Evaluates an operator spec on slices of fields living on one grid.
template <std::size_t Dim>
class OperatorEvaluator {
public:
    OperatorEvaluator(OperatorSpec<Dim> op, const Grid<Dim>& grid, QuadratureScheme scheme = {})
        : op_(std::move(op)), q_(quadrature_for<Dim>(grid.h(), grid.radius(), op_.sigma, scheme)) {
        op_.validate();
    }

    const OperatorSpec<Dim>& spec() const { return op_; }
    const Quadrature<Dim>& quadrature() const { return *q_; }

    /// L_K u(x) with coefficients taken at (xc, tc).
    double linear(const KernelSpec<Dim>& k, const SliceView<Dim>& u, const Point<Dim>& x, const Point<Dim>& xc,
                  double tc) const {
        if (k.sigma != op_.sigma) throw ParameterError("kernel order does not match quadrature order");
        if (k.is_constant()) {
            const double a = *k.constant;
            return a * integrate_increments(*q_, u, x, [](double d, const Point<Dim>&) { return d; }, true);
        }
        return integrate_increments(
            *q_, u, x, [&](double d, const Point<Dim>& y) { return k.coefficient(xc, tc, y) * d; }, false);
    }

    double pucci(bool plus, const SliceView<Dim>& u, const Point<Dim>& x) const {
        const auto w = pucci_weight(plus, op_.lambda);
        return integrate_increments(*q_, u, x, [w](double d, const Point<Dim>&) { return w(d); }, true);
    }

    /// Operator value with coefficients frozen at (xc, tc).
    double frozen(const SliceView<Dim>& u, const Point<Dim>& x, const Point<Dim>& xc, double tc) const {
        switch (op_.kind) {
            case OperatorKind::PucciPlus: return pucci(true, u, x);
            case OperatorKind::PucciMinus: return pucci(false, u, x);
            case OperatorKind::Linear: return linear(op_.family[0][0], u, x, xc, tc);
            case OperatorKind::InfSup: {
                // constant kernels share one increment integral; a * base is what linear() returns anyway
                double best = INFINITY;
                std::optional<double> base;
                auto value = [&](const KernelSpec<Dim>& k) {
                    if (!k.is_constant() || k.sigma != op_.sigma) return linear(k, u, x, xc, tc);
                    if (!base)
                        base = integrate_increments(*q_, u, x, [](double d, const Point<Dim>&) { return d; }, true);
                    return *k.constant * *base;
                };
                for (const auto& row : op_.family) {
                    double inner = -INFINITY;
                    for (const auto& k : row) inner = std::max(inner, value(k));
                    best = std::min(best, inner);
                }
                return best;
            }
        }
        return 0.0;
    }

    double apply(const SliceView<Dim>& u, const Point<Dim>& x) const { return frozen(u, x, x, u.time); }

    double apply_node(const SliceView<Dim>& u, std::size_t flat) const { return apply(u, u.grid->point(flat)); }

private:
    OperatorSpec<Dim> op_;
    std::shared_ptr<const Quadrature<Dim>> q_;
};

template <std::size_t Dim>
double linear_apply(const KernelSpec<Dim>& k, const Field<Dim>& u, const Point<Dim>& x, double t,
                    const QuadratureScheme& q = {}) {
    OperatorEvaluator<Dim> ev(OperatorSpec<Dim>::linear(k), u.grid(), q);
    return ev.apply(u.slice(u.time_index(t)), x);
}

template <std::size_t Dim>
double pucci_plus(const Field<Dim>& u, const Point<Dim>& x, double t, double sigma, double lambda,
                  const QuadratureScheme& q = {}) {
    OperatorEvaluator<Dim> ev(OperatorSpec<Dim>::pucci_plus(sigma, lambda), u.grid(), q);
    return ev.apply(u.slice(u.time_index(t)), x);
}

template <std::size_t Dim>
double pucci_minus(const Field<Dim>& u, const Point<Dim>& x, double t, double sigma, double lambda,
                   const QuadratureScheme& q = {}) {
    OperatorEvaluator<Dim> ev(OperatorSpec<Dim>::pucci_minus(sigma, lambda), u.grid(), q);
    return ev.apply(u.slice(u.time_index(t)), x);
}

template <std::size_t Dim>
double infsup_apply(const OperatorSpec<Dim>& op, const Field<Dim>& u, const Point<Dim>& x, double t,
                    const QuadratureScheme& q = {}) {
    OperatorEvaluator<Dim> ev(op, u.grid(), q);
    return ev.apply(u.slice(u.time_index(t)), x);
}

/// The operator with coefficients frozen at (x0, t0), applied to u at (x, t).
template <std::size_t Dim>
double frozen_apply(const OperatorSpec<Dim>& op, const Field<Dim>& u, const Point<Dim>& x0, double t0,
                    const Point<Dim>& x, double t, const QuadratureScheme& q = {}) {
    OperatorEvaluator<Dim> ev(op, u.grid(), q);
    return ev.frozen(u.slice(u.time_index(t)), x, x0, t0);
}

}  // namespace nlpar
