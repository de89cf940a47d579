#pragma once

#include <cmath>
#include <algorithm>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "geometry.hpp"

namespace nlpar {

template <std::size_t Dim>
using SpaceTimeRule = std::function<double(const Point<Dim>&, double)>;

enum class TailKind { Zero, Even, Rule };

inline const char* to_string(TailKind k) {
    switch (k) {
        case TailKind::Zero: return "zero";
        case TailKind::Even: return "even";
        case TailKind::Rule: return "rule";
    }
    return "?";
}

/// Description of u beyond the sampled lattice. `growth` and `bound` give the
/// envelope |u(y,t)| <= bound * max(|y|^growth, 1).
template <std::size_t Dim>
struct TailModel {
    TailKind kind = TailKind::Zero;
    double growth = 0.0;
    double bound = 0.0;
    SpaceTimeRule<Dim> rule;

    static TailModel zero() { return {}; }

    /// Mirror continuation of the grid values across the lattice boundary.
    static TailModel even(double bound) { return {TailKind::Even, 0.0, bound, {}}; }

    static TailModel from_rule(SpaceTimeRule<Dim> r, double growth, double bound) {
        if (growth < 0.0) throw ParameterError("tail growth exponent must be nonnegative");
        if (bound < 0.0) throw ParameterError("tail bound must be nonnegative");
        return {TailKind::Rule, growth, bound, std::move(r)};
    }

    bool vanishes() const { return kind == TailKind::Zero || bound == 0.0; }

    double envelope(const Point<Dim>& y) const { return bound * std::max(std::pow(norm(y), growth), 1.0); }
};

namespace detail {

inline void cubic_weights(double frac, double w[4]) {
    // Lagrange basis on nodes -1, 0, 1, 2 evaluated at frac in [0, 1].
    const double a = frac;
    w[0] = -a * (a - 1.0) * (a - 2.0) / 6.0;
    w[1] = (a + 1.0) * (a - 1.0) * (a - 2.0) / 2.0;
    w[2] = -(a + 1.0) * a * (a - 2.0) / 2.0;
    w[3] = (a + 1.0) * a * (a - 1.0) / 6.0;
}

inline double fold_even(double s, double r) {
    const double period = 4.0 * r;
    double t = std::fmod(s + r, period);
    if (t < 0.0) t += period;
    if (t > 2.0 * r) t = period - t;
    return t - r;
}

}  // namespace detail

/// Non-owning view of one time slice: grid values plus the tail model.
template <std::size_t Dim>
struct SliceView {
    const Grid<Dim>* grid = nullptr;
    std::span<const double> values;
    double time = 0.0;
    const TailModel<Dim>* tail = nullptr;

    double at(std::size_t flat) const { return values[flat]; }

    /// Value at a lattice index that may fall outside the sampled square.
    double at_index(const Index<Dim>& idx) const {
        if (grid->contains(idx)) return values[grid->flat(idx)];
        return exterior(grid->point(idx));
    }

    double exterior(const Point<Dim>& p) const {
        switch (tail->kind) {
            case TailKind::Zero: return 0.0;
            case TailKind::Rule: return tail->rule(p, time);
            case TailKind::Even: {
                Point<Dim> q{};
                for (std::size_t d = 0; d < Dim; ++d) q[d] = detail::fold_even(p[d], grid->radius());
                return interpolate(q);
            }
        }
        return 0.0;
    }

    /// Cubic (tensor Lagrange) interpolation inside the square, tail outside.
    double sample(const Point<Dim>& p) const {
        if (!grid->contains(p)) return exterior(p);
        return interpolate(p);
    }

private:
    double interpolate(const Point<Dim>& p) const {
        const long n = grid->per_dim();
        long base[Dim];
        double w[Dim][4];
        for (std::size_t d = 0; d < Dim; ++d) {
            const double s = (p[d] + grid->radius()) / grid->h();
            long i = static_cast<long>(std::floor(s));
            const double snapped = std::round(s);
            if (std::abs(s - snapped) < 1e-12) {
                // Exactly on a node: keep the node value bit-exact.
                i = static_cast<long>(snapped);
                long b = std::clamp(i - 1, 0L, std::max(0L, n - 4));
                base[d] = b;
                for (int k = 0; k < 4; ++k) w[d][k] = (b + k == i) ? 1.0 : 0.0;
                continue;
            }
            long b = std::clamp(i - 1, 0L, std::max(0L, n - 4));
            base[d] = b;
            detail::cubic_weights(s - static_cast<double>(b + 1), w[d]);
        }
        if constexpr (Dim == 1) {
            double acc = 0.0;
            for (int k = 0; k < 4; ++k)
                if (w[0][k] != 0.0) acc += w[0][k] * values[static_cast<std::size_t>(base[0] + k)];
            return acc;
        } else {
            double acc = 0.0;
            for (int a = 0; a < 4; ++a) {
                if (w[0][a] == 0.0) continue;
                double row = 0.0;
                for (int b = 0; b < 4; ++b) {
                    if (w[1][b] == 0.0) continue;
                    row += w[1][b] * values[grid->flat({base[0] + a, base[1] + b})];
                }
                acc += w[0][a] * row;
            }
            return acc;
        }
    }
};

/// Space-time samples of u on a uniform lattice plus an exterior tail model.
template <std::size_t Dim>
class Field {
public:
    Field() = default;

    Field(Grid<Dim> grid, std::vector<double> times, std::vector<std::vector<double>> slices, TailModel<Dim> tail)
        : grid_(std::move(grid)), times_(std::move(times)), slices_(std::move(slices)), tail_(std::move(tail)) {
        if (times_.size() != slices_.size()) throw ParameterError("field: one slice per time required");
        if (times_.empty()) throw ParameterError("field: at least one time slice required");
        for (const auto& s : slices_) {
            if (s.size() != grid_.size()) throw ParameterError("field: slice size does not match grid");
            for (double v : s)
                if (!std::isfinite(v)) throw ParameterError("field: non-finite sample");
        }
        for (std::size_t j = 1; j < times_.size(); ++j)
            if (!(times_[j] > times_[j - 1])) throw ParameterError("field: times must increase");
    }

    /// Samples `rule` on every node of `grid` at each time in `times`.
    static Field from_rule(const Grid<Dim>& grid, const std::vector<double>& times, const SpaceTimeRule<Dim>& rule,
                           TailModel<Dim> tail) {
        std::vector<std::vector<double>> slices;
        slices.reserve(times.size());
        for (double t : times) {
            std::vector<double> v(grid.size());
            for (std::size_t i = 0; i < grid.size(); ++i) v[i] = rule(grid.point(i), t);
            slices.push_back(std::move(v));
        }
        return Field(grid, times, std::move(slices), std::move(tail));
    }

    /// Single-slice field for a function of space only, tail taken from the same rule.
    static Field stationary(const Grid<Dim>& grid, const std::function<double(const Point<Dim>&)>& u, double growth,
                            double bound, double t = 0.0) {
        SpaceTimeRule<Dim> rule = [u](const Point<Dim>& p, double) { return u(p); };
        return from_rule(grid, {t}, rule, TailModel<Dim>::from_rule(rule, growth, bound));
    }

    const Grid<Dim>& grid() const { return grid_; }
    const std::vector<double>& times() const { return times_; }
    const TailModel<Dim>& tail() const { return tail_; }
    std::size_t time_count() const { return times_.size(); }
    double time_step() const { return times_.size() > 1 ? times_[1] - times_[0] : 0.0; }

    SliceView<Dim> slice(std::size_t j) const { return {&grid_, slices_[j], times_[j], &tail_}; }
    const std::vector<double>& values(std::size_t j) const { return slices_[j]; }
    double value(std::size_t node, std::size_t j) const { return slices_[j][node]; }

    std::vector<double>& mutable_values(std::size_t j) { return slices_[j]; }

    /// Index of the slice whose time is closest to t.
    std::size_t time_index(double t) const {
        std::size_t best = 0;
        for (std::size_t j = 1; j < times_.size(); ++j)
            if (std::abs(times_[j] - t) < std::abs(times_[best] - t)) best = j;
        return best;
    }

    /// Pointwise transform of every sample; the tail rule is wrapped as well.
    Field map(const std::function<double(double)>& op, double growth, double bound) const {
        Field out = *this;
        for (auto& s : out.slices_)
            for (double& v : s) v = op(v);
        if (tail_.kind == TailKind::Rule) {
            auto r = tail_.rule;
            out.tail_ = TailModel<Dim>::from_rule([r, op](const Point<Dim>& p, double t) { return op(r(p, t)); },
                                                  growth, bound);
        } else if (tail_.kind == TailKind::Even) {
            out.tail_ = TailModel<Dim>::even(bound);
        }
        return out;
    }

private:
    Grid<Dim> grid_;
    std::vector<double> times_;
    std::vector<std::vector<double>> slices_;
    TailModel<Dim> tail_;
};

/// Combines two fields on the same lattice node-by-node; tails are combined as rules.
template <std::size_t Dim>
Field<Dim> combine(const Field<Dim>& a, const Field<Dim>& b, const std::function<double(double, double)>& op) {
    if (!(a.grid() == b.grid()) || a.times() != b.times()) throw ParameterError("combine: incompatible fields");
    std::vector<std::vector<double>> slices(a.time_count());
    for (std::size_t j = 0; j < a.time_count(); ++j) {
        slices[j].resize(a.grid().size());
        for (std::size_t i = 0; i < a.grid().size(); ++i) slices[j][i] = op(a.value(i, j), b.value(i, j));
    }
    TailModel<Dim> tail;
    if (a.tail().vanishes() && b.tail().vanishes()) {
        tail = TailModel<Dim>::zero();
    } else {
        auto ta = a.tail();
        auto tb = b.tail();
        // Tails are resolved through views so Even tails keep reading grid data.
        auto av = std::make_shared<Field<Dim>>(a);
        auto bv = std::make_shared<Field<Dim>>(b);
        SpaceTimeRule<Dim> rule = [av, bv, op](const Point<Dim>& p, double t) {
            const auto ja = av->time_index(t);
            return op(av->slice(ja).exterior(p), bv->slice(ja).exterior(p));
        };
        tail = TailModel<Dim>::from_rule(rule, std::max(ta.growth, tb.growth), ta.bound + tb.bound);
    }
    return Field<Dim>(a.grid(), a.times(), std::move(slices), std::move(tail));
}

}  // namespace nlpar
