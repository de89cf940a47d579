#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>

#include "errors.hpp"

namespace nlpar {

template <std::size_t Dim>
using Point = std::array<double, Dim>;

template <std::size_t Dim>
using Index = std::array<long, Dim>;

template <std::size_t Dim>
constexpr std::array<double, Dim> operator+(const std::array<double, Dim>& a, const std::array<double, Dim>& b) {
    std::array<double, Dim> r{};
    for (std::size_t d = 0; d < Dim; ++d) r[d] = a[d] + b[d];
    return r;
}

template <std::size_t Dim>
constexpr std::array<double, Dim> operator-(const std::array<double, Dim>& a, const std::array<double, Dim>& b) {
    std::array<double, Dim> r{};
    for (std::size_t d = 0; d < Dim; ++d) r[d] = a[d] - b[d];
    return r;
}

template <std::size_t Dim>
constexpr std::array<double, Dim> operator-(const std::array<double, Dim>& a) {
    std::array<double, Dim> r{};
    for (std::size_t d = 0; d < Dim; ++d) r[d] = -a[d];
    return r;
}

template <std::size_t Dim>
constexpr std::array<double, Dim> operator*(double s, const std::array<double, Dim>& a) {
    std::array<double, Dim> r{};
    for (std::size_t d = 0; d < Dim; ++d) r[d] = s * a[d];
    return r;
}

template <std::size_t Dim>
inline double norm(const std::array<double, Dim>& a) {
    if constexpr (Dim == 1) {
        return std::abs(a[0]);
    } else {
        double s = 0.0;
        for (std::size_t d = 0; d < Dim; ++d) s += a[d] * a[d];
        return std::sqrt(s);
    }
}

template <std::size_t Dim>
inline double norm_inf(const std::array<double, Dim>& a) {
    double m = 0.0;
    for (std::size_t d = 0; d < Dim; ++d) m = std::max(m, std::abs(a[d]));
    return m;
}

template <std::size_t Dim>
inline double dot(const std::array<double, Dim>& a, const std::array<double, Dim>& b) {
    double s = 0.0;
    for (std::size_t d = 0; d < Dim; ++d) s += a[d] * b[d];
    return s;
}

/// Surface measure of the unit sphere in R^Dim (2 in 1D, 2*pi in 2D).
template <std::size_t Dim>
constexpr double sphere_measure() {
    static_assert(Dim == 1 || Dim == 2, "only n = 1, 2 are supported");
    if constexpr (Dim == 1) return 2.0;
    else return 2.0 * M_PI;
}

/// Uniform lattice with spacing h covering [-R, R]^Dim, row-major flat indexing
/// (the last coordinate varies fastest).
template <std::size_t Dim>
class Grid {
    static_assert(Dim == 1 || Dim == 2, "only n = 1, 2 are supported");

public:
    Grid() = default;

    Grid(double spacing, double half_width) : h_(spacing), radius_(half_width) {
        if (!(spacing > 0.0)) throw ParameterError("grid spacing must be positive");
        if (!(half_width > 0.0)) throw ParameterError("grid radius must be positive");
        const double cells = 2.0 * half_width / spacing;
        const double rounded = std::round(cells);
        if (std::abs(cells - rounded) > 1e-9 * std::max(1.0, cells))
            throw ParameterError("grid radius must be a multiple of h/2");
        per_dim_ = static_cast<long>(rounded) + 1;
        size_ = 1;
        for (std::size_t d = 0; d < Dim; ++d) size_ *= static_cast<std::size_t>(per_dim_);
    }

    double h() const { return h_; }
    double radius() const { return radius_; }
    long per_dim() const { return per_dim_; }
    std::size_t size() const { return size_; }

    double coordinate(long i) const { return -radius_ + static_cast<double>(i) * h_; }

    bool contains(const Index<Dim>& idx) const {
        for (std::size_t d = 0; d < Dim; ++d)
            if (idx[d] < 0 || idx[d] >= per_dim_) return false;
        return true;
    }

    bool contains(const Point<Dim>& p) const {
        const double lim = radius_ * (1.0 + 1e-12);
        for (std::size_t d = 0; d < Dim; ++d)
            if (std::abs(p[d]) > lim) return false;
        return true;
    }

    std::size_t flat(const Index<Dim>& idx) const {
        std::size_t f = 0;
        for (std::size_t d = 0; d < Dim; ++d) f = f * static_cast<std::size_t>(per_dim_) + static_cast<std::size_t>(idx[d]);
        return f;
    }

    Index<Dim> index(std::size_t flat) const {
        Index<Dim> idx{};
        for (int d = static_cast<int>(Dim) - 1; d >= 0; --d) {
            idx[d] = static_cast<long>(flat % static_cast<std::size_t>(per_dim_));
            flat /= static_cast<std::size_t>(per_dim_);
        }
        return idx;
    }

    Point<Dim> point(const Index<Dim>& idx) const {
        Point<Dim> p{};
        for (std::size_t d = 0; d < Dim; ++d) p[d] = coordinate(idx[d]);
        return p;
    }

    Point<Dim> point(std::size_t flat) const { return point(index(flat)); }

    /// Index of the node at p when p lies on the lattice (to 1e-9 h), otherwise nullopt.
    std::optional<Index<Dim>> node_at(const Point<Dim>& p) const {
        Index<Dim> idx{};
        for (std::size_t d = 0; d < Dim; ++d) {
            const double s = (p[d] + radius_) / h_;
            const double r = std::round(s);
            if (std::abs(s - r) > 1e-9) return std::nullopt;
            idx[d] = static_cast<long>(r);
        }
        if (!contains(idx)) return std::nullopt;
        return idx;
    }

    bool operator==(const Grid& o) const { return h_ == o.h_ && radius_ == o.radius_; }

private:
    double h_ = 0.0;
    double radius_ = 0.0;
    long per_dim_ = 0;
    std::size_t size_ = 0;
};

}  // namespace nlpar
