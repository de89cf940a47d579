#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "geometry.hpp"
#include "numerics.hpp"

namespace nlpar {

/// Parameters of the singular quadrature. Lattice offsets with kappa <= |k| and |k| h <= Y are
/// summed directly; |k| < kappa is replaced by a second-difference term; |y| > Y is the far field.
struct QuadratureScheme {
    int kappa = 2;
    double eval_radius = 1.0;  // lattice reaches the whole grid from points with |x| <= eval_radius
    int far_octaves = 12;
    int far_per_octave = 4;
    int directions = 32;  // half-circle directions of the 2D far field

    nlohmann::json to_json() const {
        return {{"kappa", kappa},
                {"eval_radius", eval_radius},
                {"far_octaves", far_octaves},
                {"far_per_octave", far_per_octave},
                {"directions", directions}};
    }

    auto key() const { return std::make_tuple(kappa, eval_radius, far_octaves, far_per_octave, directions); }
};

namespace detail {

/// Regularized deficit  lim_Y [ int |k|^{2-n-sigma} e^{-|k|^2/Y^2} dk - sum_{|k| >= kappa} (same) ]
/// over the integer lattice, by two-stage Richardson extrapolation in Y^{-2}.
template <std::size_t Dim>
double smoothed_lattice_deficit(double sigma, int kappa) {
    const double p = 2.0 - Dim - sigma;
    auto deficit = [&](double Y) {
        const double integral = 0.5 * sphere_measure<Dim>() * std::pow(Y, 2.0 - sigma) * std::tgamma(1.0 - 0.5 * sigma);
        const long reach = static_cast<long>(std::ceil(7.0 * Y));
        double sum = 0.0;
        if constexpr (Dim == 1) {
            for (long k = reach; k >= kappa; --k) {
                const double r = static_cast<double>(k);
                sum += 2.0 * std::pow(r, p) * std::exp(-r * r / (Y * Y));
            }
        } else {
            for (long a = -reach; a <= reach; ++a)
                for (long b = -reach; b <= reach; ++b) {
                    const double r2 = static_cast<double>(a * a + b * b);
                    if (r2 < static_cast<double>(kappa) * kappa) continue;
                    sum += std::pow(r2, 0.5 * p) * std::exp(-r2 / (Y * Y));
                }
        }
        return integral - sum;
    };
    const double Y = Dim == 1 ? 64.0 : 16.0;
    const double d1 = deficit(Y), d2 = deficit(2 * Y), d3 = deficit(4 * Y);
    const double r1 = (4.0 * d2 - d1) / 3.0;
    const double r2 = (4.0 * d3 - d2) / 3.0;
    return (16.0 * r2 - r1) / 15.0;
}

/// Same deficit in closed form for n = 1: 2 (sum_{k<kappa} k^{1-sigma} - zeta(sigma - 1)).
inline double zeta_lattice_deficit(double sigma, int kappa) {
    double s = 0.0;
    for (int k = 1; k < kappa; ++k) s += std::pow(static_cast<double>(k), 1.0 - sigma);
    return 2.0 * (s - std::riemann_zeta(sigma - 1.0));
}

inline double cached_deficit_2d(double sigma, int kappa) {
    static std::mutex mu;
    static std::map<std::pair<double, int>, double> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(sigma, kappa);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    const double v = smoothed_lattice_deficit<2>(sigma, kappa);
    cache.emplace(key, v);
    return v;
}

}  // namespace detail

/// Precomputed nodes and weights for a (grid spacing, grid radius, sigma) triple, for a = 1.
/// Each lattice pair weight multiplies delta(u, x; y_k) once, so +-k share one entry.
template <std::size_t Dim>
struct Quadrature {
    double h = 0.0;
    double grid_radius = 0.0;
    double sigma = 1.0;
    QuadratureScheme scheme;

    double cutoff = 0.0;  // lattice radius Y
    std::vector<Index<Dim>> offsets;
    std::vector<Point<Dim>> ys;
    std::vector<double> weights;

    double near_weight = 0.0;  // multiplies each directional second-difference quotient

    std::vector<Point<Dim>> directions;
    std::vector<double> direction_weights;
    std::vector<double> far_radii;
    std::vector<double> far_weights;  // radial weights (2 - sigma) r^{n-1} r^{-n-sigma} dr
    double far_end = 0.0;             // last far node radius; beyond it the growth model takes over
    double far_mass = 0.0;            // (2 - sigma) S_n Y^{-sigma} / sigma

    Quadrature(double spacing, double radius, double order, QuadratureScheme s)
        : h(spacing), grid_radius(radius), sigma(order), scheme(s) {
        if (!(sigma > 0.0 && sigma < 2.0)) throw ParameterError("sigma must lie in (0, 2)");
        if (scheme.kappa < 2) throw ParameterError("near radius factor kappa must be >= 2");
        const double c = 2.0 - sigma;
        const long K = static_cast<long>(std::ceil((radius * std::sqrt(static_cast<double>(Dim)) + scheme.eval_radius) / h - 1e-9));
        cutoff = K * h;
        const double hn = std::pow(h, Dim);
        if constexpr (Dim == 1) {
            for (long k = scheme.kappa; k <= K; ++k) {
                const double y = k * h;
                const double end = k == K ? 0.5 : 1.0;
                offsets.push_back({k});
                ys.push_back({y});
                weights.push_back(2.0 * hn * c * std::pow(y, -1.0 - sigma) * end);
            }
            near_weight = c * std::pow(h, 2.0 - sigma) * detail::zeta_lattice_deficit(sigma, scheme.kappa);
            directions.push_back({1.0});
            direction_weights.push_back(2.0);
        } else {
            const double k2min = static_cast<double>(scheme.kappa) * scheme.kappa;
            for (long a = 0; a <= K; ++a)
                for (long b = -K; b <= K; ++b) {
                    if (a == 0 && b <= 0) continue;
                    const double r2 = static_cast<double>(a * a + b * b);
                    if (r2 < k2min || r2 > static_cast<double>(K) * K) continue;
                    const Point<2> y{a * h, b * h};
                    offsets.push_back({a, b});
                    ys.push_back(y);
                    weights.push_back(2.0 * hn * c * std::pow(norm(y), -2.0 - sigma));
                }
            near_weight = c * std::pow(h, 2.0 - sigma) * detail::cached_deficit_2d(sigma, scheme.kappa) / 2.0;
            const int nd = scheme.directions;
            for (int j = 0; j < nd; ++j) {
                const double th = (j + 0.5) * M_PI / nd;
                directions.push_back({std::cos(th), std::sin(th)});
                direction_weights.push_back(2.0 * M_PI / nd);
            }
        }
        if (!(near_weight > 0.0)) throw ParameterError("near-field weight is not positive");

        std::vector<double> gx, gw;
        numerics::gauss_legendre(scheme.far_per_octave, gx, gw);
        const double ln2 = std::log(2.0);
        for (int o = 0; o < scheme.far_octaves; ++o) {
            const double s0 = std::log(cutoff) + o * ln2;
            for (std::size_t i = 0; i < gx.size(); ++i) {
                const double r = std::exp(s0 + 0.5 * ln2 * (gx[i] + 1.0));
                far_radii.push_back(r);
                // dr = r ds, r^{n-1} r^{-n-sigma} r = r^{-sigma}
                far_weights.push_back(0.5 * ln2 * gw[i] * c * std::pow(r, -sigma));
            }
        }
        far_end = cutoff * std::pow(2.0, scheme.far_octaves);
        far_mass = c * sphere_measure<Dim>() * std::pow(cutoff, -sigma) / sigma;
    }

    /// Integral of the growth model delta(r) = delta_end (r / far_end)^gamma against (2 - sigma) r^{-1-sigma}
    /// over r > far_end, per unit delta_end.
    double remainder_factor(double gamma) const {
        if (gamma >= sigma) throw DivergenceError("tail growth exponent must be below sigma");
        return (2.0 - sigma) * std::pow(far_end, -sigma) / (sigma - gamma);
    }

    /// Total weight on u(x) for a = 1: the coefficient of -u(x) in the discrete operator.
    double diagonal_mass() const {
        double s = 0.0;
        for (double w : weights) s += 2.0 * w;
        s += 2.0 * near_weight * Dim / (h * h);
        s += 2.0 * far_mass;
        return s;
    }
};

/// Shared, immutable quadrature tables keyed by (h, R, sigma, scheme).
template <std::size_t Dim>
std::shared_ptr<const Quadrature<Dim>> quadrature_for(double h, double radius, double sigma, const QuadratureScheme& s) {
    static std::mutex mu;
    static std::map<std::tuple<double, double, double, decltype(s.key())>, std::shared_ptr<const Quadrature<Dim>>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_tuple(h, radius, sigma, s.key());
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto q = std::make_shared<const Quadrature<Dim>>(h, radius, sigma, s);
    cache.emplace(key, q);
    return q;
}

}  // namespace nlpar
