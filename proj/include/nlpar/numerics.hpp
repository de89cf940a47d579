#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <vector>

namespace nlpar::numerics {

/// Gauss-Legendre nodes and weights on [-1, 1] (Newton on the Legendre recurrence).
inline void gauss_legendre(int m, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(static_cast<std::size_t>(m), 0.0);
    weights.assign(static_cast<std::size_t>(m), 0.0);
    for (int i = 0; i < (m + 1) / 2; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (m + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 1; j <= m; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
            }
            dp = m * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        nodes[static_cast<std::size_t>(i)] = -z;
        nodes[static_cast<std::size_t>(m - 1 - i)] = z;
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[static_cast<std::size_t>(i)] = w;
        weights[static_cast<std::size_t>(m - 1 - i)] = w;
    }
}

/// Composite Gauss-Legendre on [a, b] with `panels` equal panels.
inline double integrate(const std::function<double(double)>& f, double a, double b, int panels = 64, int order = 16) {
    std::vector<double> x, w;
    gauss_legendre(order, x, w);
    const double width = (b - a) / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * width;
        double s = 0.0;
        for (int k = 0; k < order; ++k) s += w[static_cast<std::size_t>(k)] * f(lo + 0.5 * width * (x[static_cast<std::size_t>(k)] + 1.0));
        total += 0.5 * width * s;
    }
    return total;
}

/// Integral over [r0, inf) of f(r), where f(r) decays like r^{-1-p} (p > 0).
/// The substitution r = r0 v^{-1/p} maps the decay to a bounded integrand on (0, 1].
inline double integrate_tail(const std::function<double(double)>& f, double r0, double p, int panels = 128) {
    auto g = [&](double v) {
        if (v <= 0.0) return 0.0;
        const double r = r0 * std::pow(v, -1.0 / p);
        return f(r) * r / (p * v);
    };
    return integrate(g, 0.0, 1.0, panels, 16);
}

/// Ordinary least squares y = a + b x. Returns {a, b, r2}.
inline std::array<double, 3> linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) sx += x[i], sy += y[i];
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    const double b = sxx > 0 ? sxy / sxx : 0.0;
    const double a = my - b * mx;
    double ss_res = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - a - b * x[i];
        ss_res += e * e;
    }
    const double r2 = syy > 0 ? 1.0 - ss_res / syy : 1.0;
    return {a, b, r2};
}

inline std::vector<double> logspace(double lo, double hi, int count) {
    std::vector<double> v(static_cast<std::size_t>(count));
    const double a = std::log(lo), b = std::log(hi);
    for (int i = 0; i < count; ++i) v[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (count - 1));
    return v;
}

}  // namespace nlpar::numerics
