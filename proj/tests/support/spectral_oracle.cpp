#include "oracles.hpp"

#include <fftw3.h>

#include <cmath>
#include <stdexcept>

namespace oracle {

std::vector<double> spectral_fractional_1d(const std::function<double(double)>& u, double sigma, double ratio,
                                           const std::vector<double>& points, int log2n, double half_width) {
    const long n = 1L << log2n;
    const double h = 2.0 * half_width / n;
    fftw_complex* buf = fftw_alloc_complex(static_cast<std::size_t>(n));
    fftw_plan fwd = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_plan bwd = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    for (long i = 0; i < n; ++i) {
        buf[i][0] = u(-half_width + i * h);
        buf[i][1] = 0.0;
    }
    fftw_execute(fwd);
    for (long k = 0; k < n; ++k) {
        const long kk = k <= n / 2 ? k : k - n;
        const double xi = 2.0 * M_PI * kk / (2.0 * half_width);
        const double m = -ratio * std::pow(std::abs(xi), sigma) / n;
        buf[k][0] *= m;
        buf[k][1] *= m;
    }
    fftw_execute(bwd);
    std::vector<double> out;
    for (double p : points) {
        const double s = (p + half_width) / h;
        const long i = std::lround(s);
        if (std::abs(s - i) > 1e-9) throw std::invalid_argument("oracle point off the fine grid");
        out.push_back(buf[i][0]);
    }
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
    fftw_free(buf);
    return out;
}

double spectral_fractional_2d(const std::function<double(double, double)>& u, double sigma, double ratio, double px,
                              double py, int log2n, double half_width) {
    const long n = 1L << log2n;
    const double h = 2.0 * half_width / n;
    fftw_complex* buf = fftw_alloc_complex(static_cast<std::size_t>(n * n));
    fftw_plan fwd = fftw_plan_dft_2d(static_cast<int>(n), static_cast<int>(n), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_plan bwd = fftw_plan_dft_2d(static_cast<int>(n), static_cast<int>(n), buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < n; ++j) {
            buf[i * n + j][0] = u(-half_width + i * h, -half_width + j * h);
            buf[i * n + j][1] = 0.0;
        }
    fftw_execute(fwd);
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < n; ++j) {
            const long a = i <= n / 2 ? i : i - n;
            const long b = j <= n / 2 ? j : j - n;
            const double w = 2.0 * M_PI / (2.0 * half_width);
            const double xi = w * std::sqrt(static_cast<double>(a * a + b * b));
            const double m = -ratio * std::pow(xi, sigma) / static_cast<double>(n * n);
            buf[i * n + j][0] *= m;
            buf[i * n + j][1] *= m;
        }
    fftw_execute(bwd);
    const long i = std::lround((px + half_width) / h), j = std::lround((py + half_width) / h);
    const double v = buf[i * n + j][0];
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
    fftw_free(buf);
    return v;
}

}  // namespace oracle
