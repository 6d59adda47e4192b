#ifndef BLAYER_QUADRATURE_HPP
#define BLAYER_QUADRATURE_HPP

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace blayer {

// Adaptive Gauss-Kronrod on one interval. Empty intervals integrate to zero.
template <class F>
double integrate(F&& f, double lo, double hi, double tol = 1e-12) {
    if (!(lo <= hi)) throw std::domain_error("integrate: lo > hi");
    if (lo == hi) return 0.0;
    using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
    double err = 0.0;
    return GK::integrate(std::forward<F>(f), lo, hi, 15, tol, &err);
}

// Integrand peaked around s0 with scale `width` (typically sqrt(eps/c0) at a
// quadratic zero of the potential): substitute s = s0 + width*sinh(u), which
// flattens the peak, then integrate adaptively in u. s0 may lie outside
// [lo, hi] on either side.
template <class F>
double integrate_peaked(F&& f, double lo, double hi, double s0, double width,
                        double tol = 1e-12) {
    if (!(lo <= hi)) throw std::domain_error("integrate_peaked: lo > hi");
    if (lo == hi) return 0.0;
    if (!(width > 0.0)) throw std::domain_error("integrate_peaked: width <= 0");
    const double ulo = std::asinh((lo - s0) / width);
    const double uhi = std::asinh((hi - s0) / width);
    auto g = [&](double u) {
        const double s = s0 + width * std::sinh(u);
        return f(s) * width * std::cosh(u);
    };
    return integrate(g, ulo, uhi, tol);
}

// Monotone panel grid on [lo, hi] clustered toward both endpoints with the
// given resolution scales (sinh-in-u spacing, n panels per half). Includes
// both endpoints.
inline std::vector<double> graded_panels(double lo, double hi, double width_lo,
                                         double width_hi, int n) {
    if (!(lo < hi)) throw std::domain_error("graded_panels: lo >= hi");
    if (n < 8) n = 8;
    const double mid = 0.5 * (lo + hi);
    std::vector<double> out;
    out.reserve(size_t(2 * n + 1));
    const double ul = std::asinh((mid - lo) / width_lo);
    for (int i = 0; i <= n; ++i)
        out.push_back(lo + width_lo * std::sinh(ul * double(i) / n));
    const double ur = std::asinh((hi - mid) / width_hi);
    for (int i = n - 1; i >= 0; --i)
        out.push_back(hi - width_hi * std::sinh(ur * double(i) / n));
    out.front() = lo;
    out.back() = hi;
    return out;
}

// Five-point Gauss-Legendre nodes and weights on [0,1].
struct Gauss5 {
    static constexpr int n = 5;
    static constexpr double x[5] = {
        0.046910077030668004, 0.230765344947158450, 0.5,
        0.769234655052841550, 0.953089922969332000};
    static constexpr double w[5] = {
        0.118463442528094544, 0.239314335249683234, 0.284444444444444444,
        0.239314335249683234, 0.118463442528094544};
};

} // namespace blayer

#endif
