#ifndef BLAYER_GEOMETRY_HPP
#define BLAYER_GEOMETRY_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

namespace blayer {

struct CurvePoint {
    double x = 0.0;
    double y = 0.0;
};

inline CurvePoint operator+(CurvePoint p, CurvePoint q) { return {p.x + q.x, p.y + q.y}; }
inline CurvePoint operator-(CurvePoint p, CurvePoint q) { return {p.x - q.x, p.y - q.y}; }
inline CurvePoint operator*(double c, CurvePoint p) { return {c * p.x, c * p.y}; }
inline double dot(CurvePoint p, CurvePoint q) { return p.x * q.x + p.y * q.y; }
inline double norm(CurvePoint p) { return std::hypot(p.x, p.y); }

// Closed planar boundary, counterclockwise, resampled at M uniform arclength
// positions. The stored curvature uses the sign of d/dt det J of the inward
// tubular map, so a circle carries kappa = -1/R.
struct BoundaryGeometry {
    std::vector<double> s;          // uniform arclength samples, s[0] = 0
    std::vector<CurvePoint> pos;
    std::vector<CurvePoint> tang;   // unit tangent, counterclockwise
    std::vector<CurvePoint> nrm;    // unit inward normal
    std::vector<double> kappa;

    double length = 0.0;
    double delta_max = 0.0;
    std::string name = "curve";

    // underlying parameterization and its arclength table
    std::function<CurvePoint(double)> point_of;
    std::function<CurvePoint(double)> d_point_of;
    std::function<CurvePoint(double)> dd_point_of;
    double theta_period = 0.0;
    std::vector<double> theta_tab;  // uniform in theta
    std::vector<double> s_tab;      // arclength at theta_tab, s_tab[0] = 0

    std::size_t samples() const { return s.size(); }
};

struct TubularCoords {
    bool inside = false;
    double y = 0.0;   // arclength of the nearest boundary point
    double t = 0.0;   // distance to the boundary
};

namespace geom_detail {

inline double speed(const BoundaryGeometry& g, double theta) {
    return norm(g.d_point_of(theta));
}

inline double wrap(double v, double period) {
    v = std::fmod(v, period);
    return v < 0.0 ? v + period : v;
}

// signed geometric curvature of the counterclockwise parameterization
inline double turn_rate(const BoundaryGeometry& g, double theta) {
    const CurvePoint d = g.d_point_of(theta);
    const CurvePoint dd = g.dd_point_of(theta);
    const double sp = norm(d);
    return (d.x * dd.y - d.y * dd.x) / (sp * sp * sp);
}

inline double arc_between(const BoundaryGeometry& g, double th0, double th1) {
    auto f = [&g](double th) { return speed(g, th); };
    return boost::math::quadrature::gauss<double, 7>::integrate(f, th0, th1);
}

// theta with arclength y, from the table plus a few Newton corrections
inline double theta_of_arclength(const BoundaryGeometry& g, double y) {
    y = wrap(y, g.length);
    const auto it = std::upper_bound(g.s_tab.begin(), g.s_tab.end(), y);
    std::size_t k = (it == g.s_tab.begin()) ? 0 : std::size_t(it - g.s_tab.begin()) - 1;
    if (k >= g.theta_tab.size() - 1) k = g.theta_tab.size() - 2;
    double lo = g.theta_tab[k], hi = g.theta_tab[k + 1];
    double th = lo + (hi - lo) * (y - g.s_tab[k]) /
                         std::max(g.s_tab[k + 1] - g.s_tab[k], 1e-300);
    for (int it2 = 0; it2 < 60; ++it2) {
        const double r = g.s_tab[k] + arc_between(g, g.theta_tab[k], th) - y;
        if (std::abs(r) < 1e-14 * g.length) break;
        if (r > 0.0) hi = th; else lo = th;
        const double step = r / std::max(speed(g, th), 1e-300);
        double next = th - step;
        if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
        th = next;
    }
    return th;
}

inline void fill_samples(BoundaryGeometry& g, int M) {
    const int fine = std::max(8 * M, 4096);
    g.theta_tab.resize(fine + 1);
    g.s_tab.resize(fine + 1);
    g.s_tab[0] = 0.0;
    for (int k = 0; k <= fine; ++k)
        g.theta_tab[k] = g.theta_period * double(k) / fine;
    for (int k = 1; k <= fine; ++k)
        g.s_tab[k] = g.s_tab[k - 1] + arc_between(g, g.theta_tab[k - 1], g.theta_tab[k]);
    g.length = g.s_tab.back();

    g.s.resize(M);
    g.pos.resize(M);
    g.tang.resize(M);
    g.nrm.resize(M);
    g.kappa.resize(M);
    for (int i = 0; i < M; ++i) {
        const double y = g.length * double(i) / M;
        const double th = theta_of_arclength(g, y);
        const CurvePoint d = g.d_point_of(th);
        const double sp = norm(d);
        g.s[i] = y;
        g.pos[i] = g.point_of(th);
        g.tang[i] = {d.x / sp, d.y / sp};
        g.nrm[i] = {-g.tang[i].y, g.tang[i].x};   // left of the tangent points inward
        g.kappa[i] = -turn_rate(g, th);
    }
}

} // namespace geom_detail

// Signed curvature at arclength y, in the inward-map convention.
inline double curvature(const BoundaryGeometry& g, double y) {
    return -geom_detail::turn_rate(g, geom_detail::theta_of_arclength(g, y));
}

// Position of the inward tubular map at (y, t).
inline CurvePoint tubular_map(const BoundaryGeometry& g, double y, double t) {
    const double th = geom_detail::theta_of_arclength(g, y);
    const CurvePoint d = g.d_point_of(th);
    const double sp = norm(d);
    const CurvePoint n = {-d.y / sp, d.x / sp};
    return g.point_of(th) + t * n;
}

// Jacobian determinant of the tubular map; exact for planar curves.
inline double tubular_weight(const BoundaryGeometry& g, double y, double t) {
    if (t < 0.0 || t > g.delta_max)
        throw std::domain_error("tubular_weight: t outside [0, delta_max]");
    return 1.0 + t * curvature(g, y);
}

// Width of a collision-free inward collar: the curvature radius bound
// capped by closest-approach tests between distant sample pairs.
inline double max_tubular_delta(const BoundaryGeometry& g) {
    double kmax = 0.0;
    for (double k : g.kappa) kmax = std::max(kmax, std::abs(k));
    double delta = kmax > 0.0 ? 0.5 / kmax : 0.25 * g.length;

    const std::size_t M = g.samples();
    const std::size_t skip = std::max<std::size_t>(4, M / 64);
    for (std::size_t i = 0; i < M; ++i) {
        for (std::size_t j = 0; j < M; ++j) {
            const std::size_t gap = std::min((M + j - i) % M, (M + i - j) % M);
            if (gap < skip) continue;
            const CurvePoint d = g.pos[j] - g.pos[i];
            const double h = dot(d, g.nrm[i]);
            if (h <= 0.0) continue;            // j is not on the inward side
            const double r = dot(d, d) / (2.0 * h);
            delta = std::min(delta, r);
        }
    }
    return delta;
}

// Nearest-point coordinates of x inside the collar, or an outside sentinel.
inline TubularCoords invert_tubular(const BoundaryGeometry& g, CurvePoint x) {
    const std::size_t M = g.samples();
    const std::size_t stride = std::max<std::size_t>(1, M / 128);
    std::size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < M; i += stride) {
        const CurvePoint d = x - g.pos[i];
        const double d2 = dot(d, d);
        if (d2 < best_d2) { best_d2 = d2; best = i; }
    }

    // refine the foot point: (x - p(th)) . p'(th) = 0
    double th = geom_detail::theta_of_arclength(g, g.s[best]);
    for (int it = 0; it < 40; ++it) {
        const CurvePoint p = g.point_of(th);
        const CurvePoint dp = g.d_point_of(th);
        const CurvePoint ddp = g.dd_point_of(th);
        const CurvePoint r = x - p;
        const double f = dot(r, dp);
        const double df = -dot(dp, dp) + dot(r, ddp);
        if (!(std::abs(df) > 0.0)) break;
        const double step = f / df;
        th -= step;
        if (std::abs(step) < 1e-15 * g.theta_period) break;
    }
    th = geom_detail::wrap(th, g.theta_period);

    const CurvePoint p = g.point_of(th);
    const CurvePoint dp = g.d_point_of(th);
    const double sp = norm(dp);
    const CurvePoint n = {-dp.y / sp, dp.x / sp};
    const CurvePoint r = x - p;
    const double t = norm(r);
    const double depth = dot(r, n);

    TubularCoords out;
    // collar is closed at delta_max; tolerate rounding in the bound itself
    if (depth < -1e-12 * g.length || t > g.delta_max * (1.0 + 1e-12)) return out;
    if (t > 1e-9 * g.length && depth < 0.95 * t) return out;          // oblique: foot not nearest
    out.inside = true;
    const auto it = std::upper_bound(g.theta_tab.begin(), g.theta_tab.end(), th);
    std::size_t k = (it == g.theta_tab.begin()) ? 0 : std::size_t(it - g.theta_tab.begin()) - 1;
    if (k >= g.theta_tab.size() - 1) k = g.theta_tab.size() - 2;
    out.y = g.s_tab[k] + geom_detail::arc_between(g, g.theta_tab[k], th);
    out.t = t;
    return out;
}

// Even-odd ray test against the sample polygon. Points within one sample
// spacing of the boundary may classify either way; callers needing the exact
// boundary strip should consult invert_tubular instead.
inline bool point_in_domain(const BoundaryGeometry& g, CurvePoint x) {
    bool in = false;
    const std::size_t M = g.samples();
    for (std::size_t i = 0, j = M - 1; i < M; j = i++) {
        const CurvePoint& p = g.pos[i];
        const CurvePoint& q = g.pos[j];
        if ((p.y > x.y) != (q.y > x.y) &&
            x.x < (q.x - p.x) * (x.y - p.y) / (q.y - p.y) + p.x)
            in = !in;
    }
    return in;
}

inline BoundaryGeometry circle_boundary(double R = 1.0, int M = 2048) {
    if (!(R > 0.0)) throw std::domain_error("circle_boundary: R must be positive");
    BoundaryGeometry g;
    g.name = "circle";
    g.theta_period = 2.0 * M_PI;
    g.point_of = [R](double th) { return CurvePoint{R * std::cos(th), R * std::sin(th)}; };
    g.d_point_of = [R](double th) { return CurvePoint{-R * std::sin(th), R * std::cos(th)}; };
    g.dd_point_of = [R](double th) { return CurvePoint{-R * std::cos(th), -R * std::sin(th)}; };
    geom_detail::fill_samples(g, M);
    g.delta_max = max_tubular_delta(g);
    return g;
}

inline BoundaryGeometry ellipse_boundary(double ax, double ay, int M = 2048) {
    if (!(ax > 0.0) || !(ay > 0.0))
        throw std::domain_error("ellipse_boundary: semi-axes must be positive");
    BoundaryGeometry g;
    g.name = "ellipse";
    g.theta_period = 2.0 * M_PI;
    g.point_of = [ax, ay](double th) { return CurvePoint{ax * std::cos(th), ay * std::sin(th)}; };
    g.d_point_of = [ax, ay](double th) { return CurvePoint{-ax * std::sin(th), ay * std::cos(th)}; };
    g.dd_point_of = [ax, ay](double th) { return CurvePoint{-ax * std::cos(th), -ay * std::sin(th)}; };
    geom_detail::fill_samples(g, M);
    g.delta_max = max_tubular_delta(g);
    return g;
}

// r(theta) = 1 + amp cos(lobes theta); amp < 1/(lobes^2+1) keeps it convex,
// larger amplitudes produce concave dips between the lobes.
inline BoundaryGeometry star_boundary(double amp = 0.2, int lobes = 3, int M = 2048) {
    if (!(std::abs(amp) < 1.0))
        throw std::domain_error("star_boundary: |amp| must be below 1");
    BoundaryGeometry g;
    g.name = "star";
    g.theta_period = 2.0 * M_PI;
    const double m = lobes;
    auto rad = [amp, m](double th) { return 1.0 + amp * std::cos(m * th); };
    auto drad = [amp, m](double th) { return -amp * m * std::sin(m * th); };
    auto ddrad = [amp, m](double th) { return -amp * m * m * std::cos(m * th); };
    g.point_of = [rad](double th) {
        const double r = rad(th);
        return CurvePoint{r * std::cos(th), r * std::sin(th)};
    };
    g.d_point_of = [rad, drad](double th) {
        const double r = rad(th), dr = drad(th);
        return CurvePoint{dr * std::cos(th) - r * std::sin(th),
                          dr * std::sin(th) + r * std::cos(th)};
    };
    g.dd_point_of = [rad, drad, ddrad](double th) {
        const double r = rad(th), dr = drad(th), ddr = ddrad(th);
        return CurvePoint{(ddr - r) * std::cos(th) - 2.0 * dr * std::sin(th),
                          (ddr - r) * std::sin(th) + 2.0 * dr * std::cos(th)};
    };
    geom_detail::fill_samples(g, M);
    g.delta_max = max_tubular_delta(g);
    return g;
}

namespace geom_detail {

// Periodic cubic spline through K points: second derivatives solve a cyclic
// tridiagonal system, handled with one rank-one correction of a plain solve.
struct PeriodicSpline {
    std::vector<double> u;    // knots, last = period
    std::vector<double> px, py;
    std::vector<double> mx, my;  // second derivatives at knots 0..K-1

    static std::vector<double> cyclic_moments(const std::vector<double>& h,
                                              const std::vector<double>& rhs) {
        const std::size_t K = rhs.size();
        std::vector<double> diag(K), lower(K), upper(K);
        for (std::size_t i = 0; i < K; ++i) {
            const double hm = h[(i + K - 1) % K], hp = h[i];
            lower[i] = hm / 6.0;
            upper[i] = hp / 6.0;
            diag[i] = (hm + hp) / 3.0;
        }
        auto solve_tri = [&](std::vector<double> b) {
            std::vector<double> d = diag, x = b;
            std::vector<double> up = upper;
            for (std::size_t i = 1; i < K - 1; ++i) {
                const double w = lower[i] / d[i - 1];
                d[i] -= w * up[i - 1];
                x[i] -= w * x[i - 1];
            }
            x[K - 2] /= d[K - 2];
            for (std::size_t i = K - 2; i-- > 0;)
                x[i] = (x[i] - up[i] * x[i + 1]) / d[i];
            return x;
        };
        // unknowns 0..K-2 with the wrap column folded in; last unknown via
        // the Sherman-Morrison style bordered elimination
        std::vector<double> b1(K - 1), b2(K - 1);
        for (std::size_t i = 0; i < K - 1; ++i) {
            b1[i] = rhs[i];
            b2[i] = 0.0;
        }
        b2[0] = lower[0];
        b2[K - 2] = upper[K - 2];
        const std::vector<double> x1 = solve_tri(b1);
        const std::vector<double> x2 = solve_tri(b2);
        const double num = rhs[K - 1] - upper[K - 1] * x1[0] - lower[K - 1] * x1[K - 2];
        const double den = diag[K - 1] - upper[K - 1] * x2[0] - lower[K - 1] * x2[K - 2];
        const double mK = num / den;
        std::vector<double> m(K);
        for (std::size_t i = 0; i < K - 1; ++i) m[i] = x1[i] - mK * x2[i];
        m[K - 1] = mK;
        return m;
    }

    void build(const std::vector<CurvePoint>& pts) {
        const std::size_t K = pts.size();
        u.assign(K + 1, 0.0);
        px.resize(K);
        py.resize(K);
        std::vector<double> h(K);
        for (std::size_t i = 0; i < K; ++i) {
            px[i] = pts[i].x;
            py[i] = pts[i].y;
        }
        for (std::size_t i = 0; i < K; ++i) {
            const CurvePoint d = pts[(i + 1) % K] - pts[i];
            h[i] = norm(d);
            if (!(h[i] > 0.0))
                throw std::domain_error("spline_boundary: repeated consecutive points");
            u[i + 1] = u[i] + h[i];
        }
        auto rhs_of = [&](const std::vector<double>& p) {
            std::vector<double> rhs(K);
            for (std::size_t i = 0; i < K; ++i) {
                const double dm = (p[i] - p[(i + K - 1) % K]) / h[(i + K - 1) % K];
                const double dp = (p[(i + 1) % K] - p[i]) / h[i];
                rhs[i] = dp - dm;
            }
            return rhs;
        };
        mx = cyclic_moments(h, rhs_of(px));
        my = cyclic_moments(h, rhs_of(py));
    }

    std::size_t segment(double v) const {
        const auto it = std::upper_bound(u.begin(), u.end(), v);
        std::size_t k = (it == u.begin()) ? 0 : std::size_t(it - u.begin()) - 1;
        return std::min(k, u.size() - 2);
    }

    double eval(const std::vector<double>& p, const std::vector<double>& m,
                double v, int deriv) const {
        const std::size_t K = p.size();
        const std::size_t k = segment(v);
        const double h = u[k + 1] - u[k];
        const double A = (u[k + 1] - v) / h, B = (v - u[k]) / h;
        const double m0 = m[k], m1 = m[(k + 1) % K];
        const double p0 = p[k], p1 = p[(k + 1) % K];
        if (deriv == 0)
            return A * p0 + B * p1 +
                   ((A * A * A - A) * m0 + (B * B * B - B) * m1) * h * h / 6.0;
        if (deriv == 1)
            return (p1 - p0) / h +
                   (-(3.0 * A * A - 1.0) * m0 + (3.0 * B * B - 1.0) * m1) * h / 6.0;
        return A * m0 + B * m1;
    }
};

} // namespace geom_detail

// Closed curve through the given points, fitted with a periodic cubic spline
// in chord-length parameter. Points must wind counterclockwise.
inline BoundaryGeometry spline_boundary(const std::vector<CurvePoint>& pts, int M = 2048) {
    if (pts.size() < 4)
        throw std::domain_error("spline_boundary: need at least 4 points");
    auto sp = std::make_shared<geom_detail::PeriodicSpline>();
    sp->build(pts);
    BoundaryGeometry g;
    g.name = "spline";
    g.theta_period = sp->u.back();
    g.point_of = [sp](double v) {
        v = geom_detail::wrap(v, sp->u.back());
        return CurvePoint{sp->eval(sp->px, sp->mx, v, 0), sp->eval(sp->py, sp->my, v, 0)};
    };
    g.d_point_of = [sp](double v) {
        v = geom_detail::wrap(v, sp->u.back());
        return CurvePoint{sp->eval(sp->px, sp->mx, v, 1), sp->eval(sp->py, sp->my, v, 1)};
    };
    g.dd_point_of = [sp](double v) {
        v = geom_detail::wrap(v, sp->u.back());
        return CurvePoint{sp->eval(sp->px, sp->mx, v, 2), sp->eval(sp->py, sp->my, v, 2)};
    };
    geom_detail::fill_samples(g, int(std::max<std::size_t>(pts.size(), std::size_t(M))));
    g.delta_max = max_tubular_delta(g);
    return g;
}

} // namespace blayer

#endif
