#ifndef BLAYER_PROFILE_HPP
#define BLAYER_PROFILE_HPP

#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>
#include <vector>

#include <blayer/geodesic.hpp>
#include <blayer/potential.hpp>
#include <blayer/quadrature.hpp>

namespace blayer {

// Monotone boundary-layer profile sampled on a strictly increasing time grid.
// Construction nodes cover [0, T_eps]; past T_eps the profile is constant
// extension_value. dv holds nodal time-derivatives when the construction
// provides them (ODE right-hand side), enabling cubic Hermite evaluation.
struct ProfileGrid {
    std::vector<double> t;
    std::vector<double> v;
    std::vector<double> dv;
    double epsilon = 1.0;
    double alpha_eps = 0.0;
    double beta_eps = 0.0;
    double T_eps = 0.0;
    double L_eps = std::numeric_limits<double>::quiet_NaN(); // first crossing of c
    double extension_value = 0.0;
    double delta_reg = 0.0;   // regularizer used in construction, 0 = none
    bool degenerate = false;  // constant fallback (degenerate datum)

    std::size_t size() const { return t.size(); }

    // Piecewise cubic Hermite when derivatives are stored, linear otherwise.
    // Queries outside the grid clamp to the end values.
    double value_at(double tq) const {
        if (t.empty()) return alpha_eps;
        if (tq <= t.front()) return v.front();
        if (tq >= t.back()) return v.back();
        std::size_t hi = 1;
        while (t[hi] < tq) ++hi; // grids are short; linear scan is fine
        const std::size_t lo = hi - 1;
        const double h = t[hi] - t[lo];
        if (h <= 0.0) return v[lo];
        const double x = (tq - t[lo]) / h;
        if (dv.size() == t.size()) {
            const double x2 = x * x, x3 = x2 * x;
            return v[lo] * (2 * x3 - 3 * x2 + 1) + v[hi] * (-2 * x3 + 3 * x2) +
                   h * (dv[lo] * (x3 - 2 * x2 + x) + dv[hi] * (x3 - x2));
        }
        return v[lo] + (v[hi] - v[lo]) * x;
    }
};

inline std::map<double, double> hitting_times(const ProfileGrid& g,
                                              const std::vector<double>& levels);

namespace detail {

// One Cash-Karp 4(5) step for y' = f(s, y); returns the 5th-order update and
// an error estimate in err.
template <std::size_t N, class F>
std::array<double, N> cash_karp_step(F&& f, double s,
                                     const std::array<double, N>& y, double h,
                                     double& err) {
    using V = std::array<double, N>;
    auto axpy = [](const V& base, std::initializer_list<std::pair<double, const V*>> terms,
                   double h) {
        V out = base;
        for (const auto& [c, k] : terms)
            for (std::size_t i = 0; i < N; ++i) out[i] += h * c * (*k)[i];
        return out;
    };
    const V k1 = f(s, y);
    const V k2 = f(s + h / 5.0, axpy(y, {{1.0 / 5, &k1}}, h));
    const V k3 = f(s + 3.0 * h / 10, axpy(y, {{3.0 / 40, &k1}, {9.0 / 40, &k2}}, h));
    const V k4 = f(s + 3.0 * h / 5,
                   axpy(y, {{3.0 / 10, &k1}, {-9.0 / 10, &k2}, {6.0 / 5, &k3}}, h));
    const V k5 = f(s + h, axpy(y, {{-11.0 / 54, &k1}, {5.0 / 2, &k2},
                                   {-70.0 / 27, &k3}, {35.0 / 27, &k4}}, h));
    const V k6 = f(s + 7.0 * h / 8,
                   axpy(y, {{1631.0 / 55296, &k1}, {175.0 / 512, &k2},
                            {575.0 / 13824, &k3}, {44275.0 / 110592, &k4},
                            {253.0 / 4096, &k5}}, h));
    V y5 = axpy(y, {{37.0 / 378, &k1}, {250.0 / 621, &k3},
                    {125.0 / 594, &k4}, {512.0 / 1771, &k6}}, h);
    V y4 = axpy(y, {{2825.0 / 27648, &k1}, {18575.0 / 48384, &k3},
                    {13525.0 / 55296, &k4}, {277.0 / 14336, &k5},
                    {1.0 / 4, &k6}}, h);
    err = 0.0;
    for (std::size_t i = 0; i < N; ++i) err = std::max(err, std::abs(y5[i] - y4[i]));
    return y5;
}

inline double sigma_or_compute(const Potential& p) {
    return p.sigma > 0.0 ? p.sigma : sigma_bound(p);
}

} // namespace detail

// Layer clock: time at which the regularized flow starting from alpha_eps
// reaches r. reg = 0 selects the standard regularizer eps.
inline double psi_epsilon(const Potential& p, double eps, double alpha_eps,
                          double r, double reg = 0.0) {
    if (!(eps > 0.0)) throw std::domain_error("psi_epsilon: eps must be positive");
    if (r < alpha_eps) throw std::domain_error("psi_epsilon: r below alpha_eps");
    if (r > p.b + 1e-12 * (p.b - p.a))
        throw std::domain_error("psi_epsilon: r beyond the upper well");
    if (reg == 0.0) reg = eps;
    if (r == alpha_eps) return 0.0;
    auto f = [&p, reg](double s) { return 1.0 / std::sqrt(reg + p.W(s)); };
    return eps * detail::split_at_wells(p, f, alpha_eps, std::min(r, p.b), reg, 1e-13);
}

// Increasing profile v with eps v' = sqrt(delta_reg + W(v)), v(0) = alpha_eps,
// landed exactly on beta_eps at T_eps and constant-extended to T. Nodes are
// kept at spacing <= eps/32 through the layer.
inline ProfileGrid recovery_profile(const Potential& p, double eps,
                                    double alpha_eps, double beta_eps, double T,
                                    double delta_reg = 0.0) {
    if (!(eps > 0.0)) throw std::domain_error("recovery_profile: eps must be positive");
    if (delta_reg == 0.0) delta_reg = eps;
    if (!(delta_reg > 0.0))
        throw std::domain_error("recovery_profile: regularizer must be positive");
    const double span = p.b - p.a;
    if (alpha_eps < p.a - 1e-12 * span || beta_eps > p.b + 1e-12 * span ||
        alpha_eps > beta_eps)
        throw std::domain_error("recovery_profile: need a <= alpha_eps <= beta_eps <= b");

    ProfileGrid g;
    g.epsilon = eps;
    g.alpha_eps = alpha_eps;
    g.beta_eps = beta_eps;
    g.extension_value = beta_eps;
    g.delta_reg = delta_reg;

    auto slope = [&](double v) { // dv/ds in the fast variable s = t/eps
        return std::sqrt(delta_reg + std::max(0.0, p.W(std::min(v, p.b))));
    };

    if (alpha_eps == beta_eps) {
        if (!(T > 0.0)) throw std::invalid_argument("recovery_profile: need T > 0");
        g.T_eps = 0.0;
        for (int i = 0; i <= 8; ++i) {
            g.t.push_back(T * i / 8.0);
            g.v.push_back(alpha_eps);
            g.dv.push_back(0.0);
        }
        return g;
    }

    const double t_land = psi_epsilon(p, eps, alpha_eps, beta_eps, delta_reg);
    if (!(T > t_land))
        throw std::invalid_argument("recovery_profile: T must exceed the landing time");

    auto rhs = [&](double, const std::array<double, 1>& y) {
        return std::array<double, 1>{slope(y[0])};
    };

    double s = 0.0, h = 1.0 / 64.0;
    const double h_cap = 1.0 / 32.0, h_min = 1e-10, tol = 1e-13;
    std::array<double, 1> y{alpha_eps};
    g.t.push_back(0.0);
    g.v.push_back(alpha_eps);
    g.dv.push_back(slope(alpha_eps) / eps);

    while (true) {
        double err;
        auto y_new = detail::cash_karp_step<1>(rhs, s, y, h, err);
        if (err > tol && h > h_min) {
            h = std::max(h_min, 0.9 * h * std::pow(tol / std::max(err, 1e-300), 0.2));
            continue;
        }
        if (y_new[0] >= beta_eps) break;
        s += h;
        y = y_new;
        g.t.push_back(eps * s);
        g.v.push_back(y[0]);
        g.dv.push_back(slope(y[0]) / eps);
        h = std::min(h_cap, 0.9 * h * std::pow(tol / std::max(err, 1e-300), 0.2));
        if (g.t.size() > 2000000)
            throw std::runtime_error("recovery_profile: node budget exceeded");
    }

    // exact landing: remaining flow time by quadrature instead of one more step
    const double ds_land =
        integrate([&](double v) { return 1.0 / slope(v); }, y[0], beta_eps, 1e-13);
    g.T_eps = eps * (s + ds_land);
    g.t.push_back(g.T_eps);
    g.v.push_back(beta_eps);
    g.dv.push_back(slope(beta_eps) / eps);

    for (int i = 1; i <= 8; ++i) { // constant extension
        g.t.push_back(g.T_eps + (T - g.T_eps) * i / 8.0);
        g.v.push_back(beta_eps);
        g.dv.push_back(0.0);
    }

    if (alpha_eps <= p.c && p.c <= beta_eps) {
        auto hit = hitting_times(g, {p.c});
        if (!hit.empty()) g.L_eps = hit.begin()->second;
    }
    return g;
}

// Unregularized heteroclinic z' = sqrt(W(z)), z(0) = alpha, on [0, s_max].
// A datum at a well is degenerate: the flow never leaves it.
inline ProfileGrid heteroclinic(const Potential& p, double alpha, double s_max) {
    if (!(s_max > 0.0)) throw std::domain_error("heteroclinic: s_max must be positive");
    const double span = p.b - p.a;
    ProfileGrid g;
    g.epsilon = 1.0;
    g.alpha_eps = alpha;
    g.beta_eps = p.b;
    g.extension_value = p.b;

    if (std::abs(alpha - p.a) <= 1e-12 * span || std::abs(alpha - p.b) <= 1e-12 * span) {
        g.degenerate = true;
        for (int i = 0; i <= 8; ++i) {
            g.t.push_back(s_max * i / 8.0);
            g.v.push_back(alpha);
            g.dv.push_back(0.0);
        }
        g.T_eps = s_max;
        return g;
    }
    if (!(alpha > p.a && alpha < p.b))
        throw std::domain_error("heteroclinic: alpha must lie in [a, b]");

    auto slope = [&](double z) { return std::sqrt(std::max(0.0, p.W(std::min(z, p.b)))); };
    auto rhs = [&](double, const std::array<double, 1>& y) {
        return std::array<double, 1>{slope(y[0])};
    };

    double s = 0.0, h = 1.0 / 64.0;
    const double h_cap = 1.0 / 32.0, tol = 1e-13;
    std::array<double, 1> y{alpha};
    g.t.push_back(0.0);
    g.v.push_back(alpha);
    g.dv.push_back(slope(alpha));
    while (s < s_max) {
        h = std::min(h, s_max - s);
        double err;
        auto y_new = detail::cash_karp_step<1>(rhs, s, y, h, err);
        if (err > tol && h > 1e-10) {
            h = std::max(1e-10, 0.9 * h * std::pow(tol / std::max(err, 1e-300), 0.2));
            continue;
        }
        s += h;
        y[0] = std::min(y_new[0], p.b);
        g.t.push_back(s);
        g.v.push_back(y[0]);
        g.dv.push_back(slope(y[0]));
        h = std::min(h_cap, 0.9 * h * std::pow(tol / std::max(err, 1e-300), 0.2));
        if (g.t.size() > 2000000)
            throw std::runtime_error("heteroclinic: node budget exceeded");
    }
    g.T_eps = s_max;
    if (alpha <= p.c) {
        auto hit = hitting_times(g, {p.c});
        if (!hit.empty()) g.L_eps = hit.begin()->second;
    }
    return g;
}

struct LayerMoment {
    double value = 0.0;      // int_0^{s_max} 2 W(z(s)) s ds along the heteroclinic
    double tail_bound = 0.0; // exponential-envelope bound on the discarded tail
};

// First moment of the transition-layer energy density. The integrand equals
// 2 sqrt(W(z)) z' s = 2 W(z) s, accumulated alongside the flow itself.
inline LayerMoment layer_moment(const Potential& p, double alpha, double s_max) {
    LayerMoment out;
    const double span = p.b - p.a;
    if (std::abs(alpha - p.b) <= 1e-12 * span) return out; // constant at b: zero
    if (!(alpha > p.a && alpha < p.b))
        throw std::domain_error("layer_moment: alpha must be interior");

    auto rhs = [&](double s, const std::array<double, 2>& y) {
        const double w = std::max(0.0, p.W(std::min(y[0], p.b)));
        return std::array<double, 2>{std::sqrt(w), 2.0 * w * s};
    };
    double s = 0.0, h = 1.0 / 64.0;
    const double tol = 1e-13;
    std::array<double, 2> y{alpha, 0.0};
    while (s < s_max) {
        h = std::min(h, s_max - s);
        double err;
        auto y_new = detail::cash_karp_step<2>(rhs, s, y, h, err);
        if (err > tol && h > 1e-10) {
            h = std::max(1e-10, 0.9 * h * std::pow(tol / std::max(err, 1e-300), 0.2));
            continue;
        }
        s += h;
        y = y_new;
        y[0] = std::min(y[0], p.b);
        h = std::min(1.0 / 4.0, 0.9 * h * std::pow(tol / std::max(err, 1e-300), 0.2));
    }
    out.value = y[1];
    const double sigma = detail::sigma_or_compute(p);
    const double w0 = p.b - y[0];
    // b - z decays at least like w0 e^{-sigma s} past s_max, so
    // W <= sigma^-2 w0^2 e^{-2 sigma s} bounds the tail moment explicitly.
    out.tail_bound = 2.0 * w0 * w0 / (sigma * sigma) *
                     (s_max / (2.0 * sigma) + 1.0 / (4.0 * sigma * sigma));
    return out;
}

// First crossing time of each level, linearly interpolated between nodes.
// Levels outside [alpha_eps, max v] are omitted.
inline std::map<double, double> hitting_times(const ProfileGrid& g,
                                              const std::vector<double>& levels) {
    std::map<double, double> out;
    if (g.t.empty()) return out;
    for (double L : levels) {
        if (L < g.alpha_eps || L > g.beta_eps) continue;
        if (L <= g.v.front()) {
            out[L] = g.t.front();
            continue;
        }
        for (std::size_t j = 1; j < g.v.size(); ++j) {
            if (g.v[j] >= L) {
                const double dvj = g.v[j] - g.v[j - 1];
                const double x = dvj > 0.0 ? (L - g.v[j - 1]) / dvj : 0.0;
                out[L] = g.t[j - 1] + x * (g.t[j] - g.t[j - 1]);
                break;
            }
        }
    }
    return out;
}

// Max inverse-clock residual max_j |Psi(v_j) - t_j| over construction nodes,
// accumulated incrementally so quadrature error does not compound.
inline double max_inverse_residual(const Potential& p, const ProfileGrid& g) {
    if (g.size() < 2 || g.T_eps <= 0.0) return 0.0;
    const double reg = g.delta_reg > 0.0 ? g.delta_reg : g.epsilon;
    auto f = [&](double s) { return 1.0 / std::sqrt(reg + std::max(0.0, p.W(s))); };
    double psi = 0.0, worst = 0.0;
    for (std::size_t j = 1; j < g.size() && g.t[j] <= g.T_eps * (1 + 1e-12); ++j) {
        if (g.v[j] > g.v[j - 1])
            psi += g.epsilon * integrate(f, g.v[j - 1], g.v[j], 1e-14);
        worst = std::max(worst, std::abs(psi - g.t[j]));
    }
    return worst;
}

inline void write_profile_csv(const ProfileGrid& g, std::ostream& os) {
    os << "t,v\n";
    char buf[64];
    for (std::size_t j = 0; j < g.size(); ++j) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", g.t[j], g.v[j]);
        os << buf;
    }
}

} // namespace blayer

#endif
