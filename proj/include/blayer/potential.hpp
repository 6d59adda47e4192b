#ifndef BLAYER_POTENTIAL_HPP
#define BLAYER_POTENTIAL_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace blayer {

// Double-well potential with wells a < b and interior maximum c. The
// comparison constants alpha_minus, beta_minus pin the windows on which W is
// comparable to the squared distance from the nearest well:
//   a < alpha_minus < min(c, (a+b)/2),  max(c, (a+b)/2) < beta_minus < b.
struct Potential {
    std::function<double(double)> W;
    std::function<double(double)> dW;
    std::function<double(double)> d2W;
    double a = -1.0;
    double b = 1.0;
    double c = 0.0;
    double alpha_minus = -0.5;
    double beta_minus = 0.5;
    double sigma = 0.0;      // largest verified comparability constant
    int n_samples = 10000;   // dense-grid resolution for hypothesis checks
    std::string name = "custom";

    double operator()(double s) const { return W(s); }
};

struct HypothesisCheck {
    std::string name;
    bool pass = false;
    double witness = 0.0;    // extremal sampled value backing the verdict
    std::string detail;
};

struct HypothesisReport {
    std::vector<HypothesisCheck> checks;
    bool all_pass() const {
        for (const auto& ck : checks)
            if (!ck.pass) return false;
        return true;
    }
};

namespace detail {

inline double eval_checked(const Potential& p, double s) {
    const double v = p.W(s);
    if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "potential evaluation non-finite at s = " << s;
        throw std::domain_error(os.str());
    }
    return v;
}

} // namespace detail

// Dense-sampled verification of the standing structural assumptions on W:
// smooth nonnegative double well, critical wells with positive curvature,
// coercive tails, and dW with exactly the three zeros a, c, b.
inline HypothesisReport validate_hypotheses(const Potential& p) {
    HypothesisReport rep;
    const int n = p.n_samples;
    const double span = p.b - p.a;
    const double tol = 1e-8 * std::max(1.0, std::abs(p.W(p.c)));

    {
        HypothesisCheck ck;
        ck.name = "double_well_zeros";
        double wa = detail::eval_checked(p, p.a);
        double wb = detail::eval_checked(p, p.b);
        double interior_min = std::numeric_limits<double>::infinity();
        for (int i = 1; i < n; ++i) {
            const double s = p.a + span * double(i) / n;
            const double d = std::min(std::abs(s - p.a), std::abs(s - p.b));
            if (d < 0.01 * span) continue;
            interior_min = std::min(interior_min, detail::eval_checked(p, s));
        }
        ck.pass = std::abs(wa) <= tol && std::abs(wb) <= tol && interior_min > 0.0;
        ck.witness = interior_min;
        ck.detail = "W(a), W(b) vanish; W > 0 between the wells";
        rep.checks.push_back(ck);
    }
    {
        HypothesisCheck ck;
        ck.name = "critical_wells";
        const double da = p.dW(p.a), db = p.dW(p.b);
        const double ca = p.d2W(p.a), cb = p.d2W(p.b);
        ck.pass = std::abs(da) <= tol && std::abs(db) <= tol && ca > 0.0 && cb > 0.0;
        ck.witness = std::min(ca, cb);
        ck.detail = "dW vanishes at the wells, d2W positive there";
        rep.checks.push_back(ck);
    }
    {
        HypothesisCheck ck;
        ck.name = "coercive_tails";
        const double probe = std::abs(p.a) + std::abs(p.b) + 10.0;
        const double wl = detail::eval_checked(p, -probe);
        const double wr = detail::eval_checked(p, probe);
        const double wl2 = detail::eval_checked(p, p.a - 0.5 * span);
        const double wr2 = detail::eval_checked(p, p.b + 0.5 * span);
        ck.pass = wl > wl2 && wr > wr2 && wl2 > 0.0 && wr2 > 0.0;
        ck.witness = std::min(wl, wr);
        ck.detail = "W grows beyond the wells";
        rep.checks.push_back(ck);
    }
    {
        HypothesisCheck ck;
        ck.name = "slope_sign_pattern";
        // dW < 0 left of a, > 0 on (a,c), < 0 on (c,b), > 0 right of b.
        bool ok = p.d2W(p.c) < 0.0;
        double worst = p.d2W(p.c);
        auto scan = [&](double lo, double hi, int sign) {
            for (int i = 1; i < n; ++i) {
                const double s = lo + (hi - lo) * double(i) / n;
                const double d = std::min(std::abs(s - p.a),
                                          std::min(std::abs(s - p.b), std::abs(s - p.c)));
                if (d < 1e-3 * span) continue;
                const double v = sign * p.dW(s);
                if (!(v > 0.0)) { ok = false; worst = std::min(worst, v); }
            }
        };
        scan(p.a - 0.5 * span, p.a, -1);
        scan(p.a, p.c, +1);
        scan(p.c, p.b, -1);
        scan(p.b, p.b + 0.5 * span, +1);
        ck.pass = ok;
        ck.witness = worst;
        ck.detail = "dW has sign pattern -,+,-,+ across a, c, b";
        rep.checks.push_back(ck);
    }
    return rep;
}

// Largest sigma for which, on the sampled comparison windows,
//   sigma^2 (b-s)^2 <= W(s) <= sigma^-2 (b-s)^2   on [alpha_minus, b+1]
//   sigma^2 (s-a)^2 <= W(s) <= sigma^-2 (s-a)^2   on [a-1, beta_minus].
inline double sigma_bound(const Potential& p) {
    const int n = p.n_samples;
    double lo_ratio = std::numeric_limits<double>::infinity();
    double hi_ratio = 0.0;
    auto scan = [&](double lo, double hi, double well) {
        for (int i = 0; i <= n; ++i) {
            const double s = lo + (hi - lo) * double(i) / n;
            const double d2 = (s - well) * (s - well);
            if (d2 < 1e-24) continue;
            const double r = detail::eval_checked(p, s) / d2;
            lo_ratio = std::min(lo_ratio, r);
            hi_ratio = std::max(hi_ratio, r);
        }
    };
    scan(p.alpha_minus, p.b + 1.0, p.b);
    scan(p.a - 1.0, p.beta_minus, p.a);
    if (!(lo_ratio > 0.0) || !std::isfinite(hi_ratio) || hi_ratio <= 0.0)
        throw std::domain_error("sigma_bound: comparability fails on the sampled windows");
    const double sigma = std::sqrt(std::min(lo_ratio, 1.0 / hi_ratio));
    if (!(sigma > 1e-6))
        throw std::domain_error("sigma_bound: no admissible sigma above 1e-6");
    return sigma;
}

// Largest delta (capped at alpha_minus - a) such that on [a, a+delta]
//   (1/2) d2W(a) (1-eta) (s-a)^2 <= W(s) <= (1/2) d2W(a) (1+eta) (s-a)^2
// holds at all sample points. Bisection on delta; the window is nested.
inline double taylor_delta(const Potential& p, double eta) {
    if (!(eta > 0.0 && eta < 0.5))
        throw std::domain_error("taylor_delta: eta must lie in (0, 1/2)");
    const double half_curv = 0.5 * p.d2W(p.a);
    if (!(half_curv > 0.0))
        throw std::domain_error("taylor_delta: d2W(a) must be positive");
    const int n = 2000;
    auto ok = [&](double delta) {
        for (int i = 1; i <= n; ++i) {
            const double s = p.a + delta * double(i) / n;
            const double q = half_curv * (s - p.a) * (s - p.a);
            const double w = detail::eval_checked(p, s);
            if (w < (1.0 - eta) * q || w > (1.0 + eta) * q) return false;
        }
        return true;
    };
    const double cap = p.alpha_minus - p.a;
    if (ok(cap)) return cap;
    double lo = 0.0, hi = cap;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (ok(mid) ? lo : hi) = mid;
    }
    if (!(lo > 0.0))
        throw std::domain_error("taylor_delta: no positive delta admissible");
    return lo;
}

// --- factories ------------------------------------------------------------

inline Potential quartic_potential() {
    Potential p;
    p.W = [](double s) { const double q = 1.0 - s * s; return q * q; };
    p.dW = [](double s) { return -4.0 * s * (1.0 - s * s); };
    p.d2W = [](double s) { return 12.0 * s * s - 4.0; };
    p.a = -1.0; p.b = 1.0; p.c = 0.0;
    p.alpha_minus = -0.5; p.beta_minus = 0.5;
    p.name = "quartic";
    p.sigma = sigma_bound(p);
    return p;
}

inline Potential asym_quartic_potential(double a, double b) {
    if (!(a < b)) throw std::domain_error("asym_quartic_potential: need a < b");
    Potential p;
    p.W = [a, b](double s) {
        const double u = s - a, v = s - b;
        return u * u * v * v;
    };
    p.dW = [a, b](double s) {
        const double u = s - a, v = s - b;
        return 2.0 * u * v * (u + v);
    };
    p.d2W = [a, b](double s) {
        const double u = s - a, v = s - b;
        return 2.0 * (u * u + 4.0 * u * v + v * v);
    };
    p.a = a; p.b = b; p.c = 0.5 * (a + b);
    p.alpha_minus = a + 0.25 * (b - a);
    p.beta_minus = b - 0.25 * (b - a);
    p.name = "asym_quartic";
    p.sigma = sigma_bound(p);
    return p;
}

// W given by a coefficient table W(s) = sum_k coeffs[k] s^k with declared
// wells; the saddle is located by bisection on dW inside (a, b).
inline Potential polynomial_potential(const std::vector<double>& coeffs,
                                      double a, double b) {
    if (!(a < b)) throw std::domain_error("polynomial_potential: need a < b");
    if (coeffs.empty()) throw std::domain_error("polynomial_potential: empty table");
    auto horner = [](const std::vector<double>& cs, double s) {
        double v = 0.0;
        for (size_t i = cs.size(); i-- > 0;) v = v * s + cs[i];
        return v;
    };
    std::vector<double> d1(coeffs.size() > 1 ? coeffs.size() - 1 : 1, 0.0);
    for (size_t k = 1; k < coeffs.size(); ++k) d1[k - 1] = coeffs[k] * double(k);
    std::vector<double> d2(d1.size() > 1 ? d1.size() - 1 : 1, 0.0);
    for (size_t k = 1; k < d1.size(); ++k) d2[k - 1] = d1[k] * double(k);

    Potential p;
    p.W = [coeffs, horner](double s) { return horner(coeffs, s); };
    p.dW = [d1, horner](double s) { return horner(d1, s); };
    p.d2W = [d2, horner](double s) { return horner(d2, s); };
    p.a = a; p.b = b;
    // saddle: interior maximum of W, found as the sign change of dW.
    double lo = a + 1e-6 * (b - a), hi = b - 1e-6 * (b - a);
    double best = 0.5 * (a + b), best_w = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 400; ++i) {
        const double s = lo + (hi - lo) * double(i) / 400;
        const double w = p.W(s);
        if (w > best_w) { best_w = w; best = s; }
    }
    double l = std::max(lo, best - (b - a) / 400), r = std::min(hi, best + (b - a) / 400);
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (l + r);
        (p.dW(mid) > 0.0 ? l : r) = mid;
    }
    p.c = 0.5 * (l + r);
    p.alpha_minus = a + 0.25 * std::min(p.c - a, 0.5 * (b - a));
    p.beta_minus = b - 0.25 * std::min(b - p.c, 0.5 * (b - a));
    p.name = "poly";
    p.sigma = sigma_bound(p);
    return p;
}

} // namespace blayer

#endif
