#ifndef BLAYER_GEODESIC_HPP
#define BLAYER_GEODESIC_HPP

#include <blayer/potential.hpp>
#include <blayer/quadrature.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace blayer {

// Distances between states with no finite path through the barrier report
// this sentinel (IEEE infinity by construction, never an overflow artifact).
inline constexpr double infinite_distance = std::numeric_limits<double>::infinity();

struct LogFit {
    double slope = 0.0;      // coefficient of |log eps|
    double intercept = 0.0;
    double max_residual = 0.0;
};

namespace detail {

// Integrate f over [lo, hi] with sinh-graded handling of the panels that
// touch a well, where the integrand varies on the scale sqrt(reg / W'').
template <class F>
double split_at_wells(const Potential& p, F&& f, double lo, double hi,
                      double reg, double tol) {
    const double quarter = 0.25 * (p.b - p.a);
    const double m1 = p.a + quarter;
    const double m2 = p.b - quarter;
    const double wa = std::sqrt(reg / std::max(1e-12, 0.5 * p.d2W(p.a)));
    const double wb = std::sqrt(reg / std::max(1e-12, 0.5 * p.d2W(p.b)));
    double total = 0.0;
    const double l1 = std::min(hi, m1);
    if (lo < l1) total += integrate_peaked(f, lo, l1, p.a, wa, tol);
    const double l2 = std::max(lo, m1), r2 = std::min(hi, m2);
    if (l2 < r2) total += integrate(f, l2, r2, tol);
    const double l3 = std::max(lo, m2);
    if (l3 < hi) total += integrate_peaked(f, l3, hi, p.b, wb, tol);
    return total;
}

} // namespace detail

// Quadrature-backed view of one potential: geodesic distances, the total
// barrier cost, and the two families of near-well integrals whose behaviour
// in eps (resp. delta) drives every second-order energy in the toolkit.
class GeodesicTable {
public:
    explicit GeodesicTable(Potential pot, double quad_tol = 1e-12)
        : pot_(std::move(pot)), tol_(quad_tol) {
        cw_ = 2.0 * sqrt_w_integral(pot_.a, pot_.b);
    }

    const Potential& potential() const { return pot_; }
    double quad_tol() const { return tol_; }

    // Total cost of a well-to-well transition: 2 * int_a^b sqrt(W).
    double c_w() const { return cw_; }

    // Geodesic distance d(r, s): finite only when one endpoint is a well.
    double distance(double r, double s) const {
        if (!is_well(r) && !is_well(s)) return infinite_distance;
        if (r > s) std::swap(r, s);
        return 2.0 * sqrt_w_integral(r, s);
    }

    // int_lo^hi (eps + W)^(-1/2), the near-well time integral. Diverges like
    // |log eps| as eps -> 0 when an endpoint sits at a well.
    double log_integral(double eps, double lo, double hi) const {
        if (!(eps > 0.0)) throw std::domain_error("log_integral: eps must be positive");
        check_range(lo, hi, "log_integral");
        if (lo == hi) return 0.0;
        auto f = [this, eps](double s) { return 1.0 / std::sqrt(eps + pot_.W(s)); };
        return detail::split_at_wells(pot_, f, lo, hi, eps, tol_);
    }

    // Least-squares fit I(eps) ~ slope * |log eps| + intercept over a ladder
    // of at least three strictly decreasing eps values.
    LogFit log_asymptote_fit(double lo, double hi,
                             const std::vector<double>& ladder) const {
        if (ladder.size() < 3)
            throw std::invalid_argument("log_asymptote_fit: ladder needs >= 3 values");
        for (size_t i = 1; i < ladder.size(); ++i)
            if (!(ladder[i] < ladder[i - 1]))
                throw std::invalid_argument("log_asymptote_fit: ladder must decrease");
        std::vector<double> xs(ladder.size()), ys(ladder.size());
        for (size_t i = 0; i < ladder.size(); ++i) {
            xs[i] = std::abs(std::log(ladder[i]));
            ys[i] = log_integral(ladder[i], lo, hi);
        }
        return affine_fit(xs, ys);
    }

    // int_lo^hi [ 2/((delta+W)^(1/2) + W^(1/2)) - (delta+W)^(-1/2) ].
    // Stays bounded as delta -> 0; the integrand concentrates at the wells.
    double difference_integral(double delta, double lo, double hi) const {
        if (!(delta > 0.0 && delta < 1.0))
            throw std::domain_error("difference_integral: delta must lie in (0,1)");
        check_range(lo, hi, "difference_integral");
        if (lo == hi) return 0.0;
        auto f = [this, delta](double s) {
            const double w = pot_.W(s);
            const double rd = std::sqrt(delta + w);
            return 2.0 / (rd + std::sqrt(w)) - 1.0 / rd;
        };
        return detail::split_at_wells(pot_, f, lo, hi, delta, tol_);
    }

    static LogFit affine_fit(const std::vector<double>& xs,
                             const std::vector<double>& ys) {
        const size_t n = xs.size();
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (size_t i = 0; i < n; ++i) {
            sx += xs[i]; sy += ys[i];
            sxx += xs[i] * xs[i]; sxy += xs[i] * ys[i];
        }
        const double det = double(n) * sxx - sx * sx;
        if (std::abs(det) < 1e-300)
            throw std::invalid_argument("affine_fit: degenerate abscissae");
        LogFit fit;
        fit.slope = (double(n) * sxy - sx * sy) / det;
        fit.intercept = (sy * sxx - sx * sxy) / det;
        for (size_t i = 0; i < n; ++i)
            fit.max_residual = std::max(
                fit.max_residual,
                std::abs(ys[i] - fit.slope * xs[i] - fit.intercept));
        return fit;
    }

private:
    bool is_well(double s) const {
        const double tol = 1e-12 * (pot_.b - pot_.a);
        return std::abs(s - pot_.a) <= tol || std::abs(s - pot_.b) <= tol;
    }

    void check_range(double lo, double hi, const char* who) const {
        if (!(lo <= hi))
            throw std::domain_error(std::string(who) + ": need lo <= hi");
        const double slack = 1e-12 * (pot_.b - pot_.a);
        if (lo < pot_.a - slack || hi > pot_.b + slack)
            throw std::domain_error(std::string(who) + ": range outside [a, b]");
    }

    double sqrt_w_integral(double lo, double hi) const {
        if (lo == hi) return 0.0;
        auto f = [this](double s) { return std::sqrt(std::max(0.0, pot_.W(s))); };
        return detail::split_at_wells(pot_, f, lo, hi, 1.0, tol_);
    }

    Potential pot_;
    double tol_;
    double cw_;
};

} // namespace blayer

#endif
