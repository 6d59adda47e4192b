#pragma once

// Planar boundary-layer fields on a tubular collar. A boundary trace g that
// sits at the well b except on prescribed arcs (where it touches the well a)
// generates a recovery field fiber by fiber; the collar energy splits into a
// normal part, weighted by the tubular Jacobian, and a tangential part that
// the clock construction makes available in closed form. A cut-cell grid
// minimizer provides the reference minimum for the same data.

#include <blayer/geodesic.hpp>
#include <blayer/geometry.hpp>
#include <blayer/minimizer1d.hpp>
#include <blayer/potential.hpp>
#include <blayer/profile.hpp>
#include <blayer/quadrature.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace blayer {

// One boundary arc on which the trace rests at the lower well a.
// start is arclength, normalized modulo the boundary length.
struct PlateauArc {
    double start = 0.0;
    double length = 0.0;
};

// Dirichlet datum on the boundary: base trace g with plateau arcs at a,
// transitions of width w to the ambient value b, and well-side perturbations
// of size eps^gamma that push the trace into the interior of [a, b].
struct BoundaryData {
    double a = -1.0, b = 1.0;
    std::function<double(double)> g, dg;            // base trace, arclength variable
    std::function<double(double)> bump_a, d_bump_a; // supported inside the plateaus
    std::function<double(double)> bump_b, d_bump_b; // supported inside the b stretches
    double gamma = 2.0;                             // perturbation exponent, > 1
    double A0 = 0.0, B0 = 0.0;                      // perturbation amplitudes
    std::vector<PlateauArc> plateau;
    double plateau_length = 0.0;
    double transition_width = 0.0;
    double boundary_length = 0.0;
    std::string shape = "quintic";

    // Amplitude validation at construction keeps g + pert inside [a, b];
    // the clamp only strips rounding at the touching points.
    double g_eps(double y, double eps) const {
        const double pert = std::pow(eps, gamma) *
                            (A0 * bump_a(y) - B0 * bump_b(y));
        return std::min(b, std::max(a, g(y) + pert));
    }
    double dg_eps(double y, double eps) const {
        return dg(y) + std::pow(eps, gamma) *
                           (A0 * d_bump_a(y) - B0 * d_bump_b(y));
    }
};

namespace field_detail {

inline double wrap_length(double y, double L) {
    double r = std::fmod(y, L);
    if (r < 0.0) r += L;
    return r;
}

// signed cyclic offset in [-L/2, L/2)
inline double wrap_signed(double y, double L) {
    double r = wrap_length(y, L);
    if (r >= 0.5 * L) r -= L;
    return r;
}

// transition shapes on [0, 1], value 0 at 0 and 1 at 1
inline double smooth_quintic(double x) { return x * x * x * (10.0 + x * (-15.0 + 6.0 * x)); }
inline double smooth_quintic_d(double x) { return 30.0 * x * x * (1.0 - x) * (1.0 - x); }

inline double flat_f(double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; }
inline double smooth_flat(double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double fa = flat_f(x), fb = flat_f(1.0 - x);
    return fa / (fa + fb);
}
inline double smooth_flat_d(double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    const double fa = flat_f(x), fb = flat_f(1.0 - x);
    const double da = fa / (x * x), db = fb / ((1.0 - x) * (1.0 - x));
    const double s = fa + fb;
    return (da * fb + fa * db) / (s * s);
}

// cubic-in-u^2 bump on |u| < 1, C^2 at the edge
inline double bump_shape(double u) {
    if (std::fabs(u) >= 1.0) return 0.0;
    const double q = 1.0 - u * u;
    return q * q * q;
}
inline double bump_shape_d(double u) {
    if (std::fabs(u) >= 1.0) return 0.0;
    const double q = 1.0 - u * u;
    return -6.0 * u * q * q;
}

} // namespace field_detail

// Builds the trace for a set of plateau arcs: g = a on each arc, g = b away
// from them, smoothstep transitions of width w in between. The perturbations
// a -> a + A0 eps^gamma and b -> b - B0 eps^gamma act through bumps supported
// on the central 80 percent of each plateau and of each b stretch. Arcs must
// lie where the boundary curves away from the domain (weight 1 + t kappa
// decreasing), with a margin of one transition width.
//
// Transition shapes: "quintic" is the C^2 smoothstep x^3(10 - 15x + 6x^2);
// "flat" is the C-infinity partition built from exp(-1/x), whose one-sided
// contact with the wells is exponentially flat instead of cubic.
inline BoundaryData make_boundary_data(const BoundaryGeometry& geom,
                                       std::vector<PlateauArc> arcs,
                                       double transition_width,
                                       double gamma = 2.0, double A0 = 1.0,
                                       double B0 = 0.0,
                                       std::string shape = "quintic") {
    using namespace field_detail;
    const double L = geom.length;
    if (!(transition_width > 0.0))
        throw std::domain_error("boundary data: transition width must be positive");
    if (!(gamma > 1.0))
        throw std::domain_error("boundary data: need gamma > 1");
    if (A0 < 0.0 || B0 < 0.0 || A0 + B0 > 2.0)
        throw std::domain_error("boundary data: perturbation amplitudes must be in [0, 2]");
    if (shape != "quintic" && shape != "flat")
        throw std::domain_error("boundary data: unknown transition shape");

    for (auto& arc : arcs) {
        if (!(arc.length > 0.0) || arc.length + 2.0 * transition_width >= L)
            throw std::domain_error("boundary data: arc does not fit on the boundary");
        arc.start = wrap_length(arc.start, L);
    }
    std::sort(arcs.begin(), arcs.end(),
              [](const PlateauArc& u, const PlateauArc& v) { return u.start < v.start; });

    // gaps between consecutive arcs leave room for two transitions and a
    // nondegenerate b stretch
    std::vector<double> gap_start, gap_len;
    for (std::size_t k = 0; k < arcs.size(); ++k) {
        const auto& cur = arcs[k];
        const auto& nxt = arcs[(k + 1) % arcs.size()];
        double gap = nxt.start - (cur.start + cur.length);
        if (k + 1 == arcs.size()) gap += L;
        if (arcs.size() == 1) gap = L - cur.length;
        if (gap < 2.5 * transition_width)
            throw std::domain_error("boundary data: arcs too close for the transitions");
        gap_start.push_back(wrap_length(cur.start + cur.length + transition_width, L));
        gap_len.push_back(gap - 2.0 * transition_width);
    }

    // the expansion needs the contact arcs on concavely curved boundary;
    // enforce kappa < 0 on each arc extended by the transition width
    for (const auto& arc : arcs) {
        const int n = 256;
        for (int i = 0; i <= n; ++i) {
            const double y = wrap_length(
                arc.start - transition_width +
                    (arc.length + 2.0 * transition_width) * double(i) / n, L);
            if (!(curvature(geom, y) < 0.0))
                throw std::domain_error(
                    "boundary data: plateau arc needs negative curvature throughout");
        }
    }

    BoundaryData d;
    d.gamma = gamma;
    d.A0 = A0;
    d.B0 = B0;
    d.plateau = arcs;
    d.transition_width = transition_width;
    d.boundary_length = L;
    d.shape = shape;
    for (const auto& arc : arcs) d.plateau_length += arc.length;

    const double a = d.a, b = d.b, w = transition_width;
    const bool flat = shape == "flat";
    auto S = flat ? smooth_flat : smooth_quintic;
    auto Sd = flat ? smooth_flat_d : smooth_quintic_d;

    d.g = [arcs, L, w, a, b, S](double y) {
        for (const auto& arc : arcs) {
            const double off = wrap_length(y - arc.start, L);
            if (off <= arc.length) return a;
            if (off <= arc.length + w)
                return a + (b - a) * S((off - arc.length) / w);
            if (off >= L - w) return a + (b - a) * S((L - off) / w);
        }
        return b;
    };
    d.dg = [arcs, L, w, a, b, Sd](double y) {
        for (const auto& arc : arcs) {
            const double off = wrap_length(y - arc.start, L);
            if (off <= arc.length) return 0.0;
            if (off <= arc.length + w)
                return (b - a) * Sd((off - arc.length) / w) / w;
            if (off >= L - w) return -(b - a) * Sd((L - off) / w) / w;
        }
        return 0.0;
    };

    d.bump_a = [arcs, L](double y) {
        double s = 0.0;
        for (const auto& arc : arcs) {
            const double c = arc.start + 0.5 * arc.length, hw = 0.4 * arc.length;
            s += bump_shape(wrap_signed(y - c, L) / hw);
        }
        return s;
    };
    d.d_bump_a = [arcs, L](double y) {
        double s = 0.0;
        for (const auto& arc : arcs) {
            const double c = arc.start + 0.5 * arc.length, hw = 0.4 * arc.length;
            s += bump_shape_d(wrap_signed(y - c, L) / hw) / hw;
        }
        return s;
    };
    d.bump_b = [gap_start, gap_len, L](double y) {
        double s = 0.0;
        for (std::size_t k = 0; k < gap_start.size(); ++k) {
            const double c = gap_start[k] + 0.5 * gap_len[k], hw = 0.4 * gap_len[k];
            s += bump_shape(wrap_signed(y - c, L) / hw);
        }
        return s;
    };
    d.d_bump_b = [gap_start, gap_len, L](double y) {
        double s = 0.0;
        for (std::size_t k = 0; k < gap_start.size(); ++k) {
            const double c = gap_start[k] + 0.5 * gap_len[k], hw = 0.4 * gap_len[k];
            s += bump_shape_d(wrap_signed(y - c, L) / hw) / hw;
        }
        return s;
    };

    if (arcs.empty()) {
        d.g = [b](double) { return b; };
        d.dg = [](double) { return 0.0; };
        d.bump_a = [](double) { return 0.0; };
        d.d_bump_a = [](double) { return 0.0; };
        d.bump_b = [](double) { return 0.0; };
        d.d_bump_b = [](double) { return 0.0; };
    }
    return d;
}

// Boundary trace that dips from b down to an intermediate level over the
// given arcs without touching a. Each arc holds a flat stretch at the dip
// level with smooth ramps of the given width at both ends, so the trace is
// C^2 and the state b stays the flat-limit minimizer whenever the level is
// close enough to b. No curvature restriction applies since {g = a} is empty.
inline BoundaryData make_dip_data(const BoundaryGeometry& geom,
                                  std::vector<PlateauArc> arcs,
                                  double transition_width, double level) {
    using namespace field_detail;
    const double L = geom.length;
    if (!(transition_width > 0.0))
        throw std::domain_error("dip data: transition width must be positive");
    BoundaryData d;
    if (!(level > d.a) || !(level < d.b))
        throw std::domain_error("dip data: level must sit strictly between the wells");
    for (auto& arc : arcs) {
        if (!(arc.length > 2.0 * transition_width) || arc.length >= L)
            throw std::domain_error("dip data: arc cannot hold both ramps");
        arc.start = wrap_length(arc.start, L);
    }
    std::sort(arcs.begin(), arcs.end(),
              [](const PlateauArc& u, const PlateauArc& v) { return u.start < v.start; });
    for (std::size_t k = 0; k + 1 < arcs.size(); ++k)
        if (arcs[k].start + arcs[k].length > arcs[k + 1].start)
            throw std::domain_error("dip data: arcs overlap");
    if (arcs.size() > 1 &&
        arcs.back().start + arcs.back().length > arcs.front().start + L)
        throw std::domain_error("dip data: arcs overlap");

    d.transition_width = transition_width;
    d.boundary_length = L;
    const double b = d.b, w = transition_width, depth = d.b - level;
    d.g = [arcs, L, w, b, depth](double y) {
        for (const auto& arc : arcs) {
            const double off = wrap_length(y - arc.start, L);
            if (off > arc.length) continue;
            double phi = 1.0;
            if (off < w) phi = smooth_quintic(off / w);
            else if (off > arc.length - w) phi = smooth_quintic((arc.length - off) / w);
            return b - depth * phi;
        }
        return b;
    };
    d.dg = [arcs, L, w, depth](double y) {
        for (const auto& arc : arcs) {
            const double off = wrap_length(y - arc.start, L);
            if (off > arc.length) continue;
            if (off < w) return -depth * smooth_quintic_d(off / w) / w;
            if (off > arc.length - w)
                return depth * smooth_quintic_d((arc.length - off) / w) / w;
            return 0.0;
        }
        return 0.0;
    };
    d.bump_a = [](double) { return 0.0; };
    d.d_bump_a = [](double) { return 0.0; };
    d.bump_b = [](double) { return 0.0; };
    d.d_bump_b = [](double) { return 0.0; };
    return d;
}

// eps int |d/dy g_eps|^2 over the boundary; the expansion hypotheses need
// this to vanish as eps -> 0.
inline double tangential_energy(const BoundaryData& data, double eps, int n = 4096) {
    if (!(eps > 0.0)) throw std::domain_error("tangential_energy: eps must be positive");
    const double L = data.boundary_length;
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        const double y = (i + 0.5) * L / n;
        const double d = data.dg_eps(y, eps);
        s += d * d;
    }
    return eps * s * L / n;
}

// Limit-problem check: among the constant fields a, b and every in/out
// assignment split by a straight chord between boundary grid points, the
// constant field b must be the cheapest. Costs are d_W line integrals plus
// the perimeter penalty C_W per unit chord length.
struct U0Report {
    double F1_b = 0.0;     // cost of the constant field b
    double F1_a = 0.0;     // cost of the constant field a
    double best_split = 0.0; // cheapest chord competitor
    double margin = 0.0;   // min(best_split, F1_a) - F1_b
    bool ok = false;
};

inline U0Report check_u0_b(const BoundaryGeometry& geom, const BoundaryData& data,
                           const Potential& p, int n = 96) {
    if (n < 8) throw std::invalid_argument("check_u0_b: need at least 8 boundary nodes");
    GeodesicTable table(p);
    const double L = geom.length, ds = L / n;
    const double cw = table.c_w();

    std::vector<double> da(n), db(n); // d_W(a, g) and d_W(g, b) per node
    std::vector<CurvePoint> pt(n);
    for (int i = 0; i < n; ++i) {
        const double y = (i + 0.5) * ds;
        const double gv = data.g(y);
        da[i] = table.distance(data.a, gv);
        db[i] = table.distance(gv, data.b);
        pt[i] = tubular_map(geom, y, 0.0);
    }

    // prefix sums make every arc integral O(1)
    std::vector<double> Pa(n + 1, 0.0), Pb(n + 1, 0.0);
    for (int i = 0; i < n; ++i) {
        Pa[i + 1] = Pa[i] + ds * da[i];
        Pb[i + 1] = Pb[i] + ds * db[i];
    }

    U0Report r;
    r.F1_b = Pb[n];
    r.F1_a = Pa[n];
    r.best_split = r.F1_b + r.F1_a + cw * L; // sentinel above any candidate

    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double chord = norm(pt[j] - pt[i]);
            // nodes i..j-1 on one side of the chord, the rest on the other
            const double ina = (Pa[j] - Pa[i]) + (Pb[n] - (Pb[j] - Pb[i]));
            const double inb = (Pb[j] - Pb[i]) + (Pa[n] - (Pa[j] - Pa[i]));
            const double cost = cw * chord + std::min(ina, inb);
            r.best_split = std::min(r.best_split, cost);
        }
    }
    r.margin = std::min(r.best_split, r.F1_a) - r.F1_b;
    r.ok = r.margin > 0.0;
    return r;
}

// Cartesian restriction of a planar field for the grid minimizer. Link slots
// store the cut-cell geometry: theta is the interior fraction of the link,
// bval the Dirichlet value at the crossing.
struct GridField {
    double x0 = 0.0, y0 = 0.0, h = 0.0;
    int nx = 0, ny = 0;
    std::vector<double> u;
    std::vector<unsigned char> mask; // 1 interior
    std::vector<double> theta_e, theta_n, bval_e, bval_n;
    double F_eps = 0.0;
    int iterations = 0;
};

// A planar field in one of two concrete forms: per-fiber profiles over the
// collar (the recovery construction) or a Cartesian grid (the minimizer).
struct Field2D {
    std::string form; // "fiber" or "grid"
    double eps = 0.0;
    double delta = 0.0;  // collar depth carried by the fibers
    double length = 0.0; // boundary length the fibers are spread over
    std::string geometry_name;
    std::vector<double> fy;          // fiber foot points, arclength
    std::vector<double> trace;       // g_eps at the foot points
    std::vector<double> trace_slope; // d/dy g_eps at the foot points
    std::vector<ProfileGrid> fibers;
    GridField grid;
};

// Recovery field: one regularized layer profile per fiber, started at the
// perturbed trace and landed exactly on b, constant past the landing time.
inline Field2D recovery_field(const BoundaryGeometry& geom, const BoundaryData& data,
                              const Potential& p, double eps, double delta,
                              int n_fibers = 1024) {
    if (!(eps > 0.0)) throw std::domain_error("recovery_field: eps must be positive");
    if (!(delta > 0.0) || delta > geom.delta_max * (1.0 + 1e-12))
        throw std::domain_error("recovery_field: collar depth outside (0, delta_max]");
    if (n_fibers < 8) throw std::invalid_argument("recovery_field: need at least 8 fibers");
    if (std::fabs(data.boundary_length - geom.length) > 1e-9 * geom.length)
        throw std::invalid_argument("recovery_field: data built for a different boundary");

    Field2D f;
    f.form = "fiber";
    f.eps = eps;
    f.delta = delta;
    f.length = geom.length;
    f.geometry_name = geom.name;
    f.fy.reserve(n_fibers);
    f.fibers.reserve(n_fibers);
    const double L = geom.length;
    for (int i = 0; i < n_fibers; ++i) {
        const double y = (i + 0.5) * L / n_fibers;
        const double alpha = data.g_eps(y, eps);
        f.fy.push_back(y);
        f.trace.push_back(alpha);
        f.trace_slope.push_back(data.dg_eps(y, eps));
        f.fibers.push_back(recovery_profile(p, eps, alpha, data.b, delta));
    }
    return f;
}

// Collar energy of a fiber field, split into the tubular-weighted normal
// part and the tangential part. The clock construction propagates the trace
// slope along each fiber exactly:
//   d/dy v = g_eps' sqrt(eps + W(v)) / sqrt(eps + W(g_eps))  below the
// landing time and 0 past it, so the tangential energy needs no cross-fiber
// differencing.
struct EnergyF2D {
    double F_eps = 0.0;       // int over the collar of W + eps^2 |grad u|^2
    double normal = 0.0;
    double tangential = 0.0;
    double L1_to_b = 0.0;     // int over the collar of (b - u)
    double landing_sup = 0.0; // max_y T_eps(y) / (eps |log eps|)
    std::vector<double> fiber_normal, fiber_tangential;
};

inline EnergyF2D energy_F(const Field2D& field, const Potential& p,
                          const BoundaryGeometry& geom) {
    if (field.form != "fiber")
        throw std::invalid_argument("energy_F: grid fields carry their own energy");
    const int M = int(field.fibers.size());
    const double L = geom.length, eps = field.eps;
    const double logeps = std::fabs(std::log(eps));

    EnergyF2D e;
    e.fiber_normal.reserve(M);
    e.fiber_tangential.reserve(M);
    for (int i = 0; i < M; ++i) {
        const ProfileGrid& fib = field.fibers[i];
        const double kap = curvature(geom, field.fy[i]);
        WeightFn w = affine_weight(kap, field.delta);

        const double normal = eps * discrete_energy(p, w, eps, fib.t, fib.v);

        // trapezoid up to the landing node; past it the field is constant b
        double tint = 0.0, l1 = 0.0;
        for (std::size_t k = 1; k < fib.t.size(); ++k) {
            const double dt = fib.t[k] - fib.t[k - 1];
            const double om0 = w.omega(fib.t[k - 1]), om1 = w.omega(fib.t[k]);
            l1 += 0.5 * dt * ((p.b - fib.v[k - 1]) * om0 + (p.b - fib.v[k]) * om1);
            if (fib.t[k] <= fib.T_eps) {
                const double q0 = (eps + p.W(fib.v[k - 1])) / om0;
                const double q1 = (eps + p.W(fib.v[k])) / om1;
                tint += 0.5 * dt * (q0 + q1);
            }
        }
        const double sl = field.trace_slope[i];
        const double den = eps + p.W(field.trace[i]);
        const double tangential = eps * eps * sl * sl / den * tint;

        e.fiber_normal.push_back(normal);
        e.fiber_tangential.push_back(tangential);
        e.normal += normal * L / M;
        e.tangential += tangential * L / M;
        e.L1_to_b += l1 * L / M;
        e.landing_sup = std::max(e.landing_sup, fib.T_eps / (eps * logeps));
    }
    e.F_eps = e.normal + e.tangential;
    return e;
}

// Second-order remainder of a fiber field: subtract the first-order line
// integral of d_W(g, b) and rescale by eps^2 |log eps|. The subtraction uses
// the same foot points as the energy so the common quadrature error cancels
// in the difference.
struct SecondOrder2D {
    double value = 0.0;            // (F_eps - eps * subtraction) / (eps^2 |log eps|)
    double difference = 0.0;       // F_eps - eps * subtraction
    double tangential_share = 0.0; // tangential part at the same scale
    double subtraction = 0.0;      // line integral of d_W(g, b)
};

inline SecondOrder2D second_order_F2(const Field2D& field, const Potential& p,
                                     const BoundaryGeometry& geom,
                                     const BoundaryData& data) {
    const EnergyF2D e = energy_F(field, p, geom);
    GeodesicTable table(p);
    const int M = int(field.fy.size());
    const double L = geom.length, eps = field.eps;
    double sub = 0.0;
    for (int i = 0; i < M; ++i)
        sub += table.distance(data.g(field.fy[i]), data.b) * L / M;

    SecondOrder2D r;
    r.subtraction = sub;
    r.difference = e.F_eps - eps * sub;
    const double scale = eps * eps * std::fabs(std::log(eps));
    r.value = r.difference / scale;
    r.tangential_share = e.tangential / scale;
    return r;
}

// Fiber field evaluated at collar coordinates, blended linearly between the
// two neighbouring fibers. Defined for every t >= 0; past a fiber's grid the
// profile continues at its constant extension value.
inline double fiber_value(const Field2D& field, double y, double t) {
    if (field.form != "fiber")
        throw std::invalid_argument("fiber_value: needs a fiber field");
    const int M = int(field.fibers.size());
    const double L = field.length;
    const double u = field_detail::wrap_length(y, L) / L * M - 0.5;
    const int i0 = int(std::floor(u));
    const double frac = u - i0;
    const int ia = (i0 % M + M) % M, ib = (ia + 1) % M;
    return (1.0 - frac) * field.fibers[ia].value_at(t) +
           frac * field.fibers[ib].value_at(t);
}

// Pointwise energy density W + eps^2 |grad u|^2 of a fiber field, written in
// the orthogonal collar frame: |grad u|^2 = v_t^2 + v_y^2 / omega^2. The
// normal slope comes from the defining flow, cut to zero past the landing
// time; the tangential slope is differenced across the fiber pair.
inline double fiber_density(const Field2D& field, const Potential& p,
                            const BoundaryGeometry& geom, double y, double t) {
    if (field.form != "fiber")
        throw std::invalid_argument("fiber_density: needs a fiber field");
    const int M = int(field.fibers.size());
    const double L = geom.length, eps = field.eps;
    const double u = field_detail::wrap_length(y, L) / L * M - 0.5;
    const int i0 = int(std::floor(u));
    const double frac = u - i0;
    const int ia = (i0 % M + M) % M, ib = (ia + 1) % M;

    auto slope_of = [&](int i, double v) {
        const ProfileGrid& fib = field.fibers[i];
        if (t >= fib.T_eps) return 0.0;
        return std::sqrt(fib.delta_reg + std::max(0.0, p.W(v))) / eps;
    };
    const double va = field.fibers[ia].value_at(t), vb = field.fibers[ib].value_at(t);
    const double v = (1.0 - frac) * va + frac * vb;
    const double vt = (1.0 - frac) * slope_of(ia, va) + frac * slope_of(ib, vb);
    const double vy = (vb - va) / (L / M);
    const double om = tubular_weight(geom, field_detail::wrap_length(y, L),
                                     std::min(t, geom.delta_max));
    return p.W(v) + eps * eps * (vt * vt + vy * vy / (om * om));
}

// Collar energy by 2D Cartesian quadrature of the fiber field: midpoint rule
// on full cells, subsampled area fractions on cells cut by the boundary.
// Agreement with energy_F exercises the coordinate inversion and the
// Jacobian weight from the other side.
inline double energy_F_cartesian(const Field2D& field, const Potential& p,
                                 const BoundaryGeometry& geom, double h,
                                 int band_sub = 8) {
    if (field.form != "fiber")
        throw std::invalid_argument("energy_F_cartesian: needs a fiber field");
    if (!(h > 0.0)) throw std::domain_error("energy_F_cartesian: h must be positive");
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& q : geom.pos) {
        xmin = std::min(xmin, q.x); xmax = std::max(xmax, q.x);
        ymin = std::min(ymin, q.y); ymax = std::max(ymax, q.y);
    }
    const int nx = int(std::ceil((xmax - xmin) / h)) + 2;
    const int ny = int(std::ceil((ymax - ymin) / h)) + 2;
    const double x0 = xmin - h, y0 = ymin - h;

    double total = 0.0;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const CurvePoint mid{x0 + (i + 0.5) * h, y0 + (j + 0.5) * h};
            bool corners_in = true;
            for (int c = 0; c < 4; ++c) {
                const CurvePoint q{x0 + (i + (c & 1)) * h, y0 + (j + (c >> 1)) * h};
                if (!point_in_domain(geom, q)) { corners_in = false; break; }
            }
            const bool mid_in = point_in_domain(geom, mid);
            if (!mid_in && corners_in) continue; // cannot happen for h below the reach
            if (mid_in && corners_in) {
                const TubularCoords tc = invert_tubular(geom, mid);
                if (!tc.inside) continue; // deeper than the collar, density zero
                if (tc.t > 1.5 * h) {
                    total += h * h * fiber_density(field, p, geom, tc.y, tc.t);
                    continue;
                }
            } else if (!mid_in) {
                bool any = false;
                for (int c = 0; c < 4 && !any; ++c) {
                    const CurvePoint q{x0 + (i + (c & 1)) * h, y0 + (j + (c >> 1)) * h};
                    any = point_in_domain(geom, q);
                }
                if (!any) continue; // fully outside
            }
            // cut or wall-adjacent cell: resolve the area fraction
            const double sh = h / band_sub;
            for (int sj = 0; sj < band_sub; ++sj)
                for (int si = 0; si < band_sub; ++si) {
                    const CurvePoint q{x0 + i * h + (si + 0.5) * sh,
                                       y0 + j * h + (sj + 0.5) * sh};
                    if (!point_in_domain(geom, q)) continue;
                    const TubularCoords tc = invert_tubular(geom, q);
                    if (!tc.inside) continue;
                    total += sh * sh * fiber_density(field, p, geom, tc.y, tc.t);
                }
        }
    return total;
}

// Predicted second-order coefficient: the curvature integral over the
// plateau arcs weighted by C_W / (sqrt 2 sqrt W''(a)).
inline double predicted_F2(const BoundaryGeometry& geom, const BoundaryData& data,
                           const Potential& p) {
    GeodesicTable table(p);
    const double wpp = p.d2W(p.a);
    if (!(wpp > 0.0))
        throw std::domain_error("predicted_F2: W''(a) must be positive");
    double curv = 0.0;
    for (const auto& arc : data.plateau) {
        const int n = 512;
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            const double y = field_detail::wrap_length(
                arc.start + (i + 0.5) * arc.length / n, geom.length);
            s += curvature(geom, y);
        }
        curv += s * arc.length / n;
    }
    return table.c_w() / (std::sqrt(2.0) * std::sqrt(wpp)) * curv;
}

namespace field_detail {

// crossing of the boundary on the segment p -> q, p inside, q outside;
// returns the interior fraction in (0, 1]
inline double link_fraction(const BoundaryGeometry& geom, CurvePoint p, CurvePoint q) {
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 40; ++it) {
        const double mid = 0.5 * (lo + hi);
        const CurvePoint m{p.x + mid * (q.x - p.x), p.y + mid * (q.y - p.y)};
        if (point_in_domain(geom, m)) lo = mid; else hi = mid;
    }
    return std::max(0.5 * (lo + hi), 1e-6);
}

inline double trace_value_at(const BoundaryGeometry& geom, const BoundaryData& data,
                             double eps, CurvePoint pt) {
    const TubularCoords c = invert_tubular(geom, pt);
    if (!c.inside) {
        // the crossing sits on the boundary up to bisection tolerance; fall
        // back to the nearest sample foot point
        double best = 1e300, y = 0.0;
        for (std::size_t i = 0; i < geom.pos.size(); ++i) {
            const double d2 = dot(geom.pos[i] - pt, geom.pos[i] - pt);
            if (d2 < best) { best = d2; y = geom.s[i]; }
        }
        return data.g_eps(y, eps);
    }
    return data.g_eps(c.y, eps);
}

} // namespace field_detail

// Discrete collar energy of a grid field: node potential terms plus link
// gradient terms, cut links shortened to their interior fraction.
inline double energy_F_grid(const Field2D& field, const Potential& p) {
    if (field.form != "grid")
        throw std::invalid_argument("energy_F_grid: needs a grid field");
    const GridField& g = field.grid;
    const double eps = field.eps, h = g.h;
    double W_term = 0.0, grad_term = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const std::size_t id = std::size_t(j) * g.nx + i;
            if (g.mask[id]) W_term += p.W(g.u[id]) * h * h;
            if (i + 1 < g.nx) {
                const double th = g.theta_e[id];
                if (th > 0.0) {
                    const bool li = g.mask[id], ri = g.mask[id + 1];
                    double du;
                    if (li && ri) du = g.u[id + 1] - g.u[id];
                    else if (li) du = g.bval_e[id] - g.u[id];
                    else du = g.u[id + 1] - g.bval_e[id];
                    grad_term += du * du / th;
                }
            }
            if (j + 1 < g.ny) {
                const double th = g.theta_n[id];
                if (th > 0.0) {
                    const bool bi = g.mask[id], ti = g.mask[id + std::size_t(g.nx)];
                    double du;
                    if (bi && ti) du = g.u[id + std::size_t(g.nx)] - g.u[id];
                    else if (bi) du = g.bval_n[id] - g.u[id];
                    else du = g.u[id + std::size_t(g.nx)] - g.bval_n[id];
                    grad_term += du * du / th;
                }
            }
        }
    return W_term + eps * eps * grad_term;
}

// Semi-implicit gradient flow for the bulk functional on a cut-cell grid,
// with the Shortley-Weller Laplacian and the stabilized local curvature
// treated implicitly and the step size grown adaptively. Iterates are
// clamped to [a, b] and steps that fail to decrease the energy are rejected.
// Starts from the fiber recovery field and stops once the flow is fully
// relaxed and the relative energy decrement falls below 1e-10.
inline Field2D minimize_F_grid(const BoundaryGeometry& geom, const BoundaryData& data,
                               const Potential& p, double eps, double grid_h = 0.0) {
    if (!(eps > 0.0)) throw std::domain_error("minimize_F_grid: eps must be positive");
    if (grid_h == 0.0) grid_h = eps / 4.0;
    if (!(grid_h > 0.0) || grid_h > 0.25 * eps * (1.0 + 1e-12))
        throw std::domain_error("minimize_F_grid: grid spacing must lie in (0, eps/4]");

    Field2D f;
    f.form = "grid";
    f.eps = eps;
    f.delta = geom.delta_max;
    f.length = geom.length;
    f.geometry_name = geom.name;
    GridField& g = f.grid;
    g.h = grid_h;

    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& q : geom.pos) {
        xmin = std::min(xmin, q.x); xmax = std::max(xmax, q.x);
        ymin = std::min(ymin, q.y); ymax = std::max(ymax, q.y);
    }
    g.x0 = xmin - 2.0 * grid_h;
    g.y0 = ymin - 2.0 * grid_h;
    g.nx = int(std::ceil((xmax - g.x0) / grid_h)) + 3;
    g.ny = int(std::ceil((ymax - g.y0) / grid_h)) + 3;
    const std::size_t N = std::size_t(g.nx) * g.ny;
    g.u.assign(N, p.b);
    g.mask.assign(N, 0);
    g.theta_e.assign(N, 0.0);
    g.theta_n.assign(N, 0.0);
    g.bval_e.assign(N, 0.0);
    g.bval_n.assign(N, 0.0);

    auto node = [&](int i, int j) {
        return CurvePoint{g.x0 + i * grid_h, g.y0 + j * grid_h};
    };
    std::vector<unsigned char> in_dom(N, 0);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            in_dom[std::size_t(j) * g.nx + i] = point_in_domain(geom, node(i, j)) ? 1 : 0;

    // The minimizer is b up to an exp(-c depth/eps) deficit, so the unknowns
    // only need to cover a collar a dozen layer widths deep. The truncated
    // inner edge is left free (no coupling), which matches the flat state.
    const double collar = std::min(f.delta, 12.0 * eps);
    f.delta = collar;
    {
        std::vector<CurvePoint> coarse;
        for (std::size_t k = 0; k < geom.pos.size(); k += 8) coarse.push_back(geom.pos[k]);
        const double keep = (collar + 2.0 * grid_h) * (collar + 2.0 * grid_h);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const std::size_t id = std::size_t(j) * g.nx + i;
                if (!in_dom[id]) continue;
                const CurvePoint q = node(i, j);
                double d2 = 1e300;
                for (const auto& c : coarse) {
                    const double dx = q.x - c.x, dy = q.y - c.y;
                    d2 = std::min(d2, dx * dx + dy * dy);
                }
                g.mask[id] = d2 <= keep ? 1 : 0;
            }
    }

    // link geometry and the initial field in one pass over the collar
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const std::size_t id = std::size_t(j) * g.nx + i;
            if (i + 1 < g.nx) {
                const bool li = g.mask[id], ri = g.mask[id + 1];
                if (li && ri) g.theta_e[id] = 1.0;
                else if (li != ri && (!in_dom[id] || !in_dom[id + 1])) {
                    const CurvePoint a = li ? node(i, j) : node(i + 1, j);
                    const CurvePoint b = li ? node(i + 1, j) : node(i, j);
                    const double th = field_detail::link_fraction(geom, a, b);
                    g.theta_e[id] = th;
                    const CurvePoint cross{a.x + th * (b.x - a.x), a.y + th * (b.y - a.y)};
                    g.bval_e[id] = field_detail::trace_value_at(geom, data, eps, cross);
                }
            }
            if (j + 1 < g.ny) {
                const std::size_t up = id + std::size_t(g.nx);
                const bool bi = g.mask[id], ti = g.mask[up];
                if (bi && ti) g.theta_n[id] = 1.0;
                else if (bi != ti && (!in_dom[id] || !in_dom[up])) {
                    const CurvePoint a = bi ? node(i, j) : node(i, j + 1);
                    const CurvePoint b = bi ? node(i, j + 1) : node(i, j);
                    const double th = field_detail::link_fraction(geom, a, b);
                    g.theta_n[id] = th;
                    const CurvePoint cross{a.x + th * (b.x - a.x), a.y + th * (b.y - a.y)};
                    g.bval_n[id] = field_detail::trace_value_at(geom, data, eps, cross);
                }
            }
        }

    // start from the recovery layer so the flow only has to relax it
    {
        const Field2D rec = recovery_field(geom, data, p, eps, geom.delta_max, 1024);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const std::size_t id = std::size_t(j) * g.nx + i;
                if (!g.mask[id]) continue;
                const TubularCoords c = invert_tubular(geom, node(i, j));
                if (!c.inside) continue;
                g.u[id] = fiber_value(rec, c.y, c.t);
            }
    }

    // Linearly implicit gradient flow with an adaptive step: each step solves
    //   (h^2/dt + h^2 [W''(u)]_+ + 2 eps^2 A) delta = -grad E(u)
    // by Gauss-Seidel (the matrix is a strictly dominant M-matrix for any dt),
    // clamps the trial to [a,b], and accepts only if the energy decreased.
    // Accepted steps double dt, so the late phase is a damped Newton method
    // and the slow tangential modes contract in a handful of steps.
    const std::size_t nxs = std::size_t(g.nx);
    const double e2 = 2.0 * eps * eps, h2 = grid_h * grid_h;
    std::vector<double> grad(N, 0.0), diag0(N, 0.0), delta(N, 0.0), trial(N, 0.0);

    auto edge = [&](std::size_t id, std::size_t nb, double th, double u_here,
                    double bv, double& gr, double& dg) {
        if (th <= 0.0) return;
        const double un = g.mask[nb] ? g.u[nb] : bv;
        gr += e2 * (u_here - un) / th;
        dg += e2 / th;
    };
    auto assemble = [&]() {
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const std::size_t id = std::size_t(j) * nxs + i;
                if (!g.mask[id]) continue;
                double gr = h2 * p.dW(g.u[id]);
                double dg = h2 * std::max(0.0, p.d2W(g.u[id]));
                if (i > 0) edge(id, id - 1, g.theta_e[id - 1], g.u[id], g.bval_e[id - 1], gr, dg);
                if (i + 1 < g.nx) edge(id, id + 1, g.theta_e[id], g.u[id], g.bval_e[id], gr, dg);
                if (j > 0) edge(id, id - nxs, g.theta_n[id - nxs], g.u[id], g.bval_n[id - nxs], gr, dg);
                if (j + 1 < g.ny) edge(id, id + nxs, g.theta_n[id], g.u[id], g.bval_n[id], gr, dg);
                grad[id] = gr;
                diag0[id] = dg;
            }
    };
    auto solve_shifted = [&](double dt) {
        std::fill(delta.begin(), delta.end(), 0.0);
        for (int pass = 0; pass < 200; ++pass) {
            double worst = 0.0;
            for (int j = 0; j < g.ny; ++j)
                for (int i = 0; i < g.nx; ++i) {
                    const std::size_t id = std::size_t(j) * nxs + i;
                    if (!g.mask[id]) continue;
                    double off = 0.0;
                    if (i > 0 && g.theta_e[id - 1] > 0.0 && g.mask[id - 1])
                        off += e2 / g.theta_e[id - 1] * delta[id - 1];
                    if (i + 1 < g.nx && g.theta_e[id] > 0.0 && g.mask[id + 1])
                        off += e2 / g.theta_e[id] * delta[id + 1];
                    if (j > 0 && g.theta_n[id - nxs] > 0.0 && g.mask[id - nxs])
                        off += e2 / g.theta_n[id - nxs] * delta[id - nxs];
                    if (j + 1 < g.ny && g.theta_n[id] > 0.0 && g.mask[id + nxs])
                        off += e2 / g.theta_n[id] * delta[id + nxs];
                    const double dnew = (off - grad[id]) / (h2 / dt + diag0[id]);
                    worst = std::max(worst, std::fabs(dnew - delta[id]));
                    delta[id] = dnew;
                }
            if (worst < 1e-13) break;
        }
    };

    double energy = energy_F_grid(f, p);
    const double dt_cap = 1e4;
    double dt = 0.1;
    const int max_steps = 50000;
    int step = 0, accepted = 0;
    for (; step < max_steps; ++step) {
        assemble();
        solve_shifted(dt);
        trial = g.u;
        for (std::size_t id = 0; id < N; ++id)
            if (g.mask[id])
                g.u[id] = std::min(p.b, std::max(p.a, g.u[id] + delta[id]));
        const double e_new = energy_F_grid(f, p);
        if (e_new <= energy) {
            const double drop = energy - e_new;
            energy = e_new;
            ++accepted;
            const bool relaxed = dt >= 0.5 * dt_cap;
            dt = std::min(dt * 2.0, dt_cap);
            if (accepted > 2 && relaxed &&
                drop < 1e-10 * std::max(std::fabs(energy), 1.0)) {
                ++step;
                break;
            }
        } else {
            g.u = trial;
            if (e_new - energy <= 1e-14 * std::max(std::fabs(energy), 1.0)) {
                ++step; // the energy only moves at rounding level, the flow is done
                break;
            }
            dt *= 0.25;
            if (dt < 1e-4)
                throw std::runtime_error("minimize_F_grid: descent stalled");
        }
    }
    if (step >= max_steps)
        throw std::runtime_error("minimize_F_grid: gradient flow did not settle");
    g.F_eps = energy;
    g.iterations = accepted;
    return f;
}

// Interior decay of a grid field: sup of b - u outside the 2 delta collar,
// for a ladder of depths, with the decay rate read off a log-linear fit.
struct DecayReport {
    std::vector<double> delta_over_eps;
    std::vector<double> sup_deficit;
    double slope = 0.0; // log sup_deficit against delta / eps
    bool negative_slope = false;
    bool in_range = false; // a <= u <= b at every interior node
};

inline DecayReport check_decay(const Field2D& field, const BoundaryGeometry& geom,
                               const Potential& p, std::vector<double> deltas = {}) {
    if (field.form != "grid")
        throw std::invalid_argument("check_decay: needs a grid field");
    const GridField& g = field.grid;
    const double eps = field.eps;
    if (deltas.empty()) deltas = {eps, 2.0 * eps, 3.0 * eps};

    DecayReport r;
    r.in_range = true;
    std::vector<double> depth(g.u.size(), 1e300); // distance to the boundary
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const std::size_t id = std::size_t(j) * g.nx + i;
            if (!g.mask[id]) continue;
            if (g.u[id] < p.a - 1e-12 || g.u[id] > p.b + 1e-12) r.in_range = false;
            const CurvePoint q{g.x0 + i * g.h, g.y0 + j * g.h};
            const TubularCoords c = invert_tubular(geom, q);
            if (c.inside) depth[id] = c.t;
        }

    std::vector<double> xs, ys;
    for (double d : deltas) {
        if (!(2.0 * d < geom.delta_max))
            throw std::domain_error("check_decay: depth ladder exceeds the collar");
        double sup = 0.0;
        for (std::size_t id = 0; id < g.u.size(); ++id)
            if (g.mask[id] && depth[id] >= 2.0 * d)
                sup = std::max(sup, p.b - g.u[id]);
        r.delta_over_eps.push_back(d / eps);
        r.sup_deficit.push_back(sup);
        if (sup > 0.0) {
            xs.push_back(d / eps);
            ys.push_back(std::log(sup));
        }
    }
    if (xs.size() >= 2) {
        const auto fit = GeodesicTable::affine_fit(xs, ys);
        r.slope = fit.slope;
        r.negative_slope = fit.slope < 0.0;
    }
    return r;
}

} // namespace blayer
