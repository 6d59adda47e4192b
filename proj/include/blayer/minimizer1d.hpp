#ifndef BLAYER_MINIMIZER1D_HPP
#define BLAYER_MINIMIZER1D_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <cfloat>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <blayer/geodesic.hpp>
#include <blayer/potential.hpp>
#include <blayer/profile.hpp>

namespace blayer {

// Weight on [0, T]: the planar tubular prototype is omega(t) = 1 + kappa t.
struct WeightFn {
    std::function<double(double)> omega;
    std::function<double(double)> d_omega;
    double T = 1.0;
    double omega0_gap = 0.0;        // omega_0 margin when relevant
    bool strictly_increasing = false;
    double holder_norm = 0.0;       // |omega'| variation estimate on the grid
    std::string name = "custom";
};

inline WeightFn affine_weight(double slope, double T = 1.0) {
    WeightFn w;
    w.omega = [slope](double t) { return 1.0 + slope * t; };
    w.d_omega = [slope](double) { return slope; };
    w.T = T;
    w.strictly_increasing = slope > 0.0;
    w.holder_norm = 0.0;
    w.name = slope >= 0 ? "affine+" : "affine-";
    return w;
}

// min omega > 0 on a dense grid; if flagged increasing, omega' > 0 too.
inline void validate_weight(const WeightFn& w, int n = 2048) {
    if (!w.omega || !w.d_omega)
        throw std::domain_error("weight: omega and d_omega must be set");
    if (!(w.T > 0.0)) throw std::domain_error("weight: T must be positive");
    for (int i = 0; i <= n; ++i) {
        const double t = w.T * double(i) / n;
        if (!(w.omega(t) > 0.0))
            throw std::domain_error("weight: omega must stay positive on [0, T]");
        if (w.strictly_increasing && !(w.d_omega(t) > 0.0))
            throw std::domain_error("weight: omega' must stay positive on [0, T]");
    }
}

// Energies of one profile at every rescaling level, plus the window split
// A + B + C + D of the second-order energy.
struct EnergyReport {
    double G_eps = 0.0;          // raw: int (W + eps^2 v'^2) omega
    double G1 = 0.0;             // G_eps / eps
    double G2_eps_scale = 0.0;   // (G1 - d_W(alpha, b) omega(0)) / eps
    double G2_log_scale = 0.0;   // (G1 - C_W omega(0)) / (eps |log eps|)
    double A = 0.0, B = 0.0, C = 0.0, D = 0.0;
    double subtraction = 0.0;    // constant removed inside A
    double scale_R = 0.0;        // eps or eps |log eps|
    double T_split = 0.0;        // layer window end used for the split
    std::string mode;            // "eps" or "eps_log"
};

struct Minimizer1DResult {
    ProfileGrid profile;
    double el_residual_max = 0.0; // projected optimality residual, EL units
    EnergyReport energies;
    double initial_energy = 0.0;  // discrete objective at the starting iterate
    double final_energy = 0.0;    // discrete objective at the solution
    int newton_iterations = 0;
    bool used_fallback = false;
    bool strictly_interior = true; // no active obstacle contact at convergence
    int contact_nodes = 0;         // nodes pinned at a well by an outward force
    std::vector<double> residual_history;
};

struct MonotonicityReport {
    bool monotone_window = true;   // v' > 0 wherever v <= b - tau0 sqrt(eps)
    int monotone_violations = 0;
    bool bounds_near_a = true;     // two-sided slope comparison on [a+tau0 sqrt(eps), beta_-]
    bool bounds_near_b = true;     // same on [alpha_-, b - tau0 sqrt(eps)]
    int bound_violations = 0;
    double tau0 = 0.0;
};

struct HittingReport {
    double T_eps = 0.0;        // first crossing of beta_eps - eps^k
    double T_ratio = 0.0;      // T_eps / (eps |log eps|)
    double S_eta = 0.0;        // first crossing of a + delta_eta
    double S_ratio = 0.0;      // S * sqrt(2 W''(a)) / ((1 - eta) eps |log eps|)
    double slope_min = 0.0;    // min sqrt(eps) |v'| over the a-side layer window
    double delta_eta = 0.0;
};

struct G1Candidate {
    std::string kind;          // "constant_a", "constant_b", "jump_ab", "jump_ba"
    double value = 0.0;
    double t0 = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

// 3-point Gauss rule on [0, 1]; exact through degree 5, so the W-term of a
// P1 iterate is integrated exactly for quartic wells with affine weights.
inline constexpr double kGx[3] = {0.1127016653792583, 0.5, 0.8872983346207417};
inline constexpr double kGw[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

// Graded mesh for the layer problem: uniform eps/grid_size spacing through
// the layer, geometric coarsening to ~T/256 in the bulk, and a mirrored
// mild refinement into t = T.
inline std::vector<double> graded_mesh(double eps, double t_layer, double T,
                                       int grid_size) {
    const double h_f = eps / grid_size;
    std::vector<double> ts{0.0};
    const double layer_end = std::min(t_layer, 0.5 * T);
    const long nf = std::lround(std::ceil(layer_end / h_f));
    for (long j = 1; j <= nf; ++j) ts.push_back(h_f * double(j));

    const double dt_mid = T / 256.0;
    double dt = h_f;
    while (dt < dt_mid && ts.back() + 1.15 * dt < T) {
        dt *= 1.15;
        ts.push_back(ts.back() + dt);
    }

    // refinement chain approaching T, from dt_mid down to ~eps/32
    std::vector<double> chain;
    double dt_r = dt_mid;
    while (dt_r > eps / 32.0 && chain.size() < 200) {
        dt_r /= 1.3;
        chain.push_back(dt_r);
    }
    double chain_len = 0.0;
    for (double c : chain) chain_len += c;

    const double back_start = T - chain_len;
    if (back_start > ts.back() + 0.25 * dt_mid) {
        const double gap = back_start - ts.back();
        const long m = std::max<long>(1, std::lround(gap / dt_mid));
        const double h = gap / double(m);
        for (long j = 1; j <= m; ++j) ts.push_back(ts.back() + h);
        // guard against drift
        ts.back() = back_start;
    }
    for (double c : chain)
        if (ts.back() + 0.5 * c < T) ts.push_back(std::min(T, ts.back() + c));
    if (T - ts.back() > 1e-15 * T) ts.push_back(T);
    else ts.back() = T;

    // enforce strict monotonicity
    std::vector<double> out{ts.front()};
    for (double t : ts)
        if (t > out.back() + 1e-16 * T) out.push_back(t);
    out.back() = T;
    return out;
}

// Extended-precision mesh cache used inside the solver. The element residual
// normalizes the nodal gradient by (eps / dt)^2-sized factors, so plain
// double differencing of v bottoms out near 1e-9 at grid_size 1024; carrying
// the iterate in long double keeps the attainable floor orders below the
// acceptance threshold.
struct SolverMesh {
    std::vector<long double> t, dt, tbar;
    std::vector<long double> sw;         // per element: sum_i w_i omega(q_i)
    std::vector<long double> wq[3];      // per element: w_i omega(q_i)

    void build(const std::vector<double>& ts, const WeightFn& w) {
        const std::size_t n = ts.size();
        t.assign(ts.begin(), ts.end());
        dt.assign(n - 1, 0.0L);
        tbar.assign(n, 0.0L);
        sw.assign(n - 1, 0.0L);
        for (int i = 0; i < 3; ++i) wq[i].assign(n - 1, 0.0L);
        for (std::size_t j = 0; j + 1 < n; ++j) {
            dt[j] = t[j + 1] - t[j];
            for (int i = 0; i < 3; ++i) {
                const double q = ts[j] + kGx[i] * double(dt[j]);
                wq[i][j] = kGw[i] * w.omega(q);
                sw[j] += wq[i][j];
            }
        }
        for (std::size_t j = 0; j < n; ++j) {
            const long double dl = j > 0 ? dt[j - 1] : 0.0L;
            const long double dr = j + 1 < n ? dt[j] : 0.0L;
            tbar[j] = 0.5L * (dl + dr);
        }
    }
};

// Discrete objective sum_el int (W(v)/eps + eps v'^2) omega with the element
// rule above; v is P1 over the mesh.
struct SolverG1 {
    const Potential* p = nullptr;
    const SolverMesh* m = nullptr;
    long double eps = 0.0L;

    long double energy(const std::vector<long double>& v) const {
        long double e = 0.0L;
        for (std::size_t j = 0; j + 1 < v.size(); ++j) {
            const long double vp = (v[j + 1] - v[j]) / m->dt[j];
            long double wsum = 0.0L;
            for (int i = 0; i < 3; ++i) {
                const long double vi = v[j] + (v[j + 1] - v[j]) * (long double)kGx[i];
                wsum += m->wq[i][j] * (long double)p->W(double(vi));
            }
            e += m->dt[j] * wsum / eps + eps * vp * vp * m->dt[j] * m->sw[j];
        }
        return e;
    }

    void gradient(const std::vector<long double>& v,
                  std::vector<long double>& g) const {
        const std::size_t n = v.size();
        g.assign(n, 0.0L);
        for (std::size_t j = 0; j + 1 < n; ++j) {
            const long double vp = (v[j + 1] - v[j]) / m->dt[j];
            long double g0 = -2.0L * eps * vp * m->sw[j];
            long double g1 = 2.0L * eps * vp * m->sw[j];
            for (int i = 0; i < 3; ++i) {
                const long double x = kGx[i];
                const long double vi = v[j] + (v[j + 1] - v[j]) * x;
                const long double dw = m->wq[i][j] * (long double)p->dW(double(vi));
                g0 += m->dt[j] / eps * dw * (1.0L - x);
                g1 += m->dt[j] / eps * dw * x;
            }
            g[j] += g0;
            g[j + 1] += g1;
        }
        g.front() = g.back() = 0.0L;
    }

    void hessian(const std::vector<long double>& v, long double mu,
                 std::vector<long double>& diag,
                 std::vector<long double>& off) const {
        const std::size_t n = v.size();
        diag.assign(n, 1.0L);
        off.assign(n - 1, 0.0L);
        std::vector<long double> dacc(n, 0.0L);
        for (std::size_t j = 0; j + 1 < n; ++j) {
            const long double stiff = 2.0L * eps * m->sw[j] / m->dt[j];
            long double h00 = stiff, h11 = stiff, h01 = -stiff;
            for (int i = 0; i < 3; ++i) {
                const long double x = kGx[i];
                const long double vi = v[j] + (v[j + 1] - v[j]) * x;
                const long double d2w = m->wq[i][j] * (long double)p->d2W(double(vi));
                h00 += m->dt[j] / eps * d2w * (1.0L - x) * (1.0L - x);
                h11 += m->dt[j] / eps * d2w * x * x;
                h01 += m->dt[j] / eps * d2w * x * (1.0L - x);
            }
            dacc[j] += h00;
            dacc[j + 1] += h11;
            off[j] = h01;
        }
        for (std::size_t j = 1; j + 1 < n; ++j)
            diag[j] = dacc[j] + mu * m->tbar[j];
    }

    // stiffness-only operator (the v'-part), for the semi-implicit flow
    void stiffness(std::vector<long double>& diag,
                   std::vector<long double>& off) const {
        const std::size_t n = m->t.size();
        diag.assign(n, 1.0L);
        off.assign(n - 1, 0.0L);
        for (std::size_t j = 1; j + 1 < n; ++j)
            diag[j] = 2.0L * eps * (m->sw[j - 1] / m->dt[j - 1] + m->sw[j] / m->dt[j]);
        for (std::size_t j = 1; j + 2 < n; ++j)
            off[j] = -2.0L * eps * m->sw[j] / m->dt[j];
    }
};

// Thomas solve of the interior tridiagonal system; returns false on a
// non-positive or vanishing pivot (signals an indefinite matrix upstream).
template <class Real>
inline bool thomas_interior(std::vector<Real> diag, std::vector<Real> off,
                            std::vector<Real> rhs, std::vector<Real>& x) {
    const std::size_t n = diag.size();
    x.assign(n, Real(0));
    if (n < 3) return true;
    for (std::size_t j = 2; j + 1 < n; ++j) {
        if (!(diag[j - 1] > 0)) return false;
        const Real f = off[j - 1] / diag[j - 1];
        diag[j] -= f * off[j - 1];
        rhs[j] -= f * rhs[j - 1];
    }
    if (!(diag[n - 2] > 0)) return false;
    x[n - 2] = rhs[n - 2] / diag[n - 2];
    for (std::size_t j = n - 3; j >= 1; --j) {
        x[j] = (rhs[j] - off[j] * x[j + 1]) / diag[j];
        if (j == 1) break;
    }
    return true;
}

} // namespace detail

inline EnergyReport energy_report(const Potential& p, const WeightFn& w,
                                  double eps, const ProfileGrid& g,
                                  const std::string& mode);

// Element-rule objective of arbitrary nodal values on an arbitrary mesh; the
// exact discrete functional the solver minimizes.
inline double discrete_energy(const Potential& p, const WeightFn& w, double eps,
                              const std::vector<double>& ts,
                              const std::vector<double>& vs) {
    if (ts.size() != vs.size() || ts.size() < 2)
        throw std::invalid_argument("discrete_energy: mismatched mesh");
    detail::SolverMesh m;
    m.build(ts, w);
    detail::SolverG1 sys{&p, &m, (long double)eps};
    std::vector<long double> v(vs.begin(), vs.end());
    return double(sys.energy(v));
}

// Damped Newton minimization of the discrete layer functional with a
// semi-implicit gradient-flow fallback. The iterate starts from the recovery
// profile and is clamped to [a, b] throughout; optimality is measured by the
// projected gradient in Euler-Lagrange units, so nodes resting on a well
// (the far field rounds there in finite precision) are not miscounted as
// obstacle contact unless an outward force holds them.
inline Minimizer1DResult minimize_G(const Potential& p, const WeightFn& w,
                                    double eps, double alpha_eps, double beta_eps,
                                    int grid_size = 1024) {
    validate_weight(w);
    if (!(eps > 0.0)) throw std::domain_error("minimize_G: eps must be positive");
    const double span = p.b - p.a;
    if (alpha_eps < p.a - 1e-12 * span || beta_eps > p.b + 1e-12 * span ||
        alpha_eps > beta_eps)
        throw std::domain_error("minimize_G: need a <= alpha_eps <= beta_eps <= b");

    const double T = w.T;
    const double t_land = psi_epsilon(p, eps, alpha_eps, beta_eps);
    const auto ts = detail::graded_mesh(eps, 1.25 * t_land, T, grid_size);
    detail::SolverMesh mesh;
    mesh.build(ts, w);
    detail::SolverG1 sys{&p, &mesh, (long double)eps};
    const std::size_t n = ts.size();
    const long double la = p.a, lb = p.b;
    const long double lalpha = alpha_eps, lbeta = beta_eps;

    // initial iterate: recovery profile sampled on this mesh
    const ProfileGrid rec = recovery_profile(p, eps, alpha_eps, beta_eps, T);
    std::vector<long double> v(n);
    for (std::size_t j = 0; j < n; ++j)
        v[j] = std::clamp(rec.value_at(ts[j]), p.a, p.b);
    v.front() = lalpha;
    v.back() = lbeta;

    Minimizer1DResult out;
    long double energy = sys.energy(v);
    out.initial_energy = double(energy);

    double wp_scale = 0.0, om_max = 0.0;
    for (int i = 0; i <= 400; ++i) {
        wp_scale = std::max(wp_scale, std::abs(p.dW(p.a + span * i / 400.0)));
        om_max = std::max(om_max, w.omega(T * i / 400.0));
    }
    const double res_criterion = 1e-10 * wp_scale * om_max;

    // projected residual: at a node pinned to a well only the outward force
    // counts (KKT multiplier); elsewhere the full gradient does
    auto el_residual = [&](const std::vector<long double>& vv,
                           const std::vector<long double>& g) {
        long double r = 0.0L;
        for (std::size_t j = 1; j + 1 < n; ++j) {
            long double gj = g[j];
            if (vv[j] <= la) gj = std::min(gj, 0.0L);       // only g < 0 pulls out
            else if (vv[j] >= lb) gj = std::max(gj, 0.0L);  // only g > 0 pushes out
            r = std::max(r, std::abs(gj) * sys.eps / mesh.tbar[j]);
        }
        return double(r);
    };

    std::vector<long double> g, diag, off, delta, trial(n);
    long double mu = 0.0L;
    int flow_rounds = 0;

    for (int it = 0; it < 200; ++it) {
        sys.gradient(v, g);
        const double res = el_residual(v, g);
        out.residual_history.push_back(res);
        if (res <= 0.5 * res_criterion) break;

        // stall detection: residual no longer improving and already acceptable
        const auto& h = out.residual_history;
        if (h.size() > 6 && res <= res_criterion && res > 0.5 * h[h.size() - 6])
            break;

        // deep in the Newton basin the predicted decrease sinks below the
        // rounding noise of the total energy; accept steps up to that noise
        const bool basin = res <= 1e-5 * wp_scale * om_max;
        const long double noise =
            64.0L * LDBL_EPSILON * (std::abs(energy) + 1.0L);

        bool stepped = false;
        for (int tries = 0; tries < 60 && !stepped; ++tries) {
            sys.hessian(v, mu, diag, off);
            std::vector<long double> rhs(n, 0.0L);
            for (std::size_t j = 1; j + 1 < n; ++j) rhs[j] = -g[j];
            if (!detail::thomas_interior(diag, off, rhs, delta)) {
                mu = std::max(mu * 4.0L, 1.0L);
                continue;
            }
            long double gdot = 0.0L;
            for (std::size_t j = 1; j + 1 < n; ++j) gdot += g[j] * delta[j];
            if (!(gdot < 0.0L)) {
                mu = std::max(mu * 4.0L, 1.0L);
                continue;
            }
            long double lambda = 1.0L;
            for (int bt = 0; bt < 45; ++bt, lambda *= 0.5L) {
                for (std::size_t j = 0; j < n; ++j)
                    trial[j] = std::clamp(v[j] + lambda * delta[j], la, lb);
                trial.front() = lalpha;
                trial.back() = lbeta;
                const long double e_new = sys.energy(trial);
                if (e_new <= energy + 1e-4L * lambda * gdot ||
                    (e_new < energy && lambda < 1e-6L) ||
                    (basin && e_new <= energy + noise)) {
                    v.swap(trial);
                    energy = e_new;
                    stepped = true;
                    mu *= 0.25L;
                    break;
                }
            }
            if (!stepped) mu = std::max(mu * 4.0L, 1.0L);
        }
        ++out.newton_iterations;

        if (!stepped) {
            // fallback: semi-implicit gradient flow (implicit stiffness)
            if (++flow_rounds > 8) {
                std::ostringstream os;
                os << "minimize_G: no descent direction; residuals:";
                for (double r : out.residual_history) os << ' ' << r;
                throw std::runtime_error(os.str());
            }
            out.used_fallback = true;
            long double tau = sys.eps * sys.eps;
            std::vector<long double> kd, ko;
            sys.stiffness(kd, ko);
            for (int step = 0; step < 200; ++step) {
                sys.gradient(v, g);
                std::vector<long double> d2(kd), rhs(n, 0.0L);
                for (std::size_t j = 1; j + 1 < n; ++j) {
                    d2[j] += mesh.tbar[j] / tau;
                    const long double lin =
                        2.0L * sys.eps *
                        ((v[j] - v[j - 1]) / mesh.dt[j - 1] * mesh.sw[j - 1] -
                         (v[j + 1] - v[j]) / mesh.dt[j] * mesh.sw[j]);
                    rhs[j] = mesh.tbar[j] / tau * v[j] - (g[j] - lin);
                }
                // boundary coupling of the implicit stiffness
                rhs[1] += 2.0L * sys.eps * mesh.sw[0] / mesh.dt[0] * lalpha;
                rhs[n - 2] += 2.0L * sys.eps * mesh.sw[n - 2] / mesh.dt[n - 2] * lbeta;
                if (!detail::thomas_interior(d2, ko, rhs, delta)) break;
                for (std::size_t j = 1; j + 1 < n; ++j)
                    trial[j] = std::clamp(delta[j], la, lb);
                trial.front() = lalpha;
                trial.back() = lbeta;
                const long double e_new = sys.energy(trial);
                if (e_new <= energy) {
                    v = trial;
                    energy = e_new;
                    tau *= 1.25L;
                } else {
                    tau *= 0.5L;
                    if (tau < 1e-8L * sys.eps * sys.eps) break;
                }
            }
            mu = 0.0L;
        }
    }

    sys.gradient(v, g);
    out.el_residual_max = el_residual(v, g);
    if (out.el_residual_max > res_criterion) {
        std::ostringstream os;
        os << "minimize_G: residual " << out.el_residual_max << " above "
           << res_criterion << "; history:";
        for (double r : out.residual_history) os << ' ' << r;
        throw std::runtime_error(os.str());
    }
    out.final_energy = double(energy);

    // obstacle contact: pinned at a well with an outward force above the
    // optimality threshold
    for (std::size_t j = 1; j + 1 < n; ++j) {
        const bool at_a = v[j] <= la, at_b = v[j] >= lb;
        if (!at_a && !at_b) continue;
        const double force = double(std::abs(g[j]) * sys.eps / mesh.tbar[j]);
        const bool outward = (at_a && g[j] > 0.0L) || (at_b && g[j] < 0.0L);
        if (outward && force > res_criterion) ++out.contact_nodes;
    }
    out.strictly_interior = out.contact_nodes == 0;

    ProfileGrid& prof = out.profile;
    prof.t = ts;
    prof.v.assign(v.begin(), v.end());
    prof.epsilon = eps;
    prof.alpha_eps = alpha_eps;
    prof.beta_eps = beta_eps;
    prof.extension_value = beta_eps;
    prof.delta_reg = 0.0;
    const double thresh = beta_eps - eps * eps; // k = 2 crossing
    auto hit = hitting_times(prof, {thresh, p.c});
    prof.T_eps = hit.count(thresh) ? hit.at(thresh) : T;
    if (hit.count(p.c)) prof.L_eps = hit.at(p.c);

    const bool degenerate_datum = (alpha_eps - p.a) <= std::sqrt(eps);
    out.energies = energy_report(p, w, eps, prof,
                                 degenerate_datum ? "eps_log" : "eps");
    return out;
}

// Windowed energy accounting of one admissible profile. The split point is
// the profile's own T_eps; every term uses the same element rule as the
// solver, so minimizer and competitor values are directly comparable.
inline EnergyReport energy_report(const Potential& p, const WeightFn& w,
                                  double eps, const ProfileGrid& g,
                                  const std::string& mode) {
    if (mode != "eps" && mode != "eps_log")
        throw std::invalid_argument("energy_report: mode must be eps or eps_log");
    if (g.size() < 2)
        throw std::invalid_argument("energy_report: profile too short");
    const double span = p.b - p.a;
    if (std::abs(g.v.front() - g.alpha_eps) > 1e-9 * span ||
        std::abs(g.v.back() - g.extension_value) > 1e-9 * span)
        throw std::invalid_argument("energy_report: boundary data mismatch");
    if (std::abs(g.t.back() - w.T) > 1e-9 * std::max(1.0, w.T))
        throw std::invalid_argument("energy_report: profile domain differs from weight domain");

    EnergyReport rep;
    rep.mode = mode;
    rep.T_split = std::clamp(g.T_eps, 0.0, g.t.back());

    const double om0 = w.omega(0.0);
    const double dom0 = w.d_omega(0.0);
    auto r1 = [&](double t) { return w.omega(t) - om0 - dom0 * t; };

    double raw = 0.0;       // int (W + eps^2 v'^2) omega
    double a_int = 0.0, b_int = 0.0, c_int = 0.0, d_int = 0.0;
    const double Ts = rep.T_split;

    // one sub-segment [ta, tb] inside an element with slope vp from va
    auto accumulate = [&](double ta, double tb, double va, double vp, bool layer) {
        const double h = tb - ta;
        if (h <= 0.0) return;
        for (int i = 0; i < 3; ++i) {
            const double q = ta + detail::kGx[i] * h;
            const double vq = va + vp * (q - ta);
            const double f = p.W(vq) / eps + eps * vp * vp;
            const double wt = detail::kGw[i] * h;
            raw += wt * eps * f * w.omega(q);
            if (layer) {
                a_int += wt * f;
                b_int += wt * f * q;
                c_int += wt * f * r1(q);
            } else {
                d_int += wt * f * w.omega(q);
            }
        }
    };

    for (std::size_t j = 0; j + 1 < g.size(); ++j) {
        const double t0 = g.t[j], t1 = g.t[j + 1];
        const double dt = t1 - t0;
        if (dt <= 0.0) continue;
        const double vp = (g.v[j + 1] - g.v[j]) / dt;
        if (t1 <= Ts) {
            accumulate(t0, t1, g.v[j], vp, true);
        } else if (t0 >= Ts) {
            accumulate(t0, t1, g.v[j], vp, false);
        } else {
            accumulate(t0, Ts, g.v[j], vp, true);
            accumulate(Ts, t1, g.v[j] + vp * (Ts - t0), vp, false);
        }
    }

    rep.G_eps = raw;
    rep.G1 = raw / eps;

    const GeodesicTable table(p);
    const double log_eps = std::fabs(std::log(eps));
    const double sub_log = table.c_w();
    const double sub_eps = table.distance(g.alpha_eps, p.b);

    rep.G2_log_scale = (rep.G1 - sub_log * om0) / (eps * log_eps);
    rep.G2_eps_scale = (rep.G1 - sub_eps * om0) / eps;

    const double R = mode == "eps_log" ? eps * log_eps : eps;
    rep.scale_R = R;
    rep.subtraction = mode == "eps_log" ? sub_log : sub_eps;
    rep.A = (a_int - rep.subtraction) * om0 / R;
    rep.B = b_int * dom0 / R;
    rep.C = c_int / R;
    rep.D = d_int / R;
    return rep;
}

// v' > 0 below the b-side threshold, and the two-sided slope comparisons in
// their stated windows. Assessed per element at the midpoint value.
inline MonotonicityReport check_monotonicity(const Minimizer1DResult& res,
                                             const Potential& p, double eps,
                                             double tau0) {
    MonotonicityReport rep;
    rep.tau0 = tau0;
    const ProfileGrid& g = res.profile;
    const double sigma = detail::sigma_or_compute(p);
    const double edge = tau0 * std::sqrt(eps);

    for (std::size_t j = 0; j + 1 < g.size(); ++j) {
        const double dt = g.t[j + 1] - g.t[j];
        if (dt <= 0.0) continue;
        const double vm = 0.5 * (g.v[j] + g.v[j + 1]);
        const double vp = (g.v[j + 1] - g.v[j]) / dt;
        const double s2 = eps * eps * vp * vp;

        if (vm <= p.b - edge && !(vp > 0.0)) {
            rep.monotone_window = false;
            ++rep.monotone_violations;
        }
        if (vm >= p.a + edge && vm <= p.beta_minus) {
            const double d = vm - p.a;
            if (!(0.5 * sigma * sigma * d * d <= s2)) {
                rep.bounds_near_a = false;
                ++rep.bound_violations;
            }
            if (!(s2 <= 1.5 * d * d / (sigma * sigma))) {
                rep.bounds_near_a = false;
                ++rep.bound_violations;
            }
        }
        if (vm >= p.alpha_minus && vm <= p.b - edge) {
            const double d = p.b - vm;
            if (!(0.5 * sigma * sigma * d * d <= s2)) {
                rep.bounds_near_b = false;
                ++rep.bound_violations;
            }
            if (!(s2 <= 1.5 * d * d / (sigma * sigma))) {
                rep.bounds_near_b = false;
                ++rep.bound_violations;
            }
        }
    }
    return rep;
}

// Smallest tau0 in {1,2,4,8}/sigma for which every window assertion holds
// on the given solve; freeze the value found at the coarsest ladder rung.
inline double calibrate_tau0(const Minimizer1DResult& res, const Potential& p,
                             double eps) {
    const double sigma = detail::sigma_or_compute(p);
    for (double mult : {1.0, 2.0, 4.0, 8.0}) {
        const double tau = mult / sigma;
        const MonotonicityReport r = check_monotonicity(res, p, eps, tau);
        if (r.monotone_window && r.bounds_near_a && r.bounds_near_b) return tau;
    }
    throw std::runtime_error("calibrate_tau0: no candidate threshold satisfies the windows");
}

// Hitting-time diagnostics of a minimizer profile.
inline HittingReport check_hitting_bounds(const Minimizer1DResult& res,
                                          const Potential& p, const WeightFn& w,
                                          double eps, double eta, int k,
                                          double tau0) {
    (void)w;
    HittingReport rep;
    const ProfileGrid& g = res.profile;
    const double log_eps = std::fabs(std::log(eps));
    rep.delta_eta = taylor_delta(p, eta);

    const double thresh_T = g.beta_eps - std::pow(eps, double(k));
    const double thresh_S = p.a + rep.delta_eta;
    auto hit = hitting_times(g, {thresh_T, thresh_S});
    rep.T_eps = hit.count(thresh_T) ? hit.at(thresh_T) : g.t.back();
    rep.S_eta = hit.count(thresh_S) ? hit.at(thresh_S) : g.t.back();
    rep.T_ratio = rep.T_eps / (eps * log_eps);
    rep.S_ratio = rep.S_eta * std::sqrt(2.0 * p.d2W(p.a)) /
                  ((1.0 - eta) * eps * log_eps);

    double mn = std::numeric_limits<double>::infinity();
    const double hi = p.a + tau0 * std::sqrt(eps);
    for (std::size_t j = 0; j + 1 < g.size(); ++j) {
        const double dt = g.t[j + 1] - g.t[j];
        if (dt <= 0.0) continue;
        const double vm = 0.5 * (g.v[j] + g.v[j + 1]);
        if (vm < g.alpha_eps || vm > hi) continue;
        const double vp = (g.v[j + 1] - g.v[j]) / dt;
        mn = std::min(mn, std::sqrt(eps) * std::abs(vp));
    }
    rep.slope_min = std::isfinite(mn) ? mn : 0.0;
    return rep;
}

// First-order limit energies over the candidate class: the two constants and
// a single well-to-well jump at t0 on a uniform grid.
inline G1Candidate g1_limit_minimizer(const Potential& p, const WeightFn& w,
                                      double alpha, double beta) {
    const GeodesicTable table(p);
    const double om0 = w.omega(0.0), omT = w.omega(w.T);

    G1Candidate best;
    best.kind = "constant_a";
    best.value = table.distance(p.a, alpha) * om0 + table.distance(p.a, beta) * omT;

    const double vb = table.distance(p.b, alpha) * om0 + table.distance(p.b, beta) * omT;
    if (vb < best.value) best = {"constant_b", vb, std::numeric_limits<double>::quiet_NaN()};

    const int n = 512;
    for (int i = 1; i < n; ++i) {
        const double t0 = w.T * double(i) / n;
        const double jump = table.c_w() * w.omega(t0);
        const double up = jump + table.distance(p.a, alpha) * om0 +
                          table.distance(p.b, beta) * omT;
        if (up < best.value) best = {"jump_ab", up, t0};
        const double down = jump + table.distance(p.b, alpha) * om0 +
                            table.distance(p.a, beta) * omT;
        if (down < best.value) best = {"jump_ba", down, t0};
    }
    return best;
}

} // namespace blayer

#endif
