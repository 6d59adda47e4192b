#include <catch2/catch_amalgamated.hpp>

#include <blayer/field2d.hpp>
#include <blayer/minimizer1d.hpp>
#include <blayer/potential.hpp>
#include <blayer/profile.hpp>

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace blayer;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// unit circle with a plateau arc of length pi/4 centered at arclength 0,
// the configuration used throughout the planar experiments
BoundaryData reference_data(const BoundaryGeometry& geom, double w = 0.8) {
    const double ell = M_PI / 4.0;
    std::vector<PlateauArc> arcs{{geom.length - 0.5 * ell, ell}};
    return make_boundary_data(geom, arcs, w);
}

BoundaryData constant_data(double value, double length) {
    BoundaryData d;
    d.g = [value](double) { return value; };
    d.dg = [](double) { return 0.0; };
    d.bump_a = [](double) { return 0.0; };
    d.d_bump_a = [](double) { return 0.0; };
    d.bump_b = [](double) { return 0.0; };
    d.d_bump_b = [](double) { return 0.0; };
    d.boundary_length = length;
    return d;
}

} // namespace

TEST_CASE("boundary data validation", "[field2d]") {
    const auto circle = circle_boundary(1.0, 512);
    const std::vector<PlateauArc> one{{0.0, 0.5}};

    CHECK_THROWS_AS(make_boundary_data(circle, one, -0.1), std::domain_error);
    CHECK_THROWS_AS(make_boundary_data(circle, one, 0.0), std::domain_error);
    CHECK_THROWS_AS(make_boundary_data(circle, one, 0.3, 1.0), std::domain_error);
    CHECK_THROWS_AS(make_boundary_data(circle, one, 0.3, 2.0, 1.5, 1.0),
                    std::domain_error);
    CHECK_THROWS_AS(make_boundary_data(circle, one, 0.3, 2.0, -0.1, 0.0),
                    std::domain_error);
    CHECK_THROWS_AS(make_boundary_data(circle, one, 0.3, 2.0, 1.0, 0.0, "cubic"),
                    std::domain_error);
    CHECK_THROWS_AS(make_boundary_data(circle, one, 0.3, 2.0, 1.0, 0.0, "quintic_b"),
                    std::domain_error);

    // plateau covering the whole boundary leaves no room for the b phase
    const std::vector<PlateauArc> full{{0.0, circle.length - 0.1}};
    CHECK_THROWS_AS(make_boundary_data(circle, full, 0.1), std::domain_error);

    // two arcs whose gap cannot hold two transitions and a b stretch
    const std::vector<PlateauArc> close{{0.0, 0.5}, {0.7, 0.5}};
    CHECK_THROWS_AS(make_boundary_data(circle, close, 0.1), std::domain_error);

    // the dip of a star lobe curves toward the domain: plateau rejected there
    const auto star = star_boundary(0.2, 3, 2048);
    const std::vector<PlateauArc> dip{{star.length / 6.0 - 0.05, 0.1}};
    CHECK_THROWS_AS(make_boundary_data(star, dip, 0.05), std::domain_error);
}

TEST_CASE("trace structure of the reference configuration", "[field2d]") {
    const auto circle = circle_boundary(1.0, 1024);
    const auto data = reference_data(circle);
    const double L = circle.length;

    REQUIRE_THAT(data.plateau_length, WithinAbs(M_PI / 4.0, 1e-12));

    // plateau center sits at arclength 0; the arc spans +-pi/8 around it
    CHECK_THAT(data.g(0.0), WithinAbs(-1.0, 1e-15));
    CHECK_THAT(data.g(M_PI / 8.0 - 1e-9), WithinAbs(-1.0, 1e-15));
    CHECK_THAT(data.g(L - M_PI / 8.0 + 1e-9), WithinAbs(-1.0, 1e-15));
    CHECK_THAT(data.g(M_PI), WithinAbs(1.0, 1e-15));
    CHECK_THAT(data.g(M_PI / 8.0 + 0.8 + 1e-9), WithinAbs(1.0, 1e-15));

    for (int i = 0; i < 1000; ++i) {
        const double y = L * (i + 0.5) / 1000.0;
        const double g = data.g(y);
        REQUIRE(g >= -1.0);
        REQUIRE(g <= 1.0);
        const double ge = data.g_eps(y, 1.0 / 64.0);
        REQUIRE(ge >= -1.0);
        REQUIRE(ge <= 1.0);
        REQUIRE(std::fabs(ge - g) <= 1.0 / (64.0 * 64.0) + 1e-15);
    }

    // trace slope matches central differences inside a transition
    for (double y : {M_PI / 8.0 + 0.2, M_PI / 8.0 + 0.63, L - M_PI / 8.0 - 0.41}) {
        const double h = 1e-5;
        const double fd = (data.g(y + h) - data.g(y - h)) / (2.0 * h);
        CHECK_THAT(data.dg(y), WithinAbs(fd, 1e-6));
    }

    // perturbation peaks at the plateau center and vanishes at the arc ends
    const double eps = 1.0 / 32.0;
    CHECK_THAT(data.g_eps(0.0, eps), WithinAbs(-1.0 + eps * eps, 1e-15));
    CHECK_THAT(data.g_eps(M_PI / 8.0, eps), WithinAbs(-1.0, 1e-15));
}

TEST_CASE("tangential trace energy scales linearly in eps", "[field2d]") {
    const auto circle = circle_boundary(1.0, 1024);
    const auto data = reference_data(circle);

    // quintic smoothstep: eps int |g_eps'|^2 = eps (b-a)^2 (10/7) 2/w + O(eps^3)
    const double closed = (1.0 / 64.0) * 80.0 / (7.0 * 0.8);
    const double t6 = tangential_energy(data, 1.0 / 64.0);
    REQUIRE_THAT(t6, WithinAbs(2.232142935991e-01, 1e-10));
    REQUIRE_THAT(t6, WithinAbs(closed, 1e-7));

    const double t9 = tangential_energy(data, std::ldexp(1.0, -9));
    const double t12 = tangential_energy(data, std::ldexp(1.0, -12));
    REQUIRE_THAT(t9, WithinAbs(2.790178571453e-02, 1e-11));
    REQUIRE_THAT(t12, WithinAbs(3.487723214286e-03, 1e-12));
    // the hypothesis eps int |grad_tau g_eps|^2 -> 0 holds with rate eps
    CHECK_THAT(t9 / t6, WithinAbs(0.125, 1e-6));
    CHECK_THAT(t12 / t9, WithinAbs(0.125, 1e-6));
}

TEST_CASE("constant-b state against chord competitors", "[field2d]") {
    const auto circle = circle_boundary(1.0, 2048);

    SECTION("no plateau: b wins outright") {
        const auto data = make_boundary_data(circle, {}, 0.3);
        CHECK_THAT(data.g(1.0), WithinAbs(1.0, 1e-15));
        const auto r = check_u0_b(circle, data, quartic_potential());
        CHECK_THAT(r.F1_b, WithinAbs(0.0, 1e-12));
        CHECK_THAT(r.F1_a, WithinAbs((8.0 / 3.0) * circle.length, 1e-6));
        CHECK(r.margin > 0.0);
        CHECK(r.ok);
    }

    SECTION("pi/4 plateau: a chord through the contact arc beats b") {
        // the cap competitor saves C_W (ell - 2 sin(ell/2)) of transition mass
        // over the constant state, so strict minimality of b fails here
        const auto data = reference_data(circle);
        const auto r = check_u0_b(circle, data, quartic_potential());
        REQUIRE_THAT(r.F1_b, WithinAbs(4.227728521823, 1e-9));
        REQUIRE_THAT(r.F1_a, WithinAbs(12.527432297322, 1e-9));
        REQUIRE_THAT(r.best_split, WithinAbs(4.031899087133, 1e-9));
        REQUIRE_THAT(r.margin, WithinAbs(-0.195829434690, 1e-9));
        CHECK(r.F1_b < r.F1_a);
        CHECK_FALSE(r.ok);
    }
}

TEST_CASE("recovery field traces and landing times", "[field2d]") {
    const auto circle = circle_boundary(1.0, 2048);
    const auto data = reference_data(circle);
    const auto q = quartic_potential();
    const double eps = 1.0 / 64.0;

    const Field2D field = recovery_field(circle, data, q, eps, 0.25, 256);
    REQUIRE(field.form == "fiber");
    REQUIRE(field.fibers.size() == 256);
    for (std::size_t i = 0; i < field.fibers.size(); i += 37) {
        CHECK_THAT(field.trace[i], WithinAbs(data.g_eps(field.fy[i], eps), 1e-15));
        CHECK_THAT(field.fibers[i].v.front(), WithinAbs(field.trace[i], 1e-12));
        CHECK_THAT(field.fibers[i].v.back(), WithinAbs(1.0, 1e-12));
    }

    CHECK_THROWS_AS(recovery_field(circle, data, q, eps, 0.9, 256),
                    std::domain_error);
    CHECK_THROWS_AS(recovery_field(circle, data, q, -0.1, 0.25, 256),
                    std::domain_error);
}

TEST_CASE("fiber energy ladder of the reference configuration", "[field2d]") {
    const auto circle = circle_boundary(1.0, 2048);
    const auto data = reference_data(circle);
    const auto q = quartic_potential();
    const double pred = predicted_F2(circle, data, q);
    REQUIRE_THAT(pred, WithinAbs(-M_PI / 6.0, 1e-12));

    struct Rung {
        int k;
        double F2, tang, land, l1;
    };
    std::vector<Rung> rungs;
    for (int k : {6, 10, 11, 12}) {
        const double eps = std::ldexp(1.0, -k);
        const Field2D rec = recovery_field(circle, data, q, eps, 0.25, 1024);
        const EnergyF2D e = energy_F(rec, q, circle);
        const SecondOrder2D so = second_order_F2(rec, q, circle, data);
        REQUIRE_THAT(so.subtraction, WithinAbs(4.227728435727, 1e-9));
        rungs.push_back({k, so.value, so.tangential_share, e.landing_sup,
                         e.L1_to_b / (eps * std::fabs(std::log(eps)))});
    }

    REQUIRE_THAT(rungs[0].F2, WithinAbs(-1.312121228752, 1e-9));
    REQUIRE_THAT(rungs[3].F2, WithinAbs(-1.037921475100, 1e-9));
    REQUIRE_THAT(rungs[0].tang, WithinAbs(1.275494426245e-01, 1e-10));
    REQUIRE_THAT(rungs[3].tang, WithinAbs(2.419546834122e-03, 1e-12));

    for (const auto& r : rungs) {
        CHECK(r.land < 1.0);
        CHECK(r.l1 < 1.5);
    }
    for (std::size_t i = 1; i < rungs.size(); ++i) {
        CHECK(rungs[i].tang < rungs[i - 1].tang);
        CHECK(rungs[i].land < rungs[i - 1].land);
    }
    // the gap to the predicted coefficient shrinks over the last three rungs
    CHECK(std::fabs(rungs[2].F2 - pred) < std::fabs(rungs[1].F2 - pred));
    CHECK(std::fabs(rungs[3].F2 - pred) < std::fabs(rungs[2].F2 - pred));
    // tangential term stays below a twentieth of the coefficient magnitude
    CHECK(rungs[3].tang < 0.05 * std::fabs(pred));
}

TEST_CASE("radially symmetric data reduce to the 1D weighted energy",
          "[field2d]") {
    const auto circle = circle_boundary(1.0, 1024);
    const auto q = quartic_potential();
    const auto data = constant_data(-1.0, circle.length);
    const double eps = 1.0 / 64.0;
    const double delta = 0.25;

    const Field2D field = recovery_field(circle, data, q, eps, delta, 64);
    const EnergyF2D e = energy_F(field, q, circle);

    const ProfileGrid prof = recovery_profile(q, eps, -1.0, 1.0, delta);
    const WeightFn w = affine_weight(-1.0, delta);
    const double e1d = discrete_energy(q, w, eps, prof.t, prof.v);
    REQUIRE_THAT(e.F_eps, WithinRel(circle.length * eps * e1d, 1e-12));
    CHECK_THAT(e.tangential, WithinAbs(0.0, 1e-15));
}

TEST_CASE("constant-b data carry zero energy", "[field2d]") {
    const auto circle = circle_boundary(1.0, 512);
    const auto q = quartic_potential();
    const auto data = make_boundary_data(circle, {}, 0.3);

    const Field2D field = recovery_field(circle, data, q, 1.0 / 32.0, 0.25, 64);
    const EnergyF2D e = energy_F(field, q, circle);
    CHECK_THAT(e.F_eps, WithinAbs(0.0, 1e-14));
    const SecondOrder2D so = second_order_F2(field, q, circle, data);
    CHECK_THAT(so.value, WithinAbs(0.0, 1e-12));
    CHECK_THAT(so.subtraction, WithinAbs(0.0, 1e-14));
}

TEST_CASE("predicted coefficient is additive over plateau arcs", "[field2d]") {
    const auto circle = circle_boundary(1.0, 1024);
    const auto q = quartic_potential();

    const auto both = make_boundary_data(
        circle, {{0.3, M_PI / 8.0}, {3.0, M_PI / 16.0}}, 0.2);
    const auto first = make_boundary_data(circle, {{0.3, M_PI / 8.0}}, 0.2);
    const auto second = make_boundary_data(circle, {{3.0, M_PI / 16.0}}, 0.2);

    const double vb = predicted_F2(circle, both, q);
    REQUIRE_THAT(vb, WithinAbs(-(2.0 / 3.0) * (3.0 * M_PI / 16.0), 1e-10));
    REQUIRE_THAT(vb,
                 WithinAbs(predicted_F2(circle, first, q) +
                               predicted_F2(circle, second, q),
                           1e-12));

    const auto empty = make_boundary_data(circle, {}, 0.2);
    CHECK_THAT(predicted_F2(circle, empty, q), WithinAbs(0.0, 1e-15));

    // a quartically flat well has no finite coefficient
    Potential octic = q;
    octic.W = [](double s) {
        const double r = 1.0 - s * s;
        return r * r * r * r;
    };
    octic.dW = [](double s) {
        const double r = 1.0 - s * s;
        return -8.0 * s * r * r * r;
    };
    octic.d2W = [](double s) {
        const double r = 1.0 - s * s;
        return -8.0 * r * r * r + 48.0 * s * s * r * r;
    };
    CHECK_THROWS_AS(predicted_F2(circle, first, octic), std::domain_error);
}

TEST_CASE("tubular and Cartesian quadrature agree", "[field2d]") {
    const auto circle = circle_boundary(1.0, 2048);
    const auto data = reference_data(circle);
    const auto q = quartic_potential();
    const double eps = 1.0 / 32.0;

    const Field2D rec = recovery_field(circle, data, q, eps, 0.25, 512);
    const EnergyF2D e = energy_F(rec, q, circle);
    REQUIRE_THAT(e.F_eps, WithinAbs(1.276708352124e-01, 1e-11));
    const double cart = energy_F_cartesian(rec, q, circle, eps / 6.0);
    REQUIRE_THAT(cart, WithinAbs(1.277072128333e-01, 1e-11));
    REQUIRE(std::fabs(cart - e.F_eps) / e.F_eps < 5e-3);
}

TEST_CASE("form mismatches are rejected", "[field2d]") {
    const auto circle = circle_boundary(0.5, 512);
    const auto q = quartic_potential();
    const double L = circle.length;
    const auto data = make_boundary_data(circle, {{L - L / 16.0, L / 8.0}}, 0.35);

    const Field2D rec = recovery_field(circle, data, q, 1.0 / 16.0, 0.25, 64);
    CHECK_THROWS_AS(energy_F_grid(rec, q), std::invalid_argument);

    CHECK_THROWS_AS(minimize_F_grid(circle, data, q, 1.0 / 16.0, 1.0 / 32.0),
                    std::domain_error);
    CHECK_THROWS_AS(minimize_F_grid(circle, data, q, -1.0, 0.0),
                    std::domain_error);
}

TEST_CASE("grid descent reaches a bounded state below the recovery energy",
          "[field2d][grid]") {
    const auto circle = circle_boundary(0.5, 1024);
    const auto q = quartic_potential();
    const double L = circle.length;
    const auto data = make_boundary_data(circle, {{L - L / 16.0, L / 8.0}}, 0.35);
    const double eps = 1.0 / 16.0;

    const Field2D rec = recovery_field(circle, data, q, eps, 0.25, 512);
    const EnergyF2D erec = energy_F(rec, q, circle);
    REQUIRE_THAT(erec.F_eps, WithinAbs(1.190896855393e-01, 1e-11));

    Field2D grid = minimize_F_grid(circle, data, q, eps, eps / 4.0);
    REQUIRE(grid.form == "grid");
    REQUIRE_THAT(grid.grid.F_eps, WithinAbs(1.127093381283e-01, 1e-9));
    CHECK(grid.grid.F_eps < erec.F_eps * 1.02);
    CHECK(energy_F_grid(grid, q) == grid.grid.F_eps);

    double umin = 1e300, umax = -1e300;
    for (int i = 0; i < grid.grid.nx * grid.grid.ny; ++i)
        if (grid.grid.mask[i]) {
            umin = std::min(umin, grid.grid.u[i]);
            umax = std::max(umax, grid.grid.u[i]);
        }
    CHECK(umin >= -1.0);
    CHECK(umax <= 1.0);

    const DecayReport dr =
        check_decay(grid, circle, q, {0.6 * eps, 0.8 * eps, eps});
    CHECK(dr.negative_slope);
    CHECK(dr.in_range);
    CHECK_THAT(dr.slope, WithinAbs(-0.810676, 1e-4));
    for (std::size_t i = 1; i < dr.sup_deficit.size(); ++i)
        CHECK(dr.sup_deficit[i] < dr.sup_deficit[i - 1]);

    CHECK_THROWS_AS(check_decay(grid, circle, q, {0.2, 0.25, 0.3}),
                    std::domain_error);
}
