#include <catch2/catch_amalgamated.hpp>

#include <blayer/minimizer1d.hpp>
#include <blayer/potential.hpp>
#include <blayer/profile.hpp>

#include <cmath>
#include <stdexcept>

using namespace blayer;
using Catch::Matchers::WithinAbs;

namespace {

const double kMoment = (4.0 / 3.0) * std::log(2.0) - 1.0 / 3.0; // 0.590862907413

Minimizer1DResult solve_degenerate(double eps, int grid = 1024) {
    const Potential q = quartic_potential();
    return minimize_G(q, affine_weight(1.0), eps, q.a + eps * eps,
                      q.b - eps * eps, grid);
}

Minimizer1DResult solve_interior(double eps, int grid = 1024) {
    const Potential q = quartic_potential();
    return minimize_G(q, affine_weight(1.0), eps, 0.0, q.b - eps * eps, grid);
}

} // namespace

TEST_CASE("weight construction and validation", "[minimizer1d]") {
    const WeightFn w = affine_weight(1.0);
    REQUIRE(w.name == "affine+");
    REQUIRE(w.strictly_increasing);
    REQUIRE_THAT(w.omega(0.25), WithinAbs(1.25, 1e-15));
    REQUIRE_THAT(w.d_omega(0.9), WithinAbs(1.0, 1e-15));
    REQUIRE_NOTHROW(validate_weight(w));

    // decreasing weights are valid as long as they do not claim otherwise
    const WeightFn dec = affine_weight(-0.5);
    REQUIRE(dec.name == "affine-");
    REQUIRE_FALSE(dec.strictly_increasing);
    REQUIRE_NOTHROW(validate_weight(dec));

    WeightFn lying = affine_weight(-0.5);
    lying.strictly_increasing = true;
    REQUIRE_THROWS_AS(validate_weight(lying), std::domain_error);

    WeightFn empty;
    REQUIRE_THROWS_AS(validate_weight(empty), std::domain_error);

    WeightFn bad_T = affine_weight(1.0);
    bad_T.T = 0.0;
    REQUIRE_THROWS_AS(validate_weight(bad_T), std::domain_error);

    WeightFn negative = affine_weight(1.0);
    negative.omega = [](double t) { return t - 0.5; };
    REQUIRE_THROWS_AS(validate_weight(negative), std::domain_error);
}

TEST_CASE("degenerate datum drives the log-scale remainder", "[minimizer1d]") {
    // second-order coefficient (G1 - C_W omega(0)) / (eps |log eps|) along the
    // ladder, approaching 2/3 from above as the layer cost concentrates
    const double expected[5] = {1.315718429052, 1.161147156063, 1.065335134330,
                                1.000233824900, 0.953260960448};
    const int ks[5] = {6, 8, 10, 12, 14};
    for (int i = 0; i < 5; ++i) {
        const double eps = std::pow(2.0, -ks[i]);
        const auto res = solve_degenerate(eps);
        CAPTURE(ks[i]);
        REQUIRE(res.energies.mode == "eps_log");
        REQUIRE_THAT(res.energies.G2_log_scale, WithinAbs(expected[i], 1e-9));
        REQUIRE_FALSE(res.used_fallback);
        REQUIRE(res.strictly_interior);
        REQUIRE(res.contact_nodes == 0);
        REQUIRE(res.el_residual_max <= 3.1e-10);
        REQUIRE_FALSE(res.residual_history.empty());
        REQUIRE(res.final_energy < res.initial_energy);
    }
}

TEST_CASE("coarse rung energies are pinned", "[minimizer1d]") {
    const auto res = solve_degenerate(std::pow(2.0, -6));
    REQUIRE_THAT(res.energies.G1, WithinAbs(2.752165402871, 1e-9));
    REQUIRE_THAT(res.initial_energy, WithinAbs(2.760216594173, 1e-9));
    REQUIRE_THAT(res.energies.G_eps, WithinAbs(res.energies.G1 * std::pow(2.0, -6), 1e-15));
}

TEST_CASE("interior datum drives the eps-scale remainder", "[minimizer1d]") {
    // (G1 - d_W(alpha, b) omega(0)) / eps creeps up toward the layer moment
    const double expected[4] = {0.583560546, 0.590338244, 0.590774284,
                                0.591550626};
    const int ks[4] = {4, 8, 10, 14};
    for (int i = 0; i < 4; ++i) {
        const double eps = std::pow(2.0, -ks[i]);
        const auto res = solve_interior(eps);
        CAPTURE(ks[i]);
        REQUIRE(res.energies.mode == "eps");
        REQUIRE_THAT(res.energies.G2_eps_scale, WithinAbs(expected[i], 5e-9));
        REQUIRE(std::abs(res.energies.G2_eps_scale - kMoment) < 8e-3);
    }
}

TEST_CASE("mode tracks the distance from the datum to the well", "[minimizer1d]") {
    const Potential q = quartic_potential();
    const WeightFn w = affine_weight(1.0);
    const double eps = std::pow(2.0, -6);
    const double root = std::sqrt(eps);

    const auto near = minimize_G(q, w, eps, q.a + root, q.b - eps * eps);
    REQUIRE(near.energies.mode == "eps_log");

    const auto far = minimize_G(q, w, eps, q.a + 2.0 * root, q.b - eps * eps);
    REQUIRE(far.energies.mode == "eps");
}

TEST_CASE("minimum is non-increasing under refinement", "[minimizer1d]") {
    const double eps = std::pow(2.0, -8);
    double prev = std::numeric_limits<double>::infinity();
    for (int grid : {128, 256, 512, 1024, 2048}) {
        const auto res = solve_degenerate(eps, grid);
        CAPTURE(grid);
        REQUIRE(res.final_energy < prev);
        prev = res.final_energy;
        if (grid == 128)
            REQUIRE_THAT(res.final_energy, WithinAbs(2.691823385086868, 1e-12));
        if (grid == 2048)
            REQUIRE_THAT(res.final_energy, WithinAbs(2.691818037416078, 1e-12));
    }
}

TEST_CASE("energy split accounts for the whole remainder", "[minimizer1d]") {
    {
        const double eps = std::pow(2.0, -8);
        const auto res = solve_degenerate(eps);
        const auto& e = res.energies;
        REQUIRE_THAT(e.A + e.B + e.C + e.D, WithinAbs(e.G2_log_scale, 1e-9));
        REQUIRE_THAT(e.scale_R, WithinAbs(eps * std::abs(std::log(eps)), 1e-15));
        REQUIRE_THAT(e.T_split, WithinAbs(res.profile.T_eps, 1e-15));
        // affine weight has no curvature term beyond rounding residue
        REQUIRE_THAT(e.C, WithinAbs(0.0, 1e-12));
    }
    {
        const double eps = std::pow(2.0, -10);
        const auto res = solve_interior(eps);
        const auto& e = res.energies;
        REQUIRE_THAT(e.A + e.B + e.C + e.D, WithinAbs(e.G2_eps_scale, 1e-9));
        REQUIRE_THAT(e.scale_R, WithinAbs(eps, 1e-18));
    }
}

TEST_CASE("curved weight produces a positive curvature term", "[minimizer1d]") {
    const Potential q = quartic_potential();
    WeightFn w;
    w.omega = [](double t) { return 1.0 + 0.5 * t + 0.25 * t * t; };
    w.d_omega = [](double t) { return 0.5 + 0.5 * t; };
    w.T = 1.0;
    w.strictly_increasing = true;
    w.name = "quadratic+";
    REQUIRE_NOTHROW(validate_weight(w));

    const double eps = std::pow(2.0, -8);
    const auto res = minimize_G(q, w, eps, q.a + eps * eps, q.b - eps * eps);
    const auto& e = res.energies;
    REQUIRE(e.C > 0.0);
    REQUIRE_THAT(e.A + e.B + e.C + e.D, WithinAbs(e.G2_log_scale, 1e-9));
}

TEST_CASE("reported energy matches the discrete objective", "[minimizer1d]") {
    const auto res = solve_degenerate(std::pow(2.0, -8));
    REQUIRE_THAT(res.energies.G1,
                 WithinAbs(res.final_energy, 1e-12 * res.final_energy));
    const double replay = discrete_energy(quartic_potential(), affine_weight(1.0),
                                          std::pow(2.0, -8), res.profile.t,
                                          res.profile.v);
    REQUIRE_THAT(replay, WithinAbs(res.final_energy, 1e-10 * res.final_energy));
}

TEST_CASE("profile endpoints and crossings are recorded", "[minimizer1d]") {
    const double eps = std::pow(2.0, -8);
    const auto res = solve_degenerate(eps);
    const Potential q = quartic_potential();
    REQUIRE_THAT(res.profile.t.front(), WithinAbs(0.0, 1e-18));
    REQUIRE_THAT(res.profile.t.back(), WithinAbs(1.0, 1e-15));
    REQUIRE_THAT(res.profile.v.front(), WithinAbs(q.a + eps * eps, 1e-15));
    REQUIRE_THAT(res.profile.v.back(), WithinAbs(q.b - eps * eps, 1e-15));
    REQUIRE(res.profile.T_eps > 0.0);
    REQUIRE(res.profile.T_eps < 1.0);
    REQUIRE(std::isfinite(res.profile.L_eps));
    REQUIRE(res.profile.L_eps < res.profile.T_eps);
}

TEST_CASE("monotone window and slope bounds hold", "[minimizer1d]") {
    const Potential q = quartic_potential();
    {
        const double eps = std::pow(2.0, -10);
        const auto res = solve_degenerate(eps);
        const double tau0 = calibrate_tau0(res, q, eps);
        REQUIRE_THAT(tau0, WithinAbs(3.0, 1e-12));
        const auto mono = check_monotonicity(res, q, eps, tau0);
        REQUIRE(mono.monotone_window);
        REQUIRE(mono.bounds_near_a);
        REQUIRE(mono.bounds_near_b);
        REQUIRE(mono.monotone_violations == 0);
        REQUIRE(mono.bound_violations == 0);
    }
    {
        const double eps = std::pow(2.0, -6);
        const auto res = solve_degenerate(eps);
        const auto mono = check_monotonicity(res, q, eps, 6.0);
        REQUIRE(mono.monotone_window);
        REQUIRE(mono.bounds_near_a);
        REQUIRE(mono.bounds_near_b);
    }
}

TEST_CASE("hitting bounds at a coarse rung", "[minimizer1d]") {
    const Potential q = quartic_potential();
    const WeightFn w = affine_weight(1.0);
    const double eps = std::pow(2.0, -6);
    const auto res = solve_degenerate(eps);
    const auto hit = check_hitting_bounds(res, q, w, eps, 0.1, 2, 6.0);
    REQUIRE_THAT(hit.delta_eta, WithinAbs(0.1026334038989724, 1e-12));
    REQUIRE_THAT(hit.T_eps / eps, WithinAbs(5.9259, 5e-4));
    REQUIRE_THAT(hit.T_ratio, WithinAbs(1.424888, 5e-6));
    REQUIRE_THAT(hit.S_ratio, WithinAbs(0.475706, 5e-6));
    REQUIRE_THAT(hit.slope_min, WithinAbs(1.636310, 5e-6));
}

TEST_CASE("hitting ratios along the ladder", "[minimizer1d]") {
    const Potential q = quartic_potential();
    const WeightFn w = affine_weight(1.0);
    const double t_ratio[4] = {1.388093, 1.363065, 1.343699, 1.328522};
    const double s4[4] = {0.529169, 0.615095, 0.678797, 0.725233};
    const double slope[4] = {1.633812, 1.633196, 1.633044, 1.633007};
    const int ks[4] = {8, 10, 12, 14};
    double prev_T = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 4; ++i) {
        const double eps = std::pow(2.0, -ks[i]);
        const auto res = solve_degenerate(eps);
        const auto hit = check_hitting_bounds(res, q, w, eps, 0.1, 2, 3.0);
        CAPTURE(ks[i]);
        REQUIRE_THAT(hit.T_ratio, WithinAbs(t_ratio[i], 5e-6));
        REQUIRE_THAT(hit.S_ratio * (1.0 - 0.1), WithinAbs(s4[i], 5e-6));
        REQUIRE_THAT(hit.slope_min, WithinAbs(slope[i], 5e-6));
        REQUIRE(hit.T_ratio < prev_T); // no increasing trend
        prev_T = hit.T_ratio;
        // slope floor stays clear of zero, near sqrt(8/3)
        REQUIRE(hit.slope_min > 1.6);
    }
}

TEST_CASE("limit problem selects the cheaper well", "[minimizer1d]") {
    const Potential q = quartic_potential();
    const WeightFn inc = affine_weight(1.0);
    const WeightFn dec = affine_weight(-0.5);

    const auto full = g1_limit_minimizer(q, inc, q.a, q.b);
    REQUIRE(full.kind == "constant_b");
    REQUIRE_THAT(full.value, WithinAbs(8.0 / 3.0, 1e-9));

    const auto down = g1_limit_minimizer(q, dec, q.a, q.b);
    REQUIRE(down.kind == "constant_a");
    REQUIRE_THAT(down.value, WithinAbs(4.0 / 3.0, 1e-9));

    const auto flat = g1_limit_minimizer(q, inc, q.b, q.b);
    REQUIRE(flat.kind == "constant_b");
    REQUIRE_THAT(flat.value, WithinAbs(0.0, 1e-12));

    const auto half = g1_limit_minimizer(q, inc, 0.0, q.b);
    REQUIRE(half.kind == "constant_b");
    REQUIRE_THAT(half.value, WithinAbs(4.0 / 3.0, 1e-9));
}

TEST_CASE("recovery dominates the minimum at matching data", "[minimizer1d]") {
    const Potential q = quartic_potential();
    const WeightFn w = affine_weight(1.0);
    const double rec_expected[2] = {1.251880761, 1.016361211};
    const int ks[2] = {8, 14};
    for (int i = 0; i < 2; ++i) {
        const double eps = std::pow(2.0, -ks[i]);
        const auto rec = recovery_profile(q, eps, q.a + eps * eps,
                                          q.b - eps * eps, 1.0);
        const auto rec_rep = energy_report(q, w, eps, rec, "eps_log");
        CAPTURE(ks[i]);
        REQUIRE_THAT(rec_rep.G2_log_scale, WithinAbs(rec_expected[i], 5e-9));
        const auto res = solve_degenerate(eps);
        REQUIRE(res.energies.G2_log_scale <= rec_rep.G2_log_scale);
    }
}

TEST_CASE("solver and report reject malformed input", "[minimizer1d]") {
    const Potential q = quartic_potential();
    const WeightFn w = affine_weight(1.0);
    const double eps = std::pow(2.0, -6);

    REQUIRE_THROWS_AS(minimize_G(q, w, 0.0, q.a, q.b), std::domain_error);
    REQUIRE_THROWS_AS(minimize_G(q, w, eps, q.a - 0.5, q.b), std::domain_error);
    REQUIRE_THROWS_AS(minimize_G(q, w, eps, q.a, q.b + 0.5), std::domain_error);
    REQUIRE_THROWS_AS(minimize_G(q, w, eps, 0.5, 0.0), std::domain_error);

    REQUIRE_THROWS_AS(discrete_energy(q, w, eps, {0.0, 0.5, 1.0}, {0.0, 0.5}),
                      std::invalid_argument);

    auto res = solve_degenerate(eps);
    REQUIRE_THROWS_AS(energy_report(q, w, eps, res.profile, "quadratic"),
                      std::invalid_argument);

    ProfileGrid tampered = res.profile;
    tampered.v.front() += 0.01;
    REQUIRE_THROWS_AS(energy_report(q, w, eps, tampered, "eps_log"),
                      std::invalid_argument);

    WeightFn wrong_domain = affine_weight(1.0, 2.0);
    REQUIRE_THROWS_AS(energy_report(q, wrong_domain, eps, res.profile, "eps_log"),
                      std::invalid_argument);

    ProfileGrid stub;
    stub.t = {0.0};
    stub.v = {0.0};
    REQUIRE_THROWS_AS(energy_report(q, w, eps, stub, "eps"),
                      std::invalid_argument);
}
