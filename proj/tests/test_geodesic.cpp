#include <catch2/catch_amalgamated.hpp>

#include <blayer/geodesic.hpp>
#include <blayer/potential.hpp>

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace blayer;
using Catch::Matchers::WithinAbs;

namespace {

GeodesicTable quartic_table() { return GeodesicTable(quartic_potential()); }

std::vector<double> decade_ladder(int from_exp, int to_exp) {
    std::vector<double> v;
    for (int k = from_exp; k <= to_exp; ++k) v.push_back(std::pow(10.0, -k));
    return v;
}

} // namespace

TEST_CASE("transition cost of the quartic", "[geodesic]") {
    const GeodesicTable t = quartic_table();
    // 2 * int_{-1}^{1} (1-s^2) ds = 8/3
    REQUIRE_THAT(t.c_w(), WithinAbs(8.0 / 3.0, 1e-10));
    REQUIRE_THAT(t.distance(-1.0, 1.0), WithinAbs(t.c_w(), 1e-13));

    // sqrt homogeneity: scaling W by 4 doubles the cost
    Potential p4 = quartic_potential();
    auto w = p4.W;
    p4.W = [w](double s) { return 4.0 * w(s); };
    REQUIRE_THAT(GeodesicTable(p4).c_w(), WithinAbs(16.0 / 3.0, 1e-9));
}

TEST_CASE("well-anchored distances", "[geodesic]") {
    const GeodesicTable t = quartic_table();
    // 2 * int_0^1 (1-s^2) ds = 4/3
    REQUIRE_THAT(t.distance(0.0, 1.0), WithinAbs(4.0 / 3.0, 1e-10));
    REQUIRE_THAT(t.distance(1.0, 0.0), WithinAbs(4.0 / 3.0, 1e-10));
    REQUIRE_THAT(t.distance(-1.0, -1.0), WithinAbs(0.0, 1e-13));
    REQUIRE(t.distance(0.3, 1.0) >= 0.0);
    REQUIRE(t.distance(0.3, 1.0) == t.distance(1.0, 0.3));
}

TEST_CASE("distance is infinite away from the wells", "[geodesic]") {
    const GeodesicTable t = quartic_table();
    const double d = t.distance(0.3, 0.7);
    REQUIRE(std::isinf(d));
    REQUIRE(d == infinite_distance);
}

TEST_CASE("splitting the transition at an interior point", "[geodesic]") {
    const GeodesicTable t = quartic_table();
    for (double m : {-0.63, 0.0, 0.37, 0.9}) {
        REQUIRE_THAT(t.distance(-1.0, m) + t.distance(m, 1.0),
                     WithinAbs(t.c_w(), 1e-10));
    }
}

TEST_CASE("near-well time integral basics", "[geodesic]") {
    const GeodesicTable t = quartic_table();
    REQUIRE(t.log_integral(1e-4, 0.3, 0.3) == 0.0);
    REQUIRE_THROWS_AS(t.log_integral(0.0, -1.0, 1.0), std::domain_error);
    REQUIRE_THROWS_AS(t.log_integral(-1e-6, -1.0, 1.0), std::domain_error);
    REQUIRE_THROWS_AS(t.log_integral(1e-4, -3.0, 1.0), std::domain_error);

    const double i2 = t.log_integral(1e-2, -1.0, 1.0);
    const double i4 = t.log_integral(1e-4, -1.0, 1.0);
    const double i6 = t.log_integral(1e-6, -1.0, 1.0);
    REQUIRE(i2 < i4);
    REQUIRE(i4 < i6);
}

TEST_CASE("near-well time integral reference values", "[geodesic]") {
    const GeodesicTable t = quartic_table();
    // frozen from an adaptive-Simpson oracle with independent panel splitting
    REQUIRE_THAT(t.log_integral(1e-8, -1.0, 1.0), WithinAbs(11.289731895613, 1e-6));
    REQUIRE_THAT(t.log_integral(1e-8, -1.0, 0.5), WithinAbs(6.194172088749, 1e-6));
    // witness for the logarithmic growth bound over the full interval
    const double ratio = t.log_integral(1e-8, -1.0, 1.0) / std::fabs(std::log(1e-8));
    REQUIRE(ratio >= 0.55);
    REQUIRE(ratio <= 0.65);
}

TEST_CASE("log asymptote slopes of the quartic", "[geodesic]") {
    const GeodesicTable t = quartic_table();
    const std::vector<double> ladder = decade_ladder(4, 10);

    // one well contributes 1/sqrt(2 W''(a)) = 1/4
    const LogFit half = t.log_asymptote_fit(-1.0, 0.5, ladder);
    REQUIRE_THAT(half.slope, WithinAbs(0.25, 0.0025));

    // both wells: 1/4 + 1/4
    const LogFit full = t.log_asymptote_fit(-1.0, 1.0, ladder);
    REQUIRE_THAT(full.slope, WithinAbs(0.5, 0.005));
    REQUIRE(full.max_residual < 0.05);
}

TEST_CASE("affine fit recovers exact linear data", "[geodesic]") {
    const std::vector<double> xs = {1.0, 2.0, 3.0, 4.0, 5.0};
    std::vector<double> ys;
    for (double x : xs) ys.push_back(2.5 * x - 0.75);
    const LogFit f = GeodesicTable::affine_fit(xs, ys);
    REQUIRE_THAT(f.slope, WithinAbs(2.5, 1e-12));
    REQUIRE_THAT(f.intercept, WithinAbs(-0.75, 1e-12));
    REQUIRE(f.max_residual < 1e-12);

    REQUIRE_THROWS_AS(GeodesicTable::affine_fit({1.0, 1.0, 1.0}, {0.0, 1.0, 2.0}),
                      std::invalid_argument);
}

TEST_CASE("asymptote fit rejects bad ladders", "[geodesic]") {
    const GeodesicTable t = quartic_table();
    REQUIRE_THROWS_AS(t.log_asymptote_fit(-1.0, 1.0, {1e-4, 1e-5}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(t.log_asymptote_fit(-1.0, 1.0, {1e-4, 1e-4, 1e-5}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(t.log_asymptote_fit(-1.0, 1.0, {1e-5, 1e-4, 1e-6}),
                      std::invalid_argument);
}

TEST_CASE("difference integral stays bounded down the ladder", "[geodesic]") {
    const GeodesicTable t = quartic_table();
    REQUIRE(t.difference_integral(1e-3, 0.2, 0.2) == 0.0);
    REQUIRE_THROWS_AS(t.difference_integral(0.0, -1.0, 1.0), std::domain_error);
    REQUIRE_THROWS_AS(t.difference_integral(1.0, -1.0, 1.0), std::domain_error);
    REQUIRE_THROWS_AS(t.difference_integral(-0.1, -1.0, 1.0), std::domain_error);

    std::vector<double> vals;
    for (int k = 2; k <= 12; ++k)
        vals.push_back(t.difference_integral(std::pow(10.0, -k), -1.0, 1.0));

    // frozen endpoints (two independent oracle methods agree to 10 digits)
    REQUIRE_THAT(vals.front(), WithinAbs(0.518837275696, 1e-8));
    REQUIRE_THAT(vals.back(), WithinAbs(0.500000166670, 1e-8));

    double sup = 0.0, inf = 1e30;
    for (size_t i = 0; i < vals.size(); ++i) {
        sup = std::max(sup, vals[i]);
        inf = std::min(inf, vals[i]);
        if (i > 0) REQUIRE(vals[i] < vals[i - 1]); // monotone toward the limit
    }
    REQUIRE(sup <= 1.05 * vals.back());
    REQUIRE(sup / inf <= 1.25);
}

TEST_CASE("difference integrand is pointwise positive", "[geodesic]") {
    // 2/(x+y) - 1/x = (x-y)/(x(x+y)) with x = sqrt(delta+W) > y = sqrt(W)
    const Potential q = quartic_potential();
    const double delta = 1e-3;
    for (double s : {-0.99, -0.5, 0.0, 0.5, 0.99}) {
        const double w = q.W(s);
        const double x = std::sqrt(delta + w);
        const double v = 2.0 / (x + std::sqrt(w)) - 1.0 / x;
        REQUIRE(v > 0.0);
    }
    const GeodesicTable t(q);
    REQUIRE(t.difference_integral(1e-6, -1.0, 1.0) > 0.0);
}
