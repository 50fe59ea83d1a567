#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include <rdfk/kernel_core.hpp>
#include <rdfk/quadrature.hpp>
#include <rdfk/special_functions.hpp>

using namespace rdfk;
using Catch::Approx;

namespace {

double crel(cplx got, cplx want) { return std::abs(got - want) / std::abs(want); }

// reference value of the m = 2 series assembled term by term from bessel_j
cplx m2_reference(double a, double z, double theta, int terms) {
    const double za = (2.0 / a) * std::pow(z, 0.5 * a);
    cplx s = bessel_j(0.0, za);
    for (int k = 1; k < terms; ++k)
        s += 2.0 * std::polar(1.0, -pi * k / a) * bessel_j(2.0 * k / a, za) * std::cos(k * theta);
    return s;
}

// reference value of the m >= 3 series assembled from bessel_j_tilde and
// gegenbauer, with an optional parity flip of the Gegenbauer argument
cplx general_reference(double a, int m, double z, double xi, int terms, bool flip) {
    const double lam = 0.5 * (m - 2);
    const double za = (2.0 / a) * std::pow(z, 0.5 * a);
    const double pref = std::pow(a, 2.0 * lam / a) * std::tgamma((2.0 * lam + a) / a);
    cplx s{0.0, 0.0};
    for (int k = 0; k < terms; ++k) {
        const double nu = 2.0 * (k + lam) / a;
        const double scale = std::exp(k * std::log(z) - nu * std::log(a));
        double c = gegenbauer(k, lam, xi);
        if (flip && k % 2 == 1) c = -c;
        s += std::polar(1.0, -pi * k / a) * ((lam + k) / lam) * scale * bessel_j_tilde(nu, za) * c;
    }
    return pref * s;
}

}  // namespace

TEST_CASE("geometry extraction from cartesian pairs") {
    const GeomPoint g1 = geom_from_cartesian({1.0, 0.0}, {0.0, 1.0});
    CHECK(g1.z == Approx(1.0));
    CHECK(g1.xi == Approx(0.0).margin(1e-15));
    CHECK(g1.theta == Approx(0.5 * pi));

    const GeomPoint g2 = geom_from_cartesian({2.0, 0.0}, {3.0, 0.0});
    CHECK(g2.z == Approx(6.0));
    CHECK(g2.xi == Approx(1.0));
    CHECK(g2.theta == Approx(0.0).margin(1e-7));

    const GeomPoint g3 = geom_from_cartesian({0.0, 0.0, 0.0}, {1.0, 2.0, 2.0});
    CHECK(g3.z == 0.0);
    CHECK(g3.xi == 0.0);

    // rounding just past the endpoints is clamped
    const GeomPoint g4 = make_geom(2.0, 1.0 + 1e-13);
    CHECK(g4.xi == 1.0);
    CHECK_THROWS_AS(make_geom(1.0, 1.0 + 1e-9), std::domain_error);
    CHECK_THROWS_AS(make_geom(-1.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(geom_from_cartesian({1.0, 0.0}, {1.0, 0.0, 0.0}), std::domain_error);

    CHECK(make_geom(2.0, 0.0).z_deformed(4.0) == Approx(2.0));
    CHECK(make_geom(9.0, 0.0).z_deformed(1.0) == Approx(6.0));
}

TEST_CASE("series evaluates to one at the origin") {
    for (double a : {0.5, 1.0, 2.0, 4.0, 6.3}) {
        for (int m : {2, 3, 4, 7}) {
            const ComplexEval e = kernel_series({a, m}, make_geom(0.0, 0.37), 1e-12);
            CHECK(e.value == cplx(1.0, 0.0));
            CHECK(e.err == 0.0);
            CHECK(e.method == Method::series);
        }
    }
}

TEST_CASE("series matches reference values") {
    struct Row {
        double a; int m; double z; double xi; cplx want;
    };
    const Row rows[] = {
        {2.0, 3, 1.0, 0.3, {0.95533648912560602, -0.29552020666133956}},
        {4.0, 3, 1.5, 0.4, {1.7404463227935172, 0.60968814280604016}},
        {1.5, 5, 2.0, -0.3, {0.83163345699253268, 0.18987391416027512}},
        {3.0, 2, 1.2, std::cos(0.7), {1.3156824123279747, -0.88183157539837182}},
        {6.0, 4, 0.8, 0.1, {0.84110159054840103, 0.34536929997637336}},
        {0.5, 3, 0.6, 0.9, {0.34014386148053025, 0.0}},
        {4.0, 4, 1.5, 0.4, {2.0483835182744793, 0.42715558720081637}},
        {1.0, 4, 1.5, 0.3, {0.46559583113125504, 0.0}},
    };
    for (const Row& r : rows) {
        const ComplexEval e = kernel_series({r.a, r.m}, make_geom(r.z, r.xi), 1e-12);
        INFO("a=" << r.a << " m=" << r.m << " z=" << r.z << " xi=" << r.xi);
        CHECK(crel(e.value, r.want) < 1e-11);
        CHECK(std::abs(e.value - r.want) <= e.err + 1e-13);
    }
}

TEST_CASE("a = 2 series reduces to the plane wave") {
    for (int m : {2, 3, 4, 5}) {
        for (double z : {0.3, 1.0, 5.0, 20.0}) {
            for (double xi : {-1.0, -0.9, -0.3, 0.0, 0.4, 1.0}) {
                const ComplexEval e = kernel_series({2.0, m}, make_geom(z, xi), 1e-12);
                const cplx want = std::exp(cplx(0.0, -z * xi));
                INFO("m=" << m << " z=" << z << " xi=" << xi);
                CHECK(std::abs(e.value - want) <= e.err + 1e-12);
                CHECK(std::abs(e.value - want) < 1e-9);
            }
        }
    }
}

TEST_CASE("a = 1 series reduces to the half-integer closed form") {
    for (int m : {2, 3, 4, 6}) {
        for (double z : {0.2, 1.0, 4.0, 15.0}) {
            for (double xi : {-1.0, -0.5, 0.0, 0.6, 1.0}) {
                const ComplexEval e = kernel_series({1.0, m}, make_geom(z, xi), 1e-12);
                const double w = std::sqrt(2.0 * z * (1.0 + xi));
                const double want =
                    std::tgamma(0.5 * (m - 1)) * bessel_j_tilde(0.5 * (m - 3), w);
                INFO("m=" << m << " z=" << z << " xi=" << xi);
                CHECK(std::abs(e.value - cplx(want, 0.0)) <= e.err + 1e-11);
            }
        }
    }
    // the worked example: a=1, m=3, z=2, xi=1/2 is J_0(sqrt 6)
    const ComplexEval e = kernel_series({1.0, 3}, make_geom(2.0, 0.5), 1e-12);
    CHECK(crel(e.value, cplx(-0.022966965748879578, 0.0)) < 1e-10);
}

TEST_CASE("series agrees with term-by-term reconstructions and parity") {
    // m = 2: independent reassembly, then the sign flip xi -> -xi which is
    // theta -> pi - theta
    for (double a : {1.5, 3.0, 4.0}) {
        const double z = 1.2, theta = 0.7;
        const ComplexEval e = kernel_series({a, 2}, make_geom(z, std::cos(theta)), 1e-12);
        CHECK(std::abs(e.value - m2_reference(a, z, theta, 80)) < 1e-9);
        const ComplexEval ef = kernel_series({a, 2}, make_geom(z, -std::cos(theta)), 1e-12);
        CHECK(std::abs(ef.value - m2_reference(a, z, pi - theta, 80)) < 1e-9);
    }
    // m >= 3: C_k(-xi) = (-1)^k C_k(xi) term by term
    for (int m : {3, 4}) {
        const double a = 3.0, z = 0.8, xi = 0.45;
        const ComplexEval ef = kernel_series({a, m}, make_geom(z, -xi), 1e-12);
        CHECK(std::abs(ef.value - general_reference(a, m, z, xi, 60, true)) < 1e-10);
    }
    // a = 2 specializes the parity relation to conjugation
    const ComplexEval ep = kernel_series({2.0, 3}, make_geom(2.5, 0.6), 1e-12);
    const ComplexEval em = kernel_series({2.0, 3}, make_geom(2.5, -0.6), 1e-12);
    CHECK(std::abs(em.value - std::conj(ep.value)) < 1e-10);
}

TEST_CASE("series error field covers tolerance relaxation") {
    for (double a : {1.5, 4.0}) {
        for (int m : {2, 4}) {
            const GeomPoint g = make_geom(3.0, 0.3);
            const ComplexEval tight = kernel_series({a, m}, g, 1e-13);
            const ComplexEval loose = kernel_series({a, m}, g, 1e-4);
            CHECK(std::abs(loose.value - tight.value) <= loose.err + 1e-13);
        }
    }
}

TEST_CASE("series input guards") {
    CHECK_THROWS_AS(kernel_series({0.0, 3}, make_geom(1.0, 0.0), 1e-10), std::domain_error);
    CHECK_THROWS_AS(kernel_series({2.0, 1}, make_geom(1.0, 0.0), 1e-10), std::domain_error);
    CHECK_THROWS_AS(kernel_series({2.0, 3}, make_geom(1.0, 0.0), 0.0), std::domain_error);
    // deformed argument ~3e5 needs far more terms than the cap allows
    CHECK_THROWS_AS(kernel_series({6.0, 2}, make_geom(100.0, 0.2), 1e-10), accuracy_error);
}

TEST_CASE("dimension lift reproduces the two-dimensions-up kernel") {
    // a = 2: every dimension gives the same plane wave
    {
        const KernelParams p{2.0, 2};
        const GeomPoint g = make_geom(1.0, 0.2);
        const ComplexEval lift = kernel_dimension_lift(p, g, 1e-3);
        const cplx want = std::exp(cplx(0.0, -0.2));
        CHECK(std::abs(lift.value - want) < 1e-6);
        CHECK(std::abs(lift.value - want) <= lift.err + 1e-12);
    }
    // a = 4: frozen target for K_4^4
    {
        const KernelParams p{4.0, 2};
        const ComplexEval lift = kernel_dimension_lift(p, make_geom(1.5, 0.4), 5e-4);
        const cplx want{2.0483835182744793, 0.42715558720081637};
        CHECK(std::abs(lift.value - want) < 1e-5);
        CHECK(std::abs(lift.value - want) <= lift.err + 1e-12);
    }
    // a = 1: closed form two dimensions up
    {
        const KernelParams p{1.0, 2};
        const GeomPoint g = make_geom(1.5, 0.3);
        const ComplexEval lift = kernel_dimension_lift(p, g, 1e-3);
        const double w = std::sqrt(2.0 * g.z * (1.0 + g.xi));
        const cplx want{std::tgamma(1.5) * bessel_j_tilde(0.5, w), 0.0};
        CHECK(std::abs(lift.value - want) < 1e-6);
    }
    // halving h divides the defect by about four
    {
        const KernelParams p{4.0, 3};
        const GeomPoint g = make_geom(1.2, 0.1);
        const ComplexEval exact = kernel_series({4.0, 5}, g, 1e-13);
        double prev = 0.0;
        for (int i = 0; i < 3; ++i) {
            const double h = 0.2 / (1 << i);
            const double defect = std::abs(kernel_dimension_lift(p, g, h).value - exact.value);
            if (i > 0) {
                const double order = std::log2(prev / defect);
                INFO("h=" << h << " defect=" << defect);
                CHECK(order > 1.6);
                CHECK(order < 2.4);
            }
            prev = defect;
        }
    }
    CHECK_THROWS_AS(kernel_dimension_lift({2.0, 2}, make_geom(0.0, 0.2), 1e-3),
                    std::domain_error);
    CHECK_THROWS_AS(kernel_dimension_lift({2.0, 2}, make_geom(1.0, 0.9999), 1e-3),
                    std::domain_error);
}

TEST_CASE("transform maps the gaussian to itself at a = 2") {
    auto gauss = [](double r, double) { return std::exp(-0.5 * r * r); };
    TransformGrid grid;
    grid.radius_cutoff = 10.0;
    grid.n_radial = 60;
    grid.n_angular = 40;
    grid.tail_bound = 1e-12;  // integrand tail beyond r = 10 is ~e^{-50}
    grid.tol = 1e-6;
    const std::vector<double> targets{0.5, 1.0, 2.0};
    for (int m : {2, 3}) {
        const std::vector<cplx> got = transform_apply({2.0, m}, gauss, targets, grid);
        REQUIRE(got.size() == targets.size());
        for (std::size_t i = 0; i < targets.size(); ++i) {
            INFO("m=" << m << " |y|=" << targets[i]);
            CHECK(std::abs(got[i] - cplx(std::exp(-0.5 * targets[i] * targets[i]), 0.0)) < 1e-5);
        }
    }
}

TEST_CASE("transform is linear") {
    auto f = [](double r, double) { return std::exp(-0.5 * r * r); };
    auto g = [](double r, double t) { return r * r * t * std::exp(-r * r); };
    auto fg = [&](double r, double t) { return f(r, t) + g(r, t); };
    TransformGrid grid;
    grid.radius_cutoff = 8.0;
    grid.n_radial = 40;
    grid.n_angular = 24;
    grid.tail_bound = 1e-10;
    grid.tol = 1e-6;
    const std::vector<double> targets{0.7, 1.3};
    const KernelParams p{1.5, 3};
    const std::vector<cplx> a = transform_apply(p, f, targets, grid);
    const std::vector<cplx> b = transform_apply(p, g, targets, grid);
    const std::vector<cplx> c = transform_apply(p, fg, targets, grid);
    for (std::size_t i = 0; i < targets.size(); ++i)
        CHECK(std::abs(c[i] - a[i] - b[i]) < 1e-12);
}

TEST_CASE("transform of a radial profile matches direct quadrature at a = 1") {
    // At a = 1, m = 3 the angular integral of the closed-form kernel against
    // a radial profile collapses to a two-level one-dimensional quadrature.
    auto f = [](double r, double) { return std::exp(-r); };
    TransformGrid grid;
    grid.radius_cutoff = 40.0;
    grid.n_radial = 120;
    grid.n_angular = 32;
    grid.tail_bound = 1e-10;  // r^2 e^{-r} tail beyond r = 40
    grid.tol = 1e-6;
    const std::vector<double> targets{0.4, 1.0};
    const KernelParams p{1.0, 3};
    const std::vector<cplx> got = transform_apply(p, f, targets, grid);

    const double c_f = std::tgamma(1.5) / (2.0 * std::pow(pi, 1.5) * p.prefactor());
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const double ymod = targets[i];
        auto radial = [&](double r) {
            auto angular = [&](double t) {
                const double w = std::sqrt(2.0 * r * ymod * (1.0 + t));
                return cplx(bessel_j_tilde(0.0, w), 0.0);
            };
            return r * std::exp(-r) * integrate_gk(angular, -1.0, 1.0, 1e-10).value;
        };
        const cplx want = c_f * 2.0 * pi * integrate_gk(radial, 0.0, 40.0, 1e-9, 8).value;
        INFO("|y|=" << ymod);
        CHECK(std::abs(got[i] - want) < 1e-6);
    }
}

TEST_CASE("transform input guards") {
    auto f = [](double, double) { return 1.0; };
    TransformGrid grid;
    grid.tail_bound = 1e-3;
    grid.tol = 1e-6;
    CHECK_THROWS_AS(transform_apply({2.0, 2}, f, {1.0}, grid), accuracy_error);
    grid.tail_bound = 0.0;
    grid.n_radial = 0;
    CHECK_THROWS_AS(transform_apply({2.0, 2}, f, {1.0}, grid), std::domain_error);
}
