#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <rdfk/closed_forms.hpp>
#include <rdfk/laplace.hpp>
#include <rdfk/special_functions.hpp>

using namespace rdfk;
using Catch::Approx;

namespace {

double crel(cplx got, cplx want) { return std::abs(got - want) / std::abs(want); }

}  // namespace

TEST_CASE("laplace domain inputs stay on the principal sheet") {
    // |u_R| < 1 and Re r >= 0 everywhere on the open right half-plane
    for (double a : {0.5, 1.0, 2.0, 3.0, 4.5}) {
        for (double z : {0.3, 1.0, 2.6}) {
            const double za = make_geom(z, 0.0).z_deformed(a);
            for (double sr : {0.05, 1.0, 3.0}) {
                for (double si : {-9.0, -2.0, 0.0, 0.7, 5.0}) {
                    const LaplaceKernelInputs in = make_laplace_inputs(a, za, cplx(sr, si));
                    CHECK(std::abs(in.u_R) < 1.0);
                    CHECK(in.r.real() >= 0.0);
                    CHECK(in.R == in.s + in.r);
                }
            }
        }
    }
    CHECK_THROWS_AS(make_laplace_inputs(2.0, 1.0, cplx(-0.2, 1.0)), std::domain_error);
    CHECK_THROWS_AS(make_laplace_inputs(2.0, 1.0, cplx(0.0, 1.0)), std::domain_error);
    // zero radius collapses u_R without tripping the power of zero
    const LaplaceKernelInputs flat = make_laplace_inputs(3.0, 0.0, cplx(1.0, 2.0));
    CHECK(flat.u_R == cplx(0.0, 0.0));
}

TEST_CASE("laplace kernel closed form values") {
    struct Row {
        double a;
        int m;
        double z, xi, sr, si;
        cplx want;
    };
    // frozen against an independent high-precision evaluation of the same formula
    const std::vector<Row> rows = {
        {2.0, 2, 1.0, 0.0, 1.0, 0.7, {0.67114093959731546425, -0.46979865771812079517}},
        {3.0, 3, 1.4, 0.25, 0.8, 2.0, {-0.18347878358010898941, -0.41827840720498915763}},
        {1.0, 4, 0.8, -0.2, 1.2, 0.5, {0.30096030934755899393, -0.16822774867779391059}},
        {4.0, 6, 2.0, -0.6, 2.0, 3.0, {0.046633394818296688284, 0.020573181960988143896}},
        {2.5, 5, 3.0, 0.7, 1.0, 1.0, {-0.1769021479318161639, 0.070802013826092416394}},
    };
    for (const Row& r : rows) {
        const cplx got = laplace_kernel({r.a, r.m}, make_geom(r.z, r.xi), cplx(r.sr, r.si));
        CAPTURE(r.a, r.m, r.z, r.xi);
        CHECK(crel(got, r.want) < 5e-14);
    }

    // flat-dimension reduction at xi = 0: prefactors collapse to (1/r)(1-u^2)/(1+u^2)
    const cplx s(0.9, -1.3);
    const double za = 1.0;  // a=2, z=1
    const cplx r = std::sqrt(s * s + za * za);
    const cplx u = cplx(0.0, -za) / (s + r);
    const cplx reduced = (1.0 / r) * (1.0 - u * u) / (1.0 + u * u);
    CHECK(crel(laplace_kernel({2.0, 2}, make_geom(1.0, 0.0), s), reduced) < 1e-15);
}

TEST_CASE("laplace kernel large-s decay") {
    // F(s) ~ Gamma((2 lam + a)/a) s^{-1-2 lam/a}: the 2^{2 lam/a} prefactor is
    // absorbed by R -> 2s
    struct Row {
        double a;
        int m;
        double tol;
    };
    for (const Row& r : {Row{2.0, 2, 1e-6}, Row{2.0, 4, 1e-6}, Row{1.5, 3, 1e-8}, Row{3.0, 5, 1e-4}}) {
        const double lam = 0.5 * (r.m - 2);
        const double s = 1e7;
        const cplx scaled =
            laplace_kernel({r.a, r.m}, make_geom(1.3, 0.4), cplx(s, 0.0)) * std::pow(s, 1.0 + 2.0 * lam / r.a);
        const double want = std::tgamma((2.0 * lam + r.a) / r.a);
        CAPTURE(r.a, r.m);
        CHECK(crel(scaled, cplx(want, 0.0)) < r.tol);
    }
}

TEST_CASE("laplace kernel guards") {
    const KernelParams p{2.0, 2};
    const GeomPoint g = make_geom(1.0, 0.3);
    const double za = g.z_deformed(2.0);
    CHECK_THROWS_AS(laplace_kernel(p, g, cplx(-1.0, 0.0)), std::domain_error);
    CHECK_THROWS_AS(laplace_kernel(p, g, cplx(0.0, 2.0)), std::domain_error);
    // inside the configurable branch-point margin
    CHECK_THROWS_AS(laplace_kernel(p, g, cplx(1e-9, za)), accuracy_error);
    CHECK_THROWS_AS(laplace_kernel(p, g, cplx(1e-9, -za)), accuracy_error);
    CHECK_THROWS_AS(laplace_kernel(p, g, cplx(0.05, za), 0.1), accuracy_error);
    CHECK_NOTHROW(laplace_kernel(p, g, cplx(0.05, za), 1e-3));
}

TEST_CASE("laplace kernel is continuous across the inversion line") {
    // half-integer powers in play: a fractional exponent on both R and the
    // angular denominator; a branch flip would show up as an O(|F|) jump
    const KernelParams p{3.0, 3};
    const GeomPoint g = make_geom(1.4, 0.25);
    cplx prev = laplace_kernel(p, g, cplx(1.0, -40.0));
    for (int i = 1; i <= 4000; ++i) {
        const cplx cur = laplace_kernel(p, g, cplx(1.0, -40.0 + 0.02 * i));
        CHECK(std::abs(cur - prev) < 0.6 * std::max(std::abs(cur), std::abs(prev)) + 1e-14);
        prev = cur;
    }
}

TEST_CASE("bromwich inversion of reference pairs") {
    // simple shift pole: e^{-2it}
    auto f1 = [](cplx s) { return 1.0 / (s + cplx(0.0, 2.0)); };
    const ComplexEval r1 = inverse_laplace(f1, 1.0, 1.0, 400.0, 1e-8);
    const cplx w1 = std::exp(cplx(0.0, -2.0));
    CHECK(std::abs(r1.value - w1) < 1e-7);
    CHECK(std::abs(r1.value - w1) <= r1.err + 1e-9);
    CHECK(r1.method == Method::laplace);

    // 1/r pair: J_0(a t) at a = 1.5
    auto f2 = [](cplx s) { return 1.0 / std::sqrt(s * s + 2.25); };
    const ComplexEval r2 = inverse_laplace(f2, 1.0, 1.0, 400.0, 1e-8);
    CHECK(std::abs(r2.value - cplx(0.51182767173591812875, 0.0)) < 1e-7);
    CHECK(std::abs(r2.value - cplx(0.51182767173591812875, 0.0)) <= r2.err + 1e-9);

    // (1/R)^nu pair: (nu/t) J_nu(a t)/a^nu at nu = 2, a = 1, t = 1
    auto f3 = [](cplx s) {
        const cplx R = s + std::sqrt(s * s + 1.0);
        return 1.0 / (R * R);
    };
    const ComplexEval r3 = inverse_laplace(f3, 1.0, 1.0, 200.0, 1e-8);
    CHECK(std::abs(r3.value - cplx(0.22980696986380096094, 0.0)) < 1e-7);
    CHECK(std::abs(r3.value - cplx(0.22980696986380096094, 0.0)) <= r3.err + 1e-9);

    // value scale survives a later evaluation time
    const ComplexEval r4 = inverse_laplace(f1, 2.5, 1.0, 400.0, 1e-8);
    CHECK(std::abs(r4.value - std::exp(cplx(0.0, -5.0))) < 1e-6);
}

TEST_CASE("bromwich inversion guards") {
    auto grow = [](cplx s) { return s; };
    CHECK_THROWS_AS(inverse_laplace(grow, 1.0, 1.0, 100.0, 1e-6), accuracy_error);
    auto flat = [](cplx) { return cplx(1.0, 0.0); };
    CHECK_THROWS_AS(inverse_laplace(flat, 1.0, 1.0, 100.0, 1e-6), accuracy_error);
    auto ok = [](cplx s) { return 1.0 / s; };
    CHECK_THROWS_AS(inverse_laplace(ok, 0.0, 1.0, 100.0, 1e-6), std::domain_error);
    CHECK_THROWS_AS(inverse_laplace(ok, 1.0, 1.0, -5.0, 1e-6), std::domain_error);
    CHECK_THROWS_AS(inverse_laplace(ok, 1.0, 1.0, 100.0, 0.0), std::domain_error);
}

TEST_CASE("multi-pole originals") {
    // pure power at the origin pole
    const cplx v1 = f_n_alpha(make_multipole({0.0}, {3}), 0.8);
    CHECK(crel(v1, cplx(0.32, 0.0)) < 1e-15);

    // single shift: unit modulus phase
    const cplx v2 = f_n_alpha(make_multipole({2.0}, {1}), 1.0);
    CHECK(crel(v2, std::exp(cplx(0.0, -2.0))) < 1e-15);
    CHECK(std::abs(v2) == Approx(1.0).epsilon(1e-14));

    // conjugate pair gives sin t
    const cplx v3 = f_n_alpha(make_multipole({1.0, -1.0}, {1, 1}), 1.0);
    CHECK(crel(v3, cplx(std::sin(1.0), 0.0)) < 1e-12);

    // origin + shift: (1 - e^{-it})/i
    const cplx v4 = f_n_alpha(make_multipole({0.0, 1.0}, {1, 1}), 1.0);
    CHECK(crel(v4, cplx(0.84147098480789650665, -0.4596976941318602826)) < 1e-12);

    // three distinct shifts, partial fractions frozen at t = 0.7
    const cplx v5 = f_n_alpha(make_multipole({1.0, -1.0, 0.5}, {1, 1, 1}), 0.7);
    CHECK(crel(v5, cplx(0.23270736741718732504, -0.027718618448807763138)) < 1e-11);

    // repeated plus distinct shift, frozen convolution value at t = 0.8
    const cplx v6 = f_n_alpha(make_multipole({1.0, -1.0}, {2, 1}), 0.8);
    CHECK(crel(v6, cplx(0.28694243635980910465, -0.079995361710895212445)) < 1e-11);

    // equal shifts collapse exactly to the merged pole
    const cplx merged = f_n_alpha(make_multipole({1.3, 1.3}, {2, 1}), 0.9);
    const cplx direct = f_n_alpha(make_multipole({1.3}, {3}), 0.9);
    CHECK(merged == direct);
    // and the convolution path converges to the same limit
    const cplx split = f_n_alpha(make_multipole({1.3, 1.3 + 1e-9}, {2, 1}), 0.9);
    CHECK(std::abs(split - direct) < 1e-8);

    CHECK_THROWS_AS(f_n_alpha(make_multipole({1.0}, {1}), 0.0), std::domain_error);
    CHECK_THROWS_AS(make_multipole({1.0, 2.0}, {1}), std::domain_error);
    CHECK_THROWS_AS(make_multipole({1.0}, {0}), std::domain_error);
    CHECK_THROWS_AS(make_multipole({}, {}), std::domain_error);
}

TEST_CASE("multi-pole transform bound") {
    // |f_{n,alpha}(t)| <= t^{|alpha|-1}/(|alpha|-1)!
    std::vector<MultiPole> cases = {
        make_multipole({0.0}, {3}),
        make_multipole({2.0}, {1}),
        make_multipole({1.0, -1.0}, {1, 1}),
        make_multipole({1.0, -1.0}, {2, 1}),
        make_multipole({0.0, 1.0, -1.0}, {1, 1, 1}),
        make_multipole({0.5, -1.7, 2.2}, {2, 1, 1}),
        make_multipole({3.0, -3.0}, {3, 3}),
    };
    for (const MultiPole& mp : cases) {
        const double n = mp.order();
        for (double t : {0.1, 0.35, 0.7, 1.0}) {
            const double bound = std::pow(t, n - 1) / std::tgamma(n);
            CAPTURE(mp.a_list, mp.alpha_list, t);
            CHECK(std::abs(f_n_alpha(mp, t)) <= bound * (1.0 + 1e-10) + 1e-12);
        }
    }
}

TEST_CASE("root circle factorization") {
    // spot examples
    CHECK(pq_root_factorization({1, 1, pi / 2}, 1.3, cplx(1.0, 1.0)) < 1e-12);
    CHECK(pq_root_factorization({3, 2, 0.4}, 1.0, cplx(0.5, 2.0)) < 1e-11);
    CHECK(pq_root_factorization({2, 3, 1.1}, 1.7, cplx(0.3, -0.8)) < 1e-11);
    // degenerate radius: both sides collapse to the same pure power
    CHECK(pq_root_factorization({2, 2, 0.9}, 0.0, cplx(1.0, 1.0)) < 1e-13);
    // cancellation-prone regime |s| >> za
    CHECK(pq_root_factorization({1, 1, 0.7}, 0.5, cplx(1e6, 3.0)) < 1e-12);

    // full sweep
    for (int p = 1; p <= 6; ++p)
        for (int q = 1; q <= 4; ++q)
            for (double th : {0.0, 0.4, 1.1, 2.9})
                for (cplx s : {cplx(1.0, 1.0), cplx(0.5, 2.0), cplx(2.0, -0.6), cplx(0.2, 0.0)}) {
                    CAPTURE(p, q, th, s);
                    CHECK(pq_root_factorization({p, q, th}, 1.2, s) < 1e-10);
                }

    CHECK_THROWS_AS(pq_root_factorization({0, 1, 0.0}, 1.0, cplx(1.0, 0.0)), std::domain_error);
    CHECK_THROWS_AS(pq_root_factorization({1, 1, 0.0}, -1.0, cplx(1.0, 0.0)), std::domain_error);
}

TEST_CASE("root set geometry") {
    const PoleSpec ps{3, 2, 0.8};
    const double z = 1.4;
    const double za = (2.0 * ps.q / ps.p) * std::pow(z, 0.5 * ps.p / ps.q);
    std::vector<cplx> roots = ps.roots(z);
    REQUIRE(roots.size() == 4);
    for (const cplx& r : roots) {
        CHECK(r.real() == 0.0);
        CHECK(std::abs(r) <= za * (1.0 + 1e-15));
    }
    // theta -> theta + 2 pi q / p permutes the set
    const PoleSpec shifted{3, 2, 0.8 + 2.0 * pi * ps.q / ps.p};
    std::vector<double> im0, im1;
    for (const cplx& r : roots) im0.push_back(r.imag());
    for (const cplx& r : shifted.roots(z)) im1.push_back(r.imag());
    std::sort(im0.begin(), im0.end());
    std::sort(im1.begin(), im1.end());
    for (size_t i = 0; i < im0.size(); ++i) CHECK(std::abs(im0[i] - im1[i]) < 1e-10 * za);

    CHECK_THROWS_AS((PoleSpec{1, 0, 0.0}).roots(1.0), std::domain_error);
}

TEST_CASE("inversion recovers the kernel") {
    struct Row {
        double a;
        int m;
        double z, xi;
        cplx want;
    };
    const std::vector<Row> rows = {
        {2.0, 2, 1.0, 0.5, {0.87758256189037271612, -0.47942553860420300027}},
        {4.0, 2, 1.2, 0.3, {1.2319633402635810615, 0.49531035311449695539}},
        {1.0, 4, 0.8, -0.2, {0.79991121039786089387, 0.0}},
        {1.0, 3, 1.0, 0.4, {0.41337761471166067797, 0.0}},
        {2.0, 4, 0.9, -0.5, {0.90044710235267691684, 0.43496553411123022042}},
    };
    for (const Row& r : rows) {
        const ComplexEval e = ilt_kernel_check({r.a, r.m}, make_geom(r.z, r.xi), 1e-6);
        CAPTURE(r.a, r.m, r.z, r.xi);
        CHECK(std::abs(e.value - r.want) < 1e-6);
        CHECK(std::abs(e.value - r.want) <= e.err + 1e-8);
        CHECK(e.method == Method::laplace);
    }

    // agreement with the independent evaluators, error budgets combined
    {
        const GeomPoint g = make_geom(1.2, 0.3);
        const ComplexEval lap = ilt_kernel_check({4.0, 2}, g, 1e-6);
        const ComplexEval cf = kernel_a4_dim2(g);
        CHECK(std::abs(lap.value - cf.value) <= lap.err + cf.err + 1e-9);
        const ComplexEval ser = kernel_series({4.0, 2}, g, 1e-12);
        CHECK(std::abs(lap.value - ser.value) <= lap.err + ser.err + 1e-9);
    }
    {
        const GeomPoint g = make_geom(0.8, -0.2);
        const ComplexEval lap = ilt_kernel_check({1.0, 4}, g, 1e-6);
        const ComplexEval cf = kernel_a1(4, g);
        CHECK(std::abs(lap.value - cf.value) <= lap.err + cf.err + 1e-9);
    }

    // out of the supported window or malformed
    CHECK_THROWS_AS(ilt_kernel_check({2.0, 2}, make_geom(6.0, 0.3), 1e-6), std::domain_error);
    CHECK_THROWS_AS(ilt_kernel_check({2.0, 2}, make_geom(1.0, 0.3), 0.0), std::domain_error);
}
