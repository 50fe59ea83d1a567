#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>

#include <rdfk/common.hpp>
#include <rdfk/kernel_core.hpp>
#include <rdfk/quadrature.hpp>
#include <rdfk/special_functions.hpp>

// Closed-form kernel evaluations for deformation exponents 1, 2, 4 and 6,
// plus the Fourier-series subsampling construction that transports a base
// kernel at exponent a to exponent a/n in dimension two.  These serve as
// independent oracles against kernel_series and as the fast path for the
// dispatching evaluator.

namespace rdfk {

// a = 2: the plane wave, any dimension.
inline ComplexEval kernel_a2(const GeomPoint& g) {
    const cplx v = std::exp(cplx(0.0, -g.z * g.xi));
    return {v, 1.2e-16 * (1.0 + g.z * std::fabs(g.xi)), Method::closed};
}

// a = 1: half-integer Bessel closed form, real-valued.
inline ComplexEval kernel_a1(int m, const GeomPoint& g) {
    if (m < 2) throw std::domain_error("kernel_a1: m must be >= 2");
    const double w = std::sqrt(2.0 * g.z * (1.0 + g.xi));
    const double v = std::tgamma(0.5 * (m - 1)) * bessel_j_tilde(0.5 * (m - 3), w);
    return {cplx(v, 0.0), 1e-13 * (1.0 + std::fabs(v)), Method::closed};
}

namespace detail {

// roundoff of the oscillatory prefactors, which carry phases of size z^2
inline double a4_phase_roundoff(double z) { return 1.1e-16 * (1.0 + 0.5 * z * z); }

}  // namespace detail

// a = 4, m = 2: error-function form cross-checked against the Fresnel form.
inline ComplexEval kernel_a4_dim2(const GeomPoint& g) {
    const double z = g.z, xi = g.xi;
    const double w = z * xi;
    const cplx br1 = std::exp(cplx(0.0, -z * z * (xi * xi - 0.5))) *
                     erfc_complex(cplx(-w / std::sqrt(2.0), w / std::sqrt(2.0)));
    const cplx br2 = cplx(1.0, -1.0) * std::sqrt(2.0 / pi) *
                     std::exp(cplx(0.0, -0.5 * z * z * (2.0 * xi * xi - 1.0))) * cis_integral(w);
    const double diff = std::abs(br1 - br2);
    const double rnd = detail::a4_phase_roundoff(z) * (1.0 + std::abs(br1));
    if (diff > 1e-9 * (1.0 + std::abs(br1)) + 8.0 * rnd)
        throw accuracy_error("kernel_a4_dim2: dual paths disagree");
    return {br1, diff + rnd + 1e-15, Method::closed};
}

// a = 4, m = 4: explicit first-derivative form.
inline ComplexEval kernel_a4_dim4(const GeomPoint& g) {
    const double z = g.z, xi = g.xi;
    const cplx v = std::exp(cplx(0.0, 0.5 * z * z)) -
                   cplx(0.0, 2.0 * z * xi) *
                       std::exp(cplx(0.0, -0.5 * z * z * (2.0 * xi * xi - 1.0))) *
                       cis_integral(z * xi);
    const double err =
        (1.0 + 2.0 * z * std::fabs(xi)) * (detail::a4_phase_roundoff(z) + 1e-15);
    return {v, err, Method::closed};
}

// a = 4, even m = 2n: parabolic cylinder compact form
//   2^{n/2} Gamma((n+1)/2) / sqrt(pi) * e^{(i/2) z^2 sin^2 theta}
//     * D_{-n}((i-1) z cos theta),
// reconciled against the explicit forms for m = 2 and m = 4.  The cylinder
// evaluator covers integer orders through 20, bounding m at 40.
inline ComplexEval kernel_a4_even(int m, const GeomPoint& g) {
    if (m < 2 || m % 2 != 0) throw std::domain_error("kernel_a4_even: m must be even");
    if (m > 40) throw std::domain_error("kernel_a4_even: m beyond cylinder order range");
    const int n = m / 2;
    const double z = g.z, xi = g.xi;
    const double cn = std::pow(2.0, 0.5 * n) * std::tgamma(0.5 * (n + 1)) / std::sqrt(pi);
    const cplx v = cn * std::exp(cplx(0.0, 0.5 * z * z * (1.0 - xi * xi))) *
                   parabolic_d(n, cplx(-z * xi, z * xi));
    double err = (1e-13 + detail::a4_phase_roundoff(z)) * (1.0 + std::abs(v)) * (1.0 + 0.2 * n);
    if (m == 2 || m == 4) {
        const ComplexEval other = m == 2 ? kernel_a4_dim2(g) : kernel_a4_dim4(g);
        const double diff = std::abs(v - other.value);
        if (diff > 1e-9 * (1.0 + std::abs(v)) +
                       8.0 * detail::a4_phase_roundoff(z) * (1.0 + std::abs(v)))
            throw accuracy_error("kernel_a4_even: dual paths disagree");
        err = std::max(err, diff);
    }
    return {v, err, Method::closed};
}

namespace detail {

inline double sinc_stable(double x) {
    if (std::fabs(x) < 1e-4) return 1.0 - x * x / 6.0;
    return std::sin(x) / x;
}

// integrates g over [0, Z] with the endpoint behavior t^{nu-1} tamed by the
// substitution t = u^3 on the leading piece
template <typename G>
IntegralResult integrate_bessel_tail(G&& g, double Z, double tol) {
    const double t0 = std::min(1.0, Z);
    auto sub = [&](double u) { return 3.0 * u * u * g(u * u * u); };
    IntegralResult head = integrate_gk(sub, 0.0, std::cbrt(t0), 0.5 * tol);
    if (t0 == Z) return head;
    const IntegralResult rest = integrate_gk(g, t0, Z, 0.5 * tol, 4);
    head.value += rest.value;
    head.err += rest.err;
    head.evals += rest.evals;
    return head;
}

}  // namespace detail

// The two auxiliary integrals of the a = 6 closed form.  vartheta enters
// through sin and cos only; the cosec prefactor of the first integral is
// absorbed as sin[(Z-t) sin vartheta] / sin vartheta = (Z-t) sinc(...), which
// is exact and removes the singular angles.
inline IntegralResult a6_f1(double nu, double Z, double vartheta, double tol) {
    if (Z == 0.0) return {cplx(0.0, 0.0), 0.0, 0};
    const double s = std::sin(vartheta), c = std::cos(vartheta);
    const double c2 = std::cos(2.0 * vartheta);
    auto g = [&](double t) {
        const double core =
            c2 * bessel_j(nu, t) + 2.0 * c * bessel_j_prime(nu, t) - bessel_j(nu + 2.0, t);
        return 0.25 * (Z - t) * detail::sinc_stable((Z - t) * s) * core;
    };
    return detail::integrate_bessel_tail(g, Z, tol);
}

inline IntegralResult a6_f2(double nu, double Z, double vartheta, double tol) {
    if (Z == 0.0) return {cplx(0.0, 0.0), 0.0, 0};
    const double s = std::sin(vartheta), c = std::cos(vartheta);
    if (s == 0.0) return {cplx(0.0, 0.0), 0.0, 0};
    auto g = [&](double t) {
        return 0.5 * (nu / t + c) * std::sin((Z - t) * s) * bessel_j(nu, t);
    };
    return detail::integrate_bessel_tail(g, Z, tol);
}

// a = 6, m = 2: one exponential, two standalone Bessel terms and four
// f1/f2 combinations at angles 3 theta -+ pi/2.
inline ComplexEval kernel_a6_dim2(const GeomPoint& g, double tol) {
    if (!(tol > 0.0)) throw std::domain_error("kernel_a6_dim2: tol must be > 0");
    if (g.z == 0.0) return {cplx(1.0, 0.0), 0.0, Method::closed};
    const double z6 = g.z_deformed(6.0);
    const double th = g.theta;
    const double b1 = bessel_j(1.0 / 3.0, z6);
    const double b2 = bessel_j(2.0 / 3.0, z6);
    cplx v = std::exp(cplx(0.0, -z6 * std::cos(3.0 * th))) +
             2.0 * std::polar(1.0, -pi / 6.0) * b1 * std::cos(th) +
             2.0 * std::polar(1.0, -pi / 3.0) * b2 * std::cos(2.0 * th);
    double err = 1e-13 * (std::fabs(b1) + std::fabs(b2)) + 1.2e-16 * (1.0 + z6);
    const double vm = 3.0 * th - 0.5 * pi;
    const double vp = 3.0 * th + 0.5 * pi;
    const double ftol = tol / 16.0;
    for (int k = 1; k <= 2; ++k) {
        const double nu = k / 3.0;
        const IntegralResult f1m = a6_f1(nu, z6, vm, ftol);
        const IntegralResult f2m = a6_f2(nu, z6, vm, ftol);
        const IntegralResult f1p = a6_f1(nu, z6, vp, ftol);
        const IntegralResult f2p = a6_f2(nu, z6, vp, ftol);
        v += std::polar(1.0, k * (th - pi / 6.0)) * (f1m.value + cplx(0.0, 1.0) * f2m.value);
        v += std::polar(1.0, -k * (th + pi / 6.0)) * (f1p.value - cplx(0.0, 1.0) * f2p.value);
        err += f1m.err + f2m.err + f1p.err + f2p.err;
    }
    return {v, err, Method::closed};
}

// Folds a base kernel at exponent base_a down to base_a / n in dimension
// two: the surviving Fourier modes of the base series are exactly the
// target series when the radial argument is rescaled so the deformed
// variables coincide, i.e. Z = n^{2/base_a} z^{1/n}.
template <typename KE>
ComplexEval kernel_subsample(KE&& base, double base_a, int n, const GeomPoint& g) {
    if (n < 1) throw std::domain_error("kernel_subsample: n must be >= 1");
    if (!(base_a > 0.0)) throw std::domain_error("kernel_subsample: base_a must be > 0");
    const double zr = std::pow(n, 2.0 / base_a) * std::pow(g.z, 1.0 / n);
    cplx acc{0.0, 0.0};
    double err = 0.0;
    for (int j = 0; j < n; ++j) {
        const ComplexEval e = base(make_geom(zr, std::cos((g.theta + 2.0 * pi * j) / n)));
        acc += e.value;
        err += e.err;
    }
    return {acc / double(n), err / n + 1e-16, Method::closed};
}

enum class ClosedTag { a1, a2, a4_dim2, a4_even, a6_dim2, subsample };

// Dispatch description: which closed form applies, with the subsampling
// parameters when the kernel is reached through the folding construction.
struct ClosedFormKind {
    ClosedTag tag = ClosedTag::a2;
    double base_a = 0.0;  // subsample only: exponent of the base kernel
    int n = 1;            // subsample only: folding order
};

inline ComplexEval closed_form_eval(const ClosedFormKind& kind, int m, const GeomPoint& g,
                                    double tol) {
    switch (kind.tag) {
        case ClosedTag::a2:
            return kernel_a2(g);
        case ClosedTag::a1:
            return kernel_a1(m, g);
        case ClosedTag::a4_dim2:
            if (m != 2) throw std::domain_error("closed_form_eval: a4_dim2 needs m = 2");
            return kernel_a4_dim2(g);
        case ClosedTag::a4_even:
            return kernel_a4_even(m, g);
        case ClosedTag::a6_dim2:
            if (m != 2) throw std::domain_error("closed_form_eval: a6_dim2 needs m = 2");
            return kernel_a6_dim2(g, tol);
        case ClosedTag::subsample: {
            if (m != 2) throw std::domain_error("closed_form_eval: subsample needs m = 2");
            auto base = [&](const GeomPoint& gg) -> ComplexEval {
                if (kind.base_a == 1.0) return kernel_a1(2, gg);
                if (kind.base_a == 2.0) return kernel_a2(gg);
                if (kind.base_a == 4.0) return kernel_a4_dim2(gg);
                if (kind.base_a == 6.0) return kernel_a6_dim2(gg, tol);
                throw std::domain_error("closed_form_eval: no base form at that exponent");
            };
            return kernel_subsample(base, kind.base_a, kind.n, g);
        }
    }
    throw std::domain_error("closed_form_eval: unknown tag");
}

}  // namespace rdfk
