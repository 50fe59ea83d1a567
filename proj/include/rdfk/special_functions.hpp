#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "rdfk/common.hpp"
#include "rdfk/quadrature.hpp"

// Self-contained special-function evaluators used by the kernel methods:
// Bessel J of real nonnegative order, its power-normalized variant,
// Gegenbauer polynomials, Fresnel integrals, the complex error function,
// Hermite polynomials and parabolic cylinder functions D of nonpositive
// integer order (plus their large-|z| expansions).

namespace rdfk {

namespace detail {

// Ascending series for (x/2)^{-nu} J_nu(x); cancellation-free for small x^2/4
// relative to nu. Valid for nu > -1. Returns value and an error estimate.
inline std::pair<double, double> bessel_tilde_series(double nu, double x) {
    long double q = -(long double)(x) * x / 4.0L;
    long double term = 1.0L / std::tgamma((long double)nu + 1.0L);
    long double sum = term, amax = std::fabs(term);
    for (int k = 1; k <= 600; ++k) {
        term *= q / ((long double)k * ((long double)nu + k));
        sum += term;
        amax = std::max(amax, std::fabs(term));
        if (std::fabs(term) < 1e-20L * std::fabs(sum) + 1e-320L) break;
    }
    double err = (double)(amax)*1.5e-19 * 40.0 + 1e-320;
    return {(double)sum, err};
}

// Hankel large-argument expansion of J_mu(x); good for |mu| modest, x >~ 12.
// Returns value and the magnitude of the first neglected term.
inline std::pair<double, double> bessel_hankel(double mu, double x) {
    long double m2 = 4.0L * (long double)mu * mu;
    long double t = 1.0L;
    long double P = 1.0L, Q = 0.0L;
    long double prev = 1.0L;
    double trunc = 0.0;
    for (int k = 1; k <= 80; ++k) {
        t *= (m2 - (2.0L * k - 1.0L) * (2.0L * k - 1.0L)) / (8.0L * k * (long double)x);
        if (std::fabs(t) > prev) {  // divergence onset: stop before this term
            trunc = (double)std::fabs(t);
            break;
        }
        prev = std::fabs(t);
        if (k % 2 == 1) {
            Q += (k % 4 == 1) ? t : -t;
        } else {
            P += (k % 4 == 2) ? -t : t;
        }
        trunc = (double)std::fabs(t);
        if (std::fabs(t) < 1e-19L) break;
    }
    long double chi = (long double)x - (0.5L * (long double)mu + 0.25L) * (long double)pi;
    long double v = std::sqrt(2.0L / ((long double)pi * x)) *
                    (P * std::cos(chi) - Q * std::sin(chi));
    double scale = std::sqrt(2.0 / (pi * x));
    return {(double)v, scale * (trunc + 1e-16)};
}

struct BesselEval {
    double value;
    double err;
};

// J_nu(x) for nu >= 0 (nu > -1 tolerated when the series branch applies),
// x >= 0, with an absolute-error estimate.
inline BesselEval bessel_j_impl(double nu, double x) {
    if (x == 0.0) return {nu == 0.0 ? 1.0 : 0.0, 0.0};

    // power-series regime: small argument, or order dominating the argument
    if (x <= 12.0 || 0.25 * x * x <= 0.5 * (nu + 1.0)) {
        auto [tv, terr] = bessel_tilde_series(nu, x);
        double lg = nu * std::log(x / 2.0);
        if (lg < -700.0) return {0.0, 1e-300};
        double p = std::exp(lg);
        return {p * tv, p * terr + 1e-16};
    }

    double mu = nu - std::floor(nu);
    int K = (int)std::llround(nu - mu);

    if (nu <= x - 2.5 * std::cbrt(x) - 2.0) {
        // oscillatory regime: asymptotic anchors at orders mu, mu+1,
        // then upward recurrence (stays clear of the turning point)
        auto [j0, e0] = bessel_hankel(mu, x);
        if (K == 0) return {j0, e0};
        auto [j1, e1] = bessel_hankel(mu + 1.0, x);
        double jm = j0, jc = j1;
        for (int k = 1; k < K; ++k) {
            double jn = 2.0 * (mu + k) / x * jc - jm;
            jm = jc;
            jc = jn;
        }
        double err = (e0 + e1) * (1.0 + std::sqrt((double)K));
        return {jc, err};
    }

    // monotonic / turning-point regime: Miller downward recurrence,
    // normalized against asymptotic anchors at the ladder foot
    int n_start = (int)std::ceil(std::max(nu + 30.0, x + 14.0 * std::cbrt(x)));
    double fp = 0.0, fc = 1e-280;
    double f_target = 0.0, f1 = 0.0;
    bool have_target = false, have_f1 = false;
    for (int n = n_start; n >= 1; --n) {
        double fn = 2.0 * (mu + n) / x * fc - fp;
        fp = fc;
        fc = fn;
        if (std::fabs(fc) > 1e250) {  // rescale mid-run
            fc *= 1e-250;
            fp *= 1e-250;
            if (have_target) f_target *= 1e-250;
            if (have_f1) f1 *= 1e-250;
        }
        if (n - 1 == K) {
            f_target = fc;
            have_target = true;
        }
        if (n - 1 == 1) {
            f1 = fc;
            have_f1 = true;
        }
    }
    double f0 = fc;
    if (K == 0) f_target = f0;
    if (K == 1) f_target = f1;
    auto [a0, e0] = bessel_hankel(mu, x);
    auto [a1, e1] = bessel_hankel(mu + 1.0, x);
    double scale, rel;
    if (std::fabs(f0) >= std::fabs(f1)) {
        scale = a0 / f0;
        rel = e0 / std::max(std::fabs(a0), 1e-280);
    } else {
        scale = a1 / f1;
        rel = e1 / std::max(std::fabs(a1), 1e-280);
    }
    double v = f_target * scale;
    return {v, std::fabs(v) * (rel + 1e-14) + 1e-16};
}

}  // namespace detail

// Bessel function of the first kind, real order nu >= 0, argument x >= 0.
// Throws accuracy_error if the internal estimate exceeds tol.
inline double bessel_j(double nu, double x, double tol = 1e-10) {
    if (nu < 0.0 || x < 0.0) throw std::domain_error("bessel_j: need nu >= 0, x >= 0");
    auto r = detail::bessel_j_impl(nu, x);
    if (r.err > tol) throw accuracy_error("bessel_j: estimated error above tolerance");
    return r.value;
}

// (x/2)^{-nu} J_nu(x); finite at x = 0 with value 1/Gamma(nu+1). nu >= -1/2.
inline double bessel_j_tilde(double nu, double x, double tol = 1e-10) {
    if (nu < -0.5 || x < 0.0) throw std::domain_error("bessel_j_tilde: need nu >= -1/2, x >= 0");
    if (x == 0.0) return 1.0 / std::tgamma(nu + 1.0);
    if (x <= 12.0 || 0.25 * x * x <= 0.5 * (nu + 1.0)) {
        auto [v, err] = detail::bessel_tilde_series(nu, x);
        if (err > tol) throw accuracy_error("bessel_j_tilde: series error above tolerance");
        return v;
    }
    // large argument: evaluate J and strip the power (underflow -> genuine 0)
    detail::BesselEval je = (nu >= 0.0) ? detail::bessel_j_impl(nu, x)
                                        : [&] {
                                              auto [v, e] = detail::bessel_hankel(nu, x);
                                              return detail::BesselEval{v, e};
                                          }();
    double lp = -nu * std::log(x / 2.0);
    if (lp < -700.0) return 0.0;
    double p = std::exp(lp);
    if (p * je.err > tol) throw accuracy_error("bessel_j_tilde: error above tolerance");
    return p * je.value;
}

// d/dx J_nu(x) through J_{nu+1}; avoids negative orders.
inline double bessel_j_prime(double nu, double x, double tol = 1e-10) {
    if (x == 0.0) {
        if (nu == 1.0) return 0.5;
        if (nu > 1.0) return 0.0;
        throw std::domain_error("bessel_j_prime: singular at x = 0 for nu < 1");
    }
    return nu / x * bessel_j(nu, x, tol) - bessel_j(nu + 1.0, x, tol);
}

// Gegenbauer polynomial C_k^{(lambda)}(xi) by the three-term recurrence.
inline double gegenbauer(int k, double lambda, double xi) {
    if (k < 0 || lambda < 0.0) throw std::domain_error("gegenbauer: need k >= 0, lambda >= 0");
    if (k == 0) return 1.0;
    double c0 = 1.0, c1 = 2.0 * lambda * xi;
    if (k == 1) return c1;
    for (int j = 2; j <= k; ++j) {
        double c2 = (2.0 * (j + lambda - 1.0) * xi * c1 - (j + 2.0 * lambda - 2.0) * c0) / j;
        c0 = c1;
        c1 = c2;
    }
    return c1;
}

// C_k^{(lambda)}(1) = Gamma(k+2 lambda) / (Gamma(2 lambda) k!), lambda > 0.
inline double gegenbauer_at_one(int k, double lambda) {
    if (lambda <= 0.0) throw std::domain_error("gegenbauer_at_one: need lambda > 0");
    return std::exp(std::lgamma(k + 2.0 * lambda) - std::lgamma(2.0 * lambda) - std::lgamma(k + 1.0));
}

struct FresnelCS {
    double c;  // integral of cos(t^2) from 0 to u
    double s;  // integral of sin(t^2) from 0 to u
};

// Fresnel integrals in the unnormalized convention above.
// Quadrature below |u| = 6, asymptotic auxiliary expansion beyond.
inline FresnelCS fresnel(double u) {
    double au = std::fabs(u), sg = (u < 0.0) ? -1.0 : 1.0;
    if (au <= 6.0) {
        auto r = integrate_gk([](double t) { return cplx(std::cos(t * t), std::sin(t * t)); },
                              0.0, au, 1e-14, std::max(1, (int)(au * 2)));
        return {sg * r.value.real(), sg * r.value.imag()};
    }
    // tail integral of e^{i t^2} over [u, inf): e^{i u^2} sum b_k u^{-(2k+1)}
    cplx b(0.0, 0.5);
    cplx tail = b / au;
    double upow = au;
    for (int k = 1; k <= 60; ++k) {
        b *= cplx(0.0, -0.5) * (2.0 * k - 1.0);
        upow *= au * au;
        cplx t = b / upow;
        if (std::abs(t) > std::abs(tail) || std::abs(t) < 1e-18) break;
        tail += t;
    }
    cplx I = std::polar(1.0, au * au) * tail;
    const double h = std::sqrt(pi / 2.0) / 2.0;  // integral over [0, inf)
    cplx cs = cplx(h, h) - I;
    return {sg * cs.real(), sg * cs.imag()};
}

// integral of e^{i t^2} over (-inf, u]
inline cplx cis_integral(double u) {
    FresnelCS f = fresnel(u);
    const double h = std::sqrt(pi / 2.0) / 2.0;
    return cplx(h + f.c, h + f.s);
}

namespace detail {

// Rational approximation of the Faddeeva function w(z) = e^{-z^2} erfc(-iz)
// on the closed upper half plane (Weideman-style, 64 coefficients).
inline cplx faddeeva_upper(cplx z) {
    constexpr int N = 64, M = 128, M2 = 256;
    static const std::array<double, N> A = [] {
        std::array<double, N> a{};
        const double L = std::sqrt(N / std::sqrt(2.0));
        std::array<double, M2> f{};  // index k + M, k = -M..M-1; f[-M] stays 0
        for (int k = -M + 1; k <= M - 1; ++k) {
            double th = k * pi / M;
            double t = L * std::tan(0.5 * th);
            f[k + M] = std::exp(-t * t) * (L * L + t * t);
        }
        for (int q = 1; q <= N; ++q) {
            double re = 0.0;
            for (int k = -M + 1; k <= M - 1; ++k)
                re += f[k + M] * std::cos(pi * q * k / (double)M);
            a[q - 1] = re / M2;
        }
        return a;
    }();
    const double L = std::sqrt(N / std::sqrt(2.0));
    cplx iz(-z.imag(), z.real());
    cplx d = L - iz;
    cplx Z = (L + iz) / d;
    cplx p(0.0, 0.0);
    for (int q = N - 1; q >= 0; --q) p = p * Z + A[q];
    return 2.0 * p / (d * d) + (1.0 / std::sqrt(pi)) / d;
}

}  // namespace detail

// Scaled complementary error function e^{w^2} erfc(w), any w with the
// reflected branch representable.
inline cplx erfcx_complex(cplx w) {
    if (w.real() >= 0.0) return detail::faddeeva_upper(cplx(-w.imag(), w.real()));
    cplx w2 = w * w;
    if (w2.real() > 700.0) throw std::domain_error("erfcx_complex: reflection overflows");
    return 2.0 * std::exp(w2) - detail::faddeeva_upper(cplx(w.imag(), -w.real()));
}

// Complementary error function for complex argument.
// Computed as e^{-w^2} w_F(iw) in the right half plane, reflected otherwise.
inline cplx erfc_complex(cplx w) {
    if (w == cplx(0.0, 0.0)) return cplx(1.0, 0.0);
    if (w.real() < 0.0) return 2.0 - erfc_complex(-w);
    cplx mw2 = -w * w;
    if (mw2.real() > 700.0) throw std::domain_error("erfc_complex: e^{-w^2} overflows");
    return std::exp(mw2) * detail::faddeeva_upper(cplx(-w.imag(), w.real()));
}

inline cplx erf_complex(cplx w) { return 1.0 - erfc_complex(w); }

// Hermite polynomial H_n(w), complex argument.
inline cplx hermite(int n, cplx w) {
    if (n < 0) throw std::domain_error("hermite: need n >= 0");
    if (n == 0) return 1.0;
    cplx h0 = 1.0, h1 = 2.0 * w;
    for (int k = 1; k < n; ++k) {
        cplx h2 = 2.0 * w * h1 - 2.0 * (double)k * h0;
        h0 = h1;
        h1 = h2;
    }
    return h1;
}

// Parabolic cylinder function D_{-n}(w) for integer 0 <= n <= 20.
// D_0 and D_{-1} are closed forms. Higher orders decay with n, so the
// recurrence is run downward from beyond the target order and anchored on
// the closed forms; agreement of the two independent anchorings validates
// the run. Arguments in the growing half plane Re w < 0 are reflected
// first: the reflection adds an explicit polynomial term that carries the
// dominant growth, leaving the reflected evaluation in the decaying half.
inline cplx parabolic_d(int n, cplx w) {
    if (n < 0 || n > 20) throw std::domain_error("parabolic_d: order -n with 0 <= n <= 20");
    cplx w24 = w * w / 4.0;
    if (std::fabs(w24.real()) > 700.0) throw std::domain_error("parabolic_d: exp overflow");
    cplx d0 = std::exp(-w24);
    if (n == 0) return d0;
    cplx d1 = std::sqrt(pi / 2.0) * std::exp(-w24) * erfcx_complex(w / std::sqrt(2.0));
    if (n == 1) return d1;

    if (std::abs(w) < 1.0) {
        // power series of the differential equation u'' = (w^2/4 + a) u
        // about 0, seeded with the exact values and slopes at the origin
        double a = n - 0.5;
        double u0 = std::sqrt(pi) * std::pow(2.0, -0.5 * n) / std::tgamma(0.5 * (n + 1.0));
        double v0 = -std::sqrt(pi) * std::pow(2.0, 0.5 * (1.0 - n)) / std::tgamma(0.5 * n);
        cplx c0 = u0, c1 = v0, c2 = 0.5 * a * u0, c3 = a * v0 / 6.0;
        cplx sum = c0 + w * (c1 + w * (c2 + w * c3));
        cplx wp = w * w * w;
        for (int k = 4; k <= 60; ++k) {
            cplx ck = (a * c2 + 0.25 * c0) / ((double)k * (k - 1.0));
            wp *= w;
            cplx t = ck * wp;
            sum += t;
            c0 = c1;
            c1 = c2;
            c2 = c3;
            c3 = ck;
            if (std::abs(t) < 1e-18 * std::abs(sum)) break;
        }
        return sum;
    }

    if (w.real() < 0.0) {
        // D_{-n}(w) = sqrt(2 pi)/(n-1)! e^{w^2/4} E[(S - w)^{n-1}]
        //             + (-1)^n D_{-n}(-w),  S standard normal
        cplx v = -w;
        cplx q(0.0, 0.0), vp(1.0, 0.0);
        std::vector<cplx> pows(n);
        for (int j = 0; j < n; ++j) {
            pows[j] = vp;
            vp *= v;
        }
        double coef = 1.0;
        for (int j = 0; 2 * j <= n - 1; ++j) {
            q += coef * pows[n - 1 - 2 * j];
            coef *= (n - 1.0 - 2.0 * j) * (n - 2.0 - 2.0 * j) / (2.0 * (j + 1.0));
        }
        double sign = (n % 2 == 0) ? 1.0 : -1.0;
        return std::sqrt(2.0 * pi) / std::tgamma((double)n) * std::exp(w24) * q +
               sign * parabolic_d(n, v);
    }

    // decaying half plane: downward run g_k = w g_{k+1} + (k+1) g_{k+2}
    for (int margin = 40; margin <= 41000; margin *= 4) {
        int N = n + margin;
        cplx gk2(0.0, 0.0), gk1(1e-280, 0.0);
        cplx gn(0.0, 0.0), g1(0.0, 0.0);
        bool have_n = false;
        for (int k = N - 1; k >= 0; --k) {
            cplx g = w * gk1 + (k + 1.0) * gk2;
            gk2 = gk1;
            gk1 = g;
            if (std::abs(g) > 1e250) {
                g *= 1e-250;
                gk1 *= 1e-250;
                gk2 *= 1e-250;
                if (have_n) gn *= 1e-250;
            }
            if (k == n) {
                gn = gk1;
                have_n = true;
            }
            if (k == 1) g1 = gk1;
        }
        cplx g0 = gk1;
        cplx va = (gn / g0) * d0;
        cplx vb = (gn / g1) * d1;
        cplx value = (std::abs(g0) >= std::abs(g1)) ? va : vb;
        if (std::abs(va - vb) <= 1e-12 * std::abs(value) + 1e-300) return value;
    }
    throw accuracy_error("parabolic_d: downward recurrence failed to stabilize");
}

struct AsymptoticEval {
    cplx value;
    double err;  // magnitude of the first omitted term(s)
};

// Large-|z| expansion of D_{-nu-1/2}(z) with nu the standard parameter
// (nu = 1/2 gives D_{-1}). Single descending series for |arg z| < pi/2; in
// |arg z| > pi/2 a second exponential is present and the compound two-series
// form applies. Each series stops at its smallest term; err reports the
// omitted terms plus, near |arg z| = pi/2, the magnitude of the subdominant
// exponential whose on/off assignment is ambiguous there.
inline AsymptoticEval parabolic_d_asymptotic(double nu, cplx z, int terms) {
    if (terms < 1 || terms > 60) throw std::domain_error("parabolic_d_asymptotic: terms in [1,60]");
    double az = std::abs(z), ph = std::arg(z);
    if (az < 1.0) throw std::domain_error("parabolic_d_asymptotic: |z| too small");
    cplx z2i = 1.0 / (2.0 * z * z);
    cplx zq = z * z / 4.0;

    // sum_s sign^s (p)_{2s} / (s! (2 z^2)^s) up to the smallest term,
    // returning the magnitude of the first omitted term
    auto series = [&](double p, int sign) -> std::pair<cplx, double> {
        cplx term(1.0, 0.0), sum(1.0, 0.0);
        double next = 0.0;
        for (int s = 1; s <= terms; ++s) {
            double f = (p + 2.0 * s - 2.0) * (p + 2.0 * s - 1.0);
            cplx t = term * ((double)sign * f * z2i / (double)s);
            next = std::abs(t);
            if (s == terms || next >= std::abs(term)) break;  // divergence onset
            term = t;
            sum += term;
        }
        return {sum, next};
    };

    cplx zpow_main = std::pow(z, -nu - 0.5);
    auto [s1, e1] = series(nu + 0.5, -1);
    cplx main = std::exp(-zq) * zpow_main * s1;
    double errm = std::abs(std::exp(-zq)) * std::abs(zpow_main) * e1;

    double sgn = (ph >= 0.0) ? 1.0 : -1.0;
    cplx pre = sgn * cplx(0.0, 1.0) * std::sqrt(2.0 * pi) / std::tgamma(nu + 0.5) *
               std::exp(cplx(0.0, -sgn * pi * nu));
    double corr_scale = std::abs(pre) * std::abs(std::exp(zq)) * std::abs(std::pow(z, nu - 0.5));
    // half width of the zone where the second exponential is neither clearly
    // absent nor clearly present; it is smallest exactly on the boundary ray
    double zone = std::min(0.35, 6.0 / az);

    if (std::fabs(ph) < pi / 2.0) {
        double amb = (std::fabs(ph) > pi / 2.0 - zone) ? corr_scale : 0.0;
        return {main, errm + amb};
    }
    auto [s2, e2] = series(0.5 - nu, +1);
    cplx corr = pre * std::exp(zq) * std::pow(z, nu - 0.5) * s2;
    double errc = corr_scale * e2;
    double amb = (std::fabs(ph) < pi / 2.0 + zone) ? corr_scale : 0.0;
    return {main + corr, errm + errc + amb};
}

}  // namespace rdfk
