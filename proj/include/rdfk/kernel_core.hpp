#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <thread>
#include <vector>

#include <rdfk/common.hpp>
#include <rdfk/quadrature.hpp>
#include <rdfk/special_functions.hpp>

// Deformed-kernel core: parameterization, the Bessel-Gegenbauer series that
// serves as ground truth for every other evaluation route, the quadrature
// realization of the associated integral transform, and the finite-difference
// lift between dimensions m and m+2.

namespace rdfk {

struct KernelParams {
    double a = 2.0;  // deformation exponent, > 0
    int m = 2;       // ambient dimension, >= 2

    double lambda() const { return 0.5 * (m - 2); }
    // a^{2 lambda / a} Gamma((2 lambda + a)/a), the series prefactor
    double prefactor() const {
        const double l = lambda();
        return std::pow(a, 2.0 * l / a) * std::tgamma((2.0 * l + a) / a);
    }
};

namespace detail {

inline void check_kernel(const KernelParams& p) {
    if (!(p.a > 0.0)) throw std::domain_error("kernel: a must be > 0");
    if (p.m < 2) throw std::domain_error("kernel: m must be an integer >= 2");
}

}  // namespace detail

// The scale-invariant geometry of a pair (x, y): z = |x||y| and the cosine
// xi of the angle between them.
struct GeomPoint {
    double z = 0.0;   // >= 0
    double xi = 0.0;  // in [-1, 1], 0 when z = 0
    double theta = 0.0;

    // deformed radial variable (2/a) z^{a/2}
    double z_deformed(double a) const { return (2.0 / a) * std::pow(z, 0.5 * a); }
};

inline GeomPoint make_geom(double z, double xi) {
    if (!(z >= 0.0)) throw std::domain_error("geom: z must be >= 0");
    if (std::fabs(xi) > 1.0 + 1e-12) throw std::domain_error("geom: xi outside [-1,1]");
    GeomPoint g;
    g.z = z;
    g.xi = std::clamp(xi, -1.0, 1.0);
    g.theta = std::acos(g.xi);
    return g;
}

inline GeomPoint geom_from_cartesian(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::domain_error("geom_from_cartesian: dimension mismatch");
    double nx = 0.0, ny = 0.0, dot = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        nx += x[i] * x[i];
        ny += y[i] * y[i];
        dot += x[i] * y[i];
    }
    const double z = std::sqrt(nx) * std::sqrt(ny);
    return make_geom(z, z > 0.0 ? dot / z : 0.0);
}

// Ground-truth series evaluation.
//
// For m >= 3 the kernel is
//   prefactor * sum_k e^{-i pi k/a} ((lambda+k)/lambda)
//                z^{-lambda} J_{2(k+lambda)/a}(z_a) C_k^{(lambda)}(xi),
// assembled here from the ratio-scaled Bessel function so that the k-th term
// carries the explicit factor exp(k ln z - 2(k+lambda)/a ln a); that form is
// exact at z -> 0 (the k = 0 term is identically 1) and never forms the
// separately overflowing pieces z^{-lambda} and (z_a/2)^{nu}.  Once z_a is
// large the compensation factor inside the scaled Bessel would itself
// overflow, so the plain product z^{-lambda} J_nu(z_a) takes over.
//
// For m = 2 the Gegenbauer weights degenerate and the series is
//   J_0(z_a) + 2 sum_{k>=1} e^{-i pi k/a} J_{2k/a}(z_a) cos(k theta).
//
// The tail bound majorizes |C_k| by C_k(1) and |J_nu| by the ascending-series
// envelope (z_a/2)^nu / Gamma(nu+1); the err field is that bound plus a
// roundoff charge on the summed magnitudes.
inline ComplexEval kernel_series(const KernelParams& p, const GeomPoint& g, double tol) {
    detail::check_kernel(p);
    if (!(tol > 0.0)) throw std::domain_error("kernel_series: tol must be > 0");
    if (g.z == 0.0) return {cplx(1.0, 0.0), 0.0, Method::series};

    const double a = p.a;
    const double za = g.z_deformed(a);
    const double lza2 = std::log(0.5 * za);
    const int cap = 10000;

    cplx sum{0.0, 0.0};
    double sum_abs = 0.0;
    double ratio_prev = std::numeric_limits<double>::infinity();
    int decreasing = 0;

    if (p.m == 2) {
        for (int k = 0; k < cap; ++k) {
            const double nu = 2.0 * k / a;
            const double jv = bessel_j(nu, za);
            const cplx t = (k == 0 ? cplx(jv, 0.0)
                                   : 2.0 * std::polar(1.0, -pi * k / a) * jv * std::cos(k * g.theta));
            sum += t;
            sum_abs += std::abs(t);
            // envelope of the next term
            const double nun = 2.0 * (k + 1) / a;
            const double lmaj = std::log(2.0) + nun * lza2 - std::lgamma(nun + 1.0);
            const double maj = std::exp(lmaj);
            if (!std::isfinite(maj))
                throw accuracy_error("kernel_series: tail majorant overflows double range");
            const double r = std::exp((2.0 / a) * lza2 + std::lgamma(nun + 1.0) -
                                      std::lgamma(nun + 2.0 / a + 1.0));
            if (r < 0.9 && r <= ratio_prev) ++decreasing; else decreasing = 0;
            if (decreasing >= 2 && maj / (1.0 - r) <= tol)
                return {sum, maj / (1.0 - r) + 2e-13 * sum_abs, Method::series};
            ratio_prev = r;
        }
        throw accuracy_error("kernel_series: term cap exceeded before tail bound met");
    }

    const double lam = p.lambda();
    const double pref = p.prefactor();
    const double lz = std::log(g.z);
    const double la = std::log(a);
    if (!std::isfinite(pref))
        throw accuracy_error("kernel_series: prefactor overflows double range");
    const bool tilde = za <= 30.0;
    const double zml = tilde ? 0.0 : std::pow(g.z, -lam);

    // Gegenbauer recurrence state C_{k-1}, C_{k-2} and the value at 1
    double cm1 = 0.0, cm2 = 0.0, c_at_1 = 1.0;
    for (int k = 0; k < cap; ++k) {
        double ck;
        if (k == 0) ck = 1.0;
        else if (k == 1) ck = 2.0 * lam * g.xi;
        else ck = (2.0 * (k + lam - 1.0) * g.xi * cm1 - (k + 2.0 * lam - 2.0) * cm2) / k;
        cm2 = cm1;
        cm1 = ck;

        const double nu = 2.0 * (k + lam) / a;
        const double ls = k * lz - nu * la;  // k ln z - 2(k+lambda)/a ln a
        double radial;                       // z^{-lambda} J_nu(z_a)
        if (tilde) {
            radial = std::exp(ls) * bessel_j_tilde(nu, za);
        } else {
            radial = zml * bessel_j(nu, za);
        }
        const cplx t = pref * ((lam + k) / lam) * radial * ck * std::polar(1.0, -pi * k / a);
        sum += t;
        sum_abs += std::abs(t);

        // majorant of term k+1: C_{k+1}(1) grows by (k+1+2lam-1)/(k+1)
        c_at_1 *= (k + 2.0 * lam) / (k + 1.0);
        const double nun = 2.0 * (k + 1 + lam) / a;
        const double lsn = (k + 1) * lz - nun * la;
        const double lmaj = std::log(pref) + std::log((lam + k + 1.0) / lam) + lsn -
                            std::lgamma(nun + 1.0) + std::log(c_at_1);
        const double maj = std::exp(lmaj);
        if (!std::isfinite(maj))
            throw accuracy_error("kernel_series: tail majorant overflows double range");
        const double r = std::exp(lz - (2.0 / a) * la + std::lgamma(nun + 1.0) -
                                  std::lgamma(nun + 2.0 / a + 1.0)) *
                         ((lam + k + 2.0) / (lam + k + 1.0)) * ((k + 1 + 2.0 * lam) / (k + 2.0));
        if (r < 0.9 && r <= ratio_prev) ++decreasing; else decreasing = 0;
        if (decreasing >= 2 && maj / (1.0 - r) <= tol)
            return {sum, maj / (1.0 - r) + 2e-13 * sum_abs, Method::series};
        ratio_prev = r;
    }
    throw accuracy_error("kernel_series: term cap exceeded before tail bound met");
}

// K_a^{m+2} obtained from K_a^m by the xi-derivative relation
//   K_a^{m+2}(z, xi) = e^{i pi/a} a^{2/a} Gamma((2 lambda + a + 2)/a)
//                      / (2 (lambda+1) Gamma((2 lambda + a)/a))
//                      * z^{-1} * d/dxi K_a^m(z, xi),
// with the derivative taken by a central difference of step h.  The err
// field combines the series errors with a measured h^2 truncation estimate
// (central differences at h and h/2 differ by ~3/4 of the h-step error).
inline ComplexEval kernel_dimension_lift(const KernelParams& p, const GeomPoint& g, double h) {
    detail::check_kernel(p);
    if (!(h > 0.0) || !(h < 1.0)) throw std::domain_error("kernel_dimension_lift: bad step");
    if (g.z == 0.0) throw std::domain_error("kernel_dimension_lift: singular at z = 0");
    if (!(std::fabs(g.xi) < 1.0 - h))
        throw std::domain_error("kernel_dimension_lift: xi too close to the endpoints");

    const double lam = p.lambda();
    const cplx lift_pref = std::polar(1.0, pi / p.a) * std::pow(p.a, 2.0 / p.a) *
                           std::tgamma((2.0 * lam + p.a + 2.0) / p.a) /
                           (2.0 * (lam + 1.0) * std::tgamma((2.0 * lam + p.a) / p.a));
    const double stol = 1e-12;
    const ComplexEval kp = kernel_series(p, make_geom(g.z, g.xi + h), stol);
    const ComplexEval km = kernel_series(p, make_geom(g.z, g.xi - h), stol);
    const ComplexEval kp2 = kernel_series(p, make_geom(g.z, g.xi + 0.5 * h), stol);
    const ComplexEval km2 = kernel_series(p, make_geom(g.z, g.xi - 0.5 * h), stol);
    const cplx dh = (kp.value - km.value) / (2.0 * h);
    const cplx dh2 = (kp2.value - km2.value) / h;
    const double scale = std::abs(lift_pref) / g.z;
    const double err = scale * ((kp.err + km.err) / (2.0 * h) + 1.5 * std::abs(dh - dh2));
    return {lift_pref * dh / g.z, err, Method::series};
}

// Discretization of the integral transform: tensor product of Gauss-Legendre
// in radius on [0, radius_cutoff] and Gauss-Jacobi in the angle cosine with
// the sphere weight (1-t^2)^{(m-3)/2}.
struct TransformGrid {
    double radius_cutoff = 10.0;
    int n_radial = 64;
    int n_angular = 32;
    // caller-certified bound on the neglected radial tail of the integrand
    double tail_bound = 0.0;
    double tol = 1e-8;
};

// Applies the deformed transform to a function f(r, t) given in coordinates
// aligned with the target direction (t is the cosine of the angle between x
// and y); radial profiles use f independent of t.  Targets are the moduli
// |y|.  The kernel at each quadrature node comes from `kern`, by default the
// ground-truth series.
template <typename F, typename KE>
std::vector<cplx> transform_apply(const KernelParams& p, F&& f,
                                  const std::vector<double>& target_moduli,
                                  const TransformGrid& grid, KE&& kern) {
    detail::check_kernel(p);
    if (grid.n_radial < 1 || grid.n_angular < 1 || !(grid.radius_cutoff > 0.0))
        throw std::domain_error("transform_apply: bad grid spec");
    if (!(grid.tail_bound <= grid.tol))
        throw accuracy_error("transform_apply: radial tail bound exceeds the tolerance");

    // Gamma(m/2) / (Gamma((2 lambda + a)/a) 2 a^{2 lambda/a} pi^{m/2})
    const double c_f = std::tgamma(0.5 * p.m) /
                       (2.0 * std::pow(pi, 0.5 * p.m) * p.prefactor());
    // surface measure of S^{m-2}
    const double s_sphere = 2.0 * std::pow(pi, 0.5 * (p.m - 1)) / std::tgamma(0.5 * (p.m - 1));

    const QuadRule ang = gauss_jacobi(grid.n_angular, 0.5 * (p.m - 3), 0.5 * (p.m - 3));
    QuadRule rad = gauss_legendre(grid.n_radial);
    // map [-1,1] -> [0, R]
    std::vector<double> rr(rad.x.size()), rw(rad.x.size());
    for (std::size_t i = 0; i < rad.x.size(); ++i) {
        rr[i] = 0.5 * grid.radius_cutoff * (rad.x[i] + 1.0);
        rw[i] = 0.5 * grid.radius_cutoff * rad.w[i];
    }

    std::vector<cplx> out(target_moduli.size());
    const double ktol = 0.01 * grid.tol;
    auto work = [&](std::size_t first, std::size_t stride) {
        for (std::size_t t = first; t < target_moduli.size(); t += stride) {
            const double ymod = std::fabs(target_moduli[t]);
            cplx acc{0.0, 0.0};
            for (std::size_t i = 0; i < rr.size(); ++i) {
                const double rfac = rw[i] * std::pow(rr[i], p.m + p.a - 3.0);
                cplx inner{0.0, 0.0};
                for (std::size_t j = 0; j < ang.x.size(); ++j) {
                    const cplx fv = f(rr[i], ang.x[j]);
                    if (fv == cplx(0.0, 0.0)) continue;
                    const ComplexEval kv = kern(p, make_geom(rr[i] * ymod, ang.x[j]), ktol);
                    inner += ang.w[j] * fv * kv.value;
                }
                acc += rfac * inner;
            }
            out[t] = c_f * s_sphere * acc;
        }
    };
    const unsigned hw = std::thread::hardware_concurrency();
    const unsigned nt = std::max(1u, std::min(hw == 0 ? 1u : hw, 8u));
    if (nt > 1 && target_moduli.size() > 1) {
        std::vector<std::thread> pool;
        pool.reserve(nt);
        for (unsigned k = 0; k < nt; ++k) pool.emplace_back(work, k, nt);
        for (auto& th : pool) th.join();
    } else {
        work(0, 1);
    }
    return out;
}

template <typename F>
std::vector<cplx> transform_apply(const KernelParams& p, F&& f,
                                  const std::vector<double>& target_moduli,
                                  const TransformGrid& grid) {
    return transform_apply(p, std::forward<F>(f), target_moduli, grid,
                           [](const KernelParams& pp, const GeomPoint& gg, double tt) {
                               return kernel_series(pp, gg, tt);
                           });
}

}  // namespace rdfk
