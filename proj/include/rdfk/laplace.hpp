#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <exception>
#include <stdexcept>
#include <thread>
#include <vector>

#include <rdfk/common.hpp>
#include <rdfk/kernel_core.hpp>
#include <rdfk/quadrature.hpp>

// Laplace-domain form of the deformed kernel, a numerical Bromwich inversion
// used to cross-check the series evaluator, and the rational building blocks
// behind the polynomial kernel bounds: multi-pole inverse transforms and the
// circle-of-roots factorization at rational deformation exponents.

namespace rdfk {

// Geometry of one Laplace-domain evaluation.  All powers and roots are
// principal; for Re s > 0 every base stays clear of the negative real axis,
// so r, R and u_R are continuous there and |u_R| < 1.
struct LaplaceKernelInputs {
    cplx s;
    cplx r;    // sqrt(s^2 + za^2)
    cplx R;    // s + r
    cplx u_R;  // (e^{-i pi/2} za / R)^{2/a}
};

inline LaplaceKernelInputs make_laplace_inputs(double a, double za, cplx s) {
    if (!(a > 0.0)) throw std::domain_error("make_laplace_inputs: a must be positive");
    if (!(za >= 0.0)) throw std::domain_error("make_laplace_inputs: za must be >= 0");
    if (!(s.real() > 0.0)) throw std::domain_error("make_laplace_inputs: Re s must be positive");
    LaplaceKernelInputs in;
    in.s = s;
    in.r = std::sqrt(s * s + za * za);
    in.R = s + in.r;
    in.u_R = (za == 0.0) ? cplx(0.0, 0.0) : std::pow(cplx(0.0, -za) / in.R, 2.0 / a);
    return in;
}

// Closed Laplace-domain kernel.  The transform variable is the scale factor
// multiplying the deformed radius inside every Bessel term of the series, so
// inverting at t = 1 recovers the kernel itself.
inline cplx laplace_kernel(const KernelParams& p, const GeomPoint& g, cplx s,
                           double margin = 1e-8) {
    detail::check_kernel(p);
    if (!(margin >= 0.0)) throw std::domain_error("laplace_kernel: margin must be >= 0");
    if (!(s.real() > 0.0)) throw std::domain_error("laplace_kernel: Re s must be positive");
    const double za = g.z_deformed(p.a);
    if (std::abs(s - cplx(0.0, za)) < margin || std::abs(s + cplx(0.0, za)) < margin)
        throw accuracy_error("laplace_kernel: s within margin of a branch point");
    const LaplaceKernelInputs in = make_laplace_inputs(p.a, za, s);
    const double lam = p.lambda();
    const cplx u = in.u_R;
    const cplx den = 1.0 - 2.0 * g.xi * u + u * u;
    if (std::abs(den) < 1e-14)
        throw accuracy_error("laplace_kernel: angular denominator nearly singular");
    const double e = 2.0 * lam / p.a;
    return std::pow(2.0, e) * std::tgamma((2.0 * lam + p.a) / p.a) * (1.0 / in.r) *
           std::pow(1.0 / in.R, e) * (1.0 - u * u) / std::pow(den, lam + 1.0);
}

// Bromwich inversion (1/2pi i) int_{sigma-iT}^{sigma+iT} e^{st} F(s) ds with a
// three-term integration-by-parts correction on each truncated ray.  F must be
// analytic for Re s >= sigma, decaying along the vertical line, and safe to
// call concurrently.
template <typename Fn>
ComplexEval inverse_laplace(Fn&& F, double t, double sigma, double half_width, double tol) {
    if (!(t > 0.0)) throw std::domain_error("inverse_laplace: t must be positive");
    if (!(half_width > 0.0)) throw std::domain_error("inverse_laplace: half_width must be positive");
    if (!(tol > 0.0)) throw std::domain_error("inverse_laplace: tol must be positive");
    auto H = [&F, sigma](double y) { return F(cplx(sigma, y)); };
    const double T = half_width;

    // probe the decay on both rays before spending quadrature effort
    const double up1 = std::abs(H(T)), up2 = std::abs(H(2.0 * T));
    const double lo1 = std::abs(H(-T)), lo2 = std::abs(H(-2.0 * T));
    if (!std::isfinite(up1 + up2 + lo1 + lo2) || !(up2 < up1) || !(lo2 < lo1))
        throw accuracy_error("inverse_laplace: integrand tail is not decaying");

    const double amp = std::exp(sigma * t) / (2.0 * pi);
    const double quad_tol = 0.5 * tol / amp;
    auto integrand = [&H, t](double y) { return std::exp(cplx(0.0, y * t)) * H(y); };

    // fixed chunk layout (depends only on t and T), threads strided over it,
    // summation in chunk order: results do not depend on the thread count
    const int chunks = static_cast<int>(std::min(8.0, std::max(1.0, t * T / (pi * 128.0))));
    std::vector<IntegralResult> parts(chunks);
    std::vector<std::exception_ptr> faults(chunks);
    const double chunk_len = 2.0 * T / chunks;
    const int panels = std::clamp(static_cast<int>(std::ceil(t * chunk_len / 3.0)), 1, 100000);
    auto run = [&](int first, int stride) {
        for (int i = first; i < chunks; i += stride) {
            try {
                parts[i] = integrate_gk(integrand, -T + i * chunk_len, -T + (i + 1) * chunk_len,
                                        quad_tol / chunks, panels);
            } catch (...) {
                faults[i] = std::current_exception();
            }
        }
    };
    const int nthreads = std::min(chunks, 8);
    if (nthreads > 1) {
        std::vector<std::thread> pool;
        for (int w = 0; w < nthreads; ++w) pool.emplace_back(run, w, nthreads);
        for (auto& th : pool) th.join();
    } else {
        run(0, 1);
    }
    for (const auto& f : faults)
        if (f) std::rethrow_exception(f);
    cplx main_sum = 0.0;
    double main_err = 0.0;
    for (const auto& pr : parts) {
        main_sum += pr.value;
        main_err += pr.err;
    }

    // ray tails: int_T^inf e^{iyt} H dy ~ e^{iTt} (-H/(it) + H'/(it)^2 - H''/(it)^3),
    // mirrored at -T; the dropped term is of the order |H''|/t^3
    const double h = std::max(1e-3 * T, 1e-3);
    const cplx it(0.0, t);
    const cplx it2 = it * it, it3 = it2 * it;
    const cplx hu0 = H(T), hup = H(T + h), hum = H(T - h);
    const cplx hl0 = H(-T), hlp = H(-T + h), hlm = H(-T - h);
    const cplx hu1 = (hup - hum) / (2.0 * h), hu2 = (hup - 2.0 * hu0 + hum) / (h * h);
    const cplx hl1 = (hlp - hlm) / (2.0 * h), hl2 = (hlp - 2.0 * hl0 + hlm) / (h * h);
    const cplx upper = std::exp(cplx(0.0, T * t)) * (-hu0 / it + hu1 / it2 - hu2 / it3);
    const cplx lower = std::exp(cplx(0.0, -T * t)) * (hl0 / it - hl1 / it2 + hl2 / it3);
    const double t3 = t * t * t;
    const double fd_noise =
        2.2e-16 * (std::abs(hu0) + std::abs(hl0)) * (1.0 / (h * t * t) + 4.0 / (h * h * t3));
    const double tail_err = (std::abs(hu2) + std::abs(hl2)) / t3 + fd_noise;

    const cplx value = amp * (main_sum + upper + lower);
    const double err = amp * (main_err + tail_err) + 4e-16 * std::abs(value);
    return {value, err, Method::laplace};
}

// Root data of the degree-2q polynomial that the Laplace denominator factors
// into at a = p/q.  The roots sit on the imaginary axis inside the circle of
// radius z_deformed and the set is invariant under theta -> theta + 2 pi q / p.
struct PoleSpec {
    int p = 1;
    int q = 1;
    double theta = 0.0;

    std::vector<cplx> roots(double z) const {
        if (p < 1 || q < 1) throw std::domain_error("PoleSpec: p and q must be positive");
        if (!(z >= 0.0)) throw std::domain_error("PoleSpec: z must be >= 0");
        const double a = static_cast<double>(p) / q;
        const double za = (2.0 / a) * std::pow(z, 0.5 * a);
        std::vector<cplx> out(2 * q);
        for (int l = 0; l < 2 * q; ++l)
            out[l] = cplx(0.0, -za * std::cos((p * theta + 2.0 * pi * l) / (2.0 * q)));
        return out;
    }
};

// Relative defect of the two-sided identity
//   (r+s)^{2q} - 2 (-1)^q cos(p theta) za^{2q} + (r-s)^{2q}
//     = 2^{2q} prod_l (s + i za cos((p theta + 2 pi l)/(2q)))
// with za the deformed radius at a = p/q.  Exact in exact arithmetic for any
// branch of r since only even powers of r survive.
inline double pq_root_factorization(const PoleSpec& ps, double z, cplx s) {
    if (ps.p < 1 || ps.q < 1) throw std::domain_error("pq_root_factorization: p, q must be positive");
    if (!(z >= 0.0)) throw std::domain_error("pq_root_factorization: z must be >= 0");
    const double a = static_cast<double>(ps.p) / ps.q;
    const double za = (2.0 / a) * std::pow(z, 0.5 * a);
    const int tq = 2 * ps.q;
    const cplx r = std::sqrt(s * s + za * za);
    const cplx rps = r + s;
    // r - s through the conjugate product: direct subtraction cancels when |s| >> za
    const cplx rms = (za > 0.0 && std::abs(rps) >= za) ? cplx(za * za) / rps : r - s;
    const cplx lhs = std::pow(rps, tq) + std::pow(rms, tq) -
                     2.0 * std::pow(-1.0, ps.q) * std::cos(ps.p * ps.theta) * std::pow(za, tq);
    cplx rhs = std::pow(2.0, tq);
    for (int l = 0; l < tq; ++l)
        rhs *= s + cplx(0.0, za * std::cos((ps.p * ps.theta + 2.0 * pi * l) / tq));
    const double scale = std::max(std::abs(lhs), std::abs(rhs));
    return scale == 0.0 ? 0.0 : std::abs(lhs - rhs) / scale;
}

// A finite product of simple imaginary-shift poles with multiplicities.
struct MultiPole {
    std::vector<double> a_list;
    std::vector<int> alpha_list;

    int order() const {
        int n = 0;
        for (int al : alpha_list) n += al;
        return n;
    }
};

inline MultiPole make_multipole(std::vector<double> a_list, std::vector<int> alpha_list) {
    if (a_list.empty() || a_list.size() != alpha_list.size())
        throw std::domain_error("make_multipole: pole and multiplicity lists must match");
    for (int al : alpha_list)
        if (al < 1) throw std::domain_error("make_multipole: multiplicities must be >= 1");
    return {std::move(a_list), std::move(alpha_list)};
}

namespace detail {

// L^{-1}[(s + i a)^{-alpha}](t) = e^{-i a t} t^{alpha-1} / (alpha-1)!
inline cplx single_pole_original(double a, int alpha, double t) {
    return std::exp(cplx(0.0, -a * t)) * std::pow(t, alpha - 1) / std::tgamma(double(alpha));
}

// convolution chain over the simplex, one Gauss-Legendre layer per extra pole
inline cplx pole_conv_chain(const MultiPole& mp, size_t k, double t, const QuadRule& gl) {
    if (k == 0) return single_pole_original(mp.a_list[0], mp.alpha_list[0], t);
    cplx acc = 0.0;
    for (size_t i = 0; i < gl.x.size(); ++i) {
        const double u = 0.5 * t * (gl.x[i] + 1.0);
        acc += gl.w[i] * pole_conv_chain(mp, k - 1, u, gl) *
               single_pole_original(mp.a_list[k], mp.alpha_list[k], t - u);
    }
    return 0.5 * t * acc;
}

}  // namespace detail

// Inverse Laplace transform of 1 / prod_j (s + i a_j)^{alpha_j} at time t.
// Equal shifts collapse to the exact single-pole original; distinct shifts go
// through the nested quadrature, which stays accurate on the unit time scale.
inline cplx f_n_alpha(const MultiPole& mp, double t) {
    if (mp.a_list.empty() || mp.a_list.size() != mp.alpha_list.size())
        throw std::domain_error("f_n_alpha: pole and multiplicity lists must match");
    for (int al : mp.alpha_list)
        if (al < 1) throw std::domain_error("f_n_alpha: multiplicities must be >= 1");
    if (!(t > 0.0)) throw std::domain_error("f_n_alpha: t must be positive");
    bool all_equal = true;
    for (double aj : mp.a_list) all_equal = all_equal && (aj == mp.a_list[0]);
    if (all_equal) return detail::single_pole_original(mp.a_list[0], mp.order(), t);
    const QuadRule& gl = gauss_legendre(40);
    return detail::pole_conv_chain(mp, mp.a_list.size() - 1, t, gl);
}

// Bromwich inversion of the Laplace-domain kernel at t = 1, which the series
// evaluator must reproduce.  Restricted to small deformed radius: the line
// integrand decays only algebraically and the desk-scale tail control is not
// claimed beyond that.
inline ComplexEval ilt_kernel_check(const KernelParams& p, const GeomPoint& g, double tol) {
    detail::check_kernel(p);
    if (!(tol > 0.0)) throw std::domain_error("ilt_kernel_check: tol must be positive");
    const double za = g.z_deformed(p.a);
    if (!(za <= 5.0))
        throw std::domain_error("ilt_kernel_check: deformed radius above the inversion limit 5");
    const double sigma = 1.0;  // singularities sit on the imaginary axis at +-i za
    auto F = [&p, &g](cplx s) { return laplace_kernel(p, g, s); };
    const double amp = std::exp(sigma) / (2.0 * pi);

    // widen the window until the dropped integration-by-parts term fits tol
    double T = 256.0;
    for (;;) {
        const double h = std::max(1e-3 * T, 1e-3);
        auto Hat = [&](double y) { return F(cplx(sigma, y)); };
        const cplx hu2 = (Hat(T + h) - 2.0 * Hat(T) + Hat(T - h)) / (h * h);
        const cplx hl2 = (Hat(-T + h) - 2.0 * Hat(-T) + Hat(-T - h)) / (h * h);
        if (amp * (std::abs(hu2) + std::abs(hl2)) <= 0.25 * tol) break;
        T *= 2.0;
        if (T > 1.1e6) throw accuracy_error("ilt_kernel_check: tail bound not attainable");
    }
    return inverse_laplace(F, 1.0, sigma, T, tol);
}

}  // namespace rdfk
