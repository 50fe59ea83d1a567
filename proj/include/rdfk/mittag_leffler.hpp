#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <rdfk/common.hpp>
#include <rdfk/quadrature.hpp>
#include <rdfk/report.hpp>

// Three-parameter Mittag-Leffler (Prabhakar) function E^delta_{alpha,beta}(z).
//
// Two evaluation routes are provided.  The power series is reliable while
// |z|^{1/alpha} stays moderate; beyond that its partial sums cancel
// catastrophically in doubles and the Hankel-type contour integral takes
// over.  The contour splits the plane into the wedge {|arg z| < mu,
// |z| > epsilon} and its complement: off the wedge the quadrature alone is
// the value, on the wedge an exact residue-style term is added (possible in
// closed form only for integer delta).

namespace rdfk {

struct PrabhakarParams {
    double alpha = 1.0;  // > 0; contour evaluation additionally needs alpha < 2
    double beta = 1.0;
    double delta = 1.0;  // > 0
};

// Integration contour: circular arc of radius epsilon joined to two rays at
// angles +-mu.  Admissible ray angles satisfy pi*alpha/2 < mu < min(pi, pi*alpha);
// the lower bound is what makes exp(zeta^{1/alpha}) decay along the rays.
struct ContourSpec {
    double epsilon = 1.0;
    double mu = 0.0;
};

namespace detail {

// Reciprocal gamma, entire in x.  Returns 0 at the poles of gamma.
inline double rgamma(double x) {
    if (x > 0.5) return std::exp(-std::lgamma(x));
    const double s = std::sin(pi * x);
    if (s == 0.0) return 0.0;
    const double mag = std::exp(std::lgamma(1.0 - x) + std::log(std::fabs(s)) - std::log(pi));
    return std::copysign(mag, s);
}

inline void check_prabhakar(const PrabhakarParams& p, bool for_contour) {
    if (!(p.alpha > 0.0)) throw std::domain_error("prabhakar: alpha must be > 0");
    if (for_contour && !(p.alpha < 2.0))
        throw std::domain_error("prabhakar: contour evaluation requires alpha < 2");
    if (!(p.delta > 0.0)) throw std::domain_error("prabhakar: delta must be > 0");
    if (!std::isfinite(p.beta)) throw std::domain_error("prabhakar: beta must be finite");
}

inline double mu_window_lo(double alpha) { return 0.5 * pi * alpha; }
inline double mu_window_hi(double alpha) { return std::min(pi, pi * alpha); }

inline ContourSpec default_contour(double alpha) {
    const double lo = mu_window_lo(alpha), hi = mu_window_hi(alpha);
    return ContourSpec{1.0, lo + 0.5 * (hi - lo)};
}

// Euclidean distance from z to the arc-plus-rays contour.
inline double contour_distance(cplx z, const ContourSpec& c) {
    const double th = std::arg(z);
    const double sgn = th < 0.0 ? -1.0 : 1.0;
    double d_arc;
    if (std::fabs(th) <= c.mu) {
        d_arc = std::fabs(std::abs(z) - c.epsilon);
    } else {
        d_arc = std::abs(z - std::polar(c.epsilon, sgn * c.mu));
    }
    // only the ray on z's half-plane can be the nearest one
    const cplx w = z * std::polar(1.0, -sgn * c.mu);
    const double d_ray = w.real() >= c.epsilon ? std::fabs(w.imag())
                                               : std::abs(w - cplx(c.epsilon, 0.0));
    return std::min(d_arc, d_ray);
}

// Wedge term (1/(alpha Gamma(delta))) d^{delta-1}/dz^{delta-1} of
// exp(z^{1/alpha}) z^{(1-beta)/alpha + delta - 1}, for integer delta <= 6.
// Differentiation acts on monomials as
//   z^q exp(z^{1/alpha})  ->  (q z^{q-1} + (1/alpha) z^{q-1+1/alpha}) exp(z^{1/alpha}),
// so the result is a finite monomial sum and is evaluated exactly; numerical
// differencing here loses most digits to cancellation.
inline cplx wedge_term(const PrabhakarParams& p, cplx z, double& abs_scale) {
    const double a = p.alpha;
    const int dlt = static_cast<int>(std::lround(p.delta));
    const double p0 = (1.0 - p.beta) / a + dlt - 1.0;
    // key (j, m): coefficient of z^{p0 + j/alpha - m}
    std::map<std::pair<int, int>, cplx> poly;
    poly[{0, 0}] = cplx(1.0, 0.0);
    for (int k = 1; k < dlt; ++k) {
        std::map<std::pair<int, int>, cplx> nxt;
        for (const auto& [jm, co] : poly) {
            const int j = jm.first, m = jm.second;
            const double q = p0 + j / a - m;
            if (q != 0.0) nxt[{j, m + 1}] += co * q;
            nxt[{j + 1, m + 1}] += co / a;
        }
        poly.swap(nxt);
    }
    const cplx zr = std::pow(z, 1.0 / a);
    if (zr.real() > 700.0)
        throw accuracy_error("prabhakar wedge term overflows double range");
    const cplx ez = std::exp(zr);
    cplx s{0.0, 0.0};
    double sa = 0.0;
    for (const auto& [jm, co] : poly) {
        const cplx t = co * std::pow(z, p0 + jm.first / a - jm.second);
        s += t;
        sa += std::abs(t);
    }
    const double pref = rgamma(static_cast<double>(dlt)) / a;
    abs_scale = sa * std::abs(ez) * pref;
    return s * ez * pref;
}

}  // namespace detail

// Power series sum_{n>=0} (delta)_n z^n / (n! Gamma(alpha n + beta)).
// Stops once a geometric majorant of the tail drops below tol; the err field
// carries that majorant plus a roundoff charge proportional to the summed
// term magnitudes, which is what limits the series for large |z|.
inline ComplexEval prabhakar_series(const PrabhakarParams& p, cplx z, double tol) {
    detail::check_prabhakar(p, false);
    if (!(tol > 0.0)) throw std::domain_error("prabhakar_series: tol must be > 0");
    const double a = p.alpha, b = p.beta, d = p.delta;
    const double za = std::abs(z);
    const double la = std::log(za);  // -inf at z = 0 is fine below
    const double ph = std::arg(z);
    const double lgd = std::lgamma(d);

    cplx sum{0.0, 0.0};
    double sum_abs = 0.0;
    // running-partial-sum magnitude: recursive summation rounds each addition
    // against the current partial, so cancellation is charged at its peak
    double part_abs = 0.0;

    // While alpha n + beta <= 2 the gamma argument may sit at or near poles,
    // so each term is formed with the entire reciprocal gamma directly.
    const double n0f = std::ceil(std::max(0.0, (2.0 - b) / a)) + 2.0;
    if (!(n0f < 4000.0)) throw std::domain_error("prabhakar_series: beta too negative");
    const int n0 = static_cast<int>(n0f);
    int n = 0;
    for (; n < n0; ++n) {
        const double lmag = std::lgamma(d + n) - lgd - std::lgamma(n + 1.0) + (n == 0 ? 0.0 : n * la);
        const double mag = std::exp(lmag);
        const cplx t = mag * detail::rgamma(a * n + b) * std::polar(1.0, n * ph);
        sum += t;
        sum_abs += std::abs(t);
        part_abs += std::abs(sum);
    }

    // Beyond n0 the terms are advanced by exact ratios; magnitudes are kept
    // separately so the stopping rule never sees cancellation.
    const double l0 = std::lgamma(d + n) - lgd - std::lgamma(n + 1.0) + (za == 0.0 ? -std::numeric_limits<double>::infinity() : n * la) - std::lgamma(a * n + b);
    double tmag = std::exp(l0);
    cplx term = tmag * std::polar(1.0, n * ph);
    double ratio_prev = std::numeric_limits<double>::infinity();
    int decreasing = 0;
    const int cap = 10000;
    for (; n < cap; ++n) {
        sum += term;
        sum_abs += tmag;
        part_abs += std::abs(sum);
        const double g = std::exp(std::lgamma(a * n + b) - std::lgamma(a * (n + 1) + b));
        const double r = za * ((d + n) / (n + 1.0)) * g;
        const double nmag = tmag * r;
        if (r < 0.9 && r <= ratio_prev) ++decreasing; else decreasing = 0;
        if (decreasing >= 2) {
            const double majorant = nmag / (1.0 - r);
            if (majorant <= tol) {
                // roundoff: additions round against the running partials, and
                // the term recurrence compounds a few ulp per step
                const double rnd = 1.2e-16 * part_abs + 7e-16 * (n + 1.0) * sum_abs;
                return {sum, majorant + rnd, Method::series};
            }
        }
        ratio_prev = r;
        term *= z * ((d + n) / (n + 1.0)) * g;
        tmag = nmag;
    }
    throw accuracy_error("prabhakar_series: tail bound did not reach tolerance within term cap");
}

// Contour evaluation
//   (1/(2 pi alpha i)) Int exp(zeta^{1/alpha}) zeta^{(1-beta)/alpha-1}
//                          (1 - z/zeta)^{-delta} dzeta
// over the arc and rays of c, plus the wedge term when z lies inside the
// wedge.  The (zeta - z)^{-delta} factor is expanded as
// zeta^{-delta} (1 - z/zeta)^{-delta}: with both powers principal this is
// continuous along the whole contour for every admissible z, whereas the
// principal branch of (zeta - z)^{-delta} itself can jump mid-ray.
inline ComplexEval prabhakar_contour(const PrabhakarParams& p, cplx z, const ContourSpec& c,
                                     double tol) {
    detail::check_prabhakar(p, true);
    if (!(tol > 0.0)) throw std::domain_error("prabhakar_contour: tol must be > 0");
    const double a = p.alpha;
    const double lo = detail::mu_window_lo(a), hi = detail::mu_window_hi(a);
    if (!(c.epsilon > 0.0) || !(c.mu > lo) || !(c.mu < hi))
        throw std::domain_error("prabhakar_contour: contour spec outside admissible window");
    if (detail::contour_distance(z, c) < tol)
        throw geometry_error("prabhakar_contour: z within tolerance distance of the contour");

    const bool wedge = std::fabs(std::arg(z)) < c.mu && std::abs(z) > c.epsilon;
    cplx corr{0.0, 0.0};
    double corr_scale = 0.0;
    if (wedge) {
        const double dr = std::lround(p.delta);
        if (std::fabs(p.delta - dr) > 1e-9 || dr < 1.0)
            throw std::domain_error("prabhakar_contour: z inside the wedge requires integer delta");
        if (dr > 6.0)
            throw std::domain_error("prabhakar_contour: wedge term implemented for delta <= 6 only");
        corr = detail::wedge_term(p, z, corr_scale);
    }

    const double q = (1.0 - p.beta) / a - 1.0;
    const double cdec = std::cos(c.mu / a);  // < 0 inside the admissible window
    const double sdec = std::sin(c.mu / a);
    const double leps = std::log(c.epsilon);

    // Ray integrand after substituting zeta = u^alpha e^{+-i mu}; the
    // substitution makes the decay exp(u cos(mu/alpha)) uniformly exponential
    // in u for every alpha.  Powers of zeta are assembled from (|zeta|, arg)
    // directly so the branch is the one continuous along the ray.
    auto ray_f = [&](double u, double sgn) -> cplx {
        const double lnu = std::log(u);
        const cplx grow = std::exp(cplx(u * cdec, u * sgn * sdec));
        const cplx zeta = std::polar(std::pow(u, a), sgn * c.mu);
        const cplx zq = std::exp(cplx(a * q * lnu, sgn * c.mu * q));
        const cplx root = std::pow(1.0 - z / zeta, -p.delta);
        const cplx meas = a * std::exp(cplx((a - 1.0) * lnu, sgn * c.mu));
        return grow * zq * root * meas;
    };
    auto arc_f = [&](double phi) -> cplx {
        const cplx zeta = std::polar(c.epsilon, phi);
        const cplx grow = std::exp(std::exp(cplx(leps / a, phi / a)));
        const cplx zq = std::exp(cplx(leps * q, phi * q));
        const cplx root = std::pow(1.0 - z / zeta, -p.delta);
        return grow * zq * root * cplx(0.0, 1.0) * zeta;
    };

    const double u_lo = std::pow(c.epsilon, 1.0 / a);
    double u_hi = std::max(2.0 * u_lo, (std::log(1.0 / tol) + 30.0) / (-cdec));
    double tail = 0.0;
    for (int rep = 0; rep < 5; ++rep) {
        tail = (std::abs(ray_f(u_hi, 1.0)) + std::abs(ray_f(u_hi, -1.0))) / (-cdec);
        if (tail <= 0.25 * tol) break;
        u_hi *= 1.6;
    }

    const cplx pref = cplx(0.0, -1.0) / (2.0 * pi * a);
    cplx val{0.0, 0.0}, prev{0.0, 0.0};
    double quad_err = std::numeric_limits<double>::infinity();
    bool settled = false;
    for (int nn = 64; nn <= 4096; nn *= 2) {
        const cplx rp = integrate_gl([&](double u) { return ray_f(u, 1.0); }, u_lo, u_hi, nn);
        const cplx rm = integrate_gl([&](double u) { return ray_f(u, -1.0); }, u_lo, u_hi, nn);
        const cplx ar = integrate_gl(arc_f, -c.mu, c.mu, nn);
        // orientation: in along the -mu ray, around the arc, out along +mu
        val = pref * (rp - rm + ar);
        if (nn > 64) {
            quad_err = std::abs(val - prev);
            if (quad_err <= 0.5 * tol * (1.0 + std::abs(val))) {
                settled = true;
                break;
            }
        }
        prev = val;
    }
    if (!settled) throw accuracy_error("prabhakar_contour: quadrature did not stabilize");
    const double err = quad_err + tail * std::abs(pref)
                     + 1e-15 * (std::abs(val) + corr_scale) + 0.05 * tol;
    return {val + corr, err, Method::integral};
}

namespace detail {

// Route choice for interior use (reduction bases, sector audits): series in
// its comfortable radius, contour otherwise.  The contour's ray angle is kept
// well inside the admissible window; when that puts z in the wedge the closed
// wedge term covers it (integer delta), otherwise the rays are pulled below
// arg z so z stays off the wedge.
inline ComplexEval prabhakar_auto(const PrabhakarParams& p, cplx z, double tol) {
    if (std::pow(std::abs(z), 1.0 / p.alpha) <= 14.0) {
        try {
            ComplexEval e = prabhakar_series(p, z, std::min(tol, 1e-12));
            if (e.err <= std::max(tol, 1e-6 * (1.0 + std::abs(e.value)))) return e;
        } catch (const accuracy_error&) {
        }
    }
    if (!(p.alpha < 2.0))
        throw accuracy_error("prabhakar_auto: series failed and contour needs alpha < 2");
    const double lo = mu_window_lo(p.alpha), hi = mu_window_hi(p.alpha);
    const double th = std::fabs(std::arg(z));
    const double dr = std::lround(p.delta);
    const bool int_delta = std::fabs(p.delta - dr) <= 1e-9 && dr >= 1.0 && dr <= 6.0;
    double mu;
    if (int_delta) {
        mu = lo + 0.5 * (hi - lo);
        if (std::fabs(th - mu) < 0.06 * (hi - lo)) mu = lo + 0.68 * (hi - lo);
    } else {
        if (th <= lo + 1e-9)
            throw accuracy_error("prabhakar_auto: z in the growth sector needs integer delta");
        const double cap = std::min(th, hi);
        mu = lo + 0.5 * (cap - lo);
        if (th - mu < 0.05 * (cap - lo)) mu = lo + 0.25 * (cap - lo);
    }
    ContourSpec c{0.731, mu};
    for (int k = 0; k < 3; ++k) {
        try {
            return prabhakar_contour(p, z, c, tol);
        } catch (const geometry_error&) {
            c.epsilon *= 1.37;
        }
    }
    return prabhakar_contour(p, z, c, tol);
}

}  // namespace detail

// Integer delta >= 2 lowered to two-parameter evaluations through
//   E^{k}_{alpha,b} = [E^{k-1}_{alpha,b-1} + (1 - b + alpha (k-1)) E^{k-1}_{alpha,b}]
//                     / (alpha (k-1)).
inline ComplexEval prabhakar_reduce(const PrabhakarParams& p, cplx z) {
    detail::check_prabhakar(p, false);
    const double dr = std::lround(p.delta);
    if (std::fabs(p.delta - dr) > 1e-9 || dr < 2.0)
        throw std::domain_error("prabhakar_reduce: delta must be an integer >= 2");
    const int d = static_cast<int>(dr);
    const double a = p.alpha, b = p.beta;

    std::vector<ComplexEval> row(d);
    for (int s = 0; s < d; ++s)
        row[s] = detail::prabhakar_auto({a, b - s, 1.0}, z, 1e-13);
    for (int k = 2; k <= d; ++k) {
        std::vector<ComplexEval> nxt(d - k + 1);
        for (int s = 0; s + k <= d; ++s) {
            const double co = 1.0 - (b - s) + a * (k - 1);
            const double den = a * (k - 1);
            const cplx v = (row[s + 1].value + co * row[s].value) / den;
            const double scale = std::abs(row[s + 1].value) + std::fabs(co) * std::abs(row[s].value);
            const double e = (row[s + 1].err + std::fabs(co) * row[s].err + 1e-16 * scale) / den;
            const Method m = (row[s].method == Method::integral || row[s + 1].method == Method::integral)
                                 ? Method::integral
                                 : Method::series;
            nxt[s] = {v, e, m};
        }
        row.swap(nxt);
    }
    return row[0];
}

// Radial-by-angular sample of the sector {mu <= |arg z| <= pi}.
struct SectorGrid {
    std::vector<double> radii;
    std::vector<double> angles;
};

inline SectorGrid make_sector_grid(double mu, double r_lo, double r_hi, int nr, int ntheta) {
    if (nr < 1 || ntheta < 1 || !(r_lo > 0.0) || !(r_hi >= r_lo))
        throw std::domain_error("make_sector_grid: bad grid shape");
    SectorGrid g;
    const double e0 = std::log10(r_lo), e1 = std::log10(r_hi);
    for (int j = 0; j < nr; ++j)
        g.radii.push_back(std::pow(10.0, e0 + (nr == 1 ? 0.0 : (e1 - e0) * j / (nr - 1.0))));
    for (int i = 0; i < ntheta; ++i)
        g.angles.push_back(mu + (ntheta == 1 ? 0.0 : (pi - mu) * i / (ntheta - 1.0)));
    return g;
}

// Samples |E^delta_{alpha,beta}(z)| (1 + |z|^delta) over the sector grid.
// The weighted magnitude should stay bounded on the whole sector; the report
// flags monotone growth at the outer radii (beyond the per-cell error bars)
// and fits the tail slope in log-log coordinates.  Cells are evaluated in
// parallel; the reduction runs in index order so the report is deterministic.
inline ScanReport sector_bound_audit(const PrabhakarParams& p, double mu, const SectorGrid& grid) {
    detail::check_prabhakar(p, false);
    const double lo = detail::mu_window_lo(p.alpha), hi = detail::mu_window_hi(p.alpha);
    if (!(mu > lo) || !(mu < hi))
        throw std::domain_error("sector_bound_audit: mu outside the admissible window");
    const auto t0 = std::chrono::steady_clock::now();

    ScanReport rep;
    {
        std::ostringstream os;
        os << "prabhakar-sector alpha=" << p.alpha << " beta=" << p.beta << " delta=" << p.delta
           << " mu=" << mu << " nr=" << grid.radii.size() << " ntheta=" << grid.angles.size();
        rep.config = os.str();
    }
    const std::size_t nr = grid.radii.size(), na = grid.angles.size();
    rep.cells.resize(nr * na);

    auto work = [&](std::size_t first, std::size_t stride) {
        for (std::size_t idx = first; idx < nr * na; idx += stride) {
            const double r = grid.radii[idx / na];
            const double th = grid.angles[idx % na];
            ScanCell cell;
            cell.z = r;
            cell.theta = th;
            try {
                const ComplexEval e = detail::prabhakar_auto(p, std::polar(r, th), 1e-9);
                cell.value = e.value;
                cell.err = e.err;
                cell.method = e.method;
            } catch (const std::exception&) {
                cell.value = cplx(std::numeric_limits<double>::quiet_NaN(), 0.0);
                cell.err = std::numeric_limits<double>::infinity();
            }
            rep.cells[idx] = cell;
        }
    };
    const unsigned hw = std::thread::hardware_concurrency();
    const unsigned nt = std::max(1u, std::min(hw == 0 ? 1u : hw, 8u));
    if (nt > 1 && rep.cells.size() > 8) {
        std::vector<std::thread> pool;
        pool.reserve(nt);
        for (unsigned k = 0; k < nt; ++k) pool.emplace_back(work, k, nt);
        for (auto& t : pool) t.join();
    } else {
        work(0, 1);
    }

    auto weighted = [&](std::size_t j, std::size_t i) {
        const ScanCell& c = rep.cells[j * na + i];
        const double w = 1.0 + std::pow(c.z, p.delta);
        return std::pair<double, double>(std::abs(c.value) * w, c.err * w);
    };

    for (std::size_t idx = 0; idx < rep.cells.size(); ++idx) {
        const auto [v, e] = weighted(idx / na, idx % na);
        if (std::isfinite(v)) rep.sup = std::max(rep.sup, v);
        if (!std::isfinite(e)) {
            std::ostringstream os;
            os << "evaluation failed at z=" << rep.cells[idx].z << " theta=" << rep.cells[idx].theta;
            rep.violations.push_back(os.str());
        }
    }

    // Tail behaviour per angle over the outer half of the radii.
    rep.fit.slope = -std::numeric_limits<double>::infinity();
    const std::size_t tail_n = std::max<std::size_t>(3, nr / 2);
    if (nr >= 3) {
        const std::size_t j0 = nr > tail_n ? nr - tail_n : 0;
        for (std::size_t i = 0; i < na; ++i) {
            std::vector<double> xs, ys;
            bool rising = true;
            double prev_v = -1.0, prev_e = 0.0;
            for (std::size_t j = j0; j < nr; ++j) {
                const auto [v, e] = weighted(j, i);
                if (!std::isfinite(v) || v <= 0.0) { rising = false; continue; }
                if (prev_v >= 0.0 && v <= prev_v + prev_e + e) rising = false;
                prev_v = v;
                prev_e = e;
                xs.push_back(std::log(grid.radii[j]));
                ys.push_back(std::log(v));
            }
            if (xs.size() < 3) continue;
            const ExponentFit f = fit_line(xs, ys);
            if (f.slope > rep.fit.slope) rep.fit = f;
            if (rising && f.slope > 0.05) {
                rep.growth_flag = true;
                std::ostringstream os;
                os << "weighted magnitude grows at the radial edge: theta=" << grid.angles[i]
                   << " slope=" << f.slope;
                rep.violations.push_back(os.str());
            }
        }
    }
    if (!std::isfinite(rep.fit.slope)) rep.fit = ExponentFit{};

    rep.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

}  // namespace rdfk
