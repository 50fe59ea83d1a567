#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "rdfk/common.hpp"

// Quadrature building blocks:
//   * Gauss-Legendre rules of arbitrary order (Newton on the recurrence)
//   * Gauss-Jacobi rules for weight (1-x)^alpha (1+x)^beta on [-1,1]
//   * adaptive Gauss-Kronrod 7/15 for complex-valued integrands
//
// Rules are cached per order; caches are guarded so scans can run data-parallel.

namespace rdfk {

struct QuadRule {
    std::vector<double> x;  // nodes
    std::vector<double> w;  // weights
};

namespace detail {

// Legendre P_n(t) and derivative via the three-term recurrence.
inline std::pair<double, double> legendre_pd(int n, double t) {
    double p0 = 1.0, p1 = t;
    if (n == 0) return {1.0, 0.0};
    for (int k = 1; k < n; ++k) {
        double p2 = ((2 * k + 1) * t * p1 - k * p0) / (k + 1);
        p0 = p1;
        p1 = p2;
    }
    double d = n * (t * p1 - p0) / (t * t - 1.0);
    return {p1, d};
}

// Jacobi P_n^(a,b)(t) by recurrence.
inline double jacobi_p(int n, double a, double b, double t) {
    if (n == 0) return 1.0;
    double p0 = 1.0;
    double p1 = 0.5 * (a + b + 2.0) * t + 0.5 * (a - b);
    for (int k = 2; k <= n; ++k) {
        double c = 2.0 * k + a + b;
        double a1 = 2.0 * k * (k + a + b) * (c - 2.0);
        double a2 = (c - 1.0) * (a * a - b * b);
        double a3 = (c - 2.0) * (c - 1.0) * c;
        double a4 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * c;
        double p2 = ((a2 + a3 * t) * p1 - a4 * p0) / a1;
        p0 = p1;
        p1 = p2;
    }
    return p1;
}

// d/dt P_n^(a,b)(t) away from t = +-1.
inline double jacobi_dp(int n, double a, double b, double t) {
    if (n == 0) return 0.0;
    double c = 2.0 * n + a + b;
    double pn = jacobi_p(n, a, b, t);
    double pm = jacobi_p(n - 1, a, b, t);
    return (n * (a - b - c * t) * pn + 2.0 * (n + a) * (n + b) * pm) / (c * (1.0 - t * t));
}

}  // namespace detail

// Gauss-Legendre rule on [-1,1].
inline const QuadRule& gauss_legendre(int n) {
    static std::map<int, QuadRule> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    QuadRule r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double t = std::cos(pi * (i + 0.75) / (n + 0.5));
        for (int it2 = 0; it2 < 100; ++it2) {
            auto [p, d] = detail::legendre_pd(n, t);
            double dt = p / d;
            t -= dt;
            if (std::abs(dt) < 1e-15) break;
        }
        auto [p, d] = detail::legendre_pd(n, t);
        (void)p;
        double w = 2.0 / ((1.0 - t * t) * d * d);
        r.x[i] = -t;          // ascending order
        r.w[i] = w;
        r.x[n - 1 - i] = t;
        r.w[n - 1 - i] = w;
    }
    if (n % 2 == 1) r.x[n / 2] = 0.0;
    return cache.emplace(n, std::move(r)).first->second;
}

// Gauss-Jacobi rule: integrates f against (1-x)^alpha (1+x)^beta on [-1,1].
// Requires alpha, beta > -1.
inline const QuadRule& gauss_jacobi(int n, double alpha, double beta) {
    struct Key {
        int n;
        double a, b;
        bool operator<(const Key& o) const {
            if (n != o.n) return n < o.n;
            if (a != o.a) return a < o.a;
            return b < o.b;
        }
    };
    static std::map<Key, QuadRule> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    Key key{n, alpha, beta};
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    QuadRule r;
    r.x.resize(n);
    r.w.resize(n);
    std::vector<double> found;
    found.reserve(n);
    for (int i = 0; i < n; ++i) {
        // descending Chebyshev-flavored start, Newton with deflation
        double t = std::cos(pi * (i + 0.5) / n);
        for (int it2 = 0; it2 < 200; ++it2) {
            double p = detail::jacobi_p(n, alpha, beta, t);
            double d = detail::jacobi_dp(n, alpha, beta, t);
            double s = 0.0;
            for (double xr : found) s += 1.0 / (t - xr);
            double raw = p / d;
            double dt = raw / (1.0 - raw * s);
            t -= dt;
            if (!(std::abs(t) < 1.0)) t = std::copysign(0.999999, t);
            if (std::abs(dt) < 1e-15) break;
        }
        found.push_back(t);
    }
    std::sort(found.begin(), found.end());
    double lc = std::lgamma(n + alpha + 1.0) + std::lgamma(n + beta + 1.0) -
                std::lgamma(n + alpha + beta + 1.0) - std::lgamma(n + 2.0);
    double cn = (2.0 * n + alpha + beta + 2.0) / (n + alpha + beta + 1.0) *
                std::exp(lc) * std::pow(2.0, alpha + beta);
    for (int i = 0; i < n; ++i) {
        double t = found[i];
        double d = detail::jacobi_dp(n, alpha, beta, t);
        double p1 = detail::jacobi_p(n + 1, alpha, beta, t);
        r.x[i] = t;
        r.w[i] = -cn / (d * p1);
    }
    return cache.emplace(key, std::move(r)).first->second;
}

struct IntegralResult {
    cplx value{0.0, 0.0};
    double err = 0.0;
    long evals = 0;
};

namespace detail {

// Kronrod 15 nodes (positive half, index 0 = center) and weights,
// with the embedded Gauss-7 weights on the shared nodes.
inline constexpr double k15_x[8] = {
    0.000000000000000000000000000000000,
    0.207784955007898467600689403773245,
    0.405845151377397166906606412076961,
    0.586087235467691130294144838258730,
    0.741531185599394439863864773280788,
    0.864864423359769072789712788640926,
    0.949107912342758524526189684047851,
    0.991455371120812639206854697526329};
inline constexpr double k15_w[8] = {
    0.209482141084727828012999174891714,
    0.204432940075298892414161999234649,
    0.190350578064785409913256402421014,
    0.169004726639267902826583426598550,
    0.140653259715525918745189590510238,
    0.104790010322250183839876322541518,
    0.063092092629978553290700663189204,
    0.022935322010529224963732008058970};
inline constexpr double g7_w[4] = {
    0.417959183673469387755102040816327,
    0.381830050505118944950369775488975,
    0.279705391489276667901467771423780,
    0.129484966168869693270611432679082};

template <typename F>
inline void gk15_panel(F&& f, double a, double b, cplx& k15, double& err, long& evals) {
    double c = 0.5 * (a + b), h = 0.5 * (b - a);
    cplx fc = f(c);
    cplx sk = k15_w[0] * fc;
    cplx sg = g7_w[0] * fc;
    for (int j = 1; j < 8; ++j) {
        cplx fp = f(c + h * k15_x[j]);
        cplx fm = f(c - h * k15_x[j]);
        sk += k15_w[j] * (fp + fm);
        if (j % 2 == 0) sg += g7_w[j / 2] * (fp + fm);
    }
    evals += 15;
    k15 = sk * h;
    err = std::abs((sk - sg) * h);
}

}  // namespace detail

// Adaptive Gauss-Kronrod on [a,b] targeting absolute error abs_tol.
// initial_panels pre-splits the interval (useful for long oscillatory ranges).
// Throws accuracy_error if the tolerance cannot be certified within budget.
template <typename F>
IntegralResult integrate_gk(F&& f, double a, double b, double abs_tol,
                            int initial_panels = 1, long max_evals = 4000000) {
    struct Seg {
        double a, b;
        cplx val;
        double err;
    };
    IntegralResult out;
    if (a == b) return out;
    std::vector<Seg> work;
    double step = (b - a) / initial_panels;
    for (int i = 0; i < initial_panels; ++i) {
        Seg s{a + i * step, (i + 1 == initial_panels) ? b : a + (i + 1) * step, {}, 0.0};
        detail::gk15_panel(f, s.a, s.b, s.val, s.err, out.evals);
        work.push_back(s);
    }
    // bisect the worst segment until the total estimate clears the tolerance
    while (true) {
        double total_err = 0.0;
        size_t worst = 0;
        for (size_t i = 0; i < work.size(); ++i) {
            total_err += work[i].err;
            if (work[i].err > work[worst].err) worst = i;
        }
        if (total_err <= abs_tol) break;
        if (out.evals >= max_evals || work[worst].b - work[worst].a < 1e-15 * (std::abs(work[worst].a) + 1.0)) {
            // cannot refine further: report if genuinely above tolerance
            if (total_err > 1e3 * abs_tol)
                throw accuracy_error("integrate_gk: tolerance not reached");
            break;
        }
        Seg s = work[worst];
        double m = 0.5 * (s.a + s.b);
        Seg l{s.a, m, {}, 0.0}, r{m, s.b, {}, 0.0};
        detail::gk15_panel(f, l.a, l.b, l.val, l.err, out.evals);
        detail::gk15_panel(f, r.a, r.b, r.val, r.err, out.evals);
        work[worst] = l;
        work.push_back(r);
    }
    for (const Seg& s : work) {
        out.value += s.val;
        out.err += s.err;
    }
    return out;
}

// Fixed-order Gauss-Legendre application on [a,b].
template <typename F>
cplx integrate_gl(F&& f, double a, double b, int n) {
    const QuadRule& r = gauss_legendre(n);
    double c = 0.5 * (a + b), h = 0.5 * (b - a);
    cplx s{0.0, 0.0};
    for (int i = 0; i < n; ++i) s += r.w[i] * f(c + h * r.x[i]);
    return s * h;
}

}  // namespace rdfk
