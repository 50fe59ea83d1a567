#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <rdfk/common.hpp>

namespace rdfk {

// One evaluated grid point of a scan or audit. `z` is the radial coordinate
// of the cell, `theta` the angular one.
struct ScanCell {
    double z = 0.0;
    double theta = 0.0;
    cplx value{0.0, 0.0};
    double err = 0.0;
    Method method = Method::series;
};

// Least-squares slope of a scatter, with the standard error of the slope.
struct ExponentFit {
    double slope = 0.0;
    double std_err = std::numeric_limits<double>::infinity();
};

struct ScanReport {
    std::string config;
    std::vector<ScanCell> cells;
    double sup = 0.0;
    ExponentFit fit;
    bool growth_flag = false;
    std::vector<std::string> violations;
    double runtime_seconds = 0.0;
};

// Ordinary least squares y = a + b x; returns b and its standard error.
inline ExponentFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
    ExponentFit out;
    const std::size_t n = xs.size();
    if (n != ys.size() || n < 2) return out;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx <= 0.0) return out;
    out.slope = sxy / sxx;
    if (n == 2) {
        out.std_err = 0.0;
        return out;
    }
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = ys[i] - my - out.slope * (xs[i] - mx);
        ss += e * e;
    }
    out.std_err = std::sqrt(ss / (static_cast<double>(n) - 2.0) / sxx);
    return out;
}

}  // namespace rdfk
