#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "semsnr/error.hpp"

namespace semsnr {

/// Solves the square system `m x = rhs` (row-major, n x n) by Gaussian
/// elimination with partial pivoting.
inline std::vector<double> solve_dense(std::vector<double> m, std::vector<double> rhs) {
    const std::size_t n = rhs.size();
    require(m.size() == n * n, Errc::domain, "matrix shape does not match right-hand side");
    double scale = 0;
    for (double v : m) scale = std::max(scale, std::abs(v));
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(m[r * n + col]) > std::abs(m[piv * n + col])) piv = r;
        if (!(std::abs(m[piv * n + col]) > 1e-13 * scale)) fail(Errc::singular, "singular normal matrix");
        if (piv != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(m[col * n + c], m[piv * n + c]);
            std::swap(rhs[col], rhs[piv]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = m[r * n + col] / m[col * n + col];
            for (std::size_t c = col; c < n; ++c) m[r * n + c] -= f * m[col * n + c];
            rhs[r] -= f * rhs[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double acc = rhs[i];
        for (std::size_t c = i + 1; c < n; ++c) acc -= m[i * n + c] * x[c];
        x[i] = acc / m[i * n + i];
    }
    return x;
}

/// Ordinary least squares via the normal equations (X^T X) B = X^T y.
/// `design` is row-major with `cols` columns.
inline std::vector<double> normal_equations(std::span<const double> design, std::size_t cols,
                                            std::span<const double> y) {
    const std::size_t rows = y.size();
    require(design.size() == rows * cols, Errc::domain, "design matrix shape mismatch");
    require(rows >= cols, Errc::singular, "fewer observations than unknowns");
    std::vector<double> xtx(cols * cols, 0.0), xty(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t i = 0; i < cols; ++i) {
            xty[i] += design[r * cols + i] * y[r];
            for (std::size_t j = 0; j < cols; ++j)
                xtx[i * cols + j] += design[r * cols + i] * design[r * cols + j];
        }
    }
    return solve_dense(std::move(xtx), std::move(xty));
}

struct LineFit {
    double intercept = 0;
    double slope = 0;
    std::vector<double> residuals;

    double operator()(double x) const { return intercept + slope * x; }
};

inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size(), Errc::domain, "x and y lengths differ");
    require(x.size() >= 2, Errc::singular, "line fit needs at least two points");
    // Fit on centred, unit-range abscissae so tiny or offset x (currents in A) stay well conditioned.
    double mx = 0, span = 0;
    for (double v : x) mx += v / double(x.size());
    for (double v : x) span = std::max(span, std::abs(v - mx));
    if (!(span > 0)) fail(Errc::singular, "line fit needs distinct x values");
    std::vector<double> design;
    design.reserve(2 * x.size());
    for (double v : x) {
        design.push_back(1.0);
        design.push_back((v - mx) / span);
    }
    const auto b = normal_equations(design, 2, y);
    const double slope = b[1] / span;
    LineFit f{b[0] - slope * mx, slope, {}};
    for (std::size_t i = 0; i < x.size(); ++i) f.residuals.push_back(y[i] - f(x[i]));
    return f;
}

/// y = a * x^b fitted as a line in log-log space.
struct PowerLawFit {
    double scale = 0;     // a
    double exponent = 0;  // b

    double operator()(double x) const { return scale * std::pow(x, exponent); }
};

inline PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size(), Errc::domain, "x and y lengths differ");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0) || !(y[i] > 0)) fail(Errc::log_domain, "power-law fit needs positive data");
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
    }
    const auto line = fit_line(lx, ly);
    return {std::exp(line.intercept), line.slope};
}

/// y = c2 x^2 + c1 x + c0.
struct QuadraticFit {
    double c2 = 0;
    double c1 = 1;
    double c0 = 0;

    double operator()(double x) const { return (c2 * x + c1) * x + c0; }
};

inline QuadraticFit fit_quadratic(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size(), Errc::domain, "x and y lengths differ");
    std::vector<double> design;
    for (double v : x) {
        design.push_back(v * v);
        design.push_back(v);
        design.push_back(1.0);
    }
    const auto b = normal_equations(design, 3, y);
    return {b[0], b[1], b[2]};
}

}  // namespace semsnr
