#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "semsnr/error.hpp"

namespace semsnr {

/// Shape-preserving piecewise cubic Hermite interpolant (Fritsch-Carlson
/// tangents, one-sided three-point end tangents). Each segment is
/// S_i(x) = y_i + b_i t + c_i t^2 + d_i t^3 with t = x - x_i. Evaluation
/// outside the knots extends the nearest end segment.
class MonotoneCubic {
public:
    MonotoneCubic(std::span<const double> x, std::span<const double> y)
        : x_(x.begin(), x.end()), y_(y.begin(), y.end()) {
        const std::size_t n = x_.size();
        require(n == y_.size(), Errc::domain, "knot and value counts differ");
        require(n >= 2, Errc::domain, "need at least two knots");
        for (std::size_t i = 1; i < n; ++i)
            require(x_[i] > x_[i - 1], Errc::domain, "knots must be strictly increasing");

        std::vector<double> h(n - 1), delta(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            h[i] = x_[i + 1] - x_[i];
            delta[i] = (y_[i + 1] - y_[i]) / h[i];
        }
        std::vector<double> d(n, 0.0);
        if (n == 2) {
            d[0] = d[1] = delta[0];
        } else {
            for (std::size_t i = 1; i + 1 < n; ++i) {
                if (delta[i - 1] * delta[i] > 0) {
                    const double w1 = 2 * h[i] + h[i - 1];
                    const double w2 = h[i] + 2 * h[i - 1];
                    d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
                }
            }
            d[0] = end_tangent(h[0], h[1], delta[0], delta[1]);
            d[n - 1] = end_tangent(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        b_ = d;
        c_.resize(n - 1);
        e_.resize(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            c_[i] = (3 * delta[i] - 2 * d[i] - d[i + 1]) / h[i];
            e_[i] = (d[i] + d[i + 1] - 2 * delta[i]) / (h[i] * h[i]);
        }
    }

    double operator()(double x) const {
        const std::size_t seg = segment(x);
        const double t = x - x_[seg];
        return y_[seg] + t * (b_[seg] + t * (c_[seg] + t * e_[seg]));
    }

    double tangent(std::size_t knot) const { return b_[knot]; }

    /// Cubic coefficients (b, c, d) of segment i.
    std::array<double, 3> coefficients(std::size_t i) const { return {b_[i], c_[i], e_[i]}; }

private:
    static double end_tangent(double h0, double h1, double d0, double d1) {
        double t = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (t * d0 <= 0) {
            t = 0;
        } else if (d0 * d1 <= 0 && std::abs(t) > std::abs(3 * d0)) {
            t = 3 * d0;
        }
        return t;
    }

    std::size_t segment(double x) const {
        if (x <= x_.front()) return 0;
        if (x >= x_.back()) return x_.size() - 2;
        auto it = std::upper_bound(x_.begin(), x_.end(), x);
        return static_cast<std::size_t>(it - x_.begin()) - 1;
    }

    std::vector<double> x_, y_, b_, c_, e_;
};

}  // namespace semsnr
