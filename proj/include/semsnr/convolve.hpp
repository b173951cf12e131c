#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "semsnr/raster.hpp"

namespace semsnr {

/// Mirror index into [0, n): ... c b a | a b c ... d | d c b ...
inline std::size_t mirror(long i, std::size_t n) {
    const long len = static_cast<long>(n);
    const long period = 2 * len;
    long m = i % period;
    if (m < 0) m += period;
    return static_cast<std::size_t>(m < len ? m : period - 1 - m);
}

/// Normalised 1-D Gaussian taps for offsets -radius..radius.
inline std::vector<double> gaussian_kernel(double sigma, std::size_t radius) {
    std::vector<double> k(2 * radius + 1);
    double sum = 0;
    for (std::size_t i = 0; i < k.size(); ++i) {
        const double t = static_cast<double>(i) - static_cast<double>(radius);
        k[i] = std::exp(-0.5 * t * t / (sigma * sigma));
        sum += k[i];
    }
    for (double& v : k) v /= sum;
    return k;
}

/// Separable convolution with a symmetric kernel, mirror boundaries.
inline Raster convolve_separable(const Raster& in, const std::vector<double>& taps) {
    const long r = static_cast<long>(taps.size() / 2);
    const std::size_t w = in.width(), h = in.height();
    Raster tmp(w, h, in.bit_depth());
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            double acc = 0;
            for (long t = -r; t <= r; ++t) acc += taps[t + r] * in(mirror(long(x) + t, w), y);
            tmp(x, y) = acc;
        }
    Raster out(w, h, in.bit_depth());
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            double acc = 0;
            for (long t = -r; t <= r; ++t) acc += taps[t + r] * tmp(x, mirror(long(y) + t, h));
            out(x, y) = acc;
        }
    return out;
}

inline Raster gaussian_blur(const Raster& in, double sigma, std::size_t radius = 0) {
    if (radius == 0) radius = static_cast<std::size_t>(std::ceil(3.0 * sigma));
    return convolve_separable(in, gaussian_kernel(sigma, radius));
}

}  // namespace semsnr
