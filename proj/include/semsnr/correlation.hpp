#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <string_view>
#include <vector>

#include "semsnr/error.hpp"
#include "semsnr/fft.hpp"
#include "semsnr/raster.hpp"

namespace semsnr {

enum class Axis { x, y, radial };

/// How offsets that run off the image are treated. `valid` sums only the
/// overlapping pixels and divides by the overlap count; `periodic` wraps.
enum class Boundary { valid, periodic };

inline std::string_view to_string(Axis a) {
    switch (a) {
    case Axis::x: return "x";
    case Axis::y: return "y";
    case Axis::radial: return "radial";
    }
    return "?";
}

/// Un-normalised autocorrelation profile r(k), k = 0..max_lag. Values include
/// the mean, so r(0) - mean^2 is the image variance.
struct AcfCurve {
    std::vector<double> values;
    double mean = 0;
    Axis axis = Axis::x;

    std::size_t max_lag() const noexcept { return values.empty() ? 0 : values.size() - 1; }
    double operator[](std::size_t k) const noexcept { return values[k]; }
    double mean_sq() const noexcept { return mean * mean; }
};

/// r(dx, dy) for a single offset.
inline double correlation_at(const Raster& a, const Raster& b, long dx, long dy,
                             Boundary boundary = Boundary::valid) {
    const long w = static_cast<long>(a.width());
    const long h = static_cast<long>(a.height());
    long double acc = 0;
    if (boundary == Boundary::periodic) {
        for (long y = 0; y < h; ++y) {
            const long yy = ((y + dy) % h + h) % h;
            for (long x = 0; x < w; ++x) {
                const long xx = ((x + dx) % w + w) % w;
                acc += static_cast<long double>(a(x, y)) * b(xx, yy);
            }
        }
        return static_cast<double>(acc / static_cast<long double>(w * h));
    }
    const long x0 = std::max(0L, -dx), x1 = std::min(w, w - dx);
    const long y0 = std::max(0L, -dy), y1 = std::min(h, h - dy);
    require(x1 > x0 && y1 > y0, Errc::domain, "correlation offset leaves no overlap");
    for (long y = y0; y < y1; ++y)
        for (long x = x0; x < x1; ++x) acc += static_cast<long double>(a(x, y)) * b(x + dx, y + dy);
    return static_cast<double>(acc / static_cast<long double>((x1 - x0) * (y1 - y0)));
}

inline double autocorrelation_at(const Raster& r, long dx, long dy,
                                 Boundary boundary = Boundary::valid) {
    return correlation_at(r, r, dx, dy, boundary);
}

inline AcfCurve autocorrelation(const Raster& r, std::size_t max_lag, Axis axis = Axis::x,
                                Boundary boundary = Boundary::valid) {
    require(2 * max_lag < std::min(r.width(), r.height()), Errc::domain,
            "max_lag " + std::to_string(max_lag) + " must be below half the smaller image side");
    AcfCurve c;
    c.mean = stats(r).mean;
    c.axis = axis;
    c.values.resize(max_lag + 1);
    const long K = static_cast<long>(max_lag);
    switch (axis) {
    case Axis::x:
        for (long k = 0; k <= K; ++k) c.values[k] = autocorrelation_at(r, k, 0, boundary);
        break;
    case Axis::y:
        for (long k = 0; k <= K; ++k) c.values[k] = autocorrelation_at(r, 0, k, boundary);
        break;
    case Axis::radial: {
        // Half-plane suffices: r(-d) = r(d).
        std::vector<long double> sum(max_lag + 1, 0.0L);
        std::vector<std::size_t> n(max_lag + 1, 0);
        for (long dy = 0; dy <= K; ++dy) {
            for (long dx = -K; dx <= K; ++dx) {
                if (dy == 0 && dx < 0) continue;
                const auto bin = static_cast<long>(std::lround(std::hypot(double(dx), double(dy))));
                if (bin > K) continue;
                sum[bin] += autocorrelation_at(r, dx, dy, boundary);
                ++n[bin];
            }
        }
        for (std::size_t k = 0; k <= max_lag; ++k) c.values[k] = static_cast<double>(sum[k] / n[k]);
        break;
    }
    }
    return c;
}

/// Single-image SNR from the noisy zero-lag peak and a predicted noise-free
/// peak: (r_nf - mean^2) / (r0 - r_nf).
inline double snr_from_peaks(double r0, double r_nf, double mean) {
    const double mu2 = mean * mean;
    if (!(r0 - mu2 > 1e-12 * std::abs(r0))) fail(Errc::degenerate, "image has no variance");
    if (!(r0 > r_nf))
        fail(Errc::degenerate, "predicted noise-free peak is at or above the noisy peak");
    if (!(r_nf > mu2)) fail(Errc::nonpositive_signal, "predicted noise-free peak is at or below mean^2");
    return (r_nf - mu2) / (r0 - r_nf);
}

/// Power-ratio decibels.
inline double to_db(double snr_linear) { return 10.0 * std::log10(snr_linear); }

inline void write_acf_csv(const AcfCurve& c, std::ostream& os) {
    os.precision(17);
    os << "# semsnr-csv v1\n# mean=" << c.mean << " axis=" << to_string(c.axis) << "\nlag,value\n";
    for (std::size_t k = 0; k < c.values.size(); ++k) os << k << ',' << c.values[k] << '\n';
}

// ---------------------------------------------------------------------------
// Cross-correlation

/// CCF over offsets dx in [-W/2, W/2), dy in [-H/2, H/2), stored centred:
/// element (dx + W/2, dy + H/2). Convention c(d) = <a(p) b(p + d)>, so a
/// copy of `a` translated by d peaks at d.
struct CcfSurface {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> values;

    double at(long dx, long dy) const {
        return values[static_cast<std::size_t>(dy + long(height / 2)) * width +
                      static_cast<std::size_t>(dx + long(width / 2))];
    }
    long min_dx() const { return -long(width / 2); }
    long max_dx() const { return long(width) - long(width / 2) - 1; }
    long min_dy() const { return -long(height / 2); }
    long max_dy() const { return long(height) - long(height / 2) - 1; }
};

inline CcfSurface ccf_surface(const Raster& a, const Raster& b,
                              Boundary boundary = Boundary::valid) {
    require(a.width() == b.width() && a.height() == b.height(), Errc::domain,
            "cross-correlation needs equal dimensions");
    const std::size_t w = a.width(), h = a.height();
    // Padding to 2x removes circular aliasing for |d| < W/2.
    const std::size_t pw = boundary == Boundary::periodic ? w : 2 * w;
    const std::size_t ph = boundary == Boundary::periodic ? h : 2 * h;
    std::vector<double> pa(pw * ph, 0.0), pb(pw * ph, 0.0);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            pa[y * pw + x] = a(x, y);
            pb[y * pw + x] = b(x, y);
        }
    auto fa = fft::forward(pa, pw, ph);
    auto fb = fft::forward(pb, pw, ph);
    for (std::size_t i = 0; i < fa.size(); ++i) fa[i] = std::conj(fa[i]) * fb[i];
    const auto raw = fft::inverse_real(std::move(fa), pw, ph);

    CcfSurface s{w, h, std::vector<double>(w * h)};
    for (long dy = s.min_dy(); dy <= s.max_dy(); ++dy) {
        for (long dx = s.min_dx(); dx <= s.max_dx(); ++dx) {
            const std::size_t ix = static_cast<std::size_t>((dx + long(pw)) % long(pw));
            const std::size_t iy = static_cast<std::size_t>((dy + long(ph)) % long(ph));
            const double count = boundary == Boundary::periodic
                                     ? double(w * h)
                                     : double((long(w) - std::abs(dx)) * (long(h) - std::abs(dy)));
            s.values[static_cast<std::size_t>(dy - s.min_dy()) * w +
                     static_cast<std::size_t>(dx - s.min_dx())] = raw[iy * pw + ix] / count;
        }
    }
    return s;
}

struct CcfResult {
    long dx = 0;
    long dy = 0;
    double peak_value = 0;
    double background = 0;
    double fwhm = 0;
    double rho = 0;
};

/// Pearson correlation of `a` and `b` over the pixels that overlap at offset d.
inline double correlation_coefficient(const Raster& a, const Raster& b, long dx, long dy,
                                      Boundary boundary = Boundary::valid) {
    const long w = static_cast<long>(a.width()), h = static_cast<long>(a.height());
    long double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
    std::size_t n = 0;
    auto visit = [&](double va, double vb) {
        sa += va;
        sb += vb;
        saa += static_cast<long double>(va) * va;
        sbb += static_cast<long double>(vb) * vb;
        sab += static_cast<long double>(va) * vb;
        ++n;
    };
    if (boundary == Boundary::periodic) {
        for (long y = 0; y < h; ++y)
            for (long x = 0; x < w; ++x) visit(a(x, y), b(((x + dx) % w + w) % w, ((y + dy) % h + h) % h));
    } else {
        for (long y = std::max(0L, -dy); y < std::min(h, h - dy); ++y)
            for (long x = std::max(0L, -dx); x < std::min(w, w - dx); ++x) visit(a(x, y), b(x + dx, y + dy));
    }
    require(n > 1, Errc::domain, "no overlap for correlation coefficient");
    const long double N = static_cast<long double>(n);
    const long double cov = sab / N - (sa / N) * (sb / N);
    const long double va = saa / N - (sa / N) * (sa / N);
    const long double vb = sbb / N - (sb / N) * (sb / N);
    if (va <= 0 || vb <= 0) fail(Errc::degenerate, "zero variance in correlation coefficient");
    return std::clamp(static_cast<double>(cov / std::sqrt(va * vb)), -1.0, 1.0);
}

namespace detail {

inline double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<long>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<long>(mid)));
    return m;
}

// Width at half height above `base` of the x line profile through the peak.
inline double line_fwhm(const CcfSurface& s, long px, long py, double base) {
    const double peak = s.at(px, py);
    const double level = base + 0.5 * (peak - base);
    auto crossing = [&](int dir) {
        double prev = peak;
        for (long x = px + dir;; x += dir) {
            if (x < s.min_dx() || x > s.max_dx()) return double(std::abs(x - dir - px));
            const double v = s.at(x, py);
            if (v < level) return double(std::abs(x - px)) - 1.0 + (prev - level) / (prev - v);
            prev = v;
        }
    };
    return std::max(1.0, crossing(-1) + crossing(+1));
}

}  // namespace detail

inline CcfResult locate_peak(const CcfSurface& s, const Raster& a, const Raster& b,
                             Boundary boundary) {
    CcfResult res;
    res.peak_value = -std::numeric_limits<double>::infinity();
    // Offsets overlapping less than half of either axis are too noisy to
    // hold the peak.
    const long rx = long(s.width / 4), ry = long(s.height / 4);
    for (long dy = -ry; dy <= ry; ++dy)
        for (long dx = -rx; dx <= rx; ++dx)
            if (s.at(dx, dy) > res.peak_value) {
                res.peak_value = s.at(dx, dy);
                res.dx = dx;
                res.dy = dy;
            }
    std::vector<double> rest;
    rest.reserve(s.values.size());
    for (long dy = s.min_dy(); dy <= s.max_dy(); ++dy)
        for (long dx = s.min_dx(); dx <= s.max_dx(); ++dx)
            if (std::abs(dx - res.dx) > 2 || std::abs(dy - res.dy) > 2) rest.push_back(s.at(dx, dy));
    res.background = detail::median_of(std::move(rest));
    res.fwhm = res.peak_value > res.background ? detail::line_fwhm(s, res.dx, res.dy, res.background)
                                               : 0.0;
    res.rho = correlation_coefficient(a, b, res.dx, res.dy, boundary);
    return res;
}

/// Spectrum-domain CCF with peak geometry and the correlation coefficient at
/// the recovered alignment.
inline CcfResult cross_correlate(const Raster& a, const Raster& b,
                                 Boundary boundary = Boundary::valid) {
    require(a.width() == b.width() && a.height() == b.height(), Errc::domain,
            "cross-correlation needs equal dimensions");
    require(a.width() >= 16 && a.height() >= 16, Errc::domain,
            "cross-correlation needs at least 16x16 images");
    return locate_peak(ccf_surface(a, b, boundary), a, b, boundary);
}

}  // namespace semsnr
