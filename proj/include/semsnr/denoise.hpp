#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "semsnr/convolve.hpp"
#include "semsnr/correlation.hpp"
#include "semsnr/error.hpp"
#include "semsnr/fft.hpp"
#include "semsnr/least_squares.hpp"
#include "semsnr/raster.hpp"

namespace semsnr {

enum class FilterKind { gaussian, median, bilateral, wiener_global, wiener_local, ar_wiener };

inline std::string_view to_string(FilterKind k) {
    switch (k) {
    case FilterKind::gaussian: return "gaussian";
    case FilterKind::median: return "median";
    case FilterKind::bilateral: return "bilateral";
    case FilterKind::wiener_global: return "wiener_global";
    case FilterKind::wiener_local: return "wiener_local";
    case FilterKind::ar_wiener: return "ar_wiener";
    }
    return "?";
}

struct FilterSpec {
    FilterKind kind = FilterKind::gaussian;
    double sigma = 1.0;        // gaussian
    std::size_t radius = 0;    // gaussian; 0 = ceil(3 sigma)
    std::size_t window = 3;    // median, wiener_local, ar_wiener
    double sigma_s = 2.0;      // bilateral spatial
    double sigma_r = 10.0;     // bilateral range
    double noise_variance = 0; // wiener_global (white), wiener_local
    bool noise_from_oracle = false;  // "noise_var=oracle": caller supplies the truth
    std::vector<double> noise_psd;  // wiener_global per-frequency override
    std::size_t ar_order = 2;  // ar_wiener

    void validate() const {
        switch (kind) {
        case FilterKind::gaussian: require(sigma > 0, Errc::domain, "gaussian sigma must be positive"); break;
        case FilterKind::bilateral:
            require(sigma_s > 0 && sigma_r > 0, Errc::domain, "bilateral sigmas must be positive");
            break;
        case FilterKind::wiener_global:
            require(noise_variance >= 0, Errc::domain, "noise variance must be nonnegative");
            break;
        case FilterKind::ar_wiener:
            require(ar_order >= 1, Errc::domain, "AR order must be >= 1");
            [[fallthrough]];
        case FilterKind::median:
        case FilterKind::wiener_local:
            require(window >= 3 && window % 2 == 1, Errc::domain, "window must be odd and >= 3");
            require(noise_variance >= 0, Errc::domain, "noise variance must be nonnegative");
            break;
        }
    }
};

/// Parses "kind:key=value,key=value". Keys per kind:
///   gaussian: sigma, radius
///   median: window
///   bilateral: sigma_s, sigma_r
///   wiener_global: noise_var (number or "oracle")
///   wiener_local: window, noise_var (number or "oracle")
///   ar_wiener: order, window
inline FilterSpec parse_filter_spec(std::string_view text) {
    FilterSpec spec;
    const auto colon = text.find(':');
    const std::string_view kind = text.substr(0, colon);
    if (kind == "gaussian") spec.kind = FilterKind::gaussian;
    else if (kind == "median") spec.kind = FilterKind::median;
    else if (kind == "bilateral") spec.kind = FilterKind::bilateral;
    else if (kind == "wiener_global") spec.kind = FilterKind::wiener_global;
    else if (kind == "wiener_local") spec.kind = FilterKind::wiener_local;
    else if (kind == "ar_wiener") spec.kind = FilterKind::ar_wiener;
    else fail(Errc::config, "unknown filter '" + std::string(kind) + "'");

    std::string_view rest = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
    while (!rest.empty()) {
        const auto comma = rest.find(',');
        const std::string_view item = rest.substr(0, comma);
        rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
        const auto eq = item.find('=');
        if (eq == std::string_view::npos) fail(Errc::config, "filter option '" + std::string(item) + "' lacks '='");
        const std::string key(item.substr(0, eq));
        const std::string val(item.substr(eq + 1));
        if (key == "noise_var" && val == "oracle" &&
            (spec.kind == FilterKind::wiener_global || spec.kind == FilterKind::wiener_local)) {
            spec.noise_from_oracle = true;
            continue;
        }
        double num = 0;
        try {
            std::size_t used = 0;
            num = std::stod(val, &used);
            if (used != val.size()) throw std::invalid_argument(val);
        } catch (const std::exception&) {
            fail(Errc::config, "filter option '" + key + "' has non-numeric value '" + val + "'");
        }
        auto as_count = [&] {
            if (num < 0 || num != std::floor(num)) fail(Errc::config, "filter option '" + key + "' must be a count");
            return static_cast<std::size_t>(num);
        };
        const bool known =
            (spec.kind == FilterKind::gaussian && (key == "sigma" || key == "radius")) ||
            (spec.kind == FilterKind::median && key == "window") ||
            (spec.kind == FilterKind::bilateral && (key == "sigma_s" || key == "sigma_r")) ||
            (spec.kind == FilterKind::wiener_global && key == "noise_var") ||
            (spec.kind == FilterKind::wiener_local && (key == "window" || key == "noise_var")) ||
            (spec.kind == FilterKind::ar_wiener && (key == "order" || key == "window"));
        if (!known) fail(Errc::config, "unknown option '" + key + "' for filter " + std::string(kind));
        if (key == "sigma") spec.sigma = num;
        else if (key == "radius") spec.radius = as_count();
        else if (key == "window") spec.window = as_count();
        else if (key == "sigma_s") spec.sigma_s = num;
        else if (key == "sigma_r") spec.sigma_r = num;
        else if (key == "noise_var") spec.noise_variance = num;
        else if (key == "order") spec.ar_order = as_count();
    }
    spec.validate();
    return spec;
}

struct DenoiseReport {
    Raster output;
    std::optional<double> mse_vs_reference;
    std::optional<double> psnr_db;
    std::optional<double> estimated_noise_variance;
};

/// PSNR against the storage range of `bit_depth`.
inline double psnr_db(double mse_value, int bit_depth) {
    const double peak = std::ldexp(1.0, bit_depth) - 1.0;
    return 20.0 * std::log10(peak) - 10.0 * std::log10(mse_value);
}

inline void score(DenoiseReport& rep, const Raster* reference) {
    if (!reference) return;
    rep.mse_vs_reference = mse(rep.output, *reference);
    rep.psnr_db = psnr_db(*rep.mse_vs_reference, reference->bit_depth());
}

// ---------------------------------------------------------------------------
// Spatial filters (mirror boundaries)

inline Raster median_filter(const Raster& img, std::size_t window) {
    const long r = static_cast<long>(window / 2);
    const std::size_t w = img.width(), h = img.height();
    Raster out(w, h, img.bit_depth());
    std::vector<double> buf(window * window);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            std::size_t n = 0;
            for (long dy = -r; dy <= r; ++dy)
                for (long dx = -r; dx <= r; ++dx) buf[n++] = img(mirror(long(x) + dx, w), mirror(long(y) + dy, h));
            std::nth_element(buf.begin(), buf.begin() + long(n / 2), buf.begin() + long(n));
            out(x, y) = buf[n / 2];
        }
    return out;
}

inline Raster bilateral_filter(const Raster& img, double sigma_s, double sigma_r) {
    const long r = static_cast<long>(std::ceil(2.0 * sigma_s));
    const std::size_t w = img.width(), h = img.height();
    std::vector<double> spatial;
    for (long dy = -r; dy <= r; ++dy)
        for (long dx = -r; dx <= r; ++dx)
            spatial.push_back(std::exp(-0.5 * double(dx * dx + dy * dy) / (sigma_s * sigma_s)));
    Raster out(w, h, img.bit_depth());
    const double inv_r = 1.0 / (2.0 * sigma_r * sigma_r);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            const double centre = img(x, y);
            double num = 0, den = 0;
            std::size_t i = 0;
            for (long dy = -r; dy <= r; ++dy)
                for (long dx = -r; dx <= r; ++dx, ++i) {
                    const double v = img(mirror(long(x) + dx, w), mirror(long(y) + dy, h));
                    const double wt = spatial[i] * std::exp(-(v - centre) * (v - centre) * inv_r);
                    num += wt * v;
                    den += wt;
                }
            out(x, y) = num / den;
        }
    return out;
}

inline Raster spatial_filter(const Raster& img, const FilterSpec& spec) {
    spec.validate();
    const std::size_t side = std::min(img.width(), img.height());
    switch (spec.kind) {
    case FilterKind::gaussian: {
        const std::size_t radius = spec.radius ? spec.radius : std::size_t(std::ceil(3.0 * spec.sigma));
        require(2 * radius + 1 <= side, Errc::domain, "gaussian kernel larger than image");
        return gaussian_blur(img, spec.sigma, radius);
    }
    case FilterKind::median:
        require(spec.window <= side, Errc::domain, "median window larger than image");
        return median_filter(img, spec.window);
    case FilterKind::bilateral:
        require(2 * std::size_t(std::ceil(2.0 * spec.sigma_s)) + 1 <= side, Errc::domain,
                "bilateral support larger than image");
        return bilateral_filter(img, spec.sigma_s, spec.sigma_r);
    default: fail(Errc::domain, "not a spatial filter: " + std::string(to_string(spec.kind)));
    }
}

// ---------------------------------------------------------------------------
// Frequency-domain Wiener filter

/// Per-frequency noise power: `psd` if non-empty (row-major, image shaped),
/// else the white level `variance`.
struct NoisePower {
    double variance = 0;
    std::vector<double> psd;

    double at(std::size_t i) const { return psd.empty() ? variance : psd[i]; }
};

/// Transfer H = P_f / (P_f + P_u) with P_f = max(P_w - P_u, 0) from the
/// periodogram P_w = |W|^2 / N. H(0) = 1 so the mean is untouched; where
/// P_u = 0 the filter is the identity.
inline std::vector<double> wiener_transfer(const std::vector<fft::Complex>& spectrum,
                                           const NoisePower& noise) {
    const double n = double(spectrum.size());
    require(noise.psd.empty() || noise.psd.size() == spectrum.size(), Errc::domain,
            "noise PSD shape does not match image");
    std::vector<double> hf(spectrum.size());
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        const double pu = noise.at(i);
        require(pu >= 0, Errc::domain, "noise power must be nonnegative");
        if (i == 0 || pu == 0) {
            hf[i] = 1.0;
            continue;
        }
        const double pw = std::norm(spectrum[i]) / n;
        const double pf = std::max(pw - pu, 0.0);
        hf[i] = pf / (pf + pu);
    }
    return hf;
}

inline DenoiseReport wiener_global(const Raster& img, const NoisePower& noise,
                                   const Raster* reference = nullptr) {
    require(noise.variance >= 0, Errc::domain, "noise variance must be nonnegative");
    require(noise.psd.empty() || noise.psd.size() == img.size(), Errc::domain, "noise PSD shape does not match image");
    const bool silent = noise.psd.empty() ? noise.variance == 0
                                          : std::all_of(noise.psd.begin(), noise.psd.end(), [](double p) { return p == 0; });
    if (silent) {
        DenoiseReport rep{img, {}, {}, {}};
        score(rep, reference);
        return rep;
    }
    std::vector<double> plane(img.pixels().begin(), img.pixels().end());
    auto spec = fft::forward(plane, img.width(), img.height());
    const auto hf = wiener_transfer(spec, noise);
    for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= hf[i];
    DenoiseReport rep{Raster(img.width(), img.height(), img.bit_depth(),
                             fft::inverse_real(std::move(spec), img.width(), img.height())),
                      {}, {}, {}};
    score(rep, reference);
    return rep;
}

// ---------------------------------------------------------------------------
// Local (adaptive) Wiener filter

/// out = m + max(v - s2, 0) / max(v, s2) * (in - m) with local mean m and
/// variance v over a square window.
inline DenoiseReport wiener_local(const Raster& img, std::size_t window, double noise_variance,
                                  const Raster* reference = nullptr) {
    require(window >= 3 && window % 2 == 1, Errc::domain, "window must be odd and >= 3");
    require(noise_variance >= 0, Errc::domain, "noise variance must be nonnegative");
    const std::size_t w = img.width(), h = img.height();
    require(window <= std::min(w, h), Errc::domain, "window larger than image");
    const long r = static_cast<long>(window / 2);
    const double inv_n = 1.0 / double(window * window);
    Raster out(w, h, img.bit_depth());
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            double s = 0, ss = 0;
            for (long dy = -r; dy <= r; ++dy)
                for (long dx = -r; dx <= r; ++dx) {
                    const double v = img(mirror(long(x) + dx, w), mirror(long(y) + dy, h));
                    s += v;
                    ss += v * v;
                }
            const double m = s * inv_n;
            const double var = std::max(0.0, ss * inv_n - m * m);
            const double denom = std::max(var, noise_variance);
            const double gain = denom > 0 ? std::max(var - noise_variance, 0.0) / denom : 1.0;
            out(x, y) = gain == 1.0 ? img(x, y) : m + gain * (img(x, y) - m);
        }
    DenoiseReport rep{std::move(out), {}, {}, {}};
    score(rep, reference);
    return rep;
}

// ---------------------------------------------------------------------------
// AR-Wiener

namespace detail {

/// Autocovariance c(k) = r(k) - mu^2 for k = 0..L, averaged over x and y.
inline std::vector<double> mean_autocovariance(const Raster& img, std::size_t lags) {
    const auto cx = autocorrelation(img, lags, Axis::x);
    const auto cy = autocorrelation(img, lags, Axis::y);
    std::vector<double> c(lags + 1);
    for (std::size_t k = 0; k <= lags; ++k) c[k] = 0.5 * (cx[k] + cy[k]) - cx.mean_sq();
    return c;
}

}  // namespace detail

/// Least-squares AR interpolation of the missing zero-lag sample from the
/// symmetric neighbours c(+-1..+-L): the AR(p) coefficients are fitted on the
/// samples that exclude lag 0 (forward and backward equations), then c(0) is
/// the value minimising the prediction errors that involve it.
inline double interpolate_zero_lag(const std::vector<double>& c, std::size_t order) {
    const std::size_t lags = c.size() - 1;
    require(order >= 1 && lags >= order + 1, Errc::domain, "not enough lags for AR interpolation");
    // x_j for j in [-L, L] with x_0 excluded; symmetric.
    auto x = [&](long j) { return c[static_cast<std::size_t>(std::abs(j))]; };
    const long p = static_cast<long>(order), L = static_cast<long>(lags);
    std::vector<double> design, rhs;
    for (long n = p + 1; n <= L; ++n) {  // forward on the right half
        for (long k = 1; k <= p; ++k) design.push_back(x(n - k));
        rhs.push_back(-x(n));
    }
    for (long n = 1; n + p <= L; ++n) {  // backward on the right half
        for (long k = 1; k <= p; ++k) design.push_back(x(n + k));
        rhs.push_back(-x(n));
    }
    const auto a = normal_equations(design, order, rhs);
    auto coef = [&](long k) { return k == 0 ? 1.0 : a[static_cast<std::size_t>(k - 1)]; };
    // e_n = sum_k a_k x_{n-k}, n = 0..p, each contains x_0 with weight a_n.
    double num = 0, den = 0;
    for (long n = 0; n <= p; ++n) {
        double rest = 0;
        for (long k = 0; k <= p; ++k)
            if (k != n) rest += coef(k) * x(n - k);
        num += coef(n) * rest;
        den += coef(n) * coef(n);
    }
    return -num / den;
}

inline std::size_t ar_interpolation_lags(const Raster& img, std::size_t order) {
    const std::size_t want = std::max<std::size_t>(2 * order + 2, 8);
    const std::size_t cap = (std::min(img.width(), img.height()) - 1) / 2;
    return std::min(want, cap);
}

inline double estimate_noise_variance_ar(const Raster& img, std::size_t order) {
    require(order >= 1, Errc::domain, "AR order must be >= 1");
    const std::size_t lags = ar_interpolation_lags(img, order);
    require(lags >= order + 1, Errc::domain, "image too small for the requested AR order");
    const auto c = detail::mean_autocovariance(img, lags);
    if (!(c[0] > 0)) return 0.0;
    double nf = 0;
    try {
        nf = interpolate_zero_lag(c, order);
    } catch (const Error& e) {
        if (e.code() != Errc::singular) throw;
        return 0.0;
    }
    return std::max(0.0, c[0] - nf);
}

inline DenoiseReport ar_wiener(const Raster& img, const FilterSpec& spec, const Raster* reference = nullptr) {
    require(spec.kind == FilterKind::ar_wiener, Errc::domain, "spec is not ar_wiener");
    spec.validate();
    const double var = estimate_noise_variance_ar(img, spec.ar_order);
    auto rep = wiener_local(img, spec.window, var, reference);
    rep.estimated_noise_variance = var;
    return rep;
}

/// Dispatch on spec.kind.
inline DenoiseReport apply_filter(const Raster& img, const FilterSpec& spec, const Raster* reference = nullptr) {
    spec.validate();
    switch (spec.kind) {
    case FilterKind::wiener_global:
        return wiener_global(img, NoisePower{spec.noise_variance, spec.noise_psd}, reference);
    case FilterKind::wiener_local: return wiener_local(img, spec.window, spec.noise_variance, reference);
    case FilterKind::ar_wiener: return ar_wiener(img, spec, reference);
    default: {
        DenoiseReport rep{spatial_filter(img, spec), {}, {}, {}};
        score(rep, reference);
        return rep;
    }
    }
}

}  // namespace semsnr
