#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "semsnr/correlation.hpp"
#include "semsnr/error.hpp"
#include "semsnr/hermite.hpp"
#include "semsnr/least_squares.hpp"
#include "semsnr/levinson.hpp"
#include "semsnr/raster.hpp"

namespace semsnr {

enum class Method { frank_alali, smart, nn, fol, lsr, nllsr, asnn, acldr, chillsr };

inline constexpr std::array<Method, 7> single_image_methods{
    Method::nn, Method::fol, Method::lsr, Method::nllsr, Method::asnn, Method::acldr, Method::chillsr};
inline constexpr std::array<Method, 9> all_methods{
    Method::frank_alali, Method::smart, Method::nn,    Method::fol,    Method::lsr,
    Method::nllsr,       Method::asnn,  Method::acldr, Method::chillsr};

inline std::string_view to_string(Method m) {
    switch (m) {
    case Method::frank_alali: return "frank_alali";
    case Method::smart: return "smart";
    case Method::nn: return "nn";
    case Method::fol: return "fol";
    case Method::lsr: return "lsr";
    case Method::nllsr: return "nllsr";
    case Method::asnn: return "asnn";
    case Method::acldr: return "acldr";
    case Method::chillsr: return "chillsr";
    }
    return "?";
}

inline Method parse_method(std::string_view s) {
    for (Method m : all_methods)
        if (to_string(m) == s) return m;
    fail(Errc::config, "unknown method '" + std::string(s) + "'");
}

enum class EpsilonPolicy { half_gap, zero };

/// Quadratic map applied to the raw CHILLSR estimate; identity by default.
struct SnrCorrection {
    double alpha = 0.0;  // r^2
    double beta = 1.0;   // r
    double gamma = 0.0;  // 1

    double operator()(double r) const { return (alpha * r + beta) * r + gamma; }
    bool is_identity() const { return alpha == 0.0 && beta == 1.0 && gamma == 0.0; }
};

struct EstimatorConfig {
    std::size_t n_points = 4;
    std::size_t lag_start = 1;
    std::size_t nllsr_lag_start = 2;
    std::size_t nllsr_order = 1;  // only first order is implemented
    std::size_t acldr_order = 2;
    /// ACLDR drops to a lower order when the last reflection coefficient is
    /// smaller than this (the backward step divides by it).
    double acldr_min_reflection = 0.05;
    EpsilonPolicy epsilon_policy = EpsilonPolicy::half_gap;
    double asnn_slope = 0.99744;
    double asnn_intercept = 0.00645;
    SnrCorrection chillsr_correction{};
    Axis axis = Axis::x;
    std::size_t smart_shift = 4;
    std::size_t smart_roi = 0;  // 0: largest centred square that fits

    void validate() const {
        require(n_points >= 2, Errc::domain, "n_points must be >= 2");
        require(lag_start >= 1 && nllsr_lag_start >= 1, Errc::domain, "lag_start must be >= 1");
        require(acldr_order >= 1, Errc::domain, "AR order must be >= 1");
        require(nllsr_order == 1, Errc::domain, "only first-order NLLSR is implemented");
    }

    /// Largest ACF lag any single-image method reads.
    std::size_t max_lag() const {
        return std::max({lag_start + n_points - 1, nllsr_lag_start + n_points - 1, acldr_order + 1,
                         std::size_t(2)});
    }
};

enum class Status { ok, infinite, not_applicable, failed };

struct SnrEstimate {
    Method method{};
    Status status = Status::ok;
    std::optional<Errc> error;
    std::string message;
    double snr_linear = std::numeric_limits<double>::quiet_NaN();
    double snr_db = std::numeric_limits<double>::quiet_NaN();
    std::optional<double> predicted_nf_peak;
    std::map<std::string, std::vector<double>> diagnostics;

    bool ok() const { return status == Status::ok; }

    std::string status_name() const {
        switch (status) {
        case Status::ok: return "ok";
        case Status::infinite: return "infinite";
        case Status::not_applicable: return "not_applicable";
        case Status::failed: return error ? std::string(to_string(*error)) : "failed";
        }
        return "?";
    }
};

namespace detail {

inline SnrEstimate finish(Method m, double snr, std::optional<double> peak = std::nullopt) {
    SnrEstimate e;
    e.method = m;
    if (!(snr > 0)) fail(Errc::degenerate, "estimated SNR is not positive");
    e.snr_linear = snr;
    e.snr_db = to_db(snr);
    if (std::isinf(snr)) e.status = Status::infinite;
    e.predicted_nf_peak = peak;
    return e;
}

inline void need_lags(const AcfCurve& c, std::size_t k) {
    require(c.max_lag() >= k, Errc::domain, "ACF curve too short: need lag " + std::to_string(k));
}

inline double half_gap_epsilon(const AcfCurve& c) { return 0.5 * (c[0] - c[1]); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Noise-free peak predictors on an ACF curve. Each returns r_hat(0).

inline double fol_peak(const AcfCurve& c) {
    detail::need_lags(c, 2);
    return 2.0 * c[1] - c[2];
}

struct LsrPrediction {
    double peak = 0;
    double intercept = 0;
    double slope = 0;
    double epsilon = 0;
};

inline LsrPrediction lsr_peak(const AcfCurve& c, const EstimatorConfig& cfg) {
    detail::need_lags(c, cfg.lag_start + cfg.n_points - 1);
    std::vector<double> x, y;
    for (std::size_t k = cfg.lag_start; k < cfg.lag_start + cfg.n_points; ++k) {
        x.push_back(double(k));
        y.push_back(c[k]);
    }
    const auto line = fit_line(x, y);
    LsrPrediction p;
    p.intercept = line.intercept;
    p.slope = line.slope;
    p.epsilon = cfg.epsilon_policy == EpsilonPolicy::half_gap ? detail::half_gap_epsilon(c) : 0.0;
    p.peak = line(0.0) + p.epsilon;
    return p;
}

struct NllsrPrediction {
    double peak = 0;
    double scale = 0;     // alpha
    double exponent = 0;  // beta
    double epsilon = 1;   // multiplicative
};

/// Power law r(k) = alpha * k^beta fitted over lags >= 2, evaluated at k = 1
/// and scaled by the multiplicative error term.
inline NllsrPrediction nllsr_peak(const AcfCurve& c, const EstimatorConfig& cfg) {
    require(cfg.nllsr_lag_start >= 2, Errc::domain, "NLLSR fit lags must start at 2 or later");
    detail::need_lags(c, cfg.nllsr_lag_start + cfg.n_points - 1);
    std::vector<double> x, y;
    for (std::size_t k = cfg.nllsr_lag_start; k < cfg.nllsr_lag_start + cfg.n_points; ++k) {
        x.push_back(double(k));
        y.push_back(c[k]);
    }
    const auto law = fit_power_law(x, y);
    NllsrPrediction p;
    p.scale = law.scale;
    p.exponent = law.exponent;
    p.epsilon = cfg.epsilon_policy == EpsilonPolicy::half_gap ? std::exp(detail::half_gap_epsilon(c) / c[0]) : 1.0;
    p.peak = law(1.0) * p.epsilon;
    return p;
}

struct AcldrPrediction {
    double peak = 0;
    std::size_t order = 0;
    std::vector<double> coefficients;
    std::vector<double> reflection;
    std::vector<double> errors;
};

/// AR model of the mean-removed ACF samples s(k) = r(k) - mu^2, k >= 1,
/// solved by Levinson-Durbin with s(1) as the zero-lag term. The order-m
/// recursion s(m) = -sum_k a_k s(m-k) is then run one step backward for s(0).
inline AcldrPrediction acldr_peak(const AcfCurve& c, const EstimatorConfig& cfg) {
    const std::size_t order = cfg.acldr_order;
    detail::need_lags(c, order + 1);
    std::vector<double> s(order + 1);
    for (std::size_t k = 1; k <= order + 1; ++k) s[k - 1] = c[k] - c.mean_sq();
    if (!(s[0] > 0)) fail(Errc::nonpositive_signal, "ACF at lag 1 is at or below mean^2");

    for (std::size_t m = order; m >= 1; --m) {
        auto ld = levinson_durbin(std::span<const double>(s.data(), m + 1), m);
        const double last = ld.coefficients[m - 1];
        if (m > 1 && std::abs(last) < cfg.acldr_min_reflection) continue;
        if (last == 0.0) fail(Errc::degenerate, "AR(1) coefficient is zero; cannot extrapolate");
        // s(m) + a_1 s(m-1) + ... + a_m s(0) = 0, solved for s(0).
        double acc = s[m - 1];
        for (std::size_t k = 1; k < m; ++k) acc += ld.coefficients[k - 1] * s[m - 1 - k];
        AcldrPrediction p;
        p.peak = c.mean_sq() - acc / last;
        p.order = m;
        p.coefficients = std::move(ld.coefficients);
        p.reflection = std::move(ld.reflection);
        p.errors = std::move(ld.errors);
        return p;
    }
    fail(Errc::degenerate, "no usable AR order");
}

struct ChillsrPrediction {
    double peak = 0;
    std::array<double, 3> first_segment{};  // b, c, d of the segment extended to lag 0
};

/// Shape-preserving cubic Hermite spline through (k, r(k)), k = lag_start..,
/// extended to lag 0 along its first segment.
inline ChillsrPrediction chillsr_peak(const AcfCurve& c, const EstimatorConfig& cfg) {
    const std::size_t n = std::max<std::size_t>(cfg.n_points, 4);
    detail::need_lags(c, cfg.lag_start + n - 1);
    std::vector<double> x, y;
    for (std::size_t k = cfg.lag_start; k < cfg.lag_start + n; ++k) {
        x.push_back(double(k));
        y.push_back(c[k]);
    }
    MonotoneCubic spline(x, y);
    return {spline(0.0), spline.coefficients(0)};
}

// ---------------------------------------------------------------------------
// Image-level estimators

namespace detail {

inline AcfCurve profile(const Raster& img, const EstimatorConfig& cfg) {
    cfg.validate();
    return autocorrelation(img, cfg.max_lag(), cfg.axis);
}

}  // namespace detail

/// Two acquisitions of one scene: rho from the zero-offset CCF, SNR = rho / (1 - rho).
inline SnrEstimate estimate_frank_alali(const Raster& a, const Raster& b) {
    require(a.width() == b.width() && a.height() == b.height(), Errc::domain,
            "Frank-Al-Ali needs equal image dimensions");
    const double r12 = correlation_at(a, b, 0, 0);
    const auto sa = stats(a), sb = stats(b);
    if (!(sa.variance > 0 && sb.variance > 0)) fail(Errc::degenerate, "image has zero variance");
    const double rho = (r12 - sa.mean * sb.mean) / std::sqrt(sa.variance * sb.variance);
    if (!(rho > 0)) fail(Errc::nonpositive_correlation, "cross-correlation coefficient <= 0");
    auto e = detail::finish(Method::frank_alali, rho >= 1 ? std::numeric_limits<double>::infinity()
                                                          : rho / (1 - rho));
    e.diagnostics["rho"] = {rho};
    return e;
}

/// CCF of a centred region against a copy displaced by `smart_shift` pixels.
/// With a second acquisition the displaced region comes from it and rho is
/// read at the recovered alignment. With one image the aligned overlap shares
/// its noise, so rho is averaged over the four offsets adjacent to the
/// recovered peak.
inline SnrEstimate estimate_smart(const Raster& img, const EstimatorConfig& cfg,
                                  const Raster* second = nullptr) {
    const Raster& other = second ? *second : img;
    require(other.width() == img.width() && other.height() == img.height(), Errc::domain,
            "SMART needs equal image dimensions");
    const std::size_t shift = cfg.smart_shift;
    const std::size_t avail = std::min(img.width(), img.height()) - 2 * shift;
    const std::size_t roi = cfg.smart_roi ? cfg.smart_roi : avail;
    require(roi >= 64 && roi <= avail, Errc::domain, "SMART region must be >= 64x64 and fit the image");
    const std::size_t x0 = (img.width() - roi) / 2, y0 = (img.height() - roi) / 2;
    Raster a(roi, roi, img.bit_depth()), b(roi, roi, img.bit_depth());
    for (std::size_t y = 0; y < roi; ++y)
        for (std::size_t x = 0; x < roi; ++x) {
            a(x, y) = img(x0 + x, y0 + y);
            b(x, y) = other(x0 + x - shift, y0 + y);
        }

    // The peak is searched on the mean-removed surface; region brightness
    // differences would otherwise dominate the raw products.
    const double ma = stats(a).mean, mb = stats(b).mean;
    const auto surface = ccf_surface(scaled(a, 1.0, -ma), scaled(b, 1.0, -mb));
    const auto peak = locate_peak(surface, a, b, Boundary::valid);
    if (!(peak.peak_value > peak.background)) fail(Errc::no_peak, "CCF peak does not exceed background");

    double rho = peak.rho;
    if (!second) {
        // Pearson coefficients one pixel off the aligned peak stand in for
        // the noise-free correlation.
        auto coef = [&](long dx, long dy) { return correlation_coefficient(a, b, dx, dy, Boundary::valid); };
        rho = 0.25 * (coef(peak.dx - 1, peak.dy) + coef(peak.dx + 1, peak.dy) + coef(peak.dx, peak.dy - 1) +
                      coef(peak.dx, peak.dy + 1));
    }
    const double floor = 3.0 / std::sqrt(double(roi * roi));
    if (!(rho > floor)) fail(Errc::nonpositive_correlation, "no significant correlation at the CCF peak");
    auto e = detail::finish(Method::smart, rho >= 1 ? std::numeric_limits<double>::infinity()
                                                    : rho / (1 - rho));
    e.diagnostics["rho"] = {rho};
    e.diagnostics["peak_offset"] = {double(peak.dx), double(peak.dy)};
    e.diagnostics["fwhm"] = {peak.fwhm};
    e.diagnostics["peak_to_background"] = {(peak.peak_value + ma * mb) / (peak.background + ma * mb)};
    return e;
}

inline SnrEstimate estimate_nn(const Raster& img) {
    const double r0 = autocorrelation_at(img, 0, 0);
    const double r10 = autocorrelation_at(img, 1, 0);
    const double r01 = autocorrelation_at(img, 0, 1);
    const double mean = stats(img).mean;
    const double peak = 0.5 * (r10 + r01);
    auto e = detail::finish(Method::nn, snr_from_peaks(r0, peak, mean), peak);
    e.diagnostics["r10_r01"] = {r10, r01};
    return e;
}

inline SnrEstimate estimate_fol(const Raster& img, const EstimatorConfig& cfg = {}) {
    const auto c = detail::profile(img, cfg);
    const double peak = fol_peak(c);
    return detail::finish(Method::fol, snr_from_peaks(c[0], peak, c.mean), peak);
}

inline SnrEstimate estimate_lsr(const Raster& img, const EstimatorConfig& cfg = {}) {
    const auto c = detail::profile(img, cfg);
    const auto p = lsr_peak(c, cfg);
    auto e = detail::finish(Method::lsr, snr_from_peaks(c[0], p.peak, c.mean), p.peak);
    e.diagnostics["alpha_beta"] = {p.intercept, p.slope};
    e.diagnostics["epsilon"] = {p.epsilon};
    return e;
}

inline SnrEstimate estimate_nllsr(const Raster& img, const EstimatorConfig& cfg = {}) {
    const auto c = detail::profile(img, cfg);
    const auto p = nllsr_peak(c, cfg);
    auto e = detail::finish(Method::nllsr, snr_from_peaks(c[0], p.peak, c.mean), p.peak);
    e.diagnostics["alpha_beta"] = {p.scale, p.exponent};
    e.diagnostics["epsilon"] = {p.epsilon};
    return e;
}

/// Affine correction slope * SNR_NN - intercept.
inline double asnn_correct(double snr_base, const EstimatorConfig& cfg = {}) {
    return cfg.asnn_slope * snr_base - cfg.asnn_intercept;
}

inline SnrEstimate estimate_asnn(const Raster& img, const EstimatorConfig& cfg = {}) {
    const auto base = estimate_nn(img);
    const double corrected = asnn_correct(base.snr_linear, cfg);
    if (!(corrected > 0)) fail(Errc::degenerate, "ASNN correction drives the SNR to <= 0");
    auto e = detail::finish(Method::asnn, corrected, base.predicted_nf_peak);
    e.diagnostics["snr_base"] = {base.snr_linear};
    return e;
}

inline SnrEstimate estimate_acldr(const Raster& img, const EstimatorConfig& cfg = {}) {
    const auto c = detail::profile(img, cfg);
    const auto p = acldr_peak(c, cfg);
    auto e = detail::finish(Method::acldr, snr_from_peaks(c[0], p.peak, c.mean), p.peak);
    e.diagnostics["ar_order"] = {double(p.order)};
    e.diagnostics["ar_coefficients"] = p.coefficients;
    e.diagnostics["reflection"] = p.reflection;
    e.diagnostics["prediction_error"] = p.errors;
    return e;
}

/// Raw (uncorrected) CHILLSR SNR.
inline double chillsr_raw_snr(const Raster& img, const EstimatorConfig& cfg = {}) {
    const auto c = detail::profile(img, cfg);
    return snr_from_peaks(c[0], chillsr_peak(c, cfg).peak, c.mean);
}

inline SnrEstimate estimate_chillsr(const Raster& img, const EstimatorConfig& cfg = {}) {
    const auto c = detail::profile(img, cfg);
    const auto p = chillsr_peak(c, cfg);
    const double raw = snr_from_peaks(c[0], p.peak, c.mean);
    auto e = detail::finish(Method::chillsr, cfg.chillsr_correction(raw), p.peak);
    e.diagnostics["raw_snr"] = {raw};
    e.diagnostics["spline_bcd"] = {p.first_segment.begin(), p.first_segment.end()};
    e.diagnostics["correction"] = {cfg.chillsr_correction.alpha, cfg.chillsr_correction.beta,
                                   cfg.chillsr_correction.gamma};
    return e;
}

/// Quadratic mapping of raw CHILLSR estimates onto reference SNRs, fitted
/// on relative residuals so high-SNR images do not dominate.
inline SnrCorrection calibrate_chillsr(std::span<const double> raw, std::span<const double> truth) {
    require(raw.size() == truth.size(), Errc::domain, "raw and reference counts differ");
    require(raw.size() >= 3, Errc::domain, "calibration needs at least three images");
    std::vector<double> design, ones(raw.size(), 1.0);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        require(truth[i] > 0 && std::isfinite(raw[i]), Errc::domain, "calibration SNRs must be finite and positive");
        const double w = 1.0 / truth[i];
        design.insert(design.end(), {raw[i] * raw[i] * w, raw[i] * w, w});
    }
    const auto b = normal_equations(design, 3, ones);
    return {b[0], b[1], b[2]};
}

/// Runs one method, converting failures into statuses.
inline SnrEstimate estimate(Method m, const Raster& img, const EstimatorConfig& cfg,
                            const Raster* second = nullptr) {
    try {
        switch (m) {
        case Method::frank_alali:
            if (!second) {
                SnrEstimate e;
                e.method = m;
                e.status = Status::not_applicable;
                e.message = "needs a second acquisition";
                return e;
            }
            return estimate_frank_alali(img, *second);
        case Method::smart: return estimate_smart(img, cfg, second);
        case Method::nn: return estimate_nn(img);
        case Method::fol: return estimate_fol(img, cfg);
        case Method::lsr: return estimate_lsr(img, cfg);
        case Method::nllsr: return estimate_nllsr(img, cfg);
        case Method::asnn: return estimate_asnn(img, cfg);
        case Method::acldr: return estimate_acldr(img, cfg);
        case Method::chillsr: return estimate_chillsr(img, cfg);
        }
    } catch (const Error& err) {
        SnrEstimate e;
        e.method = m;
        e.status = Status::failed;
        e.error = err.code();
        e.message = err.what();
        return e;
    }
    fail(Errc::domain, "unhandled method");
}

inline std::map<Method, SnrEstimate> estimate_all(const Raster& img, const EstimatorConfig& cfg = {},
                                                  const Raster* second = nullptr) {
    std::map<Method, SnrEstimate> out;
    for (Method m : all_methods) out.emplace(m, estimate(m, img, cfg, second));
    return out;
}

}  // namespace semsnr
