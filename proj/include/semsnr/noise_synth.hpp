#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <string_view>

#include "semsnr/convolve.hpp"
#include "semsnr/error.hpp"
#include "semsnr/raster.hpp"

namespace semsnr {

/// Elementary charge, exact by the 2019 SI definition [C].
inline constexpr double elementary_charge = 1.602176634e-19;

/// Schottky shot-noise mean-square current 2 e I df [A^2].
inline double shot_noise_power(double beam_current, double bandwidth) {
    require(beam_current > 0 && bandwidth > 0, Errc::domain,
            "shot noise needs positive current and bandwidth");
    return 2.0 * elementary_charge * beam_current * bandwidth;
}

/// Noise left in the group transmitted by a grid of transmission gamma.
inline double partition_noise_power(double transmission, double se_noise_power) {
    require(transmission >= 0 && transmission <= 1, Errc::domain, "transmission must be in [0, 1]");
    return transmission * transmission * se_noise_power +
           transmission * (1 - transmission) * se_noise_power;
}

/// delta = delta_SE1 + zeta * delta_SE1: SE2 emission folded into SE1 through
/// the backscatter coefficient.
inline double total_se_yield(double se1_yield, double backscatter) {
    require(se1_yield >= 0, Errc::domain, "SE1 yield must be nonnegative");
    require(backscatter >= 0 && backscatter <= 1, Errc::domain, "backscatter coefficient must be in [0, 1]");
    return se1_yield + backscatter * se1_yield;
}

// ---------------------------------------------------------------------------
// Random streams

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent per-item stream seed; used so corpus items can be generated
/// in any order.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::string_view label) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (char c : label) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
    return stream_seed(seed, h);
}

using Engine = std::mt19937_64;

// ---------------------------------------------------------------------------
// Noise-free scenes

enum class SceneKind { flat, field, features };

inline std::string_view to_string(SceneKind k) {
    switch (k) {
    case SceneKind::flat: return "flat";
    case SceneKind::field: return "field";
    case SceneKind::features: return "features";
    }
    return "?";
}

inline SceneKind parse_scene_kind(std::string_view s) {
    if (s == "flat") return SceneKind::flat;
    if (s == "field") return SceneKind::field;
    if (s == "features") return SceneKind::features;
    fail(Errc::config, "unknown scene '" + std::string(s) + "'");
}

struct SceneSpec {
    SceneKind kind = SceneKind::field;
    std::size_t width = 256;
    std::size_t height = 256;
    /// Gaussian correlation length of `field` scenes [px].
    double correlation_length = 6.0;
    /// Radius range of `features` discs [px].
    double feature_min_radius = 8.0;
    double feature_max_radius = 32.0;
    /// Probe blur applied to `features` scenes [px].
    double probe_sigma = 1.0;
    std::uint64_t seed = 1;
};

/// Zero-mean, unit-variance pattern (all zeros for `flat`).
inline Raster make_pattern(const SceneSpec& spec) {
    Raster p(spec.width, spec.height, 16);
    if (spec.kind == SceneKind::flat) return p;
    Engine rng(spec.seed);
    if (spec.kind == SceneKind::field) {
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (double& v : p.pixels()) v = gauss(rng);
        p = gaussian_blur(p, spec.correlation_length);
    } else {
        // Occluding discs of random level give an exponential-like ACF.
        std::uniform_real_distribution<double> ux(0.0, double(spec.width));
        std::uniform_real_distribution<double> uy(0.0, double(spec.height));
        std::uniform_real_distribution<double> ur(spec.feature_min_radius, spec.feature_max_radius);
        std::uniform_real_distribution<double> level(-1.0, 1.0);
        const double mean_r = 0.5 * (spec.feature_min_radius + spec.feature_max_radius);
        const auto count = static_cast<std::size_t>(
            3.0 * double(spec.width * spec.height) / (3.14159265358979 * mean_r * mean_r)) + 1;
        for (double& v : p.pixels()) v = level(rng);
        for (std::size_t i = 0; i < count; ++i) {
            const double cx = ux(rng), cy = uy(rng), r = ur(rng), lv = level(rng);
            const long x0 = std::max(0L, long(cx - r)), x1 = std::min(long(spec.width) - 1, long(cx + r));
            const long y0 = std::max(0L, long(cy - r)), y1 = std::min(long(spec.height) - 1, long(cy + r));
            for (long y = y0; y <= y1; ++y)
                for (long x = x0; x <= x1; ++x)
                    if ((x + 0.5 - cx) * (x + 0.5 - cx) + (y + 0.5 - cy) * (y + 0.5 - cy) <= r * r)
                        p(std::size_t(x), std::size_t(y)) = lv;
        }
        if (spec.probe_sigma > 0) p = gaussian_blur(p, spec.probe_sigma);
    }
    const auto st = stats(p);
    const double inv = st.variance > 0 ? 1.0 / std::sqrt(st.variance) : 0.0;
    for (double& v : p.pixels()) v = (v - st.mean) * inv;
    return p;
}

/// Dose map base * (1 + contrast * pattern), floored at 1e-3 * base.
inline Raster dose_from_pattern(const Raster& pattern, double base_dose, double contrast) {
    require(base_dose > 0, Errc::domain, "base dose must be positive");
    Raster d = pattern;
    for (double& v : d.pixels()) v = std::max(1e-3 * base_dose, base_dose * (1.0 + contrast * v));
    return d;
}

// ---------------------------------------------------------------------------
// Acquisition simulation

enum class EmissionModel { none, poisson_pe, poisson_se, binomial_bse, additive_gaussian };

inline std::string_view to_string(EmissionModel m) {
    switch (m) {
    case EmissionModel::none: return "none";
    case EmissionModel::poisson_pe: return "poisson-pe";
    case EmissionModel::poisson_se: return "poisson-se";
    case EmissionModel::binomial_bse: return "binomial-bse";
    case EmissionModel::additive_gaussian: return "additive-gaussian";
    }
    return "?";
}

inline EmissionModel parse_emission_model(std::string_view s) {
    if (s == "none") return EmissionModel::none;
    if (s == "poisson-pe") return EmissionModel::poisson_pe;
    if (s == "poisson-se") return EmissionModel::poisson_se;
    if (s == "binomial-bse") return EmissionModel::binomial_bse;
    if (s == "additive-gaussian") return EmissionModel::additive_gaussian;
    fail(Errc::config, "unknown emission model '" + std::string(s) + "'");
}

struct NoiseRecipe {
    Raster dose;  // mean primary electrons per pixel
    double se_yield = 0.16;
    double bse_yield = 0.3;
    EmissionModel model = EmissionModel::poisson_se;
    double gaussian_sigma = 0.0;  // additive-gaussian only [intensity]
    /// Non-Poisson SE enhancement k >= 1; b = k / delta.
    double variance_inflation = 1.0;
    double gain = 1.0;       // intensity per detected electron
    double dc_offset = 0.0;  // I_DC
    std::uint64_t seed = 1;
    int bit_depth = 16;
};

struct GroundTruth {
    Raster clean;  // expected image, real valued
    Raster noisy;  // quantized acquisition
    double signal_energy = 0;
    double noise_energy = 0;
    double true_snr = 0;  // +inf when noise_energy == 0
    std::size_t clamped = 0;
};

/// Mean yield of detected electrons per primary electron for `m`.
inline double channel_yield(const NoiseRecipe& r) {
    switch (r.model) {
    case EmissionModel::poisson_se: return r.se_yield;
    case EmissionModel::binomial_bse: return r.bse_yield;
    default: return 1.0;
    }
}

/// Ensemble noise variance (in counts^2) per mean primary electron, so that
/// Var(count) = dose * noise_per_dose.
inline double noise_per_dose(const NoiseRecipe& r) {
    switch (r.model) {
    case EmissionModel::poisson_pe: return 1.0;
    case EmissionModel::poisson_se: return r.se_yield * (r.se_yield + r.variance_inflation);
    case EmissionModel::binomial_bse: return r.bse_yield;
    default: return 0.0;
    }
}

inline GroundTruth simulate(const NoiseRecipe& r) {
    for (double v : r.dose.pixels())
        if (!(v > 0)) fail(Errc::domain, "dose map must be positive everywhere");
    require(r.se_yield > 0 && r.se_yield <= 1, Errc::domain, "SE yield must be in (0, 1]");
    require(r.bse_yield >= 0 && r.bse_yield <= 1, Errc::domain, "BSE yield must be in [0, 1]");
    require(r.variance_inflation >= 1 && r.variance_inflation <= 2, Errc::domain,
            "variance inflation must be in [1, 2]");
    require(r.gaussian_sigma >= 0, Errc::domain, "gaussian sigma must be nonnegative");

    Engine rng(r.seed);
    const double yield = channel_yield(r);
    const std::size_t w = r.dose.width(), h = r.dose.height();
    Raster clean(w, h, r.bit_depth), raw(w, h, r.bit_depth);
    auto dose = r.dose.pixels();
    auto cp = clean.pixels();
    auto rp = raw.pixels();

    auto poisson = [&rng](double mean) -> double {
        if (!(mean > 0)) return 0.0;
        return static_cast<double>(std::poisson_distribution<long>(mean)(rng));
    };

    for (std::size_t i = 0; i < dose.size(); ++i) {
        cp[i] = r.gain * yield * dose[i] + r.dc_offset;
        double count = 0;
        switch (r.model) {
        case EmissionModel::none:
            count = dose[i];
            break;
        case EmissionModel::poisson_pe:
            count = poisson(dose[i]);
            break;
        case EmissionModel::poisson_se: {
            const double pe = poisson(dose[i]);
            double lambda = r.se_yield * pe;
            if (r.variance_inflation > 1 && lambda > 0) {
                // Gamma-Poisson mixture: Var(SE | N_PE) = k * delta * N_PE.
                const double theta = r.variance_inflation - 1;
                lambda = std::gamma_distribution<double>(lambda / theta, theta)(rng);
            }
            count = poisson(lambda);
            break;
        }
        case EmissionModel::binomial_bse: {
            const auto pe = static_cast<long>(poisson(dose[i]));
            count = pe > 0 ? double(std::binomial_distribution<long>(pe, r.bse_yield)(rng)) : 0.0;
            break;
        }
        case EmissionModel::additive_gaussian:
            count = dose[i];
            break;
        }
        rp[i] = r.gain * count + r.dc_offset;
        if (r.model == EmissionModel::additive_gaussian && r.gaussian_sigma > 0)
            rp[i] += std::normal_distribution<double>(0.0, r.gaussian_sigma)(rng);
    }

    auto q = quantize(raw, r.bit_depth);
    GroundTruth gt{std::move(clean), std::move(q.raster), 0, 0, 0, q.clamped};
    gt.signal_energy = stats(gt.clean).variance;
    gt.noise_energy = stats(difference(gt.noisy, gt.clean)).variance;
    gt.true_snr = gt.noise_energy > 0 ? gt.signal_energy / gt.noise_energy
                                      : std::numeric_limits<double>::infinity();
    return gt;
}

/// Scale factor c for dose = c * base_map that puts the ensemble SNR of
/// `recipe` (with its current dose map as base_map) at `target`.
/// For additive-gaussian the dose is left alone and sigma is solved instead.
inline NoiseRecipe tune_to_snr(NoiseRecipe recipe, double target) {
    require(target > 0, Errc::domain, "target SNR must be positive");
    const auto st = stats(recipe.dose);
    require(st.variance > 0, Errc::domain, "cannot tune the SNR of a featureless dose map");
    const double g = recipe.gain;
    const double quant = 1.0 / 12.0;
    if (recipe.model == EmissionModel::additive_gaussian) {
        const double sig = g * g * st.variance;
        recipe.gaussian_sigma = std::sqrt(std::max(sig / target - quant, 1e-12));
        return recipe;
    }
    require(recipe.model != EmissionModel::none, Errc::domain, "model 'none' has no noise to tune");
    const double y = channel_yield(recipe);
    // Signal ~ A c^2, noise ~ B c (+ quantization when the gain is fractional).
    const double a = g * g * y * y * st.variance;
    const double b = g * g * st.mean * noise_per_dose(recipe);
    const double q = std::abs(g - std::round(g)) > 0 ? quant : 0.0;
    const double c = (target * b + std::sqrt(target * target * b * b + 4 * a * target * q)) / (2 * a);
    for (double& v : recipe.dose.pixels()) v *= c;
    return recipe;
}

}  // namespace semsnr
