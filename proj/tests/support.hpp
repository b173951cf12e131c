#pragma once

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "semsnr/correlation.hpp"
#include "semsnr/error.hpp"
#include "semsnr/noise_synth.hpp"
#include "semsnr/raster.hpp"

namespace semsnr::fixtures {

/// Error code raised by fn; records a failure if nothing is thrown.
template <class F>
Errc code_of(F&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected semsnr::Error";
    return Errc::domain;
}

inline Raster uniform_raster(std::size_t w, std::size_t h, std::uint64_t seed, double lo = 0, double hi = 255) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    Raster r(w, h, 16);
    for (double& v : r.pixels()) v = u(rng);
    return r;
}

inline Raster gaussian_raster(std::size_t w, std::size_t h, std::uint64_t seed, double mean, double sigma) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(mean, sigma);
    Raster r(w, h, 16);
    for (double& v : r.pixels()) v = n(rng);
    return r;
}

inline AcfCurve make_curve(std::vector<double> values, double mean) {
    AcfCurve c;
    c.values = std::move(values);
    c.mean = mean;
    return c;
}

/// Noise recipe on a field scene with the given model; dose tuned to the
/// target SNR when one is given.
inline NoiseRecipe field_recipe(std::size_t side, std::uint64_t seed, EmissionModel model, double target = 0,
                                double correlation_length = 6.0) {
    SceneSpec spec;
    spec.width = spec.height = side;
    spec.correlation_length = correlation_length;
    spec.seed = seed;
    NoiseRecipe r;
    r.dose = dose_from_pattern(make_pattern(spec), 1000.0, 0.3);
    r.model = model;
    r.seed = stream_seed(seed, "noise");
    return target > 0 ? tune_to_snr(r, target) : r;
}

inline Raster constant_dose(std::size_t side, double dose) { return Raster(side, side, 16, dose); }

}  // namespace semsnr::fixtures
