#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "semsnr/denoise.hpp"
#include "semsnr/estimators.hpp"
#include "support.hpp"

using namespace semsnr;
using semsnr::fixtures::code_of;

namespace {

GroundTruth oracle(double target, std::uint64_t seed, EmissionModel model = EmissionModel::poisson_se,
                   std::size_t side = 256) {
    return simulate(fixtures::field_recipe(side, seed, model, target));
}

Raster circular_shift(const Raster& a, long sx, long sy) {
    const long w = long(a.width()), h = long(a.height());
    Raster out(a.width(), a.height(), a.bit_depth());
    for (long y = 0; y < h; ++y)
        for (long x = 0; x < w; ++x) out(((x + sx) % w + w) % w, ((y + sy) % h + h) % h) = a(x, y);
    return out;
}

// Direct 2-D DFT of one bin, cross-checks the FFTW spectrum.
std::complex<double> dft_bin(const Raster& a, std::size_t u, std::size_t v) {
    std::complex<double> acc = 0;
    const double w = double(a.width()), h = double(a.height());
    for (std::size_t y = 0; y < a.height(); ++y)
        for (std::size_t x = 0; x < a.width(); ++x)
            acc += a(x, y) * std::polar(1.0, -2 * M_PI * (double(u * x) / w + double(v * y) / h));
    return acc;
}

}  // namespace

TEST(FilterSpec, ParsesKindsAndOptions) {
    const auto g = parse_filter_spec("gaussian:sigma=1.5,radius=4");
    EXPECT_EQ(g.kind, FilterKind::gaussian);
    EXPECT_DOUBLE_EQ(g.sigma, 1.5);
    EXPECT_EQ(g.radius, 4u);
    EXPECT_EQ(parse_filter_spec("median").window, 3u);
    EXPECT_TRUE(parse_filter_spec("wiener_local:window=5,noise_var=oracle").noise_from_oracle);
    EXPECT_DOUBLE_EQ(parse_filter_spec("wiener_global:noise_var=12.5").noise_variance, 12.5);
    EXPECT_EQ(parse_filter_spec("ar_wiener:order=3").ar_order, 3u);

    EXPECT_EQ(code_of([] { parse_filter_spec("sharpen"); }), Errc::config);
    EXPECT_EQ(code_of([] { parse_filter_spec("median:sigma=2"); }), Errc::config);
    EXPECT_EQ(code_of([] { parse_filter_spec("median:window=x"); }), Errc::config);
    EXPECT_EQ(code_of([] { parse_filter_spec("median:window"); }), Errc::config);
    EXPECT_EQ(code_of([] { parse_filter_spec("median:window=2.5"); }), Errc::config);
    EXPECT_EQ(code_of([] { parse_filter_spec("median:window=4"); }), Errc::domain);
    EXPECT_EQ(code_of([] { parse_filter_spec("gaussian:sigma=0"); }), Errc::domain);
    EXPECT_EQ(code_of([] { parse_filter_spec("gaussian:noise_var=oracle"); }), Errc::config);
}

TEST(Filters, ConstantImageIsAFixedPoint) {
    const Raster flat(32, 32, 8, 77.0);
    for (const char* text : {"gaussian:sigma=2", "median:window=5", "bilateral", "wiener_global:noise_var=4",
                             "wiener_local:noise_var=4", "ar_wiener"}) {
        const auto out = apply_filter(flat, parse_filter_spec(text)).output;
        for (double v : out.pixels()) ASSERT_NEAR(v, 77.0, 1e-9) << text;
    }
}

TEST(Filters, MedianRemovesIsolatedImpulses) {
    Raster img(16, 16, 8, 50.0);
    img(5, 5) = 255;
    img(10, 3) = 0;
    const auto out = median_filter(img, 3);
    for (double v : out.pixels()) EXPECT_EQ(v, 50.0);
}

TEST(Filters, MedianBeatsGaussianOnImpulseNoise) {
    const auto gt = oracle(50, 14, EmissionModel::poisson_se, 128);
    Raster hit = gt.clean;
    std::mt19937_64 rng(15);
    std::bernoulli_distribution flip(0.05), high(0.5);
    for (double& v : hit.pixels())
        if (flip(rng)) v = high(rng) ? 4000.0 : 0.0;
    const double med = mse(median_filter(hit, 3), gt.clean);
    const double gau = mse(gaussian_blur(hit, 1.0), gt.clean);
    EXPECT_LT(med, 0.5 * gau);
}

TEST(Filters, GaussianScalesWhiteNoiseVarianceBySumOfSquaredTaps) {
    const Raster noise = fixtures::gaussian_raster(256, 256, 5, 0, 4.0);
    for (double sigma : {0.8, 1.5}) {
        const auto taps = gaussian_kernel(sigma, std::size_t(std::ceil(3 * sigma)));
        double k2 = 0;
        for (double t : taps) k2 += t * t;
        const double expected = 16.0 * k2 * k2;  // separable: 2-D sum is the product
        const double got = stats(gaussian_blur(noise, sigma)).variance;
        EXPECT_NEAR(got / expected, 1.0, 0.06) << sigma;
    }
}

TEST(WienerGlobal, ZeroNoiseIsIdentity) {
    const Raster img = fixtures::uniform_raster(32, 24, 3);
    EXPECT_EQ(wiener_global(img, {0.0, {}}).output, img);
}

TEST(WienerGlobal, HugeNoiseCollapsesToTheMean) {
    const Raster img = fixtures::uniform_raster(32, 32, 4);
    const double mean = stats(img).mean;
    const auto out = wiener_global(img, {1e12, {}}).output;
    for (double v : out.pixels()) EXPECT_NEAR(v, mean, 1e-6);
}

TEST(WienerGlobal, TransferStaysInUnitInterval) {
    const Raster img = fixtures::uniform_raster(16, 16, 5);
    std::vector<double> plane(img.pixels().begin(), img.pixels().end());
    const auto spec = fft::forward(plane, 16, 16);
    for (double var : {0.0, 10.0, 1e3, 1e6}) {
        const auto hf = wiener_transfer(spec, {var, {}});
        for (double h : hf) {
            EXPECT_GE(h, 0.0);
            EXPECT_LE(h, 1.0);
        }
    }
    // FFTW bins agree with a direct DFT.
    for (std::size_t u : {1u, 5u})
        for (std::size_t v : {0u, 3u}) EXPECT_LT(std::abs(spec[v * 16 + u] - dft_bin(img, u, v)), 1e-8);
}

TEST(WienerGlobal, PreservesTheMeanAndIsShiftEquivariant) {
    const auto gt = oracle(5, 6, EmissionModel::poisson_se, 64);
    const NoisePower np{gt.noise_energy, {}};
    const auto out = wiener_global(gt.noisy, np).output;
    EXPECT_NEAR(stats(out).mean, stats(gt.noisy).mean, 1e-9 * stats(gt.noisy).mean);
    const auto moved = wiener_global(circular_shift(gt.noisy, 7, -3), np).output;
    const auto expect = circular_shift(out, 7, -3);
    for (std::size_t i = 0; i < out.size(); ++i) ASSERT_NEAR(moved.pixels()[i], expect.pixels()[i], 1e-8);
}

TEST(WienerGlobal, PerFrequencyNoiseOverride) {
    const Raster img = fixtures::uniform_raster(8, 8, 6);
    EXPECT_EQ(wiener_global(img, {50.0, std::vector<double>(64, 0.0)}).output, img);
    std::vector<double> psd(64, 0.0);
    psd[9] = 1e12;
    const auto one_bin = wiener_global(img, {0.0, psd}).output;
    EXPECT_NE(one_bin, img);
    EXPECT_NEAR(stats(one_bin).mean, stats(img).mean, 1e-9);
    EXPECT_EQ(code_of([&] { wiener_global(img, {0.0, std::vector<double>(10, 1.0)}); }), Errc::domain);
}

class OracleWiener : public ::testing::TestWithParam<double> {};

TEST_P(OracleWiener, ReducesMseAgainstTheCleanImage) {
    const double target = GetParam();
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto gt = oracle(target, 100 + seed);
        const double before = mse(gt.noisy, gt.clean);
        const auto g = wiener_global(gt.noisy, {gt.noise_energy, {}}, &gt.clean);
        const auto l = wiener_local(gt.noisy, 5, gt.noise_energy, &gt.clean);
        EXPECT_LT(*g.mse_vs_reference, before) << target << " seed " << seed;
        EXPECT_LT(*l.mse_vs_reference, before) << target << " seed " << seed;
        EXPECT_GT(*l.psnr_db, psnr_db(before, gt.clean.bit_depth()));
    }
}

INSTANTIATE_TEST_SUITE_P(Snr, OracleWiener, ::testing::Values(1.0, 5.0, 10.0));

TEST(WienerLocal, ZeroNoiseIsIdentityAndFlatNoiseGivesLocalMean) {
    const Raster img = fixtures::uniform_raster(20, 20, 7);
    EXPECT_EQ(wiener_local(img, 3, 0.0).output, img);
    // Noise variance above every local variance: gain 0, output is the 3x3 mean.
    const auto out = wiener_local(img, 3, 1e9).output;
    double m = 0;
    for (long dy = -1; dy <= 1; ++dy)
        for (long dx = -1; dx <= 1; ++dx) m += img(std::size_t(10 + dx), std::size_t(10 + dy)) / 9;
    EXPECT_NEAR(out(10, 10), m, 1e-9);
    EXPECT_EQ(code_of([&] { wiener_local(img, 4, 1); }), Errc::domain);
    EXPECT_EQ(code_of([&] { wiener_local(img, 21, 1); }), Errc::domain);
}

TEST(ArNoiseVariance, CleanSceneHasAlmostNone) {
    const auto gt = oracle(10, 8);
    const double var = estimate_noise_variance_ar(gt.clean, 2);
    EXPECT_LE(var, 0.01 * gt.signal_energy);
}

TEST(ArNoiseVariance, RecoversInjectedGaussianVariance) {
    for (double target : {1.0, 5.0, 10.0})
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const auto gt = oracle(target, 200 + seed, EmissionModel::additive_gaussian);
            const double var = estimate_noise_variance_ar(gt.noisy, 2);
            EXPECT_NEAR(var / gt.noise_energy, 1.0, 0.15) << target << " seed " << seed;
        }
}

TEST(ArNoiseVariance, WhiteNoiseIsAllNoise) {
    const Raster noise = fixtures::gaussian_raster(256, 256, 9, 500, 3.0);
    EXPECT_NEAR(estimate_noise_variance_ar(noise, 2) / stats(noise).variance, 1.0, 0.1);
    EXPECT_EQ(estimate_noise_variance_ar(Raster(32, 32, 8, 5.0), 2), 0.0);
    EXPECT_EQ(code_of([] { estimate_noise_variance_ar(Raster(8, 8), 3); }), Errc::domain);
}

TEST(ArWiener, ZeroVarianceIsIdentity) {
    const Raster flat(32, 32, 8, 12.0);
    const auto rep = ar_wiener(flat, parse_filter_spec("ar_wiener"));
    EXPECT_EQ(*rep.estimated_noise_variance, 0.0);
    EXPECT_EQ(rep.output, flat);
}

TEST(ArWiener, ApproachesOracleLocalWiener) {
    const auto gt = oracle(5, 10);
    const auto spec = parse_filter_spec("ar_wiener:window=5");
    const auto ar = ar_wiener(gt.noisy, spec, &gt.clean);
    const auto best = wiener_local(gt.noisy, 5, gt.noise_energy, &gt.clean);
    EXPECT_DOUBLE_EQ(*ar.estimated_noise_variance, estimate_noise_variance_ar(gt.noisy, 2));
    EXPECT_LE(*ar.mse_vs_reference, 1.1 * *best.mse_vs_reference);
    EXPECT_LT(*ar.mse_vs_reference, mse(gt.noisy, gt.clean));
}

TEST(Denoise, PsnrIdentity) {
    EXPECT_NEAR(psnr_db(1.0, 8), 20 * std::log10(255.0), 1e-12);
    EXPECT_NEAR(psnr_db(100.0, 8) - psnr_db(1.0, 8), -20.0, 1e-12);
    const Raster a = fixtures::uniform_raster(16, 16, 11);
    DenoiseReport rep{a, {}, {}, {}};
    score(rep, &a);
    EXPECT_EQ(*rep.mse_vs_reference, 0.0);
    EXPECT_TRUE(std::isinf(*rep.psnr_db));
}

TEST(Denoise, MedianIsShiftEquivariantAwayFromBorders) {
    const Raster img = fixtures::uniform_raster(40, 40, 12);
    const auto a = median_filter(img, 5);
    const auto b = median_filter(circular_shift(img, 4, 6), 5);
    for (std::size_t y = 3; y < 34 - 3; ++y)
        for (std::size_t x = 3; x < 36 - 3; ++x) ASSERT_EQ(b(x + 4, y + 6), a(x, y));
}

TEST(Denoise, LocalWienerRaisesEstimatedSnr) {
    const auto gt = oracle(5, 13);
    const auto before = estimate_nn(gt.noisy);
    const auto after = estimate_nn(wiener_local(gt.noisy, 5, gt.noise_energy).output);
    ASSERT_TRUE(before.ok() && after.ok());
    EXPECT_GE(after.snr_linear, before.snr_linear);
}
