#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "semsnr/yield_snr.hpp"
#include "support.hpp"

using namespace semsnr;
using semsnr::fixtures::code_of;

TEST(Yields, FromCurrents) {
    const auto y = yields_from_currents({100e-12, 70e-12, 54e-12});
    EXPECT_NEAR(y.delta, 0.16, 1e-12);
    EXPECT_NEAR(y.eta, 0.30, 1e-12);
    const auto zero = yields_from_currents({1e-9, 1e-9, 1e-9});
    EXPECT_EQ(zero.delta, 0);
    EXPECT_EQ(zero.eta, 0);
    EXPECT_EQ(code_of([] { yields_from_currents({1e-9, 2e-9, 0}); }), Errc::inconsistent_currents);
    EXPECT_EQ(code_of([] { yields_from_currents({1e-9, 0.2e-9, 0.5e-9}); }), Errc::inconsistent_currents);
}

TEST(Yields, CurrentBalanceRoundTrip) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0, 0.5);
    for (int i = 0; i < 500; ++i) {
        const Yields y{u(rng), u(rng)};
        const double ipe = 1e-12 * (1 + 1000 * u(rng));
        const auto back = yields_from_currents(currents_from_yields(ipe, y));
        EXPECT_NEAR(back.delta, y.delta, 1e-12 * std::max(1.0, y.delta));
        EXPECT_NEAR(back.eta, y.eta, 1e-12 * std::max(1.0, y.eta));
    }
}

TEST(Dose, PerPixel) {
    EXPECT_NEAR(dose_per_pixel({291e-12, 6.39e-6}), 1.1607e4, 1);
    EXPECT_NEAR(dose_per_pixel({elementary_charge, 1.0}), 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(dose_per_pixel({1e-10, 2e-6}), 2 * dose_per_pixel({1e-10, 1e-6}));
    EXPECT_EQ(code_of([] { dose_per_pixel({1e-10, 1e-6, 1.5}); }), Errc::domain);
}

TEST(SnrYield, Channels) {
    EXPECT_DOUBLE_EQ(snr_yield(100, Channel::pe), 10);
    EXPECT_DOUBLE_EQ(snr_yield(100, Channel::bse, 0, 0.25), 5);
    EXPECT_NEAR(snr_yield(11610, Channel::se, 0.16), std::sqrt(11610 / 7.25), 1e-12);
    EXPECT_NEAR(snr_yield(11610, Channel::se, 0.16), 40.0, 0.05);
    EXPECT_LT(snr_yield(11610, Channel::se, 0.16, 0, 1.5), snr_yield(11610, Channel::se, 0.16));
    EXPECT_EQ(code_of([] { snr_yield(100, Channel::se, 0); }), Errc::domain);
    EXPECT_EQ(code_of([] { snr_yield(-1, Channel::pe); }), Errc::domain);
}

TEST(SnrYield, BeamOverloadReproducesYieldSideReference) {
    const BeamParams b{291e-12, 6.39e-6, 0.23, 1.0};
    const double se = snr_yield(b, Channel::se, 0.16);
    EXPECT_NEAR(se, 40.0, 0.1);
    EXPECT_EQ(std::lround(snr_detected(se, b.dqe)), 19);
}

TEST(SnrDetected, SqrtDqeScaling) {
    EXPECT_NEAR(snr_detected(40, 0.23), 19.18, 0.005);
    EXPECT_NEAR(snr_detected(42, 0.23), 20.14, 0.005);
    EXPECT_DOUBLE_EQ(snr_detected(17, 1), 17);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.01, 1);
    for (int i = 0; i < 100; ++i) {
        const double s = 100 * u(rng), d = u(rng);
        EXPECT_NEAR(snr_detected(s, d) / s, std::sqrt(d), 1e-12);
    }
    EXPECT_EQ(code_of([] { snr_detected(10, 0); }), Errc::domain);
    EXPECT_EQ(code_of([] { snr_detected(10, 1.01); }), Errc::domain);
}

TEST(SnrFromImage, ImageSideReferenceValues) {
    EXPECT_NEAR(snr_from_image(68, 12.1, 2.35), 23.79, 0.005);
    EXPECT_NEAR(snr_from_image(45, 12.3, 1.72), 19.01, 0.005);
    EXPECT_NEAR(snr_from_image(41, 11.8, 1.35), 21.63, 0.005);
    EXPECT_EQ(code_of([] { snr_from_image(40, 10, 0); }), Errc::degenerate);
    EXPECT_EQ(code_of([] { snr_from_image(10, 10, 1); }), Errc::nonpositive_signal);
}

TEST(CalibrateIdc, ExactLines) {
    const std::vector<double> c{1e-10, 2e-10, 3e-10}, m{12.3 + 1e11, 12.3 + 2e11, 12.3 + 3e11};
    EXPECT_NEAR(calibrate_idc(c, m).i_dc, 12.3, 1e-3);
    const std::vector<double> x{1, 2}, y{2, 4};
    const auto two = calibrate_idc(x, y);
    EXPECT_NEAR(two.i_dc, 0, 1e-12);
    EXPECT_NEAR(two.slope, 2, 1e-12);
    const std::vector<double> same{1, 1, 1}, any{1, 2, 3};
    EXPECT_EQ(code_of([&] { calibrate_idc(same, any); }), Errc::singular);
}

TEST(CalibrateIdc, NoisyInterceptWithinThreeStandardErrors) {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> n(0, 0.4);
    int inside = 0;
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> c, m;
        for (int i = 1; i <= 10; ++i) {
            c.push_back(i * 50e-12);
            m.push_back(12.3 + 0.2e12 * c.back() + n(rng));
        }
        const auto cal = calibrate_idc(c, m);
        ASSERT_GT(cal.intercept_stderr, 0);
        inside += std::abs(cal.i_dc - 12.3) <= 3 * cal.intercept_stderr;
        EXPECT_EQ(cal.residuals.size(), 10u);
    }
    EXPECT_GE(inside, 48);
}

TEST(CrossModule, SimulatedSeSnrMatchesYieldFormula) {
    for (double dose : {100.0, 400.0}) {
        NoiseRecipe r;
        r.dose = fixtures::constant_dose(256, dose);
        r.model = EmissionModel::poisson_se;
        r.seed = 77;
        const auto s = stats(simulate(r).noisy);
        const double measured = s.mean / std::sqrt(s.variance);
        EXPECT_NEAR(measured / snr_yield(dose, Channel::se, 0.16), 1.0, 0.05) << dose;
    }
}

TEST(YieldCsv, RoundTripAndSchema) {
    const std::vector<YieldRow> rows{{"Au", 10, 0.16, 0.3, "measured"}, {"Si", 20.5, 0.1, 0.17, "user"}};
    std::stringstream ss;
    write_yield_csv(rows, ss);
    EXPECT_EQ(ss.str().rfind("# semsnr-csv v1\nmaterial,energy_keV,delta,eta,source\n", 0), 0u);
    const auto back = read_yield_csv(ss);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[1].material, "Si");
    EXPECT_DOUBLE_EQ(back[1].energy_kev, 20.5);
    EXPECT_DOUBLE_EQ(back[0].eta, 0.3);

    std::stringstream bad("# semsnr-csv v1\nmaterial,energy,delta,eta,source\nAu,10,0.1,0.2,x\n");
    EXPECT_EQ(code_of([&] { read_yield_csv(bad); }), Errc::parse);
    std::stringstream implausible("# semsnr-csv v1\nmaterial,energy_keV,delta,eta,source\nAu,10,-0.1,0.2,x\n");
    EXPECT_EQ(code_of([&] { read_yield_csv(implausible); }), Errc::parse);
}
