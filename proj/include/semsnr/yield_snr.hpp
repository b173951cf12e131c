#pragma once

#include <cmath>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "semsnr/csv.hpp"
#include "semsnr/error.hpp"
#include "semsnr/least_squares.hpp"
#include "semsnr/noise_synth.hpp"

namespace semsnr {

/// Specimen-current measurement with the holder biased positive and negative.
/// SE3 current is neglected (it is a few percent of SE1+SE2 at most).
struct YieldMeasurement {
    double i_pe = 0;      // [A]
    double i_sc_pos = 0;  // I_SC,+V [A]
    double i_sc_neg = 0;  // I_SC,-V [A]
};

struct Yields {
    double delta = 0;  // SE
    double eta = 0;    // BSE
};

inline Yields yields_from_currents(const YieldMeasurement& m) {
    require(m.i_pe > 0, Errc::inconsistent_currents, "primary current must be positive");
    if (m.i_sc_pos < m.i_sc_neg) fail(Errc::inconsistent_currents, "I_SC,+V below I_SC,-V");
    if (m.i_sc_pos > m.i_pe) fail(Errc::inconsistent_currents, "I_SC,+V exceeds I_PE");
    return {(m.i_sc_pos - m.i_sc_neg) / m.i_pe, (m.i_pe - m.i_sc_pos) / m.i_pe};
}

/// Inverse of yields_from_currents.
inline YieldMeasurement currents_from_yields(double i_pe, const Yields& y) {
    return {i_pe, i_pe * (1 - y.eta), i_pe * (1 - y.eta - y.delta)};
}

struct BeamParams {
    double i_pe = 0;     // [A]
    double dwell = 0;    // [s / pixel]
    double dqe = 1;      // (0, 1]
    double b_enhancement = 1;  // non-Poisson factor k, b = k / delta

    void validate() const {
        require(i_pe > 0 && dwell > 0, Errc::domain, "beam current and dwell must be positive");
        require(dqe > 0 && dqe <= 1, Errc::domain, "DQE must be in (0, 1]");
        require(b_enhancement >= 1, Errc::domain, "enhancement factor must be >= 1");
    }
};

/// Mean primary electrons per pixel, I_PE * tau / e.
inline double dose_per_pixel(const BeamParams& b) {
    b.validate();
    return b.i_pe * b.dwell / elementary_charge;
}

enum class Channel { pe, bse, se };

inline double snr_yield(double dose, Channel ch, double delta = 0, double eta = 0, double k = 1) {
    require(dose > 0, Errc::domain, "dose must be positive");
    switch (ch) {
    case Channel::pe: return std::sqrt(dose);
    case Channel::bse:
        require(eta > 0, Errc::domain, "BSE yield must be positive");
        return std::sqrt(dose * eta);
    case Channel::se:
        require(delta > 0, Errc::domain, "SE yield must be positive");
        require(k >= 1, Errc::domain, "enhancement factor must be >= 1");
        return std::sqrt(dose / (1 + k / delta));
    }
    fail(Errc::domain, "unknown channel");
}

inline double snr_yield(const BeamParams& b, Channel ch, double delta = 0, double eta = 0) {
    return snr_yield(dose_per_pixel(b), ch, delta, eta, b.b_enhancement);
}

/// Attenuation by the detector quantum efficiency: sqrt(DQE) * SNR.
inline double snr_detected(double snr, double dqe) {
    require(dqe > 0 && dqe <= 1, Errc::domain, "DQE must be in (0, 1]");
    return std::sqrt(dqe) * snr;
}

/// (I_mean - I_DC) / sigma.
inline double snr_from_image(double i_mean, double i_dc, double sigma) {
    if (!(sigma > 0)) fail(Errc::degenerate, "intensity standard deviation is zero");
    if (!(i_mean > i_dc)) fail(Errc::nonpositive_signal, "mean intensity at or below I_DC");
    return (i_mean - i_dc) / sigma;
}

struct IdcCalibration {
    double i_dc = 0;   // intercept
    double slope = 0;  // intensity per ampere
    double intercept_stderr = 0;
    std::vector<double> residuals;
};

/// Straight-line fit of mean intensity against beam current; the intercept
/// is the dark level I_DC.
inline IdcCalibration calibrate_idc(std::span<const double> currents, std::span<const double> means) {
    require(currents.size() == means.size(), Errc::domain, "current and intensity counts differ");
    require(currents.size() >= 2, Errc::singular, "need at least two calibration points");
    bool distinct = false;
    for (double c : currents) distinct |= c != currents[0];
    if (!distinct) fail(Errc::singular, "all calibration currents are identical");

    const auto line = fit_line(currents, means);
    IdcCalibration cal{line.intercept, line.slope, 0, line.residuals};
    const std::size_t n = currents.size();
    if (n > 2) {
        double sse = 0, mx = 0, sxx = 0;
        for (double r : line.residuals) sse += r * r;
        for (double c : currents) mx += c / double(n);
        for (double c : currents) sxx += (c - mx) * (c - mx);
        const double s2 = sse / double(n - 2);
        cal.intercept_stderr = std::sqrt(s2 * (1.0 / double(n) + mx * mx / sxx));
    }
    return cal;
}

// ---------------------------------------------------------------------------
// Yield tables: material, energy_keV, delta, eta, source

struct YieldRow {
    std::string material;
    double energy_kev = 0;
    double delta = 0;
    double eta = 0;
    std::string source;
};

inline const std::vector<std::string>& yield_csv_header() {
    static const std::vector<std::string> h{"material", "energy_keV", "delta", "eta", "source"};
    return h;
}

inline void write_yield_csv(std::span<const YieldRow> rows, std::ostream& os) {
    csv::Writer w(os, yield_csv_header());
    for (const auto& r : rows) w.row({r.material, csv::num(r.energy_kev), csv::num(r.delta), csv::num(r.eta), r.source});
}

inline std::vector<YieldRow> read_yield_csv(std::istream& in) {
    const auto t = csv::parse(in, "yield table");
    csv::expect_schema(t, yield_csv_header(), "yield table");
    std::vector<YieldRow> rows;
    for (const auto& f : t.rows) {
        YieldRow r{f[0], csv::parse_num(f[1]), csv::parse_num(f[2]), csv::parse_num(f[3]), f[4]};
        require(r.delta >= 0 && r.eta >= 0 && r.delta + r.eta <= 2, Errc::parse,
                "implausible yields for '" + r.material + "'");
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace semsnr
