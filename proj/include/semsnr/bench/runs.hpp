#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "semsnr/bench/config.hpp"
#include "semsnr/bench/corpus.hpp"
#include "semsnr/bench/svg.hpp"
#include "semsnr/csv.hpp"
#include "semsnr/denoise.hpp"
#include "semsnr/estimators.hpp"
#include "semsnr/yield_snr.hpp"

namespace semsnr::bench {

inline double median(std::vector<double> v) {
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline double relative_error(double estimate, double oracle) { return (estimate - oracle) / oracle; }

// ---------------------------------------------------------------------------
// estimate

inline const std::vector<std::string>& results_header() {
    static const std::vector<std::string> h{"image_id", "oracle_snr", "method",   "status",
                                            "snr_linear", "snr_db",   "predicted_nf_peak", "rel_error",
                                            "runtime_ms"};
    return h;
}

inline const std::vector<std::string>& summary_header() {
    static const std::vector<std::string> h{"method", "n_images", "n_ok", "n_failed", "median_abs_rel_error",
                                            "median_rel_error"};
    return h;
}

struct ResultRow {
    std::string image_id;
    std::string oracle_text;
    double oracle = 0;
    SnrEstimate estimate;
    double runtime_ms = 0;

    double rel_error() const {
        return estimate.status == Status::ok || estimate.status == Status::infinite
                   ? relative_error(estimate.snr_linear, oracle)
                   : std::nan("");
    }
};

/// Rows ordered by manifest entry, then by the order of `methods`.
inline std::vector<ResultRow> run_estimates(const std::vector<ManifestEntry>& corpus, const std::vector<Method>& methods,
                                            const EstimatorConfig& cfg, unsigned jobs = 1) {
    std::vector<ResultRow> rows(corpus.size() * methods.size());
    parallel_for(corpus.size(), jobs, [&](std::size_t i) {
        const auto& e = corpus[i];
        const Raster img = load_pgm((e.dir / "noisy.pgm").string());
        std::optional<Raster> second;
        if (e.acquisitions == 2) second = load_pgm((e.dir / "noisy_b.pgm").string());
        for (std::size_t m = 0; m < methods.size(); ++m) {
            auto& row = rows[i * methods.size() + m];
            row.image_id = e.image_id;
            row.oracle_text = e.true_snr_text;
            row.oracle = e.true_snr;
            const auto t0 = std::chrono::steady_clock::now();
            row.estimate = estimate(methods[m], img, cfg, second ? &*second : nullptr);
            row.runtime_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        }
    });
    return rows;
}

struct MethodSummary {
    std::string method;
    std::size_t n_images = 0;
    std::size_t n_ok = 0;
    std::size_t n_failed = 0;
    double median_abs_rel_error = std::nan("");
    double median_rel_error = std::nan("");
};

/// (method, status, rel_error) triples in first-seen method order.
inline std::vector<MethodSummary> summarize(
    const std::vector<std::tuple<std::string, std::string, double>>& entries) {
    std::vector<MethodSummary> out;
    std::map<std::string, std::size_t> index;
    std::vector<std::vector<double>> errs;
    for (const auto& [method, status, rel] : entries) {
        auto [it, added] = index.emplace(method, out.size());
        if (added) {
            out.push_back({method});
            errs.emplace_back();
        }
        auto& s = out[it->second];
        ++s.n_images;
        if (status == "ok") {
            ++s.n_ok;
            errs[it->second].push_back(rel);
        } else if (status != "not_applicable" && status != "infinite") {
            ++s.n_failed;
        }
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::vector<double> abs_err;
        for (double e : errs[i]) abs_err.push_back(std::abs(e));
        out[i].median_abs_rel_error = median(abs_err);
        out[i].median_rel_error = median(errs[i]);
    }
    return out;
}

inline std::vector<MethodSummary> summarize(const std::vector<ResultRow>& rows) {
    std::vector<std::tuple<std::string, std::string, double>> entries;
    for (const auto& r : rows)
        entries.emplace_back(std::string(to_string(r.estimate.method)), r.estimate.status_name(), r.rel_error());
    return summarize(entries);
}

inline void write_summary(const std::vector<MethodSummary>& summary, const fs::path& path) {
    auto out = open_out(path);
    csv::Writer w(out, summary_header());
    for (const auto& s : summary)
        w.row({s.method, std::to_string(s.n_images), std::to_string(s.n_ok), std::to_string(s.n_failed),
               csv::num(s.median_abs_rel_error), csv::num(s.median_rel_error)});
}

inline std::string optional_num(const std::optional<double>& v) { return v ? csv::num(*v) : "nan"; }

/// Writes results.csv, diagnostics.jsonl and summary.csv into `out`.
inline void write_results(const std::vector<ResultRow>& rows, const fs::path& out) {
    ensure_dir(out);
    {
        auto f = open_out(out / "results.csv");
        csv::Writer w(f, results_header());
        for (const auto& r : rows) {
            const auto& e = r.estimate;
            w.row({r.image_id, r.oracle_text, std::string(to_string(e.method)), e.status_name(),
                   csv::num(e.snr_linear), csv::num(e.snr_db), optional_num(e.predicted_nf_peak),
                   csv::num(r.rel_error()), csv::num(std::round(r.runtime_ms * 1000) / 1000)});
        }
    }
    {
        auto f = open_out(out / "diagnostics.jsonl");
        for (const auto& r : rows) {
            nlohmann::ordered_json j;
            j["image_id"] = r.image_id;
            j["method"] = std::string(to_string(r.estimate.method));
            j["status"] = r.estimate.status_name();
            if (!r.estimate.message.empty()) j["message"] = r.estimate.message;
            nlohmann::ordered_json d = nlohmann::ordered_json::object();
            for (const auto& [k, v] : r.estimate.diagnostics) {
                auto arr = nlohmann::ordered_json::array();
                for (double x : v) arr.push_back(std::isfinite(x) ? nlohmann::ordered_json(x) : nlohmann::ordered_json(csv::num(x)));
                d[k] = arr;
            }
            j["diagnostics"] = d;
            f << j.dump() << '\n';
        }
    }
    write_summary(summarize(rows), out / "summary.csv");
}

// ---------------------------------------------------------------------------
// report

/// Re-derives summary.csv and an estimate-vs-oracle chart from results.csv.
inline std::vector<MethodSummary> run_report(const fs::path& results_csv, const fs::path& out) {
    const auto t = csv::read(results_csv.string());
    csv::expect_schema(t, results_header(), results_csv.string());
    std::vector<std::tuple<std::string, std::string, double>> entries;
    std::map<std::string, Series> scatter;
    std::vector<std::string> order;
    for (const auto& row : t.rows) {
        const double oracle = csv::parse_num(row[1]);
        const double est = csv::parse_num(row[4]);
        entries.emplace_back(row[2], row[3], csv::parse_num(row[7]));
        if (!scatter.count(row[2])) order.push_back(row[2]);
        auto& s = scatter[row[2]];
        s.label = row[2];
        s.markers_only = true;
        if (row[3] == "ok") {
            s.x.push_back(oracle);
            s.y.push_back(est);
        }
    }
    const auto summary = summarize(entries);
    ensure_dir(out);
    write_summary(summary, out / "summary.csv");
    std::vector<Series> series;
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& name : order) {
        series.push_back(scatter[name]);
        for (double x : scatter[name].x)
            if (x > 0 && std::isfinite(x)) lo = std::min(lo, x), hi = std::max(hi, x);
    }
    if (std::isfinite(lo)) series.push_back({"ideal", {lo, hi}, {lo, hi}, false});
    auto svg = open_out(out / "report.svg");
    write_svg_chart(svg, series, {"Estimated vs oracle SNR", "oracle SNR", "estimated SNR", true, true});
    return summary;
}

// ---------------------------------------------------------------------------
// sweep

inline const std::vector<std::string>& sweep_header() {
    static const std::vector<std::string> h{"parameter", "value",  "seed",  "method",
                                            "status",    "snr_linear", "snr_db", "oracle_snr"};
    return h;
}

inline const std::vector<std::string>& sweep_summary_header() {
    static const std::vector<std::string> h{"parameter", "value", "method", "n_ok", "median_snr", "median_oracle_snr"};
    return h;
}

/// Pseudo-method: (mean - I_DC) / std of a featureless acquisition at the
/// same dose. Its oracle is the dose-limited yield SNR.
inline constexpr std::string_view flat_method = "flat_mean_std";

struct SweepRow {
    double value = 0;
    std::uint64_t seed = 0;
    std::string method;
    std::string status;
    double snr = std::nan("");
    double oracle = std::nan("");
};

/// Shot-noise-limited SNR of a flat field under `t` at mean dose `dose`.
inline double flat_oracle(const RecipeTemplate& t, double dose) {
    switch (t.model) {
    case EmissionModel::poisson_pe: return snr_yield(dose, Channel::pe);
    case EmissionModel::poisson_se: return snr_yield(dose, Channel::se, t.se_yield, 0, t.variance_inflation);
    case EmissionModel::binomial_bse: return snr_yield(dose, Channel::bse, 0, t.bse_yield);
    case EmissionModel::additive_gaussian:
        return t.gaussian_sigma > 0 ? t.gain * dose / t.gaussian_sigma : INFINITY;
    case EmissionModel::none: return INFINITY;
    }
    return std::nan("");
}

inline void check_range(const std::vector<double>& v) {
    require(!v.empty(), Errc::domain, "sweep range is empty");
    if (v.size() < 2) return;
    const bool up = v[1] > v[0];
    for (std::size_t i = 1; i < v.size(); ++i)
        require(up ? v[i] > v[i - 1] : v[i] < v[i - 1], Errc::domain, "sweep range must be strictly monotone");
}

/// Synthetic analogs of instrument sweeps: dose (electrons per pixel),
/// dwell (seconds per pixel at the configured beam current), contrast
/// (intensity scale applied to the acquisition), blur (probe or correlation
/// length in pixels).
inline std::vector<SweepRow> run_sweep(const BenchConfig& cfg, const EstimatorConfig& est, unsigned jobs = 1) {
    const auto& sw = cfg.sweep;
    check_range(sw.values);
    const RecipeTemplate& base = sw.recipe.empty() ? cfg.corpus.recipes.front() : cfg.recipe(sw.recipe);
    for (double v : sw.values)
        require(v > 0, Errc::domain, "sweep values must be positive");

    const std::size_t n = sw.values.size() * sw.seeds.size();
    const std::size_t per = sw.methods.size() + 1;
    std::vector<SweepRow> rows(n * per);
    parallel_for(n, jobs, [&](std::size_t i) {
        const std::size_t vi = i / sw.seeds.size();
        const double value = sw.values[vi];
        const std::uint64_t seed = sw.seeds[i % sw.seeds.size()];
        RecipeTemplate t = base;
        double scale = 1.0;
        switch (sw.parameter) {
        case SweepParameter::dose: t.base_dose = value; break;
        case SweepParameter::dwell: t.base_dose = sw.beam_current * value / elementary_charge; break;
        case SweepParameter::contrast: scale = value; break;
        case SweepParameter::blur:
            if (t.scene.kind == SceneKind::field) t.scene.correlation_length = value;
            else t.scene.probe_sigma = value;
            break;
        }
        const std::uint64_t scene_seed = stream_seed(stream_seed(cfg.corpus.base_seed, "sweep:" + t.name), seed);
        // Same noise stream at every value of a seed, so contrast changes only the scale.
        const std::uint64_t noise_seed = stream_seed(scene_seed, "noise");

        auto truth = simulate(recipe_for(t, dose_map(t, cfg.corpus.width, cfg.corpus.height, scene_seed),
                                         stream_seed(noise_seed, 0)));
        const Raster img = scaled(truth.noisy, scale);
        for (std::size_t m = 0; m < sw.methods.size(); ++m) {
            const auto e = estimate(sw.methods[m], img, est);
            rows[i * per + m] = {value, seed, std::string(to_string(sw.methods[m])), e.status_name(), e.snr_linear,
                                 truth.true_snr};
        }

        const Raster flat_dose(cfg.corpus.width, cfg.corpus.height, t.bit_depth, t.base_dose);
        const auto flat = simulate(recipe_for(t, flat_dose, stream_seed(noise_seed, 1)));
        const auto st = stats(scaled(flat.noisy, scale));
        SweepRow fr{value, seed, std::string(flat_method), "ok", std::nan(""), flat_oracle(t, t.base_dose)};
        try {
            fr.snr = snr_from_image(st.mean, scale * t.dc_offset, std::sqrt(st.variance));
        } catch (const Error& e) {
            fr.status = std::string(to_string(e.code()));
        }
        rows[i * per + sw.methods.size()] = fr;
    });
    return rows;
}

struct SweepPoint {
    double value = 0;
    std::string method;
    std::size_t n_ok = 0;
    double median_snr = std::nan("");
    double median_oracle = std::nan("");
};

inline std::vector<SweepPoint> summarize_sweep(const std::vector<SweepRow>& rows) {
    std::vector<SweepPoint> out;
    std::map<std::pair<double, std::string>, std::size_t> index;
    std::vector<std::vector<double>> snr, oracle;
    for (const auto& r : rows) {
        auto [it, added] = index.emplace(std::make_pair(r.value, r.method), out.size());
        if (added) {
            out.push_back({r.value, r.method});
            snr.emplace_back();
            oracle.emplace_back();
        }
        if (r.status == "ok") {
            ++out[it->second].n_ok;
            snr[it->second].push_back(r.snr);
        }
        oracle[it->second].push_back(r.oracle);
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].median_snr = median(snr[i]);
        out[i].median_oracle = median(oracle[i]);
    }
    return out;
}

inline void write_sweep(const BenchConfig& cfg, const std::vector<SweepRow>& rows, const fs::path& out) {
    ensure_dir(out);
    const std::string param(to_string(cfg.sweep.parameter));
    {
        auto f = open_out(out / "sweep.csv");
        csv::Writer w(f, sweep_header());
        for (const auto& r : rows)
            w.row({param, csv::num(r.value), std::to_string(r.seed), r.method, r.status, csv::num(r.snr),
                   r.status == "ok" ? csv::num(to_db(r.snr)) : "nan", csv::num(r.oracle)});
    }
    const auto points = summarize_sweep(rows);
    {
        auto f = open_out(out / "sweep_summary.csv");
        csv::Writer w(f, sweep_summary_header());
        for (const auto& p : points)
            w.row({param, csv::num(p.value), p.method, std::to_string(p.n_ok), csv::num(p.median_snr),
                   csv::num(p.median_oracle)});
    }
    std::vector<Series> series;
    std::map<std::string, std::size_t> idx;
    Series oracle{"oracle", {}, {}, false};
    for (const auto& p : points) {
        auto [it, added] = idx.emplace(p.method, series.size());
        if (added) series.push_back({p.method, {}, {}, false});
        series[it->second].x.push_back(p.value);
        series[it->second].y.push_back(p.median_snr);
        if (p.method == series.front().label) {
            oracle.x.push_back(p.value);
            oracle.y.push_back(p.median_oracle);
        }
    }
    series.push_back(oracle);
    auto svg = open_out(out / "sweep.svg");
    write_svg_chart(svg, series, {"SNR sweep over " + param, param, "median SNR", true, true});
}

// ---------------------------------------------------------------------------
// denoise

inline const std::vector<std::string>& denoise_header() {
    static const std::vector<std::string> h{"image_id", "filter", "mse_noisy", "mse_filtered",
                                            "psnr_noisy_db", "psnr_db", "estimated_noise_variance",
                                            "snr_before", "snr_after"};
    return h;
}

inline const std::vector<std::string>& denoise_summary_header() {
    static const std::vector<std::string> h{"filter", "n_images", "n_improved", "mean_mse_noisy",
                                            "mean_mse_filtered", "mean_psnr_db"};
    return h;
}

inline std::string filter_slug(const std::string& spec) {
    std::string s = spec;
    for (char& c : s)
        if (c == ':' || c == ',' || c == '/' || c == ' ') c = '_';
        else if (c == '=') c = '-';
    return s;
}

struct DenoiseRow {
    std::string image_id;
    std::string filter;
    double mse_noisy = 0;
    double mse_filtered = 0;
    double psnr_noisy = 0;
    double psnr = 0;
    std::optional<double> estimated_variance;
    double snr_before = std::nan("");
    double snr_after = std::nan("");
};

/// Filters every corpus image with every spec; the reference is clean.pgm.
/// Filtered images go to <out>/filtered/<filter slug>/<image_id>.pgm.
inline std::vector<DenoiseRow> run_denoise(const std::vector<ManifestEntry>& corpus,
                                           const std::vector<std::string>& filters, Method snr_method,
                                           const EstimatorConfig& est, const fs::path& out, unsigned jobs = 1) {
    require(!filters.empty(), Errc::config, "no filters given");
    std::vector<FilterSpec> specs;
    for (const auto& f : filters) specs.push_back(parse_filter_spec(f));
    for (const auto& f : filters) ensure_dir(out / "filtered" / filter_slug(f));
    std::vector<DenoiseRow> rows(corpus.size() * filters.size());
    parallel_for(corpus.size(), jobs, [&](std::size_t i) {
        const auto& e = corpus[i];
        const Raster noisy = load_pgm((e.dir / "noisy.pgm").string());
        const Raster clean = load_pgm((e.dir / "clean.pgm").string());
        const auto before = estimate(snr_method, noisy, est);
        const double mse_noisy = mse(noisy, clean);
        for (std::size_t f = 0; f < specs.size(); ++f) {
            FilterSpec spec = specs[f];
            if (spec.noise_from_oracle) spec.noise_variance = e.noise_energy;
            const auto rep = apply_filter(noisy, spec, &clean);
            save_pgm(rep.output, (out / "filtered" / filter_slug(filters[f]) / (e.image_id + ".pgm")).string());
            const auto after = estimate(snr_method, rep.output, est);
            rows[i * specs.size() + f] = {e.image_id,
                                          filters[f],
                                          mse_noisy,
                                          *rep.mse_vs_reference,
                                          psnr_db(mse_noisy, clean.bit_depth()),
                                          *rep.psnr_db,
                                          rep.estimated_noise_variance,
                                          before.ok() ? before.snr_linear : std::nan(""),
                                          after.ok() ? after.snr_linear : std::nan("")};
        }
    });
    return rows;
}

inline void write_denoise(const std::vector<DenoiseRow>& rows, const fs::path& out) {
    ensure_dir(out);
    {
        auto f = open_out(out / "report.csv");
        csv::Writer w(f, denoise_header());
        for (const auto& r : rows)
            w.row({r.image_id, r.filter, csv::num(r.mse_noisy), csv::num(r.mse_filtered), csv::num(r.psnr_noisy),
                   csv::num(r.psnr), optional_num(r.estimated_variance), csv::num(r.snr_before),
                   csv::num(r.snr_after)});
    }
    std::vector<std::string> order;
    std::map<std::string, std::vector<const DenoiseRow*>> by_filter;
    for (const auto& r : rows) {
        if (!by_filter.count(r.filter)) order.push_back(r.filter);
        by_filter[r.filter].push_back(&r);
    }
    auto f = open_out(out / "denoise_summary.csv");
    csv::Writer w(f, denoise_summary_header());
    for (const auto& name : order) {
        const auto& v = by_filter[name];
        double mn = 0, mf = 0, ps = 0;
        std::size_t improved = 0;
        for (const auto* r : v) {
            mn += r->mse_noisy;
            mf += r->mse_filtered;
            ps += r->psnr;
            improved += r->mse_filtered < r->mse_noisy;
        }
        const double k = double(v.size());
        w.row({name, std::to_string(v.size()), std::to_string(improved), csv::num(mn / k), csv::num(mf / k),
               csv::num(ps / k)});
    }
}

}  // namespace semsnr::bench
