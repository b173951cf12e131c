// semsnr: corpus generation, SNR estimation, sweeps and denoising from the
// command line. Exit codes: 0 ok, 2 config error, 3 data error, 4 internal.

#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "semsnr/bench/config.hpp"
#include "semsnr/bench/corpus.hpp"
#include "semsnr/bench/runs.hpp"

namespace {

using namespace semsnr;
using namespace semsnr::bench;

constexpr int exit_config = 2;
constexpr int exit_data = 3;
constexpr int exit_internal = 4;

const char* sweep_help =
    "Sweep one acquisition parameter and record every estimator per value.\n"
    "Synthetic stand-ins for instrument settings:\n"
    "  dose      mean primary electrons per pixel (beam current x dwell / e)\n"
    "  dwell     seconds per pixel at [sweep] beam_current; scan-rate analog\n"
    "  contrast  intensity scale applied to the acquisition (SNR invariant)\n"
    "  blur      probe sigma (features scenes) or correlation length (field)\n"
    "Writes sweep.csv, sweep_summary.csv and sweep.svg.";

struct Options {
    std::string config;
    std::string out = "out";
    std::string corpus;
    std::string methods;
    std::string results;
    std::string parameter;
    std::vector<double> values;
    std::vector<std::string> filters;
    std::uint64_t seed = 0;
    bool seed_set = false;
    unsigned jobs = 1;
};

std::vector<Method> resolve_methods(const Options& o, const std::vector<Method>& fallback) {
    if (o.methods.empty()) return fallback;
    try {
        return bench::detail::parse_methods(o.methods);
    } catch (const Error& e) {
        fail(Errc::config, "--methods: " + std::string(e.what()));
    }
}

BenchConfig config_or_default(const Options& o) {
    if (o.config.empty()) {
        BenchConfig cfg;
        cfg.corpus.recipes.push_back({});
        cfg.corpus.recipes.back().name = "default";
        return cfg;
    }
    auto cfg = load_config(o.config);
    if (o.seed_set) cfg.corpus.base_seed = o.seed;
    return cfg;
}

int cmd_generate(const Options& o) {
    if (o.config.empty()) fail(Errc::config, "generate needs --config");
    const auto cfg = config_or_default(o);
    const auto items = generate_corpus(cfg.corpus, o.out, o.jobs);
    std::cout << "wrote " << items.size() << " images to " << o.out << "\n";
    return 0;
}

int cmd_estimate(const Options& o) {
    if (o.corpus.empty()) fail(Errc::config, "estimate needs --corpus");
    const auto cfg = config_or_default(o);
    const auto methods = resolve_methods(o, cfg.estimate.methods);
    const auto corpus = load_manifest(o.corpus);
    const auto rows = run_estimates(corpus, methods, cfg.estimate.estimator, o.jobs);
    write_results(rows, o.out);
    std::cout << "method,n_ok,n_failed,median_abs_rel_error\n";
    for (const auto& s : summarize(rows))
        std::cout << s.method << ',' << s.n_ok << ',' << s.n_failed << ',' << csv::num6(s.median_abs_rel_error)
                  << "\n";
    return 0;
}

int cmd_sweep(const Options& o) {
    if (o.config.empty()) fail(Errc::config, "sweep needs --config");
    auto cfg = config_or_default(o);
    if (!o.parameter.empty()) {
        try {
            cfg.sweep.parameter = parse_sweep_parameter(o.parameter);
        } catch (const Error& e) {
            fail(Errc::config, "--parameter: " + std::string(e.what()));
        }
    }
    if (!o.values.empty()) cfg.sweep.values = o.values;
    cfg.sweep.methods = resolve_methods(o, cfg.sweep.methods);
    const auto rows = run_sweep(cfg, cfg.estimate.estimator, o.jobs);
    write_sweep(cfg, rows, o.out);
    std::cout << "wrote " << rows.size() << " sweep rows to " << o.out << "\n";
    return 0;
}

int cmd_denoise(const Options& o) {
    if (o.corpus.empty()) fail(Errc::config, "denoise needs --corpus");
    const auto cfg = config_or_default(o);
    auto filters = o.filters.empty() ? cfg.denoise.filters : o.filters;
    if (filters.empty()) fail(Errc::config, "no filters: pass --filter or set [denoise] filters");
    for (const auto& f : filters) {
        try {
            parse_filter_spec(f);
        } catch (const Error& e) {
            fail(Errc::config, "--filter '" + f + "': " + e.what());
        }
    }
    const auto corpus = load_manifest(o.corpus);
    const auto rows = run_denoise(corpus, filters, cfg.denoise.snr_method, cfg.estimate.estimator, o.out, o.jobs);
    write_denoise(rows, o.out);
    std::cout << "wrote " << rows.size() << " rows to " << (fs::path(o.out) / "report.csv").string() << "\n";
    return 0;
}

int cmd_report(const Options& o) {
    if (o.results.empty()) fail(Errc::config, "report needs --results");
    const auto summary = run_report(o.results, o.out);
    std::cout << "method,n_images,n_ok,n_failed,median_abs_rel_error,median_rel_error\n";
    for (const auto& s : summary)
        std::cout << s.method << ',' << s.n_images << ',' << s.n_ok << ',' << s.n_failed << ','
                  << csv::num6(s.median_abs_rel_error) << ',' << csv::num6(s.median_rel_error) << "\n";
    return 0;
}

int exit_code_for(Errc c) {
    switch (c) {
    case Errc::config: return exit_config;
    default: return exit_data;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SEM image SNR toolkit: oracle corpora, estimators, sweeps and denoising"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--out", o.out, "Output directory")->capture_default_str();
        sub->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::Range(1u, 256u))->capture_default_str();
    };
    auto add_config = [&](CLI::App* sub, bool required) {
        auto* opt = sub->add_option("--config", o.config, "INI configuration file");
        if (required) opt->required();
    };
    auto add_seed = [&](CLI::App* sub) {
        sub->add_option_function<std::uint64_t>(
            "--seed", [&](std::uint64_t s) { o.seed = s, o.seed_set = true; }, "Override [corpus] base_seed");
    };

    auto* gen = app.add_subcommand("generate", "Write an oracle corpus (PGM pairs, truth.csv, manifest.csv)");
    add_config(gen, true);
    add_common(gen);
    add_seed(gen);

    auto* est = app.add_subcommand("estimate", "Run estimators over a corpus; writes results.csv");
    est->add_option("--corpus", o.corpus, "Corpus directory")->required();
    add_config(est, false);
    add_common(est);
    est->add_option("--methods", o.methods,
                    "Comma list of methods, or all|single (7 single-image), two, every");

    auto* sw = app.add_subcommand("sweep", "Parameter sweep");
    sw->footer(sweep_help);
    add_config(sw, true);
    add_common(sw);
    add_seed(sw);
    sw->add_option("--parameter", o.parameter, "dose|dwell|contrast|blur (overrides config)");
    sw->add_option("--values", o.values, "Sweep values (overrides config)")->delimiter(',');
    sw->add_option("--methods", o.methods, "Estimators to run");

    auto* dn = app.add_subcommand("denoise", "Filter a corpus; writes report.csv and filtered images");
    dn->add_option("--corpus", o.corpus, "Corpus directory")->required();
    add_config(dn, false);
    add_common(dn);
    dn->add_option("--filter", o.filters,
                   "Filter spec kind:key=value,...; kinds gaussian(sigma,radius) median(window) "
                   "bilateral(sigma_s,sigma_r) wiener_global(noise_var) wiener_local(window,noise_var) "
                   "ar_wiener(order,window); noise_var may be 'oracle'. Repeatable.");

    auto* rep = app.add_subcommand("report", "Summarise a results.csv; writes summary.csv and report.svg");
    rep->add_option("--results", o.results, "results.csv from estimate")->required();
    add_common(rep);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_config;
    }

    try {
        if (*gen) return cmd_generate(o);
        if (*est) return cmd_estimate(o);
        if (*sw) return cmd_sweep(o);
        if (*dn) return cmd_denoise(o);
        if (*rep) return cmd_report(o);
    } catch (const Error& e) {
        std::cerr << "semsnr: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "semsnr: internal error: " << e.what() << "\n";
        return exit_internal;
    }
    return exit_internal;
}
