#pragma once

#include <cstdint>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "semsnr/denoise.hpp"
#include "semsnr/error.hpp"
#include "semsnr/estimators.hpp"
#include "semsnr/noise_synth.hpp"

namespace semsnr::bench {

/// One [recipe.<name>] section: a scene plus an acquisition model.
struct RecipeTemplate {
    std::string name;
    SceneSpec scene;
    EmissionModel model = EmissionModel::poisson_se;
    double base_dose = 1000;  // mean primary electrons per pixel before SNR tuning
    double contrast = 0.3;
    double se_yield = 0.16;
    double bse_yield = 0.3;
    double variance_inflation = 1.0;
    double gain = 1.0;
    double dc_offset = 0.0;
    double gaussian_sigma = 0.0;
    int bit_depth = 16;
};

struct CorpusConfig {
    std::size_t width = 256;
    std::size_t height = 256;
    std::vector<std::uint64_t> seeds{1};
    /// Empty: every image keeps its recipe's native dose.
    std::vector<double> snr_targets;
    std::uint64_t base_seed = 1;
    int acquisitions = 1;
    std::vector<RecipeTemplate> recipes;
};

struct EstimateSettings {
    std::vector<Method> methods{single_image_methods.begin(), single_image_methods.end()};
    EstimatorConfig estimator;
};

enum class SweepParameter { dose, dwell, contrast, blur };

inline std::string_view to_string(SweepParameter p) {
    switch (p) {
    case SweepParameter::dose: return "dose";
    case SweepParameter::dwell: return "dwell";
    case SweepParameter::contrast: return "contrast";
    case SweepParameter::blur: return "blur";
    }
    return "?";
}

inline SweepParameter parse_sweep_parameter(std::string_view s) {
    if (s == "dose") return SweepParameter::dose;
    if (s == "dwell") return SweepParameter::dwell;
    if (s == "contrast") return SweepParameter::contrast;
    if (s == "blur") return SweepParameter::blur;
    fail(Errc::config, "sweep.parameter: unknown parameter '" + std::string(s) + "'");
}

struct SweepSettings {
    SweepParameter parameter = SweepParameter::dose;
    std::vector<double> values;
    std::string recipe;  // empty: first recipe
    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::vector<Method> methods{single_image_methods.begin(), single_image_methods.end()};
    double beam_current = 100e-12;  // dwell sweeps [A]
};

struct DenoiseSettings {
    std::vector<std::string> filters;
    Method snr_method = Method::nn;
};

struct BenchConfig {
    CorpusConfig corpus;
    EstimateSettings estimate;
    SweepSettings sweep;
    DenoiseSettings denoise;

    const RecipeTemplate& recipe(const std::string& name) const {
        for (const auto& r : corpus.recipes)
            if (r.name == name) return r;
        fail(Errc::config, "no recipe named '" + name + "'");
    }
};

namespace detail {

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

inline std::vector<std::string> list(const std::string& text, char sep = ',') {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

class Section {
public:
    Section(std::string name, const boost::property_tree::ptree& tree) : name_(std::move(name)), tree_(tree) {}

    bool has(const std::string& key) {
        seen_.insert(key);
        return tree_.find(key) != tree_.not_found();
    }

    std::string text(const std::string& key) { return trim(tree_.get<std::string>(key)); }

    double number(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        return to_number(key, text(key));
    }

    std::uint64_t count(const std::string& key, std::uint64_t fallback) {
        if (!has(key)) return fallback;
        return to_count(key, text(key));
    }

    std::string string(const std::string& key, const std::string& fallback) {
        return has(key) ? text(key) : fallback;
    }

    std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
        if (!has(key)) return fallback;
        std::vector<double> out;
        for (const auto& item : list(text(key))) out.push_back(to_number(key, item));
        return out;
    }

    std::vector<std::uint64_t> counts(const std::string& key, std::vector<std::uint64_t> fallback) {
        if (!has(key)) return fallback;
        std::vector<std::uint64_t> out;
        for (const auto& item : list(text(key))) out.push_back(to_count(key, item));
        return out;
    }

    [[noreturn]] void bad(const std::string& key, const std::string& why) const {
        fail(Errc::config, name_ + "." + key + ": " + why);
    }

    /// Rejects keys that no accessor asked for.
    void finish() const {
        for (const auto& [key, child] : tree_) {
            if (!child.empty()) fail(Errc::config, name_ + "." + key + ": nested values are not supported");
            if (!seen_.count(key)) fail(Errc::config, name_ + "." + key + ": unknown key");
        }
    }

private:
    double to_number(const std::string& key, const std::string& v) const {
        try {
            std::size_t used = 0;
            const double d = std::stod(v, &used);
            if (used == v.size() && std::isfinite(d)) return d;
        } catch (const std::exception&) {
        }
        bad(key, "expected a number, got '" + v + "'");
    }

    std::uint64_t to_count(const std::string& key, const std::string& v) const {
        try {
            std::size_t used = 0;
            const auto n = std::stoull(v, &used);
            if (used == v.size() && v[0] != '-') return n;
        } catch (const std::exception&) {
        }
        bad(key, "expected a nonnegative integer, got '" + v + "'");
    }

    std::string name_;
    const boost::property_tree::ptree& tree_;
    std::set<std::string> seen_;
};

/// Runs `parse` and rewrites library errors so they name the offending key.
template <class F>
auto keyed(Section& s, const std::string& key, F&& parse) {
    try {
        return parse(s.text(key));
    } catch (const Error& e) {
        s.bad(key, e.what());
    }
}

inline std::vector<Method> parse_methods(const std::string& text) {
    if (text == "all" || text == "single")
        return {single_image_methods.begin(), single_image_methods.end()};
    if (text == "two") return {Method::frank_alali, Method::smart};
    if (text == "every") return {all_methods.begin(), all_methods.end()};
    std::vector<Method> out;
    for (const auto& item : list(text)) out.push_back(parse_method(item));
    if (out.empty()) fail(Errc::config, "empty method list");
    return out;
}

inline RecipeTemplate parse_recipe(const std::string& name, Section& s) {
    RecipeTemplate r;
    r.name = name;
    if (s.has("scene")) r.scene.kind = keyed(s, "scene", [](const std::string& v) { return parse_scene_kind(v); });
    if (s.has("model"))
        r.model = keyed(s, "model", [](const std::string& v) { return parse_emission_model(v); });
    r.scene.correlation_length = s.number("correlation_length", r.scene.correlation_length);
    r.scene.feature_min_radius = s.number("feature_min_radius", r.scene.feature_min_radius);
    r.scene.feature_max_radius = s.number("feature_max_radius", r.scene.feature_max_radius);
    r.scene.probe_sigma = s.number("probe_sigma", r.scene.probe_sigma);
    r.base_dose = s.number("base_dose", r.base_dose);
    r.contrast = s.number("contrast", r.contrast);
    r.se_yield = s.number("se_yield", r.se_yield);
    r.bse_yield = s.number("bse_yield", r.bse_yield);
    r.variance_inflation = s.number("variance_inflation", r.variance_inflation);
    r.gain = s.number("gain", r.gain);
    r.dc_offset = s.number("dc_offset", r.dc_offset);
    r.gaussian_sigma = s.number("gaussian_sigma", r.gaussian_sigma);
    r.bit_depth = int(s.count("bit_depth", 16));
    if (r.bit_depth != 8 && r.bit_depth != 16) s.bad("bit_depth", "must be 8 or 16");
    if (!(r.base_dose > 0)) s.bad("base_dose", "must be positive");
    if (r.contrast < 0) s.bad("contrast", "must be nonnegative");
    if (!(r.scene.correlation_length > 0)) s.bad("correlation_length", "must be positive");
    if (r.scene.probe_sigma < 0) s.bad("probe_sigma", "must be nonnegative");
    if (!(r.scene.feature_min_radius > 0 && r.scene.feature_min_radius <= r.scene.feature_max_radius))
        s.bad("feature_min_radius", "radii must satisfy 0 < min <= max");
    if (!(r.gain > 0)) s.bad("gain", "must be positive");
    s.finish();
    return r;
}

}  // namespace detail

/// Sections: [corpus], [recipe.<name>] (one or more), optional [estimate],
/// [sweep], [denoise]. Lists are comma separated except denoise.filters,
/// which uses ';' because filter specs contain commas.
inline BenchConfig parse_config(std::istream& in, const std::string& what = "config") {
    namespace pt = boost::property_tree;
    const std::string text{std::istreambuf_iterator<char>(in), {}};
    pt::ptree tree;
    try {
        std::istringstream body(text);
        pt::read_ini(body, tree);
    } catch (const pt::ini_parser_error& e) {
        fail(Errc::config, what + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    for (const auto& [name, body] : tree)
        if (body.empty() && !body.data().empty()) fail(Errc::config, name + ": key outside of any section");

    // read_ini drops sections without keys, so take the section order from the text.
    std::vector<std::string> sections;
    {
        std::istringstream lines(text);
        for (std::string line; std::getline(lines, line);) {
            line = detail::trim(line);
            if (line.size() > 2 && line.front() == '[' && line.back() == ']')
                sections.push_back(detail::trim(line.substr(1, line.size() - 2)));
        }
    }
    const pt::ptree empty;

    BenchConfig cfg;
    bool have_corpus = false;
    for (const auto& name : sections) {
        const auto found = tree.find(name);
        const pt::ptree& body = found == tree.not_found() ? empty : found->second;
        detail::Section s(name, body);
        if (name == "corpus") {
            have_corpus = true;
            auto& c = cfg.corpus;
            c.width = s.count("width", c.width);
            c.height = s.count("height", c.height);
            c.seeds = s.counts("seeds", c.seeds);
            c.snr_targets = s.numbers("snr_targets", c.snr_targets);
            c.base_seed = s.count("base_seed", c.base_seed);
            c.acquisitions = int(s.count("acquisitions", 1));
            if (c.width < 16 || c.height < 16) s.bad("width", "images must be at least 16x16");
            if (c.seeds.empty()) s.bad("seeds", "need at least one seed");
            for (double t : c.snr_targets)
                if (!(t > 0)) s.bad("snr_targets", "targets must be positive");
            if (c.acquisitions != 1 && c.acquisitions != 2) s.bad("acquisitions", "must be 1 or 2");
            s.finish();
        } else if (name.rfind("recipe.", 0) == 0) {
            const std::string rname = name.substr(7);
            if (rname.empty() || rname.find_first_of(",/ ") != std::string::npos)
                fail(Errc::config, name + ": recipe names must be nonempty without ',', '/' or spaces");
            for (const auto& r : cfg.corpus.recipes)
                if (r.name == rname) fail(Errc::config, name + ": duplicate recipe");
            cfg.corpus.recipes.push_back(detail::parse_recipe(rname, s));
        } else if (name == "estimate") {
            auto& e = cfg.estimate;
            auto& est = e.estimator;
            if (s.has("methods")) e.methods = detail::keyed(s, "methods", detail::parse_methods);
            est.n_points = s.count("n_points", est.n_points);
            est.lag_start = s.count("lag_start", est.lag_start);
            est.nllsr_lag_start = s.count("nllsr_lag_start", est.nllsr_lag_start);
            est.acldr_order = s.count("acldr_order", est.acldr_order);
            est.acldr_min_reflection = s.number("acldr_min_reflection", est.acldr_min_reflection);
            if (s.has("epsilon_policy")) {
                const auto v = s.text("epsilon_policy");
                if (v == "half_gap") est.epsilon_policy = EpsilonPolicy::half_gap;
                else if (v == "zero") est.epsilon_policy = EpsilonPolicy::zero;
                else s.bad("epsilon_policy", "expected 'half_gap' or 'zero'");
            }
            est.asnn_slope = s.number("asnn_slope", est.asnn_slope);
            est.asnn_intercept = s.number("asnn_intercept", est.asnn_intercept);
            est.chillsr_correction.alpha = s.number("chillsr_alpha", est.chillsr_correction.alpha);
            est.chillsr_correction.beta = s.number("chillsr_beta", est.chillsr_correction.beta);
            est.chillsr_correction.gamma = s.number("chillsr_gamma", est.chillsr_correction.gamma);
            if (s.has("axis")) {
                const auto v = s.text("axis");
                if (v == "x") est.axis = Axis::x;
                else if (v == "y") est.axis = Axis::y;
                else if (v == "radial") est.axis = Axis::radial;
                else s.bad("axis", "expected x, y or radial");
            }
            est.smart_shift = s.count("smart_shift", est.smart_shift);
            est.smart_roi = s.count("smart_roi", est.smart_roi);
            try {
                est.validate();
            } catch (const Error& err) {
                fail(Errc::config, "estimate: " + std::string(err.what()));
            }
            s.finish();
        } else if (name == "sweep") {
            auto& w = cfg.sweep;
            if (s.has("parameter"))
                w.parameter = detail::keyed(s, "parameter", [](const std::string& v) { return parse_sweep_parameter(v); });
            w.values = s.numbers("values", w.values);
            w.recipe = s.string("recipe", w.recipe);
            w.seeds = s.counts("seeds", w.seeds);
            if (s.has("methods")) w.methods = detail::keyed(s, "methods", detail::parse_methods);
            w.beam_current = s.number("beam_current", w.beam_current);
            if (w.seeds.empty()) s.bad("seeds", "need at least one seed");
            if (!(w.beam_current > 0)) s.bad("beam_current", "must be positive");
            s.finish();
        } else if (name == "denoise") {
            auto& d = cfg.denoise;
            if (s.has("filters")) {
                d.filters = detail::list(s.text("filters"), ';');
                for (const auto& f : d.filters) detail::keyed(s, "filters", [&](const std::string&) {
                    return parse_filter_spec(f);
                });
            }
            if (s.has("snr_method"))
                d.snr_method = detail::keyed(s, "snr_method", [](const std::string& v) { return parse_method(v); });
            s.finish();
        } else {
            fail(Errc::config, name + ": unknown section");
        }
    }
    if (!have_corpus) fail(Errc::config, what + ": missing [corpus] section");
    if (cfg.corpus.recipes.empty()) fail(Errc::config, what + ": need at least one [recipe.<name>] section");
    if (!cfg.sweep.recipe.empty()) cfg.recipe(cfg.sweep.recipe);
    return cfg;
}

inline BenchConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::config, "cannot open config '" + path + "'");
    return parse_config(in, path);
}

}  // namespace semsnr::bench
