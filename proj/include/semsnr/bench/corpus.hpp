#pragma once

#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "semsnr/bench/config.hpp"
#include "semsnr/csv.hpp"
#include "semsnr/noise_synth.hpp"
#include "semsnr/raster.hpp"

namespace semsnr::bench {

namespace fs = std::filesystem;

/// Calls fn(i) for i in [0, n) on up to `jobs` threads. The first exception
/// (lowest index) is rethrown after all workers finish.
template <class F>
void parallel_for(std::size_t n, unsigned jobs, F&& fn) {
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

struct CorpusItem {
    std::string image_id;
    std::size_t recipe = 0;
    std::optional<std::size_t> target;  // index into snr_targets
    std::uint64_t seed = 0;
};

inline std::string format_target(double t) {
    std::string s = csv::num6(t);
    for (char& c : s)
        if (c == '.') c = 'p';
    return s;
}

/// Fixed enumeration order: recipe, then SNR target, then seed.
inline std::vector<CorpusItem> enumerate_corpus(const CorpusConfig& c) {
    std::vector<CorpusItem> items;
    for (std::size_t r = 0; r < c.recipes.size(); ++r) {
        const std::size_t targets = std::max<std::size_t>(c.snr_targets.size(), 1);
        for (std::size_t t = 0; t < targets; ++t)
            for (std::uint64_t seed : c.seeds) {
                CorpusItem it;
                it.recipe = r;
                if (!c.snr_targets.empty()) it.target = t;
                it.seed = seed;
                it.image_id = c.recipes[r].name + "_snr" +
                              (it.target ? format_target(c.snr_targets[t]) : std::string("native")) + "_s" +
                              std::to_string(seed);
                items.push_back(std::move(it));
            }
    }
    return items;
}

struct ItemSeeds {
    std::uint64_t scene = 0;
    std::uint64_t noise = 0;
    std::uint64_t noise_b = 0;
};

inline ItemSeeds item_seeds(const CorpusConfig& c, const CorpusItem& it) {
    const auto& rec = c.recipes[it.recipe];
    const std::uint64_t scene = stream_seed(stream_seed(c.base_seed, rec.name), it.seed);
    const std::uint64_t noise = stream_seed(stream_seed(scene, "noise"), it.target ? *it.target : 0xffff);
    return {scene, stream_seed(noise, 0), stream_seed(noise, 1)};
}

inline NoiseRecipe recipe_for(const RecipeTemplate& t, const Raster& dose, std::uint64_t seed) {
    NoiseRecipe r;
    r.dose = dose;
    r.se_yield = t.se_yield;
    r.bse_yield = t.bse_yield;
    r.model = t.model;
    r.gaussian_sigma = t.gaussian_sigma;
    r.variance_inflation = t.variance_inflation;
    r.gain = t.gain;
    r.dc_offset = t.dc_offset;
    r.seed = seed;
    r.bit_depth = t.bit_depth;
    return r;
}

inline Raster dose_map(const RecipeTemplate& t, std::size_t width, std::size_t height, std::uint64_t scene_seed) {
    SceneSpec spec = t.scene;
    spec.width = width;
    spec.height = height;
    spec.seed = scene_seed;
    return dose_from_pattern(make_pattern(spec), t.base_dose, t.contrast);
}

struct GeneratedItem {
    CorpusItem item;
    ItemSeeds seeds;
    NoiseRecipe recipe;  // after SNR tuning
    GroundTruth truth;
    std::optional<Raster> second;
};

inline GeneratedItem generate_item(const CorpusConfig& c, const CorpusItem& it) {
    const auto& t = c.recipes[it.recipe];
    GeneratedItem g;
    g.item = it;
    g.seeds = item_seeds(c, it);
    g.recipe = recipe_for(t, dose_map(t, c.width, c.height, g.seeds.scene), g.seeds.noise);
    if (it.target) g.recipe = tune_to_snr(g.recipe, c.snr_targets[*it.target]);
    g.truth = simulate(g.recipe);
    if (c.acquisitions == 2) {
        NoiseRecipe b = g.recipe;
        b.seed = g.seeds.noise_b;
        g.second = simulate(b).noisy;
    }
    return g;
}

// ---------------------------------------------------------------------------
// On-disk layout
//   <dir>/manifest.csv
//   <dir>/images/<image_id>/{clean.pgm, noisy.pgm, noisy_b.pgm?, truth.csv}

inline const std::vector<std::string>& manifest_header() {
    static const std::vector<std::string> h{"image_id", "recipe", "snr_target", "seed", "scene_seed",
                                            "noise_seed", "acquisitions", "true_snr"};
    return h;
}

inline const std::vector<std::string>& truth_header() {
    static const std::vector<std::string> h{"image_id", "recipe", "scene", "model", "snr_target",
                                            "seed", "scene_seed", "noise_seed", "delta", "eta",
                                            "gain", "idc", "mean_dose", "signal_energy", "noise_energy",
                                            "true_snr", "clamped"};
    return h;
}

inline fs::path image_dir(const fs::path& corpus, const std::string& id) { return corpus / "images" / id; }

inline void ensure_dir(const fs::path& p) {
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec || !fs::is_directory(p)) fail(Errc::io, "cannot create directory '" + p.string() + "'");
}

inline std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p, std::ios::trunc);
    if (!out) fail(Errc::io, "cannot write '" + p.string() + "'");
    return out;
}

inline std::vector<std::string> truth_row(const CorpusConfig& c, const GeneratedItem& g) {
    const auto& t = c.recipes[g.item.recipe];
    return {g.item.image_id,
            t.name,
            std::string(to_string(t.scene.kind)),
            std::string(to_string(t.model)),
            g.item.target ? csv::num(c.snr_targets[*g.item.target]) : "nan",
            std::to_string(g.item.seed),
            std::to_string(g.seeds.scene),
            std::to_string(g.seeds.noise),
            csv::num(t.se_yield),
            csv::num(t.bse_yield),
            csv::num(t.gain),
            csv::num(t.dc_offset),
            csv::num(stats(g.recipe.dose).mean),
            csv::num(g.truth.signal_energy),
            csv::num(g.truth.noise_energy),
            csv::num(g.truth.true_snr),
            std::to_string(g.truth.clamped)};
}

inline void write_item(const fs::path& corpus, const CorpusConfig& c, const GeneratedItem& g) {
    const auto dir = image_dir(corpus, g.item.image_id);
    ensure_dir(dir);
    save_pgm(g.truth.clean, (dir / "clean.pgm").string());
    save_pgm(g.truth.noisy, (dir / "noisy.pgm").string());
    if (g.second) save_pgm(*g.second, (dir / "noisy_b.pgm").string());
    auto out = open_out(dir / "truth.csv");
    csv::Writer w(out, truth_header());
    w.row(truth_row(c, g));
}

/// Generates every item and writes the corpus; returns the items in
/// manifest order.
inline std::vector<CorpusItem> generate_corpus(const CorpusConfig& c, const fs::path& out, unsigned jobs = 1) {
    ensure_dir(out);
    const auto items = enumerate_corpus(c);
    std::vector<std::vector<std::string>> rows(items.size());
    parallel_for(items.size(), jobs, [&](std::size_t i) {
        const auto g = generate_item(c, items[i]);
        write_item(out, c, g);
        rows[i] = {g.item.image_id,
                   c.recipes[g.item.recipe].name,
                   g.item.target ? csv::num(c.snr_targets[*g.item.target]) : "nan",
                   std::to_string(g.item.seed),
                   std::to_string(g.seeds.scene),
                   std::to_string(g.seeds.noise),
                   std::to_string(c.acquisitions),
                   csv::num(g.truth.true_snr)};
    });
    auto mf = open_out(out / "manifest.csv");
    csv::Writer w(mf, manifest_header());
    for (const auto& r : rows) w.row(r);
    return items;
}

struct ManifestEntry {
    std::string image_id;
    std::string recipe;
    int acquisitions = 1;
    std::string true_snr_text;  // verbatim from truth.csv
    double true_snr = 0;
    double noise_energy = 0;
    fs::path dir;
};

/// Reads manifest.csv and each image's truth.csv; checks that every listed
/// image is present.
inline std::vector<ManifestEntry> load_manifest(const fs::path& corpus) {
    const auto mpath = corpus / "manifest.csv";
    if (!fs::exists(mpath)) fail(Errc::manifest, "no manifest.csv in '" + corpus.string() + "'");
    csv::Table t;
    try {
        t = csv::read(mpath.string());
        csv::expect_schema(t, manifest_header(), mpath.string());
    } catch (const Error& e) {
        fail(Errc::manifest, e.what());
    }
    std::vector<ManifestEntry> out;
    for (const auto& row : t.rows) {
        ManifestEntry e;
        e.image_id = row[0];
        e.recipe = row[1];
        e.acquisitions = row[6] == "2" ? 2 : 1;
        e.dir = image_dir(corpus, e.image_id);
        for (const char* f : {"noisy.pgm", "clean.pgm", "truth.csv"})
            if (!fs::exists(e.dir / f))
                fail(Errc::manifest, "image '" + e.image_id + "' is missing " + std::string(f));
        if (e.acquisitions == 2 && !fs::exists(e.dir / "noisy_b.pgm"))
            fail(Errc::manifest, "image '" + e.image_id + "' is missing noisy_b.pgm");
        try {
            const auto truth = csv::read((e.dir / "truth.csv").string());
            csv::expect_schema(truth, truth_header(), e.image_id + "/truth.csv");
            if (truth.rows.size() != 1 || truth.rows[0][0] != e.image_id)
                fail(Errc::manifest, e.image_id + "/truth.csv does not describe this image");
            e.true_snr_text = truth.rows[0][truth.column("true_snr")];
            e.true_snr = csv::parse_num(e.true_snr_text);
            e.noise_energy = csv::parse_num(truth.rows[0][truth.column("noise_energy")]);
        } catch (const Error& err) {
            if (err.code() == Errc::manifest) throw;
            fail(Errc::manifest, err.what());
        }
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace semsnr::bench
