#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include "semsnr/bench/config.hpp"
#include "semsnr/bench/corpus.hpp"
#include "semsnr/bench/runs.hpp"
#include "support.hpp"

using namespace semsnr;
using namespace semsnr::bench;
namespace fs = std::filesystem;

namespace {

const char* small_config = R"([corpus]
width = 64
height = 64
seeds = 1,2,3
snr_targets = 2,5
base_seed = 11

[recipe.field]
scene = field
correlation_length = 4
model = poisson-se

[sweep]
parameter = dose
values = 25,100,400
seeds = 1,2,3
methods = nn,fol
)";

BenchConfig parse_text(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

std::string config_error(const std::string& text) {
    try {
        parse_text(text);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::config) << e.what();
        return e.what();
    }
    ADD_FAILURE() << "config accepted:\n" << text;
    return {};
}

// Per process, so ctest -j does not race on shared directories.
fs::path scratch_root() { return fs::temp_directory_path() / ("semsnr_test_bench_" + std::to_string(::getpid())); }

struct ScratchCleanup : ::testing::Environment {
    void TearDown() override { fs::remove_all(scratch_root()); }
};
const auto* const cleanup = ::testing::AddGlobalTestEnvironment(new ScratchCleanup);

fs::path scratch(const std::string& name) {
    const auto p = scratch_root() / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

// Relative path -> file bytes for everything under root.
std::map<std::string, std::string> tree_bytes(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
    return out;
}

std::string first_two_lines(const fs::path& p) {
    std::ifstream in(p);
    std::string a, b;
    std::getline(in, a);
    std::getline(in, b);
    return a + "\n" + b;
}

std::string joined(const std::vector<std::string>& h) {
    std::string s;
    for (const auto& c : h) s += (s.empty() ? "" : ",") + c;
    return s;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(SEMSNR_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

struct Corpus {
    BenchConfig cfg;
    fs::path dir;
};

const Corpus& small_corpus() {
    static const Corpus c = [] {
        Corpus out{parse_text(small_config), scratch("corpus")};
        generate_corpus(out.cfg.corpus, out.dir);
        return out;
    }();
    return c;
}

}  // namespace

TEST(Config, ErrorsNameTheKey) {
    const std::string recipe = "[recipe.a]\nscene = field\n";
    EXPECT_NE(config_error("[corpus]\nwidth = abc\n" + recipe).find("corpus.width"), std::string::npos);
    EXPECT_NE(config_error("[corpus]\ncolour = red\n" + recipe).find("corpus.colour: unknown key"), std::string::npos);
    EXPECT_NE(config_error("[corpus]\nseeds = 1,-2\n" + recipe).find("corpus.seeds"), std::string::npos);
    EXPECT_NE(config_error("[corpus]\n[recipe.a]\nmodel = poisson\n").find("recipe.a.model"), std::string::npos);
    EXPECT_NE(config_error("[corpus]\n" + recipe + "[estimate]\nmethods = nn,foo\n").find("estimate.methods"),
              std::string::npos);
    EXPECT_NE(config_error("[corpus]\n" + recipe + "[denoise]\nfilters = median:window=4\n").find("denoise.filters"),
              std::string::npos);
    EXPECT_NE(config_error("[corpus]\n" + recipe + "[extra]\nx = 1\n").find("extra: unknown section"),
              std::string::npos);
    EXPECT_NE(config_error(recipe).find("missing [corpus]"), std::string::npos);
    EXPECT_NE(config_error("[corpus]\n").find("recipe"), std::string::npos);
    EXPECT_NE(config_error("[corpus]\n" + recipe + "[sweep]\nrecipe = b\n").find("no recipe named 'b'"),
              std::string::npos);
}

TEST(Config, MethodSets) {
    const auto all = parse_text("[corpus]\n[recipe.a]\n[estimate]\nmethods = all\n").estimate.methods;
    EXPECT_EQ(all.size(), 7u);
    EXPECT_EQ(std::count(all.begin(), all.end(), Method::smart), 0);
    EXPECT_EQ(parse_text("[corpus]\n[recipe.a]\n[estimate]\nmethods = every\n").estimate.methods.size(), 9u);
    const auto listed = parse_text("[corpus]\n[recipe.a]\n[estimate]\nmethods = nn, lsr\n").estimate.methods;
    EXPECT_EQ(listed, (std::vector<Method>{Method::nn, Method::lsr}));
}

TEST(Config, ShippedConfigsParse) {
    for (const char* name : {"oracle.ini", "dose_sweep_pe.ini"})
        EXPECT_NO_THROW(load_config((fs::path(SEMSNR_SOURCE_DIR) / "configs" / name).string())) << name;
}

TEST(Generate, WritesEveryImageAndAManifest) {
    const auto& c = small_corpus();
    const auto entries = load_manifest(c.dir);
    ASSERT_EQ(entries.size(), 6u);
    for (const auto& e : entries) {
        EXPECT_TRUE(fs::exists(e.dir / "noisy.pgm")) << e.image_id;
        EXPECT_TRUE(fs::exists(e.dir / "clean.pgm")) << e.image_id;
        EXPECT_EQ(e.acquisitions, 1);
    }
    EXPECT_EQ(first_two_lines(c.dir / "manifest.csv"), "# semsnr-csv v1\n" + joined(manifest_header()));
    EXPECT_EQ(first_two_lines(entries[0].dir / "truth.csv"), "# semsnr-csv v1\n" + joined(truth_header()));
}

TEST(Generate, RerunIsByteIdenticalAcrossThreadCounts) {
    const auto& c = small_corpus();
    const auto again = scratch("corpus_again");
    generate_corpus(c.cfg.corpus, again, 4);
    const auto a = tree_bytes(c.dir), b = tree_bytes(again);
    ASSERT_EQ(a.size(), b.size());
    for (const auto& [name, bytes] : a) EXPECT_TRUE(b.count(name) && b.at(name) == bytes) << name;
}

TEST(Generate, ManifestRejectsMissingImages) {
    const auto& c = small_corpus();
    const auto broken = scratch("corpus_broken");
    fs::copy(c.dir, broken, fs::copy_options::recursive);
    fs::remove(load_manifest(broken).front().dir / "noisy.pgm");
    EXPECT_EQ(fixtures::code_of([&] { load_manifest(broken); }), Errc::manifest);
    EXPECT_EQ(fixtures::code_of([] { load_manifest("/nonexistent/semsnr"); }), Errc::manifest);
}

TEST(Estimate, OneRowPerImageAndMethod) {
    const auto& c = small_corpus();
    const auto entries = load_manifest(c.dir);
    const auto nn = run_estimates(entries, {Method::nn}, {});
    EXPECT_EQ(nn.size(), 6u);
    const auto summary = summarize(nn);
    ASSERT_EQ(summary.size(), 1u);
    EXPECT_EQ(summary[0].method, "nn");
    EXPECT_EQ(summary[0].n_images, 6u);

    const std::vector<Method> all(single_image_methods.begin(), single_image_methods.end());
    const auto rows = run_estimates(entries, all, {}, 3);
    EXPECT_EQ(rows.size(), 7u * 6u);
    EXPECT_EQ(summarize(rows).size(), 7u);
}

TEST(Estimate, OracleColumnCopiesTruthVerbatim) {
    const auto& c = small_corpus();
    const auto entries = load_manifest(c.dir);
    const auto out = scratch("estimate");
    write_results(run_estimates(entries, {Method::nn, Method::fol}, {}), out);

    const auto results = csv::read((out / "results.csv").string());
    EXPECT_EQ(results.header, results_header());
    EXPECT_EQ(first_two_lines(out / "summary.csv"), "# semsnr-csv v1\n" + joined(summary_header()));
    std::map<std::string, std::string> truth;
    for (const auto& e : entries) {
        const auto t = csv::read((e.dir / "truth.csv").string());
        truth[e.image_id] = t.rows.at(0).at(t.column("true_snr"));
    }
    ASSERT_EQ(results.rows.size(), 12u);
    for (const auto& row : results.rows)
        EXPECT_EQ(row[results.column("oracle_snr")], truth.at(row[results.column("image_id")]));
}

TEST(Sweep, FlatFieldFollowsSquareRootOfDose) {
    const auto& c = small_corpus();
    auto cfg = c.cfg;
    cfg.corpus.width = cfg.corpus.height = 128;
    const auto rows = run_sweep(cfg, {});
    EXPECT_EQ(rows.size(), 3u * 3u * 3u);
    std::map<double, double> flat;
    for (const auto& p : summarize_sweep(rows))
        if (p.method == flat_method) flat[p.value] = p.median_snr;
    ASSERT_EQ(flat.size(), 3u);
    EXPECT_NEAR(flat[100] / flat[25], 2.0, 0.1);
    EXPECT_NEAR(flat[400] / flat[100], 2.0, 0.1);
    for (const auto& p : summarize_sweep(rows)) {
        if (p.method == flat_method) {
            EXPECT_NEAR(p.median_snr / p.median_oracle, 1.0, 0.05) << p.value;
        }
    }
}

TEST(Sweep, EstimatesRiseWithDose) {
    const auto& c = small_corpus();
    const auto rows = run_sweep(c.cfg, {});
    std::map<std::string, std::vector<double>> by_method;
    for (const auto& p : summarize_sweep(rows)) by_method[p.method].push_back(p.median_snr);
    for (const auto& [m, v] : by_method) {
        ASSERT_EQ(v.size(), 3u);
        EXPECT_LT(v[0], v[1]) << m;
        EXPECT_LT(v[1], v[2]) << m;
    }
}

TEST(Sweep, ContrastLeavesEstimatesUnchanged) {
    auto cfg = small_corpus().cfg;
    cfg.sweep.parameter = SweepParameter::contrast;
    cfg.sweep.values = {0.5, 3.0};
    const auto rows = run_sweep(cfg, {});
    std::map<std::pair<std::uint64_t, std::string>, std::vector<double>> snr;
    for (const auto& r : rows) snr[{r.seed, r.method}].push_back(r.snr);
    for (const auto& [key, v] : snr) {
        ASSERT_EQ(v.size(), 2u);
        EXPECT_NEAR(v[1] / v[0], 1.0, 1e-6) << key.second << " seed " << key.first;
    }
}

TEST(Sweep, RejectsBadRanges) {
    auto cfg = small_corpus().cfg;
    cfg.sweep.values = {100, 25};
    EXPECT_NO_THROW(check_range(cfg.sweep.values));
    cfg.sweep.values = {25, 100, 50};
    EXPECT_EQ(fixtures::code_of([&] { run_sweep(cfg, {}); }), Errc::domain);
    cfg.sweep.values = {};
    EXPECT_EQ(fixtures::code_of([&] { run_sweep(cfg, {}); }), Errc::domain);
}

TEST(Denoise, RowsPerImageAndFilterAndIdentity) {
    const auto& c = small_corpus();
    const auto entries = load_manifest(c.dir);
    const auto out = scratch("denoise");
    const std::vector<std::string> filters{"wiener_global:noise_var=0", "median:window=3",
                                           "wiener_local:window=5,noise_var=oracle"};
    const auto rows = run_denoise(entries, filters, Method::nn, {}, out);
    ASSERT_EQ(rows.size(), entries.size() * filters.size());
    for (const auto& r : rows) {
        if (r.filter == filters[0]) {
            EXPECT_EQ(r.mse_filtered, r.mse_noisy) << r.image_id;
        }
        if (r.filter == filters[2]) {
            EXPECT_LT(r.mse_filtered, r.mse_noisy) << r.image_id;
        }
    }
    write_denoise(rows, out);
    EXPECT_EQ(first_two_lines(out / "report.csv"), "# semsnr-csv v1\n" + joined(denoise_header()));
    EXPECT_TRUE(fs::exists(out / "filtered" / filter_slug(filters[1]) / (entries[0].image_id + ".pgm")));
}

TEST(Cli, ExitCodes) {
    const auto& c = small_corpus();
    const auto out = scratch("cli");
    const auto cfg = out / "small.ini";
    std::ofstream(cfg) << small_config;

    EXPECT_EQ(run_cli(""), 2);
    EXPECT_EQ(run_cli("--help"), 0);
    EXPECT_EQ(run_cli("generate --config /nonexistent.ini --out " + (out / "g").string()), 2);
    EXPECT_EQ(run_cli("estimate --corpus " + c.dir.string() + " --methods nn,bogus --out " + out.string()), 2);
    EXPECT_EQ(run_cli("estimate --corpus /nonexistent/corpus --out " + out.string()), 3);
    EXPECT_EQ(run_cli("denoise --corpus " + c.dir.string() + " --filter sharpen --out " + out.string()), 2);

    EXPECT_EQ(run_cli("generate --config " + cfg.string() + " --out " + (out / "g").string()), 0);
    EXPECT_EQ(tree_bytes(out / "g"), tree_bytes(c.dir));
    EXPECT_EQ(run_cli("estimate --corpus " + (out / "g").string() + " --methods all --out " + (out / "e").string()), 0);
    EXPECT_EQ(csv::read((out / "e" / "results.csv").string()).rows.size(), 42u);
    EXPECT_EQ(run_cli("report --results " + (out / "e" / "results.csv").string() + " --out " + (out / "r").string()), 0);
    EXPECT_TRUE(fs::exists(out / "r" / "report.svg"));
    EXPECT_EQ(run_cli("sweep --config " + cfg.string() + " --values 25,100 --out " + (out / "s").string()), 0);
    EXPECT_TRUE(fs::exists(out / "s" / "sweep.svg"));
}

TEST(Csv, QuotedFieldsRoundTrip) {
    std::ostringstream os;
    csv::Writer w(os, {"filter", "note"});
    w.row({"wiener_local:window=5,noise_var=oracle", "say \"hi\""});
    EXPECT_NE(os.str().find("\"wiener_local:window=5,noise_var=oracle\",\"say \"\"hi\"\"\""), std::string::npos);
    std::istringstream in(os.str());
    const auto t = csv::parse(in, "mem");
    ASSERT_EQ(t.rows.size(), 1u);
    EXPECT_EQ(t.rows[0][0], "wiener_local:window=5,noise_var=oracle");
    EXPECT_EQ(t.rows[0][1], "say \"hi\"");
    std::istringstream bad("a,b\n\"open,1\n");
    EXPECT_EQ(fixtures::code_of([&] { csv::parse(bad, "mem"); }), Errc::parse);
}

TEST(Config, EmptySectionsAndDuplicates) {
    const auto cfg = parse_text("[corpus]\n[recipe.a]\n[recipe.b]\nscene = flat\n");
    ASSERT_EQ(cfg.corpus.recipes.size(), 2u);
    EXPECT_EQ(cfg.corpus.recipes[0].name, "a");
    EXPECT_EQ(cfg.corpus.recipes[1].scene.kind, SceneKind::flat);
    EXPECT_EQ(cfg.corpus.width, 256u);
    config_error("[corpus]\n[recipe.a]\n[recipe.a]\n");
    EXPECT_NE(config_error("width = 3\n[corpus]\n[recipe.a]\n").find("outside of any section"), std::string::npos);
}
