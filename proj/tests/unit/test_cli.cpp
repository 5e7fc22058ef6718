#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <unistd.h>

#include "adx/cli/app.hpp"
#include "adx/cli/manifest.hpp"
#include "adx/cli/projection.hpp"
#include "adx/errors.hpp"
#include "adx/synth/records.hpp"
#include "adx/text.hpp"

namespace fs = std::filesystem;
using namespace adx;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        std::string pattern = (fs::temp_directory_path() / "adx_cli_XXXXXX").string();
        path = mkdtemp(pattern.data());
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result adx_run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream(path) << text;
}

std::map<std::string, std::string> dir_contents(const std::string& dir) {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) files[entry.path().filename().string()] = cli::read_file(entry.path().string());
    return files;
}

std::map<std::string, std::string> read_kv(const std::string& path) {
    std::map<std::string, std::string> kv;
    std::istringstream in(cli::read_file(path));
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

const char* kTwoSiteMarket = R"({"n_bidders":25,"n_sites":2,"mu":1,"delta":0,"sigma":1,"omega":1,"n_impressions":1000,"seed":1})";
const char* kReducedForm = R"({"seed":3,"reduced_form":{"uplifts":{"partial":0.108,"full":0.154},"noise_sd":0.05}})";

// Buyer records where buyer01 copies buyer03 week by week.
std::string exact_donor_records() {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> volume(4000.0, 9000.0), price(1.0, 4.0);
    std::vector<synth::BuyerWeekRecord> records;
    for (int b = 2; b <= 5; ++b) {
        for (int week = 1; week <= 8; ++week) {
            for (const char* genre : {"news", "sport"}) {
                records.push_back({"buyer0" + std::to_string(b), week, genre, volume(rng), price(rng)});
                if (b == 3) {
                    auto copy = records.back();
                    copy.buyer_id = "buyer01";
                    records.push_back(copy);
                }
            }
        }
    }
    std::ostringstream out;
    synth::write_records(out, records);
    return out.str();
}

} // namespace

TEST_CASE("revenue projection arithmetic") {
    const auto p = cli::project_revenue({3'500'000, 0.158, 52, 57, 0.025});
    CHECK(std::abs(p.per_site - 28756) <= 1.0);
    CHECK(std::abs(p.total - 1639092) <= 1.0);
    CHECK(std::abs(p.exchange - 40977) <= 1.0);
    const auto zero = cli::project_revenue({3'500'000, 0.0, 52, 57, 0.025});
    CHECK(zero.per_site == 0.0);
    CHECK(zero.total == 0.0);
    CHECK(zero.exchange == 0.0);
    const auto unit = cli::project_revenue({1000, 1.0, 1, 1, 1.0});
    CHECK(unit.per_site == 1.0);
    CHECK(unit.total == 1.0);
    CHECK(unit.exchange == 1.0);
    CHECK_THROWS_AS(cli::project_revenue({0, 0.158, 52, 57, 0.025}), InputError);
    CHECK_THROWS_AS(cli::project_revenue({3'500'000, -0.1, 52, 57, 0.025}), InputError);
}

TEST_CASE("project-revenue command") {
    auto r = adx_run({"project-revenue", "--weekly-supply", "3500000", "--cpm-uplift", "0.158", "--weeks", "52",
                      "--n-sites", "57", "--commission", "0.025"});
    CHECK(r.code == 0);
    CHECK(r.out.find("per_site 28756") != std::string::npos);
    CHECK(r.out.find("total 1639092") != std::string::npos);
    CHECK(r.out.find("exchange 40977") != std::string::npos);
    r = adx_run({"project-revenue", "--weekly-supply", "-1", "--cpm-uplift", "0.158", "--weeks", "52", "--n-sites",
                 "57", "--commission", "0.025"});
    CHECK(r.code == 2);
}

TEST_CASE("exit codes") {
    TempDir dir;
    write_text(dir / "market.json", kTwoSiteMarket);
    CHECK(adx_run({}).code == 2);
    CHECK(adx_run({"simulate"}).code == 2);
    CHECK(adx_run({"simulate", "--config", dir / "missing.json"}).code == 3);
    write_text(dir / "broken.json", "{\"n_bidders\": ");
    CHECK(adx_run({"simulate", "--config", dir / "broken.json", "--out", dir / "x"}).code == 2);
    write_text(dir / "blocker", "");
    CHECK(adx_run({"simulate", "--config", dir / "market.json", "--out", dir / "blocker/sub"}).code == 3);

    const auto r = adx_run({"simulate", "--config", dir / "market.json", "--regime", "partial", "--out", dir / "p"});
    CHECK(r.code == 2);
    CHECK(r.err.find("treated") != std::string::npos);
    CHECK(adx_run({"simulate", "--config", dir / "market.json", "--regime", "partial", "--treated", "0", "--out",
                   dir / "p"})
              .code == 0);
}

TEST_CASE("simulate writes distinct outcomes per seed with one schema") {
    TempDir dir;
    write_text(dir / "market.json", kTwoSiteMarket);
    REQUIRE(adx_run({"simulate", "--config", dir / "market.json", "--seed", "1", "--out", dir / "s1"}).code == 0);
    REQUIRE(adx_run({"simulate", "--config", dir / "market.json", "--seed", "2", "--out", dir / "s2"}).code == 0);
    const auto a = cli::read_file(dir / "s1/outcomes.csv");
    const auto b = cli::read_file(dir / "s2/outcomes.csv");
    CHECK(a != b);
    CHECK(a.substr(0, a.find('\n')) == b.substr(0, b.find('\n')));
    CHECK(read_kv(dir / "s2/manifest.txt").at("seed") == "2");
}

TEST_CASE("paired full-disclosure run raises both site prices") {
    TempDir dir;
    write_text(dir / "market.json", kTwoSiteMarket);
    REQUIRE(adx_run({"simulate", "--config", dir / "market.json", "--paired", "--out", dir / "o"}).code == 0);
    const auto kv = read_kv(dir / "o/summary.txt");
    CHECK(kv.at("compare.full_above_none_all_sites") == "1");
    CHECK(fs::exists(dir / "o/outcomes_none.csv"));
    CHECK(fs::exists(dir / "o/outcomes_full.csv"));
}

TEST_CASE("did reports injected effects and placebo rows") {
    TempDir dir;
    write_text(dir / "rf.json", kReducedForm);
    write_text(dir / "rf0.json", R"({"seed":3,"reduced_form":{}})");
    REQUIRE(adx_run({"generate-panel", "--config", dir / "rf.json", "--out", dir / "g"}).code == 0);
    REQUIRE(adx_run({"generate-panel", "--config", dir / "rf0.json", "--out", dir / "g0"}).code == 0);

    auto r = adx_run({"did", "--panel", dir / "g0/panel.csv", "--out", dir / "d0"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("full_x_year,") != std::string::npos);
    // Zero-noise panel: coefficients are the generator parameters.
    std::istringstream table(cli::read_file(dir / "d0/coefficients.csv"));
    std::string line;
    std::getline(table, line);
    CHECK(line == "term,estimate,clustered_se,stars");
    std::getline(table, line);
    CHECK(line.rfind("partial_x_year,", 0) == 0);

    write_text(dir / "rf1.json", R"({"seed":3,"reduced_form":{"uplifts":{"full":0.154}}})");
    REQUIRE(adx_run({"generate-panel", "--config", dir / "rf1.json", "--out", dir / "g1"}).code == 0);
    r = adx_run({"did", "--panel", dir / "g1/panel.csv", "--out", dir / "d1"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("full_x_year,0.154") != std::string::npos);

    r = adx_run({"did", "--panel", dir / "g/panel.csv", "--preset", "placebo", "--out", dir / "dp"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("placebo_x_year,") != std::string::npos);

    write_text(dir / "rank.json", R"({"terms":["full*year","supply_millions","revenue_copy"]})");
    auto panel = cli::read_file(dir / "g/panel.csv");
    std::istringstream in(panel);
    std::ostringstream copy;
    bool header = true;
    while (std::getline(in, line)) {
        const auto fields = text::split(line, ',');
        copy << line << ',' << (header ? std::string("revenue_copy") : text::real(2.0 * text::parse_real(fields[5], "s")))
             << '\n';
        header = false;
    }
    write_text(dir / "rank.csv", copy.str());
    r = adx_run({"did", "--panel", dir / "rank.csv", "--spec", dir / "rank.json", "--out", dir / "dr"});
    CHECK(r.code == 2);
    CHECK(r.err.find("rank-deficient") != std::string::npos);
    CHECK((r.err.find("revenue_copy") != std::string::npos || r.err.find("supply_millions") != std::string::npos));

    write_text(dir / "dup.csv", cli::read_file(dir / "g/panel.csv") +
                                    "site01,1,0,0.9,1000,0.001,1,100,0,0,,1,1\n");
    r = adx_run({"did", "--panel", dir / "dup.csv", "--out", dir / "dd"});
    CHECK(r.code == 2);
    CHECK(r.err.find("duplicate key (site01, week 1, year 0)") != std::string::npos);
}

TEST_CASE("synth on an exact-donor fixture puts all weight on the copy") {
    TempDir dir;
    write_text(dir / "records.csv", exact_donor_records());
    const auto r = adx_run({"synth", "--records", dir / "records.csv", "--treated", "buyer01", "--intervention-week",
                            "6", "--outcome", "impressions", "--out", dir / "s"});
    REQUIRE(r.code == 0);
    std::istringstream weights(cli::read_file(dir / "s/weights_impressions.csv"));
    std::string line;
    std::getline(weights, line);
    int near_one = 0, near_zero = 0;
    while (std::getline(weights, line)) {
        const auto fields = text::split(line, ',');
        const double w = text::parse_real(fields[1], "weight");
        if (std::abs(w - 1.0) < 1e-6) {
            ++near_one;
            CHECK(fields[0] == "buyer03");
        } else if (std::abs(w) < 1e-6) {
            ++near_zero;
        }
    }
    CHECK(near_one == 1);
    CHECK(near_zero == 3);
    CHECK(adx_run({"synth", "--records", dir / "records.csv", "--treated", "nobody", "--intervention-week", "6",
                   "--out", dir / "s2"})
              .code == 2);
}

TEST_CASE("simulated partial disclosure shows a positive impressions gap") {
    TempDir dir;
    write_text(dir / "sim.json", R"({"market":{"n_bidders":25,"n_sites":3,"n_impressions":3000},"seed":2})");
    REQUIRE(adx_run({"simulate-buyers", "--config", dir / "sim.json", "--out", dir / "b"}).code == 0);
    REQUIRE(adx_run({"synth", "--records", dir / "b/records.csv", "--treated", "buyer01", "--intervention-week", "21",
                     "--outcome", "impressions", "--predictors", "genre_week_impressions,week_impressions",
                     "--no-filter", "--out", dir / "s"})
                .code == 0);
    std::istringstream gaps(cli::read_file(dir / "s/gaps_impressions.csv"));
    std::string line;
    std::getline(gaps, line);
    double post = 0.0;
    while (std::getline(gaps, line)) {
        const auto fields = text::split(line, ',');
        if (text::parse_int(fields[0], "week") >= 21) post += text::parse_real(fields[3], "gap");
    }
    CHECK(post > 0.0);
}

TEST_CASE("placebo over 20 simulated buyers reports 20 ratios and a p-value") {
    TempDir dir;
    write_text(dir / "sim.json",
               R"({"market":{"n_bidders":20,"n_sites":3,"n_impressions":3000},"seed":5,"impression_scale":10})");
    REQUIRE(adx_run({"simulate-buyers", "--config", dir / "sim.json", "--out", dir / "b"}).code == 0);
    const auto r = adx_run({"placebo", "--records", dir / "b/records.csv", "--treated", "buyer01",
                            "--intervention-week", "21", "--outcome", "impressions", "--no-filter", "--out", dir / "p"});
    REQUIRE(r.code == 0);
    std::istringstream table(cli::read_file(dir / "p/placebo_impressions.csv"));
    std::string line;
    std::getline(table, line);
    CHECK(line == "buyer_id,mspe_pre,mspe_post,ratio,retained");
    int rows = 0;
    while (std::getline(table, line)) ++rows;
    CHECK(rows == 20);
    const double p = std::stod(read_kv(dir / "p/placebo_summary_impressions.txt").at("p_value"));
    CHECK(p > 0.0);
    CHECK(p <= 1.0);
}

TEST_CASE("every command is byte-identical on rerun and writes one manifest") {
    TempDir dir;
    write_text(dir / "market.json", kTwoSiteMarket);
    write_text(dir / "rf.json", kReducedForm);
    write_text(dir / "mech.json",
               R"({"seed":4,"n_sites":3,"mechanism":{"market":{"n_bidders":10,"n_impressions":200}}})");
    write_text(dir / "sim.json", R"({"market":{"n_bidders":8,"n_sites":2,"n_impressions":500},"seed":6})");
    REQUIRE(adx_run({"generate-panel", "--config", dir / "rf.json", "--out", dir / "panel"}).code == 0);
    REQUIRE(adx_run({"simulate-buyers", "--config", dir / "sim.json", "--out", dir / "buyers"}).code == 0);
    const std::string records = dir / "buyers/records.csv";

    const std::vector<std::vector<std::string>> commands{
        {"simulate", "--config", dir / "market.json"},
        {"simulate", "--config", dir / "market.json", "--paired", "--regime", "partial", "--treated", "0"},
        {"did", "--panel", dir / "panel/panel.csv"},
        {"did", "--panel", dir / "panel/panel.csv", "--preset", "placebo"},
        {"synth", "--records", records, "--treated", "buyer01", "--intervention-week", "20", "--no-filter"},
        {"placebo", "--records", records, "--treated", "buyer01", "--intervention-week", "20", "--no-filter"},
        {"project-revenue", "--weekly-supply", "3500000", "--cpm-uplift", "0.154", "--weeks", "52", "--n-sites", "57",
         "--commission", "0.025"},
        {"generate-panel", "--config", dir / "rf.json"},
        {"generate-panel", "--config", dir / "mech.json"},
        {"simulate-buyers", "--config", dir / "sim.json"},
    };
    for (std::size_t c = 0; c < commands.size(); ++c) {
        CAPTURE(commands[c][0]);
        std::vector<std::map<std::string, std::string>> runs;
        for (int rep = 0; rep < 2; ++rep) {
            auto args = commands[c];
            const auto out = dir / ("run" + std::to_string(c));
            args.insert(args.end(), {"--out", out});
            const auto r = adx_run(args);
            REQUIRE(r.code == 0);
            runs.push_back(dir_contents(out));
            if (rep == 0) fs::remove_all(out);
        }
        CHECK(runs[0] == runs[1]);
        REQUIRE(runs[1].contains("manifest.txt"));
        const auto kv = read_kv(dir / ("run" + std::to_string(c) + "/manifest.txt"));
        CHECK(kv.at("command") == commands[c][0]);
        for (const auto& [name, bytes] : runs[1]) {
            if (name == "manifest.txt") continue;
            CHECK(kv.at("output." + name + ".sha256") == cli::sha256_hex(bytes));
        }
    }
}

TEST_CASE("manifest hashes the inputs") {
    CHECK(cli::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    TempDir dir;
    write_text(dir / "market.json", kTwoSiteMarket);
    REQUIRE(adx_run({"simulate", "--config", dir / "market.json", "--out", dir / "o"}).code == 0);
    const auto kv = read_kv(dir / "o/manifest.txt");
    CHECK(kv.at("input.config.sha256") == cli::sha256_hex(kTwoSiteMarket));
    CHECK(kv.at("input_hash") == cli::sha256_hex("config=" + cli::sha256_hex(kTwoSiteMarket) + "\n"));
    CHECK(kv.at("config") == dir / "market.json");
}

TEST_CASE("output root comes from the environment when --out is absent") {
    TempDir dir;
    write_text(dir / "market.json", kTwoSiteMarket);
    ::setenv(cli::kOutputRootEnv, dir.path.c_str(), 1);
    const auto r = adx_run({"simulate", "--config", dir / "market.json"});
    ::unsetenv(cli::kOutputRootEnv);
    REQUIRE(r.code == 0);
    CHECK(fs::exists(dir / "simulate/manifest.txt"));
}
