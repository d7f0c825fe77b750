#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string cli = IMMUNIZE_CLI_PATH;

int run(const std::string& args) {
    const std::string command = cli + " " + args + " > /dev/null 2>&1";
    return std::system(command.c_str());
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("immunize-test-" + std::to_string(std::rand()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("cli integration") {
    TempDir tmp;
    const std::string panel = (tmp.path / "panel.csv").string();

    REQUIRE(run("--help") == 0);
    REQUIRE(run("simulate-yields --quarters 40 --seed 11 --out " + panel) == 0);
    REQUIRE(fs::exists(panel));

    SUBCASE("solve is deterministic") {
        const auto out1 = (tmp.path / "a").string();
        const auto out2 = (tmp.path / "b").string();
        REQUIRE(run("solve --data " + panel + " --method ri2 --out " + out1) == 0);
        REQUIRE(run("solve --data " + panel + " --method ri2 --out " + out2) == 0);
        CHECK(slurp(out1 + "/portfolio.csv") == slurp(out2 + "/portfolio.csv"));
        CHECK(slurp(out1 + "/summary.csv") == slurp(out2 + "/summary.csv"));
        const std::string summary = slurp(out1 + "/summary.csv");
        CHECK(summary.find("method,date,liability,value,leverage") == 0);
    }

    SUBCASE("hd with a wrong basis count is a usage error") {
        CHECK(run("solve --data " + panel +
                  " --method hd --basis-count 10 --out " +
                  (tmp.path / "x").string()) != 0);
    }

    SUBCASE("missing data file fails with a nonzero exit") {
        CHECK(run("solve --data /nonexistent.csv --out " +
                  (tmp.path / "x").string()) != 0);
    }

    SUBCASE("static writes the full observation grid") {
        const auto out = (tmp.path / "static").string();
        REQUIRE(run("static --data " + panel +
                    " --methods ri0,hd --max-horizon 3 --percentile-horizon 2"
                    " --rows --svg --liability medium --out " + out) == 0);
        const std::string rows = slurp(out + "/static_observations.csv");
        // header + dates x methods x horizons
        std::size_t lines = 0;
        for (char c : rows)
            if (c == '\n') ++lines;
        const std::size_t dates = 41, methods = 2;
        std::size_t expected = 0;
        for (std::size_t s = 0; s < dates; ++s)
            expected += std::min<std::size_t>(3, dates - 1 - s) * methods;
        CHECK(lines == expected + 1);
        CHECK(slurp(out + "/static_percentiles.csv").rfind("method,p90,p95,p99", 0) == 0);
        CHECK(fs::exists(out + "/static_underfunding.svg"));
    }

    SUBCASE("fit emits both panels with consistent columns") {
        const auto out = (tmp.path / "fit").string();
        REQUIRE(run("fit --data " + panel +
                    " --shapley-count 3 --max-count 4 --max-horizon 2"
                    " --out " + out) == 0);
        const std::string shapley = slurp(out + "/fit_shapley.csv");
        CHECK(shapley.rfind("horizon_days,basis_index,shapley,r2_total", 0) == 0);
        const std::string unexplained = slurp(out + "/fit_unexplained.csv");
        CHECK(unexplained.rfind("horizon_days,basis_count,one_minus_r2", 0) == 0);
    }

    SUBCASE("dynamic summary schema") {
        const auto out = (tmp.path / "dyn").string();
        REQUIRE(run("dynamic --methods ri2,krd --paths 4 --quarters 6 --seed 3"
                    " --out " + out) == 0);
        const std::string summary = slurp(out + "/dynamic_summary.csv");
        CHECK(summary.rfind("method,end_mse,dropped_paths", 0) == 0);
        std::size_t lines = 0;
        for (char c : slurp(out + "/dynamic_errors.csv"))
            if (c == '\n') ++lines;
        CHECK(lines == 1 + 2 * 4 * 6);  // header + methods x paths x quarters
    }

    SUBCASE("results are identical at any parallelism level") {
        const auto serial = (tmp.path / "dyn1").string();
        const auto threaded = (tmp.path / "dynN").string();
        REQUIRE(std::system(("IMMUNIZE_THREADS=1 " + cli +
                             " dynamic --methods ri2 --paths 6 --quarters 4"
                             " --seed 8 --out " + serial + " > /dev/null 2>&1")
                                .c_str()) == 0);
        REQUIRE(std::system(("IMMUNIZE_THREADS=4 " + cli +
                             " dynamic --methods ri2 --paths 6 --quarters 4"
                             " --seed 8 --out " + threaded + " > /dev/null 2>&1")
                                .c_str()) == 0);
        CHECK(slurp(serial + "/dynamic_errors.csv") ==
              slurp(threaded + "/dynamic_errors.csv"));
    }

    SUBCASE("options can come from a config file") {
        const auto cfg = tmp.path / "run.ini";
        const auto out = (tmp.path / "cfg").string();
        {
            std::ofstream ini(cfg);
            ini << "[solve]\ndata=" << panel << "\nmethod=ri1\nout=" << out
                << "\n";
        }
        REQUIRE(run("--config " + cfg.string() + " solve") == 0);
        const auto direct = (tmp.path / "cfg_direct").string();
        REQUIRE(run("solve --data " + panel + " --method ri1 --out " + direct) ==
                0);
        CHECK(slurp(out + "/portfolio.csv") == slurp(direct + "/portfolio.csv"));
    }

    SUBCASE("liability spec files") {
        const auto spec_path = tmp.path / "liability.cfg";
        {
            std::ofstream out(spec_path);
            out << "kind = medium\nhorizon = 50\nfrequency = 12\n";
        }
        const auto a = (tmp.path / "lf_a").string();
        const auto b = (tmp.path / "lf_b").string();
        REQUIRE(run("solve --data " + panel + " --method ri2 --liability-file " +
                    spec_path.string() + " --out " + a) == 0);
        REQUIRE(run("solve --data " + panel +
                    " --method ri2 --liability medium --out " + b) == 0);
        CHECK(slurp(a + "/portfolio.csv") == slurp(b + "/portfolio.csv"));

        const auto csv_path = tmp.path / "liability.csv";
        {
            std::ofstream out(csv_path);
            out << "date,amount\n5,0.5\n12.5,0.5\n";
        }
        REQUIRE(run("solve --data " + panel + " --method krd --liability-file " +
                    csv_path.string() + " --out " +
                    (tmp.path / "lf_c").string()) == 0);
    }
}
