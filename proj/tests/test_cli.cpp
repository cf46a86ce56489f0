#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "arcd/cdcheck.hpp"

namespace {

namespace fs = std::filesystem;

struct RunResult {
    int exit_code = -1;
    std::string out;
};

/** Runs the tool with stderr routed to a scratch file, captures stdout. */
RunResult run(const std::string& args) {
    RunResult r;
    std::string cmd = std::string(ARCD_BIN) + " " + args + " 2>/tmp/arcd-test-stderr";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buf;
    size_t got;
    while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), got);
    int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string read_stderr() {
    std::ifstream in("/tmp/arcd-test-stderr");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string fixture(const char* name) {
    return std::string(ARCD_STRUCTURES_DIR) + "/" + name;
}

int count_lines(const std::string& text) {
    int n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

} // namespace

TEST_CASE("validate accepts good structures and rejects the flat frame") {
    RunResult ok = run("validate " + fixture("grushin.ar"));
    CHECK(ok.exit_code == 0);
    CHECK(ok.out.find("passed validation") != std::string::npos);

    RunResult bad = run("validate " + fixture("flat.ar"));
    CHECK(bad.exit_code == 1);
    CHECK(bad.out.find("OriginNotSingular") != std::string::npos);
}

TEST_CASE("missing files and bad usage have distinct exit codes") {
    RunResult missing = run("validate /nonexistent/path.ar");
    CHECK(missing.exit_code == 1);
    CHECK(read_stderr().find("IoError") != std::string::npos);

    CHECK(run("frobnicate").exit_code == 64);
    CHECK(run("density " + fixture("grushin.ar")).exit_code == 64);      // --q required
    CHECK(run("").exit_code == 64);                                        // subcommand required
    CHECK(run("density " + fixture("grushin.ar") + " --q 0.5 0 --pipeline what").exit_code == 64);
    CHECK(run("--help").exit_code == 0);
}

TEST_CASE("geodesic emits a well-formed CSV") {
    RunResult r = run("geodesic " + fixture("grushin.ar") + " --q 0.5 0 --smax 0.4 --samples 9");
    CHECK(r.exit_code == 0);
    REQUIRE(count_lines(r.out) == 10); // header + 9 rows
    std::istringstream in(r.out);
    std::string header;
    std::getline(in, header);
    CHECK(header == "s,x,z1,px,pz1,2H");
    int rows = 0;
    std::string line;
    while (std::getline(in, line)) {
        double s, x, z1, px, pz1, h2;
        REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf", &s, &x, &z1, &px, &pz1,
                            &h2) == 6);
        CHECK(h2 == doctest::Approx(1.0).epsilon(1e-8)); // unit speed throughout
        ++rows;
    }
    CHECK(rows == 9);

    // Higher-dimensional header names every coordinate pair.
    RunResult r4 = run("geodesic " + fixture("r4.ar") + " --q 0.2 0.1 -0.1 0 --smax 0.1 --samples 3");
    CHECK(r4.exit_code == 0);
    CHECK(r4.out.rfind("s,x,z1,z2,z3,px,pz1,pz2,pz3,2H\n", 0) == 0);
}

TEST_CASE("density prints jets for both pipelines") {
    RunResult r = run("density " + fixture("grushin.ar") + " --q 0.5 0 --pipeline both");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("\"pipeline\": \"closed\"") != std::string::npos);
    CHECK(r.out.find("\"pipeline\": \"taylor\"") != std::string::npos);
    CHECK(r.out.find("\"log_h_second\": 4\n") != std::string::npos);
    CHECK(r.out.find("\"h_full\"") != std::string::npos); // taylor jet carries it
}

TEST_CASE("density --profile appends the sampled curve and writes CSV") {
    fs::path csv = fs::temp_directory_path() / "arcd-profile-test.csv";
    std::error_code ec;
    fs::remove(csv, ec);
    RunResult r = run("density " + fixture("grushin.ar") +
                      " --q 0.5 0 --profile -0.1:0.1:5 --csv " + csv.string());
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("\"profile\": [[") != std::string::npos);
    REQUIRE(fs::exists(csv));
    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header == "s,h");
    int rows = 0;
    std::string line;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 5);
    fs::remove(csv, ec);
}

TEST_CASE("check-cd certifies Grushin and returns 0") {
    RunResult r = run("check-cd " + fixture("grushin.ar"));
    CHECK(r.exit_code == 0);
    arcd::CdReport report = arcd::report_from_json(r.out);
    CHECK(report.structure == "grushin");
    CHECK(report.verdict.disproof);
    REQUIRE(report.fit.has_value());
    CHECK(report.fit->order == doctest::Approx(-2.0).epsilon(1e-6));
}

TEST_CASE("check-cd on the flat frame warns and returns 2") {
    RunResult r = run("check-cd " + fixture("flat.ar"));
    CHECK(r.exit_code == 2);
    CHECK(read_stderr().find("OriginNotSingular") != std::string::npos);
    arcd::CdReport report = arcd::report_from_json(r.out);
    CHECK(!report.verdict.disproof);
    CHECK(!report.fit.has_value());
}

TEST_CASE("check-cd honors --xgrid, --K, and --out with atomic write") {
    fs::path out = fs::temp_directory_path() / "arcd-report-test.json";
    std::error_code ec;
    fs::remove(out, ec);
    RunResult r = run("check-cd " + fixture("grushin.ar") +
                      " --xgrid 0.3:0.01:8 --K -5,0,5 --out " + out.string());
    CHECK(r.exit_code == 0);
    REQUIRE(fs::exists(out));
    std::ifstream in(out);
    std::ostringstream buf;
    buf << in.rdbuf();
    CHECK(buf.str() == r.out); // file mirrors stdout
    arcd::CdReport report = arcd::report_from_json(buf.str());
    CHECK(report.samples.size() == 8);
    CHECK(report.samples.front().x == doctest::Approx(0.3));
    CHECK(report.samples.back().x == doctest::Approx(0.01));
    REQUIRE(report.verdict.per_k.size() == 3);
    CHECK(report.verdict.per_k[0].K == -5.0);
    // No temporary file lingers next to the output.
    bool leftover = false;
    for (const auto& entry : fs::directory_iterator(out.parent_path())) {
        std::string name = entry.path().filename().string();
        if (name.rfind("arcd-report-test.json.tmp", 0) == 0) leftover = true;
    }
    CHECK(!leftover);
    fs::remove(out, ec);
}

TEST_CASE("identical runs produce byte-identical reports") {
    RunResult a = run("check-cd " + fixture("grushin.ar") + " --xgrid 0.3:0.02:6");
    RunResult b = run("check-cd " + fixture("grushin.ar") + " --xgrid 0.3:0.02:6");
    CHECK(a.out == b.out);
    RunResult c = run("check-cd " + fixture("grushin.ar") + " --xgrid 0.3:0.02:6 --threads 7");
    CHECK(a.out == c.out);
}

TEST_CASE("report summarizes a directory of runs in filename order") {
    fs::path dir = fs::temp_directory_path() / "arcd-report-dir-test";
    std::error_code ec;
    fs::remove_all(dir, ec);
    fs::create_directories(dir);
    CHECK(run("check-cd " + fixture("grushin.ar") + " --out " + (dir / "b-grushin.json").string())
              .exit_code == 0);
    CHECK(run("check-cd " + fixture("flat.ar") + " --out " + (dir / "a-flat.json").string())
              .exit_code == 2);

    fs::path csv = dir / "plot.csv";
    RunResult r = run("report " + dir.string() + " --csv " + csv.string());
    CHECK(r.exit_code == 0);

    // One header plus one row per report, flat first (filename order).
    std::istringstream in(r.out);
    std::string header, row1, row2;
    std::getline(in, header);
    std::getline(in, row1);
    std::getline(in, row2);
    CHECK(header.find("structure") != std::string::npos);
    CHECK(row1.find("flat") != std::string::npos);
    CHECK(row1.find("inconclusive") != std::string::npos);
    CHECK(row2.find("grushin") != std::string::npos);
    CHECK(row2.find("FAIL-CD") != std::string::npos);

    REQUIRE(fs::exists(csv));
    std::ifstream cin(csv);
    std::string cheader;
    std::getline(cin, cheader);
    CHECK(cheader == "structure,x,value");

    // An empty directory is an error.
    fs::path empty = dir / "empty";
    fs::create_directories(empty);
    CHECK(run("report " + empty.string()).exit_code == 1);
    fs::remove_all(dir, ec);
}

TEST_CASE("geodesic --out writes the same CSV as stdout") {
    fs::path out = fs::temp_directory_path() / "arcd-geo-test.csv";
    std::error_code ec;
    fs::remove(out, ec);
    RunResult direct = run("geodesic " + fixture("grushin.ar") + " --q 0.4 0 --samples 5");
    RunResult filed =
        run("geodesic " + fixture("grushin.ar") + " --q 0.4 0 --samples 5 --out " + out.string());
    CHECK(filed.exit_code == 0);
    CHECK(filed.out.empty());
    std::ifstream in(out);
    std::ostringstream buf;
    buf << in.rdbuf();
    CHECK(buf.str() == direct.out);
    fs::remove(out, ec);
}
