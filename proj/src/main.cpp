#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "arcd/cdcheck.hpp"
#include "arcd/disintegration.hpp"
#include "arcd/hamiltonian.hpp"
#include "arcd/structure.hpp"
#include "arcd/util.hpp"

namespace {

using namespace arcd;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInconclusive = 2;
constexpr int kExitUsage = 64;

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty())
        std::cout << text;
    else
        atomic_write_file(out_path, text);
}

std::vector<double> parse_triple_grid(const std::string& spec, bool geometric) {
    double a = 0.0, b = 0.0;
    int k = 0;
    if (std::sscanf(spec.c_str(), "%lf:%lf:%d", &a, &b, &k) != 3 || k < 2)
        throw ArError(ErrorCode::BadInput, "grid must be <from>:<to>:<points> with points >= 2");
    if (geometric) return geometric_grid(a, b, k);
    std::vector<double> xs(k);
    for (int i = 0; i < k; ++i) xs[i] = a + (b - a) * i / (k - 1);
    return xs;
}

std::string csv_of_profile(const std::vector<ProfilePoint>& prof) {
    std::string out = "s,h\n";
    for (const ProfilePoint& p : prof) out += fmt17(p.s) + "," + fmt17(p.h) + "\n";
    return out;
}

void append_vector(std::string& out, const char* key, std::span<const double> v) {
    out += '"';
    out += key;
    out += "\": [";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += fmt17(v[i]);
    }
    out += ']';
}

void append_matrix(std::string& out, const char* key, const Mat& m) {
    out += '"';
    out += key;
    out += "\": [";
    for (int i = 0; i < m.rows(); ++i) {
        if (i) out += ", ";
        out += '[';
        for (int j = 0; j < m.cols(); ++j) {
            if (j) out += ", ";
            out += fmt17(m(i, j));
        }
        out += ']';
    }
    out += ']';
}

void append_jet(std::string& out, const DensityJet& jet) {
    out += "    {\n      \"pipeline\": \"";
    out += pipeline_name(jet.pipeline);
    out += "\",\n      ";
    append_vector(out, "grad_delta", jet.grad_delta);
    out += ",\n      ";
    append_vector(out, "f", jet.f);
    out += ",\n      \"h_n\": " + fmt17(jet.h_n);
    if (!jet.h_full.empty()) {
        out += ",\n      ";
        append_vector(out, "h_full", jet.h_full);
    }
    out += ",\n      ";
    append_matrix(out, "B0", jet.B0);
    out += ",\n      ";
    append_matrix(out, "B1", jet.B1);
    out += ",\n      ";
    append_matrix(out, "B2", jet.B2);
    out += ",\n      \"trace_term\": " + fmt17(jet.trace_term);
    out += ",\n      \"measure_term\": " + fmt17(jet.measure_term);
    out += ",\n      \"log_h_second\": " + fmt17(jet.log_h_second);
    out += "\n    }";
}

int cmd_validate(const std::string& file) {
    ArStructure s = parse_structure_file(file);
    auto diags = validate(s);
    bool hard = false;
    for (const Diagnostic& d : diags) {
        const char* sev = d.severity == Severity::Error ? "error" : "warning";
        std::cout << sev << ": " << error_code_name(d.code) << ": " << d.message << "\n";
        hard = hard || d.severity == Severity::Error;
    }
    if (hard) return kExitError;
    std::cout << "ok: " << s.name << " (n = " << s.n << ") passed validation\n";
    return kExitOk;
}

int cmd_geodesic(const std::string& file, std::vector<double> q, double smax, double tol,
                 int samples, const std::string& out_path) {
    ArStructure s = load_structure(file);
    GeodesicArc arc = exp_from_surface(s, q, smax, tol);
    const int n = s.n;
    std::string csv = "s,x";
    for (int i = 1; i <= n; ++i) csv += ",z" + std::to_string(i);
    csv += ",px";
    for (int i = 1; i <= n; ++i) csv += ",pz" + std::to_string(i);
    csv += ",2H\n";
    for (int i = 0; i < samples; ++i) {
        const double sv = -smax + 2.0 * smax * i / (samples - 1);
        std::vector<double> y = arc.state(sv);
        csv += fmt17(sv);
        for (double v : y) csv += "," + fmt17(v);
        csv += "," + fmt17(arc.energy(sv)) + "\n";
    }
    emit(csv, out_path);
    return kExitOk;
}

int cmd_density(const std::string& file, std::vector<double> q, const std::string& pipeline,
                const std::string& profile_spec, const std::string& csv_path,
                const std::string& out_path) {
    ArStructure s = load_structure(file);
    DensityEngine engine(s);

    std::vector<DensityJet> jets;
    if (pipeline == "closed" || pipeline == "both") jets.push_back(engine.closed_form_jet(q));
    if (pipeline == "taylor" || pipeline == "both")
        jets.push_back(engine.numeric_taylor_jet(q));
    if (jets.empty())
        throw ArError(ErrorCode::BadInput, "pipeline must be closed, taylor, or both");

    std::string out = "{\n  \"structure\": \"" + s.name + "\",\n  ";
    append_vector(out, "q", q);
    out += ",\n  \"jets\": [\n";
    for (std::size_t i = 0; i < jets.size(); ++i) {
        append_jet(out, jets[i]);
        out += i + 1 < jets.size() ? ",\n" : "\n";
    }
    out += "  ]";
    if (!profile_spec.empty()) {
        auto grid = parse_triple_grid(profile_spec, /*geometric=*/false);
        auto prof = engine.density_profile(q, grid);
        out += ",\n  \"profile\": [";
        for (std::size_t i = 0; i < prof.size(); ++i) {
            if (i) out += ", ";
            out += "[" + fmt17(prof[i].s) + ", " + fmt17(prof[i].h) + "]";
        }
        out += "]";
        if (!csv_path.empty()) atomic_write_file(csv_path, csv_of_profile(prof));
    }
    out += "\n}\n";
    emit(out, out_path);
    return kExitOk;
}

int cmd_check_cd(const std::string& file, const std::string& xgrid_spec,
                 std::vector<double> k_grid, const std::string& out_path,
                 const std::string& pipeline, int threads, std::uint64_t seed) {
    ArStructure s = parse_structure_file(file);
    for (const Diagnostic& d : validate(s)) {
        if (d.severity != Severity::Error) continue;
        // A non-singular origin only means there is nothing to disprove
        // here; the check must still run and come back inconclusive.
        if (d.code == ErrorCode::OriginNotSingular) {
            std::cerr << "warning: " << error_code_name(d.code) << ": " << d.message
                      << " (continuing; expect an inconclusive verdict)\n";
            continue;
        }
        throw ArError(d.code, s.name + ": " + d.message);
    }

    CheckConfig cfg;
    cfg.pipeline = pipeline == "taylor" ? Pipeline::NumericTaylor : Pipeline::ClosedForm;
    cfg.threads = threads;
    cfg.seed = seed;
    std::vector<double> xs =
        xgrid_spec.empty() ? default_x_grid(s) : parse_triple_grid(xgrid_spec, true);
    if (k_grid.empty()) k_grid = default_k_grid();

    CdReport report = run_check(s, xs, k_grid, cfg);
    std::string json = report_to_json(report);
    std::cout << json;
    if (!out_path.empty()) atomic_write_file(out_path, json);
    return report.verdict.disproof ? kExitOk : kExitInconclusive;
}

int cmd_report(const std::string& dir, const std::string& csv_path) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir))
        throw ArError(ErrorCode::IoError, "'" + dir + "' is not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            files.push_back(entry.path());
    if (files.empty())
        throw ArError(ErrorCode::IoError, "no .json reports found in '" + dir + "'");
    std::sort(files.begin(), files.end());

    std::string csv = "structure,x,value\n";
    std::printf("%-24s %10s %10s %8s  %s\n", "structure", "order", "coeff", "r2", "verdict");
    for (const fs::path& p : files) {
        std::ifstream in(p);
        std::ostringstream buf;
        buf << in.rdbuf();
        CdReport r = report_from_json(buf.str());
        if (r.fit)
            std::printf("%-24s %10.4g %10.4g %8.4g  %s\n", r.structure.c_str(), r.fit->order,
                        r.fit->coeff, r.fit->r_squared,
                        r.verdict.disproof ? "FAIL-CD" : "inconclusive");
        else
            std::printf("%-24s %10s %10s %8s  %s\n", r.structure.c_str(), "-", "-", "-",
                        r.verdict.disproof ? "FAIL-CD" : "inconclusive");
        for (const CurveSample& cs : r.samples)
            if (cs.ok) csv += r.structure + "," + fmt17(cs.x) + "," + fmt17(cs.value) + "\n";
    }
    if (!csv_path.empty()) atomic_write_file(csv_path, csv);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"almost-Riemannian curvature-dimension disproof toolkit"};
    app.require_subcommand(1);
    app.fallthrough(); // global options may follow the subcommand

    int verbosity = 0;
    int threads = 0;
    std::uint64_t seed = 42;
    app.add_flag("-v,--verbose", verbosity, "increase log detail (repeatable)");
    app.add_option("--threads", threads, "worker threads (default: ARCD_THREADS or hardware)");
    app.add_option("--seed", seed, "seed recorded in reports");

    std::string file, out_path, csv_path;
    std::vector<double> q;

    auto* validate_cmd = app.add_subcommand("validate", "parse and semantically check a structure file");
    validate_cmd->add_option("file", file, "structure file")->required();

    auto* geo = app.add_subcommand("geodesic", "integrate one surface-normal extremal, emit CSV");
    double smax = 0.5, tol = 1e-10;
    int samples = 101;
    geo->add_option("file", file, "structure file")->required();
    geo->add_option("--q", q, "surface point x z1 .. zn (zn must be 0)")->required()->expected(-2);
    geo->add_option("--smax", smax, "arc half-length");
    geo->add_option("--tol", tol, "integrator tolerance");
    geo->add_option("--samples", samples, "CSV row count")->check(CLI::Range(2, 1000000));
    geo->add_option("--out", out_path, "write CSV here instead of stdout");

    auto* dens = app.add_subcommand("density", "density jet at a surface point, emit JSON");
    std::string pipeline = "closed", profile_spec;
    dens->add_option("file", file, "structure file")->required();
    dens->add_option("--q", q, "surface point x z1 .. zn (zn must be 0)")->required()->expected(-2);
    dens->add_option("--pipeline", pipeline, "closed | taylor | both")
        ->check(CLI::IsMember({"closed", "taylor", "both"}));
    dens->add_option("--profile", profile_spec, "density profile grid smin:smax:k");
    dens->add_option("--csv", csv_path, "also write the profile as CSV here");
    dens->add_option("--out", out_path, "write JSON here instead of stdout");

    auto* check = app.add_subcommand("check-cd", "sample the divergence and emit the verdict report");
    std::string xgrid_spec;
    std::vector<double> k_grid;
    check->add_option("file", file, "structure file")->required();
    check->add_option("--xgrid", xgrid_spec, "geometric approach grid from:to:points");
    check->add_option("--K", k_grid, "K thresholds to tabulate")->delimiter(',');
    check->add_option("--pipeline", pipeline, "closed | taylor")
        ->check(CLI::IsMember({"closed", "taylor"}));
    check->add_option("--out", out_path, "also write the JSON report here");

    auto* rep = app.add_subcommand("report", "summarize a directory of check-cd reports");
    rep->add_option("dir", file, "directory holding check-cd JSON files")->required();
    rep->add_option("--csv", csv_path, "write (structure, x, value) plot data here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    log::set_level(verbosity >= 2   ? log::Level::Debug
                   : verbosity == 1 ? log::Level::Info
                                    : log::Level::Quiet);

    try {
        if (validate_cmd->parsed()) return cmd_validate(file);
        if (geo->parsed()) return cmd_geodesic(file, q, smax, tol, samples, out_path);
        if (dens->parsed())
            return cmd_density(file, q, pipeline, profile_spec, csv_path, out_path);
        if (check->parsed())
            return cmd_check_cd(file, xgrid_spec, k_grid, out_path, pipeline, threads, seed);
        if (rep->parsed()) return cmd_report(file, csv_path);
    } catch (const ArError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitUsage;
}
