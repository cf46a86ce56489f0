#include "arcd/cdcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "arcd/util.hpp"

namespace arcd {

std::vector<double> geometric_grid(double from, double to, int k) {
    if (!(from > 0.0) || !(to > 0.0) || k < 2)
        throw ArError(ErrorCode::BadInput, "geometric grid needs positive endpoints and k >= 2");
    std::vector<double> xs(k);
    const double ratio = std::pow(to / from, 1.0 / (k - 1));
    double v = from;
    for (int i = 0; i < k; ++i) {
        xs[i] = v;
        v *= ratio;
    }
    xs.back() = to;
    return xs;
}

std::vector<double> default_x_grid(const ArStructure& s) {
    const double hw = s.chart.half_width(0);
    const double start = std::min(0.4, 0.8 * hw);
    const double end = std::max(5e-3, 1e-4);
    return geometric_grid(start, end, 12);
}

std::vector<CurveSample> sample_curve(const ArStructure& s, std::span<const double> xs,
                                      const CheckConfig& cfg) {
    DensityEngine engine(s);
    const int n = s.n;
    std::vector<CurveSample> out(xs.size());
    log::info("sampling " + std::to_string(xs.size()) + " curve points (" +
              pipeline_name(cfg.pipeline) + std::string(" pipeline)"));
    parallel_for(xs.size(), thread_count(cfg.threads), [&](std::size_t i) {
        CurveSample& cs = out[i];
        cs.x = xs[i];
        std::vector<double> q(n + 1, 0.0);
        q[0] = xs[i];
        try {
            if (!s.chart.contains(q))
                throw ArError(ErrorCode::BadInput,
                              "curve point x = " + std::to_string(xs[i]) +
                                  " lies outside the chart");
            if (std::abs(xs[i]) < 1e-4)
                throw ArError(ErrorCode::BadInput,
                              "curve point x = " + std::to_string(xs[i]) +
                                  " is below the resolvable distance 1e-4");
            cs.value = engine.log_h_second_derivative(q, cfg.pipeline, cfg.fit);
        } catch (const std::exception& e) {
            cs.ok = false;
            cs.error = e.what();
        }
    });
    std::stable_sort(out.begin(), out.end(),
                     [](const CurveSample& a, const CurveSample& b) { return a.x > b.x; });
    std::size_t failed = 0;
    for (const CurveSample& cs : out)
        if (!cs.ok) ++failed;
    if (static_cast<double>(failed) > cfg.max_fail_frac * static_cast<double>(out.size()))
        throw ArError(ErrorCode::SampleFailure,
                      std::to_string(failed) + " of " + std::to_string(out.size()) +
                          " curve samples failed; first: " +
                          (failed ? std::find_if(out.begin(), out.end(),
                                                 [](const CurveSample& c) { return !c.ok; })
                                        ->error
                                  : std::string()));
    return out;
}

SingularityFit fit_singularity(std::span<const CurveSample> samples, int fit_points,
                               int tail_points) {
    SingularityFit fit;
    fit.samples.assign(samples.begin(), samples.end());
    std::stable_sort(fit.samples.begin(), fit.samples.end(),
                     [](const CurveSample& a, const CurveSample& b) { return a.x > b.x; });

    std::vector<const CurveSample*> ok;
    for (const CurveSample& cs : fit.samples)
        if (cs.ok) ok.push_back(&cs);

    std::vector<const CurveSample*> positive;
    for (const CurveSample* cs : ok)
        if (cs->value > 0.0) positive.push_back(cs);
    if (positive.size() > static_cast<std::size_t>(fit_points))
        positive.erase(positive.begin(), positive.end() - fit_points);
    if (positive.size() < 4)
        throw ArError(ErrorCode::InsufficientTail,
                      "only " + std::to_string(positive.size()) +
                          " positive tail samples, need at least 4");

    // Least squares of log(value) against log(x).
    const std::size_t m = positive.size();
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const CurveSample* cs : positive) {
        const double lx = std::log(cs->x), ly = std::log(cs->value);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double denom = m * sxx - sx * sx;
    fit.order = (m * sxy - sx * sy) / denom;
    const double intercept = (sy - fit.order * sx) / m;
    fit.coeff = std::exp(intercept);
    fit.points_used = static_cast<int>(m);

    double ss_res = 0.0, ss_tot = 0.0;
    const double mean_y = sy / m;
    for (const CurveSample* cs : positive) {
        const double ly = std::log(cs->value);
        const double pred = intercept + fit.order * std::log(cs->x);
        ss_res += (ly - pred) * (ly - pred);
        ss_tot += (ly - mean_y) * (ly - mean_y);
    }
    fit.r_squared = ss_tot > 1e-300 ? 1.0 - ss_res / ss_tot : 0.0;

    fit.monotone_tail = false;
    if (ok.size() >= static_cast<std::size_t>(tail_points)) {
        fit.monotone_tail = true;
        for (std::size_t i = ok.size() - tail_points; i + 1 < ok.size(); ++i)
            if (!(ok[i + 1]->value > ok[i]->value)) fit.monotone_tail = false;
    }
    return fit;
}

CdVerdict verdict(const ArStructure& s, const SingularityFit* fit,
                  std::span<const CurveSample> samples, std::span<const double> k_grid) {
    (void)s;
    CdVerdict v;
    v.disproof = fit && fit->order <= -1.5 && fit->coeff > 0.0 && fit->monotone_tail &&
                 fit->r_squared >= 0.99;
    if (v.disproof) {
        std::ostringstream os;
        os << "Divergence certified: the sampled (log h_q)''(0) grows like " << fit->coeff
           << "*x^(" << fit->order << ") along q = (x, 0, ..., 0), so for every real K some "
           << "sampled ray already has (log h_q)''(0) > -K and the one-dimensional concavity "
           << "inequality fails for every N in (1, infinity). CD(K, N) does not hold for any "
           << "K in R, N in (1, infinity).";
        v.statement = os.str();
    } else {
        v.statement =
            "The check is inconclusive: no certified divergence of (log h_q)''(0) at the "
            "sampled resolution. This method only disproves CD(K, N) by detecting "
            "divergence; it never certifies that CD holds.";
    }
    for (double K : k_grid) {
        KEntry e;
        e.K = K;
        for (const CurveSample& cs : samples) {
            if (!cs.ok) continue;
            if (cs.value > -K) {
                e.satisfied = true;
                e.x_threshold = cs.x;
                break; // samples descend in x, so the first hit is the largest x
            }
        }
        v.per_k.push_back(e);
    }
    return v;
}

CdReport run_check(const ArStructure& s, std::span<const double> x_grid,
                   std::span<const double> k_grid, const CheckConfig& cfg) {
    CdReport report;
    report.structure = s.name;
    report.pipeline = pipeline_name(cfg.pipeline);
    report.seed = cfg.seed;
    report.samples = sample_curve(s, x_grid, cfg);
    try {
        report.fit = fit_singularity(report.samples, cfg.fit_points, cfg.tail_points);
    } catch (const ArError& e) {
        if (e.code() != ErrorCode::InsufficientTail) throw;
        log::info(std::string("no singularity fit: ") + e.what());
    }
    report.verdict = verdict(s, report.fit ? &*report.fit : nullptr, report.samples, k_grid);
    return report;
}

namespace {

void escape_json(const std::string& in, std::string& out) {
    for (char c : in) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default:
            if (static_cast<unsigned char>(c) < 0x20) {
                char buf[8];
                std::snprintf(buf, sizeof buf, "\\u%04x", c);
                out += buf;
            } else {
                out += c;
            }
        }
    }
}

void append_kv(std::string& out, const char* key, const std::string& rendered) {
    out += '"';
    out += key;
    out += "\": ";
    out += rendered;
}

std::string json_str(const std::string& s) {
    std::string out = "\"";
    escape_json(s, out);
    out += '"';
    return out;
}

} // namespace

std::string report_to_json(const CdReport& report) {
    std::string out = "{\n  ";
    append_kv(out, "structure", json_str(report.structure));
    out += ",\n  ";
    append_kv(out, "pipeline", json_str(report.pipeline));
    out += ",\n  ";
    append_kv(out, "seed", std::to_string(report.seed));
    out += ",\n  \"samples\": [\n";
    for (std::size_t i = 0; i < report.samples.size(); ++i) {
        const CurveSample& cs = report.samples[i];
        out += "    {";
        append_kv(out, "x", fmt17(cs.x));
        out += ", ";
        append_kv(out, "value", cs.ok ? fmt17(cs.value) : std::string("null"));
        out += ", ";
        append_kv(out, "ok", cs.ok ? "true" : "false");
        if (!cs.ok) {
            out += ", ";
            append_kv(out, "error", json_str(cs.error));
        }
        out += i + 1 < report.samples.size() ? "},\n" : "}\n";
    }
    out += "  ],\n  \"fit\": ";
    if (report.fit) {
        const SingularityFit& f = *report.fit;
        out += "{";
        append_kv(out, "order", fmt17(f.order));
        out += ", ";
        append_kv(out, "coeff", fmt17(f.coeff));
        out += ", ";
        append_kv(out, "r2", fmt17(f.r_squared));
        out += ", ";
        append_kv(out, "monotone", f.monotone_tail ? "true" : "false");
        out += ", ";
        append_kv(out, "points_used", std::to_string(f.points_used));
        out += "}";
    } else {
        out += "null";
    }
    out += ",\n  \"verdict\": {";
    append_kv(out, "disproof", report.verdict.disproof ? "true" : "false");
    out += ", ";
    append_kv(out, "statement", json_str(report.verdict.statement));
    out += "},\n  \"per_K\": [\n";
    for (std::size_t i = 0; i < report.verdict.per_k.size(); ++i) {
        const KEntry& e = report.verdict.per_k[i];
        out += "    {";
        append_kv(out, "K", fmt17(e.K));
        out += ", ";
        append_kv(out, "satisfied", e.satisfied ? "true" : "false");
        out += ", ";
        append_kv(out, "x_threshold", e.satisfied ? fmt17(e.x_threshold) : std::string("null"));
        out += i + 1 < report.verdict.per_k.size() ? "},\n" : "}\n";
    }
    out += "  ]\n}\n";
    return out;
}

CdReport report_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ArError(ErrorCode::ParseError, std::string("bad report JSON: ") + e.what());
    }
    try {
        CdReport r;
        r.structure = j.at("structure").get<std::string>();
        r.pipeline = j.value("pipeline", std::string("closed"));
        r.seed = j.value("seed", std::uint64_t{0});
        for (const auto& sj : j.at("samples")) {
            CurveSample cs;
            cs.x = sj.at("x").get<double>();
            cs.ok = sj.at("ok").get<bool>();
            if (cs.ok) cs.value = sj.at("value").get<double>();
            if (sj.contains("error")) cs.error = sj["error"].get<std::string>();
            r.samples.push_back(std::move(cs));
        }
        if (!j.at("fit").is_null()) {
            SingularityFit f;
            f.order = j["fit"].at("order").get<double>();
            f.coeff = j["fit"].at("coeff").get<double>();
            f.r_squared = j["fit"].at("r2").get<double>();
            f.monotone_tail = j["fit"].at("monotone").get<bool>();
            f.points_used = j["fit"].value("points_used", 0);
            f.samples = r.samples;
            r.fit = std::move(f);
        }
        r.verdict.disproof = j.at("verdict").at("disproof").get<bool>();
        r.verdict.statement = j.at("verdict").at("statement").get<std::string>();
        for (const auto& kj : j.at("per_K")) {
            KEntry e;
            e.K = kj.at("K").get<double>();
            e.satisfied = kj.at("satisfied").get<bool>();
            if (e.satisfied) e.x_threshold = kj.at("x_threshold").get<double>();
            r.verdict.per_k.push_back(e);
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ArError(ErrorCode::ParseError, std::string("report JSON missing fields: ") + e.what());
    }
}

} // namespace arcd
