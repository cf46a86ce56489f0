#include "arcd/structure.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "arcd/linalg.hpp"

namespace arcd {

using nlohmann::json;

double ArStructure::det_a(std::span<const double> point) const {
    Mat mat(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) mat(i, j) = expr::evaluate(a(i, j), point);
    return det(mat);
}

namespace {

std::string trim(std::string_view v) {
    size_t b = v.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    size_t e = v.find_last_not_of(" \t\r");
    return std::string(v.substr(b, e - b + 1));
}

[[noreturn]] void bad(const std::string& name, int line, const std::string& what) {
    throw ArError(ErrorCode::ParseError,
                  name + ":" + std::to_string(line) + ": " + what);
}

} // namespace

ArStructure parse_structure(std::string_view text, std::string name) {
    ArStructure s;
    s.name = std::move(name);
    json a_rows, chart_vals;
    bool saw_n = false, saw_a = false, saw_chart = false, saw_reg = false;
    std::string measure_src = "1";

    std::istringstream in{std::string(text)};
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        if (size_t h = raw.find('#'); h != std::string::npos) raw.erase(h);
        std::string line = trim(raw);
        if (line.empty()) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos) bad(s.name, lineno, "expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        json v;
        try {
            v = json::parse(value);
        } catch (const json::exception& e) {
            bad(s.name, lineno, "bad value for '" + key + "': " + e.what());
        }
        if (key == "n") {
            if (!v.is_number_integer() || v.get<int>() < 1)
                bad(s.name, lineno, "n must be an integer >= 1");
            s.n = v.get<int>();
            saw_n = true;
        } else if (key == "A") {
            if (!v.is_array()) bad(s.name, lineno, "A must be a list of expression strings");
            a_rows = v;
            saw_a = true;
        } else if (key == "measure") {
            if (!v.is_string()) bad(s.name, lineno, "measure must be an expression string");
            measure_src = v.get<std::string>();
        } else if (key == "regularity") {
            if (!v.is_string()) bad(s.name, lineno, "regularity must be a string");
            std::string r = v.get<std::string>();
            if (r == "general2d") {
                s.regularity = Regularity::General2D;
            } else if (r == "general") {
                s.regularity = Regularity::General;
            } else if (r.rfind("strongly_regular:", 0) == 0) {
                s.regularity = Regularity::StronglyRegular;
                try {
                    s.level = std::stoi(r.substr(17));
                } catch (...) {
                    bad(s.name, lineno, "bad strongly_regular level");
                }
                if (s.level < 1) bad(s.name, lineno, "strongly_regular level must be >= 1");
            } else {
                bad(s.name, lineno, "unknown regularity '" + r + "'");
            }
            saw_reg = true;
        } else if (key == "chart") {
            if (!v.is_array()) bad(s.name, lineno, "chart must be a list of reals");
            chart_vals = v;
            saw_chart = true;
        } else {
            bad(s.name, lineno, "unknown key '" + key + "'");
        }
    }

    if (!saw_n) throw ArError(ErrorCode::ParseError, s.name + ": missing key 'n'");
    if (!saw_a) throw ArError(ErrorCode::ParseError, s.name + ": missing key 'A'");
    const int n = s.n;
    if (static_cast<int>(a_rows.size()) != n * n)
        throw ArError(ErrorCode::ParseError,
                      s.name + ": A has " + std::to_string(a_rows.size()) +
                          " entries, expected n^2 = " + std::to_string(n * n));
    for (const auto& entry : a_rows) {
        if (!entry.is_string())
            throw ArError(ErrorCode::ParseError, s.name + ": A entries must be strings");
        ExprPtr e = expr::parse(entry.get<std::string>());
        if (expr::max_coord_index(e) > n)
            throw ArError(ErrorCode::ParseError,
                          s.name + ": expression '" + entry.get<std::string>() +
                              "' uses a coordinate beyond z" + std::to_string(n));
        s.A.push_back(std::move(e));
    }
    s.m = expr::parse(measure_src);
    if (expr::max_coord_index(s.m) > n)
        throw ArError(ErrorCode::ParseError, s.name + ": measure uses a coordinate beyond z" +
                                                 std::to_string(n));
    if (!saw_reg) s.regularity = (n == 1) ? Regularity::General2D : Regularity::General;
    if (s.regularity == Regularity::General2D && n != 1)
        throw ArError(ErrorCode::ParseError, s.name + ": regularity general2d requires n = 1");

    if (saw_chart) {
        if (static_cast<int>(chart_vals.size()) != 2 * (n + 1))
            throw ArError(ErrorCode::ParseError,
                          s.name + ": chart needs " + std::to_string(2 * (n + 1)) + " reals");
        for (int axis = 0; axis <= n; ++axis) {
            double lo = chart_vals[2 * axis].get<double>();
            double hi = chart_vals[2 * axis + 1].get<double>();
            if (!(lo < 0.0 && 0.0 < hi))
                throw ArError(ErrorCode::ParseError,
                              s.name + ": chart must contain the origin strictly inside");
            s.chart.lo.push_back(lo);
            s.chart.hi.push_back(hi);
        }
    } else {
        s.chart.lo.assign(n + 1, -1.0);
        s.chart.hi.assign(n + 1, 1.0);
    }
    return s;
}

ArStructure parse_structure_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArError(ErrorCode::IoError, "cannot read '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_structure(buf.str(), std::filesystem::path(path).stem().string());
}

namespace {

/** grid positions on [lo, hi], endpoints included. */
std::vector<double> axis_grid(double lo, double hi, int grid) {
    std::vector<double> xs(grid);
    for (int i = 0; i < grid; ++i) xs[i] = lo + (hi - lo) * i / (grid - 1);
    return xs;
}

/** Walks the full grid over the given axes, calling fn(point). */
void for_grid(const Chart& chart, std::span<const int> axes, int grid,
              std::vector<double>& point, const std::function<void(const std::vector<double>&)>& fn,
              size_t depth = 0) {
    if (depth == axes.size()) {
        fn(point);
        return;
    }
    int axis = axes[depth];
    for (double v : axis_grid(chart.lo[axis], chart.hi[axis], grid)) {
        point[axis] = v;
        for_grid(chart, axes, grid, point, fn, depth + 1);
    }
}

} // namespace

std::vector<Diagnostic> validate(const ArStructure& s, const ValidateOptions& opts) {
    std::vector<Diagnostic> out;
    const int n = s.n;
    std::vector<double> origin(n + 1, 0.0);

    // The origin must lie on the singular set.
    try {
        double d0 = s.det_a(origin);
        if (std::abs(d0) > opts.origin_tol)
            out.push_back({ErrorCode::OriginNotSingular, Severity::Error,
                           "det A(origin) = " + std::to_string(d0) + ", expected 0"});
    } catch (const ArError& e) {
        out.push_back({ErrorCode::OriginNotSingular, Severity::Error,
                       std::string("det A(origin) failed to evaluate: ") + e.what()});
    }

    // Frame nondegeneracy on the sampled surface away from the x-slice
    // through the characteristic point.
    {
        const double x_min = opts.x_min_frac * s.chart.half_width(0);
        std::vector<int> axes;
        for (int axis = 0; axis < n; ++axis) axes.push_back(axis); // x, z_1..z_{n-1}
        std::vector<double> p(n + 1, 0.0);
        bool violated = false;
        std::string where;
        for_grid(s.chart, axes, opts.grid, p, [&](const std::vector<double>& q) {
            if (violated || std::abs(q[0]) <= x_min) return;
            double d;
            try {
                d = s.det_a(q);
            } catch (const ArError&) {
                d = 0.0;
            }
            if (std::abs(d) <= opts.zero_tol) {
                violated = true;
                std::ostringstream os;
                os << "det A vanishes on the surface at x = " << q[0];
                where = os.str();
            }
        });
        if (violated) out.push_back({ErrorCode::H1Violation, Severity::Error, where});
    }

    // Measure density strictly positive over the sampled chart.
    {
        std::vector<int> axes;
        for (int axis = 0; axis <= n; ++axis) axes.push_back(axis);
        std::vector<double> p(n + 1, 0.0);
        bool failed = false;
        std::string why;
        for_grid(s.chart, axes, opts.grid, p, [&](const std::vector<double>& q) {
            if (failed) return;
            try {
                double v = expr::evaluate(s.m, q);
                if (!(v > 0.0)) {
                    failed = true;
                    std::ostringstream os;
                    os << "measure density = " << v << " at x = " << q[0];
                    why = os.str();
                }
            } catch (const ArError& e) {
                failed = true;
                why = std::string("measure failed to evaluate: ") + e.what();
            }
        });
        if (failed) out.push_back({ErrorCode::MeasureNotPositive, Severity::Error, why});
    }

    // Declared power-law class: every a_ij vanishes to order >= l along
    // x at sampled z, and the rescaled frame a_ij / x^l stays
    // nondegenerate on {x = 0} (its value there is the l-th x-derivative
    // over l!).
    if (s.regularity == Regularity::StronglyRegular) {
        const int l = s.level;
        double lfact = 1.0;
        for (int i = 2; i <= l; ++i) lfact *= i;
        std::vector<ExprPtr> rescaled(static_cast<size_t>(n) * n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                ExprPtr d = s.a(i, j);
                for (int k = 0; k < l; ++k) d = expr::diff(d, 0);
                rescaled[static_cast<size_t>(i) * n + j] = expr::div(d, expr::literal(lfact));
            }

        std::vector<int> axes;
        for (int axis = 1; axis <= n; ++axis) axes.push_back(axis);
        std::vector<double> p(n + 1, 0.0);
        bool failed = false;
        std::string why;
        for_grid(s.chart, axes, opts.grid, p, [&](const std::vector<double>& q) {
            if (failed) return;
            for (int i = 0; i < n && !failed; ++i)
                for (int j = 0; j < n && !failed; ++j) {
                    auto ord = expr::vanishing_order(s.a(i, j), 0, q, l - 1, opts.zero_tol);
                    if (ord.has_value()) {
                        failed = true;
                        std::ostringstream os;
                        os << "a[" << i + 1 << "][" << j + 1 << "] vanishes to order " << *ord
                           << " < " << l << " along x at z = (";
                        for (int a = 1; a <= n; ++a) os << (a > 1 ? "," : "") << q[a];
                        os << ")";
                        why = os.str();
                    }
                }
            if (failed) return;
            Mat hat(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    hat(i, j) = expr::evaluate(rescaled[static_cast<size_t>(i) * n + j], q);
            if (std::abs(det(hat)) <= opts.zero_tol) {
                failed = true;
                std::ostringstream os;
                os << "rescaled frame degenerates at x = 0, z1 = " << q[1];
                why = os.str();
            }
        });
        if (failed) out.push_back({ErrorCode::StronglyRegularMismatch, Severity::Error, why});
    }

    return out;
}

ArStructure load_structure(const std::string& path, const ValidateOptions& opts) {
    ArStructure s = parse_structure_file(path);
    for (const Diagnostic& d : validate(s, opts))
        if (d.severity == Severity::Error) throw ArError(d.code, s.name + ": " + d.message);
    return s;
}

SurfaceFields surface_fields(const ArStructure& s) {
    const int n = s.n;
    SurfaceFields f;
    f.n = n;
    f.alpha.reserve(n);
    for (int i = 0; i < n; ++i) {
        ExprPtr sum = expr::literal(0.0);
        for (int k = 0; k < n; ++k) sum = expr::add(sum, expr::mul(s.a(k, i), s.a(k, n - 1)));
        f.alpha.push_back(std::move(sum));
    }
    f.beta_sq = f.alpha.back();
    f.beta = expr::sqrt(f.beta_sq);
    return f;
}

int detect_step_2d(const ArStructure& s) {
    if (s.n != 1)
        throw ArError(ErrorCode::WrongRegularityClass, "step detection requires n = 1");
    std::vector<double> origin{0.0, 0.0};
    auto ord = expr::vanishing_order(s.a(0, 0), 0, origin, 10);
    if (!ord)
        throw ArError(ErrorCode::StepUndetected,
                      "a11 vanishes along x at the origin to every order probed (max 10)");
    return 1 + *ord;
}

} // namespace arcd
