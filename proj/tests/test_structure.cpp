#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "arcd/structure.hpp"

using namespace arcd;

namespace {

std::string fixture(const char* name) {
    return std::string(ARCD_STRUCTURES_DIR) + "/" + name;
}

bool has_error(const std::vector<Diagnostic>& diags, ErrorCode code) {
    for (const Diagnostic& d : diags)
        if (d.code == code && d.severity == Severity::Error) return true;
    return false;
}

} // namespace

TEST_CASE("bundled fixtures parse and validate") {
    for (const char* name : {"grushin.ar", "grushin-x2.ar", "grushin-x3.ar",
                             "grushin-expm.ar", "xid2.ar", "r4.ar"}) {
        CAPTURE(name);
        ArStructure s = load_structure(fixture(name));
        CHECK(!s.name.empty());
        CHECK(s.n >= 1);
        CHECK(static_cast<int>(s.A.size()) == s.n * s.n);
        CHECK(s.chart.axes() == s.n + 1);
    }
}

TEST_CASE("the flat fixture fails the singular-origin check") {
    ArStructure s = parse_structure_file(fixture("flat.ar"));
    auto diags = validate(s);
    CHECK(has_error(diags, ErrorCode::OriginNotSingular));
    CHECK_THROWS_AS((void)load_structure(fixture("flat.ar")), ArError);
}

TEST_CASE("parser handles defaults, comments, and bad input") {
    ArStructure s = parse_structure("# comment only on this line\nn = 1\nA = [\"x\"] # trailing\n", "t");
    CHECK(s.n == 1);
    CHECK(s.regularity == Regularity::General2D);
    CHECK(expr::is_constant(s.m));
    CHECK(s.chart.lo == std::vector<double>{-1.0, -1.0});
    CHECK(s.chart.hi == std::vector<double>{1.0, 1.0});

    ArStructure s3 = parse_structure("n = 3\nA = [\"1\",\"0\",\"0\",\"0\",\"1\",\"0\",\"0\",\"0\",\"x\"]\n", "t3");
    CHECK(s3.regularity == Regularity::General);

    CHECK_THROWS_AS((void)parse_structure("A = [\"x\"]\n", "t"), ArError);          // missing n
    CHECK_THROWS_AS((void)parse_structure("n = 1\n", "t"), ArError);                  // missing A
    CHECK_THROWS_AS((void)parse_structure("n = 2\nA = [\"x\"]\n", "t"), ArError);   // wrong count
    CHECK_THROWS_AS((void)parse_structure("n = 0\nA = []\n", "t"), ArError);
    CHECK_THROWS_AS((void)parse_structure("n = 1\nA = [\"x\"]\nbogus = 1\n", "t"), ArError);
    CHECK_THROWS_AS((void)parse_structure("n = 1\nA = [\"x\"]\nno equals sign\n", "t"), ArError);
    CHECK_THROWS_AS((void)parse_structure("n = 1\nA = [\"x(\"]\n", "t"), ArError);  // bad expression
    CHECK_THROWS_AS((void)parse_structure("n = 1\nA = [\"z2\"]\n", "t"), ArError);  // coord out of range
    CHECK_THROWS_AS((void)parse_structure("n = 1\nA = [\"x\"]\nmeasure = \"z2\"\n", "t"), ArError);
    CHECK_THROWS_AS((void)parse_structure("n = 2\nA = [\"x\",\"0\",\"0\",\"x\"]\nregularity = \"general2d\"\n", "t"),
                    ArError);                                                          // general2d needs n = 1
    CHECK_THROWS_AS((void)parse_structure("n = 1\nA = [\"x\"]\nregularity = \"weird\"\n", "t"), ArError);
    CHECK_THROWS_AS((void)parse_structure("n = 1\nA = [\"x\"]\nregularity = \"strongly_regular:0\"\n", "t"),
                    ArError);
    CHECK_THROWS_AS((void)parse_structure("n = 1\nA = [\"x\"]\nchart = [0, 1, -1, 1]\n", "t"),
                    ArError);                                                          // origin on the boundary
    CHECK_THROWS_AS((void)parse_structure("n = 1\nA = [\"x\"]\nchart = [-1, 1]\n", "t"), ArError);
}

TEST_CASE("validate flags each failure mode") {
    // Frame degenerates on the surface away from x = 0.
    ArStructure h1 = parse_structure("n = 1\nA = [\"x * (x - 0.5)\"]\n", "h1");
    CHECK(has_error(validate(h1), ErrorCode::H1Violation));

    // Measure hits zero inside the chart.
    ArStructure meas = parse_structure("n = 1\nA = [\"x\"]\nmeasure = \"x + 2\"\nchart = [-3, 3, -1, 1]\n", "meas");
    CHECK(has_error(validate(meas), ErrorCode::MeasureNotPositive));

    // Declared power too high: a11 = x only vanishes to first order.
    ArStructure sr = parse_structure(
        "n = 2\nA = [\"x\", \"0\", \"0\", \"x^2\"]\nregularity = \"strongly_regular:2\"\n", "sr");
    CHECK(has_error(validate(sr), ErrorCode::StronglyRegularMismatch));

    // Rescaled frame still degenerate at x = 0 (rank drops in the hat matrix).
    ArStructure sr2 = parse_structure(
        "n = 2\nA = [\"x\", \"x\", \"x\", \"x\"]\nregularity = \"strongly_regular:1\"\n", "sr2");
    CHECK(has_error(validate(sr2), ErrorCode::StronglyRegularMismatch));

    // A clean strongly regular declaration passes.
    ArStructure ok = parse_structure(
        "n = 2\nA = [\"x\", \"0\", \"0\", \"x\"]\nregularity = \"strongly_regular:1\"\n", "ok");
    CHECK(validate(ok).empty());
}

TEST_CASE("surface fields satisfy beta^2 = sum_k a_kn^2 pointwise") {
    std::mt19937_64 rng(777);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (const char* name : {"grushin.ar", "xid2.ar", "r4.ar"}) {
        CAPTURE(name);
        ArStructure s = load_structure(fixture(name));
        SurfaceFields f = surface_fields(s);
        REQUIRE(static_cast<int>(f.alpha.size()) == s.n);
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<double> p(s.n + 1);
            for (double& v : p) v = u(rng);
            double direct = 0.0;
            for (int k = 0; k < s.n; ++k) {
                double akn = expr::evaluate(s.a(k, s.n - 1), p);
                direct += akn * akn;
            }
            double via_tree = expr::evaluate(f.beta_sq, p);
            CHECK(via_tree == doctest::Approx(direct).epsilon(1e-12).scale(1.0));
            if (direct > 0.0)
                CHECK(expr::evaluate(f.beta, p) == doctest::Approx(std::sqrt(direct)).epsilon(1e-12));
            // alpha_i = sum_k a_ki a_kn
            for (int i = 0; i < s.n; ++i) {
                double ai = 0.0;
                for (int k = 0; k < s.n; ++k)
                    ai += expr::evaluate(s.a(k, i), p) * expr::evaluate(s.a(k, s.n - 1), p);
                CHECK(expr::evaluate(f.alpha[i], p) == doctest::Approx(ai).epsilon(1e-12).scale(1.0));
            }
        }
    }
}

TEST_CASE("step detection on 2D structures") {
    CHECK(detect_step_2d(load_structure(fixture("grushin.ar"))) == 2);
    CHECK(detect_step_2d(load_structure(fixture("grushin-x2.ar"))) == 3);
    CHECK(detect_step_2d(load_structure(fixture("grushin-x3.ar"))) == 4);
    CHECK(detect_step_2d(parse_structure("n = 1\nA = [\"x^3 + x*z1\"]\n", "mixed")) == 4);
    CHECK(detect_step_2d(parse_structure("n = 1\nA = [\"exp(x) - 1\"]\n", "soft")) == 2);

    CHECK_THROWS_AS((void)detect_step_2d(load_structure(fixture("r4.ar"))), ArError);
    try {
        (void)detect_step_2d(load_structure(fixture("r4.ar")));
    } catch (const ArError& e) {
        CHECK(e.code() == ErrorCode::WrongRegularityClass);
    }
    try {
        (void)detect_step_2d(parse_structure("n = 1\nA = [\"0\"]\n", "degenerate"));
        FAIL("expected StepUndetected");
    } catch (const ArError& e) {
        CHECK(e.code() == ErrorCode::StepUndetected);
    }
}

TEST_CASE("strongly regular rescaling stays bounded near x = 0") {
    // For xid2 the level is 1, so beta / |x| should approach a positive
    // limit along x -> 0 instead of blowing up or vanishing.
    ArStructure s = load_structure(fixture("xid2.ar"));
    SurfaceFields f = surface_fields(s);
    for (double x : {1e-2, 1e-4, 1e-6}) {
        std::vector<double> p{x, 0.3, 0.0};
        double ratio = expr::evaluate(f.beta, p) / std::pow(std::abs(x), s.level);
        CHECK(ratio == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("chart geometry helpers") {
    ArStructure s = parse_structure("n = 1\nA = [\"x\"]\nchart = [-2, 2, -0.5, 0.5]\n", "c");
    CHECK(s.chart.half_width(0) == doctest::Approx(2.0));
    CHECK(s.chart.half_width(1) == doctest::Approx(0.5));
    std::vector<double> inside{1.9, 0.0};
    std::vector<double> outside{2.1, 0.0};
    CHECK(s.chart.contains(inside));
    CHECK(!s.chart.contains(outside));
    CHECK(s.chart.contains(outside, 0.2));
}
