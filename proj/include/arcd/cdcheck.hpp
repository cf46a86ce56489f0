#ifndef ARCD_CDCHECK_HPP
#define ARCD_CDCHECK_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "arcd/disintegration.hpp"
#include "arcd/structure.hpp"

namespace arcd {

/** One point of the approach curve q = (x, 0, ..., 0). */
struct CurveSample {
    double x = 0.0;
    double value = 0.0;    ///< (log h_q)''(0), measure term included
    bool ok = true;
    std::string error;     ///< diagnostic when !ok
};

/** Log-log power-law fit of the sampled divergence. */
struct SingularityFit {
    std::vector<CurveSample> samples; ///< the full curve, x descending
    double order = 0.0;               ///< fitted exponent p in c*x^p
    double coeff = 0.0;               ///< fitted leading constant c
    double r_squared = 0.0;
    bool monotone_tail = false;       ///< strictly increasing as x decreases
    int points_used = 0;
};

struct KEntry {
    double K = 0.0;
    bool satisfied = false;   ///< some sampled value exceeds -K
    double x_threshold = 0.0; ///< largest sampled x with value > -K (when satisfied)
};

struct CdVerdict {
    bool disproof = false;
    std::string statement;
    std::vector<KEntry> per_k;
};

struct CheckConfig {
    Pipeline pipeline = Pipeline::ClosedForm;
    FitParams fit;
    int threads = 0;            ///< 0: ARCD_THREADS env var, then hardware count
    std::uint64_t seed = 42;    ///< recorded in reports; grids are deterministic
    int fit_points = 6;         ///< order fit uses the smallest-x positive samples
    int tail_points = 4;        ///< monotonicity window
    double max_fail_frac = 0.2; ///< sample failures tolerated before aborting
};

/** k-point geometric grid from `from` down (or up) to `to`, inclusive. */
std::vector<double> geometric_grid(double from, double to, int k);

/** Default approach grid: 12 geometric points, 0.4 to 5e-3, clipped to the chart. */
std::vector<double> default_x_grid(const ArStructure& s);

inline std::vector<double> default_k_grid() { return {-100.0, -10.0, 0.0, 10.0, 100.0}; }

/**
 * Evaluates (log h_q)''(0) at q = (x, 0, ..., 0) for each grid x,
 * in parallel.  Failed points are recorded with ok = false; more than
 * max_fail_frac failures raise ArError(SampleFailure).
 */
std::vector<CurveSample> sample_curve(const ArStructure& s, std::span<const double> xs,
                                      const CheckConfig& cfg = {});

/**
 * Power-law fit over the positive tail (the fit_points smallest-x
 * samples with positive value).  Throws ArError(InsufficientTail)
 * when fewer than 4 such samples exist.
 */
SingularityFit fit_singularity(std::span<const CurveSample> samples, int fit_points = 6,
                               int tail_points = 4);

/**
 * Verdict from the soundness gate: a disproof certificate requires
 * order <= -1.5, coeff > 0, monotone tail, and r^2 >= 0.99; anything
 * else is inconclusive.  Pass fit = nullptr when no fit exists.
 * per-K entries report the largest sampled x with value > -K.
 */
CdVerdict verdict(const ArStructure& s, const SingularityFit* fit,
                  std::span<const CurveSample> samples, std::span<const double> k_grid);

struct CdReport {
    std::string structure;
    std::string pipeline;
    std::uint64_t seed = 0;
    std::vector<CurveSample> samples;
    std::optional<SingularityFit> fit;
    CdVerdict verdict;
};

/** Full check: sample, fit (absent on InsufficientTail), verdict. */
CdReport run_check(const ArStructure& s, std::span<const double> x_grid,
                   std::span<const double> k_grid, const CheckConfig& cfg = {});

/**
 * Deterministic JSON rendering: stable key order, floats in fixed
 * 17-significant-digit form, no locale dependence.
 */
std::string report_to_json(const CdReport& report);

/** Reads a report back; accepts exactly what report_to_json writes. */
CdReport report_from_json(const std::string& text);

} // namespace arcd

#endif
