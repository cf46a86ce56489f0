#ifndef ARCD_STRUCTURE_HPP
#define ARCD_STRUCTURE_HPP

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "arcd/expr.hpp"

namespace arcd {

/** Axis-aligned working box; axis 0 is x, axes 1..n are z_1..z_n. */
struct Chart {
    std::vector<double> lo, hi;
    int axes() const { return static_cast<int>(lo.size()); }
    double half_width(int axis) const { return 0.5 * (hi[axis] - lo[axis]); }
    bool contains(std::span<const double> p, double slack = 0.0) const {
        for (size_t i = 0; i < lo.size(); ++i)
            if (p[i] < lo[i] - slack || p[i] > hi[i] + slack) return false;
        return true;
    }
};

enum class Regularity { General2D, StronglyRegular, General };

/**
 * An almost-Riemannian structure in normal coordinates: the frame is
 * X_0 = d/dx, X_i = sum_j a_ij(x,z) d/dz_j, the reference hypersurface
 * is {z_n = 0}, and its characteristic point sits at the origin.
 */
struct ArStructure {
    std::string name;
    int n = 0;                 ///< z-dimension; ambient dimension is n+1
    std::vector<ExprPtr> A;    ///< row-major n*n frame coefficients
    ExprPtr m;                 ///< measure density, positive on the chart
    Regularity regularity = Regularity::General;
    int level = 0;             ///< power l for Regularity::StronglyRegular
    Chart chart;

    const ExprPtr& a(int i, int j) const { return A[static_cast<size_t>(i) * n + j]; }

    /** Numeric det A at a point (x, z_1..z_n). */
    double det_a(std::span<const double> point) const;
};

/**
 * The scalar surface data attached to {z_n = 0}: beta is the positive
 * normalization with beta^2 = sum_k a_kn^2 and alpha_i = sum_k a_ki a_kn.
 * alpha has n entries; alpha[n-1] coincides with beta_sq as a tree.
 */
struct SurfaceFields {
    int n = 0;
    std::vector<ExprPtr> alpha;
    ExprPtr beta_sq;
    ExprPtr beta;
};

enum class Severity { Warning, Error };

struct Diagnostic {
    ErrorCode code;
    Severity severity;
    std::string message;
};

struct ValidateOptions {
    int grid = 17;             ///< sample points per axis
    double origin_tol = 1e-9;  ///< |det A(0)| above this fails the singularity check
    double x_min_frac = 1e-3;  ///< surface sampling skips |x| below this fraction of the half-width
    double zero_tol = 1e-9;    ///< threshold for "vanishes" in the remaining checks
};

/**
 * Parses the key-value structure format: one `key = value` pair per
 * line, values in JSON syntax, `#` starting a comment.  Recognized
 * keys: n, A (row-major list of n*n expression strings), measure
 * (expression string, default "1"), regularity ("general2d",
 * "strongly_regular:<l>", "general"; default general2d when n = 1,
 * general otherwise), chart (list of 2(n+1) reals, min/max per axis,
 * default [-1,1] per axis).  Throws ArError(ParseError) on malformed
 * input; performs no semantic validation.
 */
ArStructure parse_structure(std::string_view text, std::string name);

/** Reads and parses a structure file; the name is the file stem. */
ArStructure parse_structure_file(const std::string& path);

/**
 * Runs the semantic checks on a sampling grid: the origin is singular,
 * the frame is nondegenerate on the sampled surface away from x = 0,
 * the measure density is strictly positive on the sampled chart, and a
 * declared power-law regularity class actually holds.  Returns all
 * findings; an empty result means the structure passed.
 */
std::vector<Diagnostic> validate(const ArStructure& s, const ValidateOptions& opts = {});

/**
 * parse_structure_file followed by validate; throws ArError with the
 * first error-severity diagnostic, so a returned structure is valid.
 */
ArStructure load_structure(const std::string& path, const ValidateOptions& opts = {});

/** Builds the surface scalars; beta is returned as the positive root. */
SurfaceFields surface_fields(const ArStructure& s);

/**
 * Step of a 2D structure (n = 1): one plus the vanishing order of
 * a_11 along x at the origin.  Throws ArError(WrongRegularityClass)
 * unless n = 1 and ArError(StepUndetected) when no derivative up to
 * order 10 is nonzero there.
 */
int detect_step_2d(const ArStructure& s);

} // namespace arcd

#endif
