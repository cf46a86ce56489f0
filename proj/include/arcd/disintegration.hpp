#ifndef ARCD_DISINTEGRATION_HPP
#define ARCD_DISINTEGRATION_HPP

#include <memory>
#include <span>
#include <vector>

#include "arcd/hamiltonian.hpp"
#include "arcd/linalg.hpp"
#include "arcd/structure.hpp"

namespace arcd {

enum class Pipeline { ClosedForm, NumericTaylor };

inline const char* pipeline_name(Pipeline p) {
    return p == Pipeline::ClosedForm ? "closed" : "taylor";
}

/** Tuning of the NumericTaylor pipeline. */
struct FitParams {
    int half_points = 10;     ///< stencil has 2*half_points + 1 arc samples
    int degree = 6;           ///< polynomial degree of the per-component fit
    double s0_cap = 0.02;     ///< arc half-length cap
    double s0_frac = 0.05;    ///< arc half-length as a fraction of the base scale;
                              ///< kept short so that degree-6 truncation stays far
                              ///< below the jet tolerances even for steep frames
    double step_scale = 1e-5; ///< base-point perturbation h = step_scale * |x_q|
    double arc_tol = 1e-12;   ///< integrator tolerance for fitted arcs
    double cond_limit = 1e8;  ///< FitConditioning threshold on the fit matrix
};

/**
 * The s = 0 jet of the disintegration density at a surface point: the
 * geodesic derivative fields, the moving-frame matrices, and the
 * second log-derivative split into its trace and measure parts.
 */
struct DensityJet {
    std::vector<double> q;           ///< base point (x, z_1..z_{n-1}, 0)
    std::vector<double> grad_delta;  ///< (0, beta_1..beta_{n-1}, beta)
    std::vector<double> f;           ///< second s-derivative components
    double h_n = 0.0;                ///< last third-derivative component
    std::vector<double> h_full;      ///< all of h; NumericTaylor only, else empty
    Mat B0, B1, B2;                  ///< frame matrix and its first two s-derivatives
    double trace_term = 0.0;         ///< tr(-(B0^-1 B1)^2 + B0^-1 B2)
    double measure_term = 0.0;       ///< (log m along the geodesic)''(0)
    double log_h_second = 0.0;       ///< trace_term + measure_term
    Pipeline pipeline = Pipeline::ClosedForm;
};

struct ProfilePoint {
    double s = 0.0;
    double h = 0.0;
};

/**
 * Density computations for one structure.  Construction precomputes
 * the symbolic closed forms (and their tangential derivatives), so an
 * engine should be reused across many base points.  All methods are
 * const and safe to call concurrently.
 */
class DensityEngine {
public:
    explicit DensityEngine(ArStructure s);

    const ArStructure& structure() const { return sys_->structure(); }
    const std::shared_ptr<const HamiltonianSystem>& system() const { return sys_; }
    int n() const { return sys_->n(); }

    /** Jet from the symbolic closed forms; h_full stays empty. */
    DensityJet closed_form_jet(std::span<const double> q) const;

    /** Jet from arc integration, Taylor fits, and central differences. */
    DensityJet numeric_taylor_jet(std::span<const double> q, const FitParams& fit = {}) const;

    DensityJet jet(std::span<const double> q, Pipeline p, const FitParams& fit = {}) const;

    double log_h_second_derivative(std::span<const double> q,
                                   Pipeline p = Pipeline::ClosedForm,
                                   const FitParams& fit = {}) const;

    /**
     * Density values h(s) along the geodesic through q, up to the
     * q-constant factor: m at the moved point times |det| of the
     * transported frame, with pushforward columns by central
     * differences over perturbed base points.
     */
    std::vector<ProfilePoint> density_profile(std::span<const double> q,
                                              std::span<const double> s_grid,
                                              double step_scale = 1e-5,
                                              double arc_tol = 1e-12) const;

    /** 5-point finite-difference (log h)''(0) from density_profile. */
    double profile_second_derivative(std::span<const double> q, double delta,
                                     double step_scale = 1e-5) const;

    /**
     * The explicit component expansion of the trace term available in
     * the strongly regular class (n >= 2); excludes the measure term.
     * Throws ArError(WrongRegularityClass) otherwise.
     */
    double strongly_regular_second_derivative(std::span<const double> q) const;

private:
    struct ClosedForms;

    DensityJet assemble(std::span<const double> q, std::vector<double> grad_delta,
                        std::vector<double> f, std::vector<double> h_full, double h_n,
                        Mat B1, Mat B2, Pipeline p) const;
    double measure_term_at(std::span<const double> q, std::span<const double> grad_delta,
                           std::span<const double> f) const;

    std::shared_ptr<const HamiltonianSystem> sys_;
    std::shared_ptr<const ClosedForms> forms_;
};

// Single-shot conveniences mirroring the engine methods.
DensityJet closed_form_jet(const ArStructure& s, std::span<const double> q);
DensityJet numeric_taylor_jet(const ArStructure& s, std::span<const double> q,
                              const FitParams& fit = {});
double log_h_second_derivative(const ArStructure& s, std::span<const double> q,
                               Pipeline p = Pipeline::ClosedForm);
std::vector<ProfilePoint> density_profile(const ArStructure& s, std::span<const double> q,
                                          std::span<const double> s_grid);
double strongly_regular_second_derivative(const ArStructure& s, std::span<const double> q);

} // namespace arcd

#endif
