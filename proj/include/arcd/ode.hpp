#ifndef ARCD_ODE_HPP
#define ARCD_ODE_HPP

#include <functional>
#include <span>
#include <vector>

#include "arcd/errors.hpp"

namespace arcd::ode {

/** Right-hand side callback: dy = f(t, y). */
using Rhs = std::function<void(double t, std::span<const double> y, std::span<double> dy)>;

/**
 * Chart guard, checked at every accepted step.  Returning false aborts
 * the integration with ArError(LeftChart).
 */
using Guard = std::function<bool(double t, std::span<const double> y)>;

struct Options {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    double initial_step = 0.0;   ///< 0 selects automatically
    long max_steps = 200000;     ///< accepted + rejected step budget
    double min_step_frac = 1e-14; ///< step underflow threshold, relative to the interval
    bool fixed_step = false;     ///< disable error control (convergence studies)
    double fixed_step_size = 0.0;
};

/**
 * Dense piecewise-quartic interpolant produced by the integrator;
 * evaluates the solution anywhere between the endpoints of the run.
 */
class DenseSolution {
public:
    DenseSolution() = default;
    DenseSolution(int dim, double t0) : dim_(dim), t0_(t0), t1_(t0) {}

    int dim() const { return dim_; }
    double t_begin() const { return t0_; }
    double t_end() const { return t1_; }
    size_t steps() const { return seg_t_.size(); }

    void eval(double t, std::span<double> y) const;
    std::vector<double> eval(double t) const {
        std::vector<double> y(dim_);
        eval(t, y);
        return y;
    }

    // Integrator-side assembly.
    void push_segment(double t_left, double h, std::vector<double> rcont);
    void set_end(double t1) { t1_ = t1; }

private:
    int dim_ = 0;
    double t0_ = 0.0, t1_ = 0.0;
    std::vector<double> seg_t_;   ///< left endpoint of each step
    std::vector<double> seg_h_;   ///< signed step length
    std::vector<double> rcont_;   ///< 5 * dim interpolation coefficients per step
};

/**
 * Integrates y' = f(t, y) from t0 to t1 (either direction) with the
 * Dormand-Prince RK5(4) pair and returns a dense solution.  Throws
 * ArError(StiffnessFailure) on step underflow or budget exhaustion and
 * propagates ArError(LeftChart) from the guard.
 */
DenseSolution integrate(const Rhs& f, std::span<const double> y0, double t0, double t1,
                        const Options& opts = {}, const Guard* guard = nullptr);

} // namespace arcd::ode

#endif
