#ifndef ARCD_HAMILTONIAN_HPP
#define ARCD_HAMILTONIAN_HPP

#include <memory>
#include <span>
#include <vector>

#include "arcd/ode.hpp"
#include "arcd/structure.hpp"

namespace arcd {

/** Point of the cotangent bundle in canonical coordinates. */
struct PhaseState {
    double x = 0.0;
    std::vector<double> z;
    double px = 0.0;
    std::vector<double> pz;

    /** Flattens to the integrator layout [x, z_1..z_n, px, pz_1..pz_n]. */
    std::vector<double> flat() const;
    static PhaseState from_flat(std::span<const double> y);
};

/**
 * The Hamiltonian H = px^2/2 + pz^T M pz / 2 with M = A^T A, together
 * with the symbolic partials of M that Hamilton's equations need.
 * Immutable after construction and shareable across threads.
 */
class HamiltonianSystem {
public:
    explicit HamiltonianSystem(ArStructure s);

    const ArStructure& structure() const { return s_; }
    const SurfaceFields& fields() const { return fields_; }
    int n() const { return s_.n; }
    int dim() const { return 2 * (s_.n + 1); }

    /** Entry (i, j) of M = A^T A as an expression (0-based). */
    const ExprPtr& gram(int i, int j) const {
        return gram_[static_cast<size_t>(i) * s_.n + j];
    }

    double value(std::span<const double> y) const;
    void rhs(std::span<const double> y, std::span<double> dy) const;

    /** (dx/ds, dz/ds) = (px, M pz) at the given phase point. */
    std::vector<double> velocity(std::span<const double> y) const;

    /**
     * Flat initial state over the surface point q = (x, z_1..z_{n-1}, 0):
     * px = 0, pz = e_n / beta(q).  Throws ArError(CharacteristicPoint)
     * when beta(q) <= beta_floor.
     */
    std::vector<double> initial_state(std::span<const double> q,
                                      double beta_floor = 1e-8) const;

private:
    ArStructure s_;
    SurfaceFields fields_;
    std::vector<ExprPtr> gram_;                // M, row-major n*n
    std::vector<std::vector<ExprPtr>> dgram_;  // dgram_[d] = dM/d(coord d), d = 0..n
};

/**
 * A normal extremal through a surface point, integrated for |s| <=
 * s_max with dense output in both directions.  The state at s = 0 is
 * the initial datum itself, bit for bit.
 */
class GeodesicArc {
public:
    static GeodesicArc from_surface(std::shared_ptr<const HamiltonianSystem> sys,
                                    std::span<const double> q, double s_max, double tol);

    int n() const { return sys_->n(); }
    double s_max() const { return s_max_; }
    double tol() const { return tol_; }
    const HamiltonianSystem& system() const { return *sys_; }
    std::span<const double> initial_state() const { return y0_; }

    std::vector<double> state(double s) const;
    PhaseState at(double s) const { return PhaseState::from_flat(state(s)); }

    /** The (n+1) position components of state(s). */
    std::vector<double> position(double s) const;

    /** 2H at parameter s; 1 up to integration error on a unit-speed arc. */
    double energy(double s) const { return 2.0 * sys_->value(state(s)); }

    /** max |2H - 1| over an equispaced sample of the arc. */
    double max_energy_drift(int samples = 65) const;

private:
    GeodesicArc(std::shared_ptr<const HamiltonianSystem> sys, std::vector<double> y0,
                double s_max, double tol);

    std::shared_ptr<const HamiltonianSystem> sys_;
    std::vector<double> y0_;
    double s_max_ = 0.0, tol_ = 0.0;
    ode::DenseSolution pos_, neg_;
};

// Single-shot conveniences mirroring the class API.
double hamiltonian_value(const ArStructure& s, const PhaseState& st);
PhaseState ham_rhs(const ArStructure& s, const PhaseState& st);
PhaseState initial_covector(const ArStructure& s, std::span<const double> q,
                            double beta_floor = 1e-8);
GeodesicArc exp_from_surface(const ArStructure& s, std::span<const double> q, double s_max,
                             double tol = 1e-10);

} // namespace arcd

#endif
