#include "arcd/hamiltonian.hpp"

#include <cmath>

namespace arcd {

std::vector<double> PhaseState::flat() const {
    const int n = static_cast<int>(z.size());
    std::vector<double> y(2 * (n + 1));
    y[0] = x;
    for (int i = 0; i < n; ++i) y[1 + i] = z[i];
    y[n + 1] = px;
    for (int i = 0; i < n; ++i) y[n + 2 + i] = pz[i];
    return y;
}

PhaseState PhaseState::from_flat(std::span<const double> y) {
    const int n = static_cast<int>(y.size()) / 2 - 1;
    PhaseState st;
    st.x = y[0];
    st.z.assign(y.begin() + 1, y.begin() + 1 + n);
    st.px = y[n + 1];
    st.pz.assign(y.begin() + n + 2, y.end());
    return st;
}

HamiltonianSystem::HamiltonianSystem(ArStructure s)
    : s_(std::move(s)), fields_(surface_fields(s_)) {
    const int n = s_.n;
    gram_.resize(static_cast<size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            ExprPtr sum = expr::literal(0.0);
            for (int k = 0; k < n; ++k)
                sum = expr::add(sum, expr::mul(s_.a(k, i), s_.a(k, j)));
            gram_[static_cast<size_t>(i) * n + j] = std::move(sum);
        }
    dgram_.resize(n + 1);
    for (int d = 0; d <= n; ++d) {
        dgram_[d].resize(static_cast<size_t>(n) * n);
        for (size_t e = 0; e < gram_.size(); ++e) dgram_[d][e] = expr::diff(gram_[e], d);
    }
}

double HamiltonianSystem::value(std::span<const double> y) const {
    const int n = s_.n;
    std::span<const double> p = y.subspan(0, n + 1);
    std::span<const double> pz = y.subspan(n + 2, n);
    double h = 0.5 * y[n + 1] * y[n + 1];
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            h += 0.5 * pz[i] * pz[j] * expr::evaluate(gram_[static_cast<size_t>(i) * n + j], p);
    return h;
}

void HamiltonianSystem::rhs(std::span<const double> y, std::span<double> dy) const {
    const int n = s_.n;
    std::span<const double> p = y.subspan(0, n + 1);
    std::span<const double> pz = y.subspan(n + 2, n);

    dy[0] = y[n + 1];
    for (int j = 0; j < n; ++j) {
        double v = 0.0;
        for (int k = 0; k < n; ++k)
            v += expr::evaluate(gram_[static_cast<size_t>(j) * n + k], p) * pz[k];
        dy[1 + j] = v;
    }
    for (int d = 0; d <= n; ++d) {
        double q = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                q += pz[i] * pz[j] *
                     expr::evaluate(dgram_[d][static_cast<size_t>(i) * n + j], p);
        dy[n + 1 + d] = -0.5 * q;
    }
}

std::vector<double> HamiltonianSystem::velocity(std::span<const double> y) const {
    const int n = s_.n;
    std::vector<double> v(n + 1);
    std::vector<double> dy(dim());
    rhs(y, dy);
    for (int i = 0; i <= n; ++i) v[i] = dy[i];
    return v;
}

std::vector<double> HamiltonianSystem::initial_state(std::span<const double> q,
                                                     double beta_floor) const {
    const int n = s_.n;
    if (static_cast<int>(q.size()) != n + 1)
        throw ArError(ErrorCode::BadInput, "surface point needs n+1 coordinates");
    if (std::abs(q[n]) > 1e-12)
        throw ArError(ErrorCode::BadInput, "surface point must have z_n = 0");
    double b2 = expr::evaluate(fields_.beta_sq, q);
    double beta = b2 > 0.0 ? std::sqrt(b2) : 0.0;
    if (beta <= beta_floor)
        throw ArError(ErrorCode::CharacteristicPoint,
                      "beta = " + std::to_string(beta) + " at the requested surface point");
    std::vector<double> y(dim(), 0.0);
    for (int i = 0; i <= n; ++i) y[i] = q[i];
    y[2 * n + 1] = 1.0 / beta;
    return y;
}

GeodesicArc GeodesicArc::from_surface(std::shared_ptr<const HamiltonianSystem> sys,
                                      std::span<const double> q, double s_max, double tol) {
    std::vector<double> y0 = sys->initial_state(q);
    return GeodesicArc(std::move(sys), std::move(y0), s_max, tol);
}

GeodesicArc::GeodesicArc(std::shared_ptr<const HamiltonianSystem> sys, std::vector<double> y0,
                         double s_max, double tol)
    : sys_(std::move(sys)), y0_(std::move(y0)), s_max_(s_max), tol_(tol) {
    if (!(s_max > 0.0)) throw ArError(ErrorCode::BadInput, "s_max must be positive");
    const HamiltonianSystem* sp = sys_.get();
    ode::Rhs f = [sp](double, std::span<const double> y, std::span<double> dy) {
        sp->rhs(y, dy);
    };
    const Chart& chart = sp->structure().chart;
    const int n = sp->n();
    ode::Guard guard = [&chart, n](double, std::span<const double> y) {
        return chart.contains(y.subspan(0, n + 1), 1e-12);
    };
    ode::Options opts;
    // The dense interpolant between accepted steps carries a larger error
    // constant than the step-end estimate the controller sees, so run the
    // integrator a factor below the requested tolerance to keep evaluations
    // anywhere on the arc (energy drift included) within the user's budget.
    opts.abs_tol = opts.rel_tol = tol / 8.0;
    pos_ = ode::integrate(f, y0_, 0.0, s_max, opts, &guard);
    neg_ = ode::integrate(f, y0_, 0.0, -s_max, opts, &guard);
}

std::vector<double> GeodesicArc::state(double s) const {
    if (s == 0.0) return y0_;
    return (s > 0.0) ? pos_.eval(s) : neg_.eval(s);
}

std::vector<double> GeodesicArc::position(double s) const {
    std::vector<double> y = state(s);
    y.resize(static_cast<size_t>(n()) + 1);
    return y;
}

double GeodesicArc::max_energy_drift(int samples) const {
    double worst = 0.0;
    for (int i = 0; i < samples; ++i) {
        double s = -s_max_ + 2.0 * s_max_ * i / (samples - 1);
        worst = std::max(worst, std::abs(energy(s) - 1.0));
    }
    return worst;
}

double hamiltonian_value(const ArStructure& s, const PhaseState& st) {
    return HamiltonianSystem(s).value(st.flat());
}

PhaseState ham_rhs(const ArStructure& s, const PhaseState& st) {
    HamiltonianSystem sys(s);
    std::vector<double> y = st.flat(), dy(y.size());
    sys.rhs(y, dy);
    return PhaseState::from_flat(dy);
}

PhaseState initial_covector(const ArStructure& s, std::span<const double> q, double beta_floor) {
    return PhaseState::from_flat(HamiltonianSystem(s).initial_state(q, beta_floor));
}

GeodesicArc exp_from_surface(const ArStructure& s, std::span<const double> q, double s_max,
                             double tol) {
    return GeodesicArc::from_surface(std::make_shared<HamiltonianSystem>(s), q, s_max, tol);
}

} // namespace arcd
