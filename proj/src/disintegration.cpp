#include "arcd/disintegration.hpp"

#include <cmath>

namespace arcd {

namespace ex = expr;

/**
 * Symbolic closed forms attached to one structure: the geodesic
 * derivative fields on the surface and their tangential partials,
 * plus the log-measure derivatives for the measure term.
 *
 * Index conventions: coordinate 0 is x and coordinates 1..n are z;
 * tangential direction d (0..n-1) means x for d = 0 and z_d otherwise.
 */
struct DensityEngine::ClosedForms {
    std::vector<ExprPtr> gd;               // grad delta components, 0..n
    std::vector<ExprPtr> f;                // curve second derivative, 0..n
    ExprPtr h_n;                           // last third-derivative component
    std::vector<std::vector<ExprPtr>> dgd; // dgd[d][i] = tangential partial of gd[i]
    std::vector<std::vector<ExprPtr>> df;  // df[d][i]  = tangential partial of f[i]
    std::vector<ExprPtr> glm;              // gradient of log m, 0..n
    std::vector<std::vector<ExprPtr>> hlm; // Hessian of log m

    ClosedForms(const HamiltonianSystem& sys) {
        const int n = sys.n();
        const SurfaceFields& sf = sys.fields();
        const ExprPtr& b2 = sf.beta_sq;
        const ExprPtr& beta = sf.beta;
        auto alpha = [&](int i) -> const ExprPtr& { return sf.alpha[i - 1]; }; // 1-based
        auto dz = [&](const ExprPtr& e, int l) { return ex::diff(e, l); };     // z_l partial

        gd.resize(n + 1);
        gd[0] = ex::literal(0.0);
        for (int i = 1; i < n; ++i) gd[i] = ex::div(alpha(i), beta);
        gd[n] = beta;

        f.resize(n + 1);
        f[0] = ex::div(ex::neg(ex::diff(b2, 0)), ex::mul(ex::literal(2.0), b2));
        for (int i = 1; i <= n; ++i) {
            ExprPtr acc = ex::literal(0.0);
            for (int l = 1; l <= n; ++l)
                acc = ex::add(acc, ex::mul(dz(alpha(i), l), alpha(l)));
            for (int j = 1; j <= n; ++j)
                acc = ex::sub(acc, ex::mul(ex::mul(ex::literal(0.5), sys.gram(i - 1, j - 1)),
                                           dz(b2, j)));
            f[i] = ex::div(acc, b2);
        }

        {
            ExprPtr acc = ex::literal(0.0);
            ExprPtr dxb2 = ex::diff(b2, 0);
            acc = ex::sub(acc, ex::mul(ex::literal(0.5), ex::mul(dxb2, dxb2)));
            for (int l = 1; l <= n; ++l)
                for (int r = 1; r <= n; ++r)
                    acc = ex::add(acc, ex::mul(ex::mul(alpha(l), alpha(r)), dz(dz(b2, l), r)));
            for (int l = 1; l <= n; ++l)
                acc = ex::add(acc, ex::mul(b2, ex::mul(dz(b2, l), f[l])));
            for (int j = 1; j <= n; ++j)
                for (int l = 1; l <= n; ++l)
                    acc = ex::sub(acc, ex::mul(ex::mul(alpha(l), dz(alpha(j), l)), dz(b2, j)));
            for (int j = 1; j <= n; ++j)
                for (int l = 1; l <= n; ++l)
                    acc = ex::sub(acc,
                                  ex::mul(ex::mul(ex::literal(0.5), alpha(j)),
                                          ex::sub(ex::mul(alpha(l), dz(dz(b2, j), l)),
                                                  ex::mul(dz(alpha(l), j), dz(b2, l)))));
            h_n = ex::div(acc, ex::mul(b2, beta));
        }

        dgd.resize(n);
        df.resize(n);
        for (int d = 0; d < n; ++d) {
            const int c = d; // coordinate index of tangential direction d
            dgd[d].resize(n + 1);
            df[d].resize(n + 1);
            for (int i = 0; i <= n; ++i) {
                dgd[d][i] = ex::diff(gd[i], c);
                df[d][i] = ex::diff(f[i], c);
            }
        }

        ExprPtr lm = ex::log(sys.structure().m);
        glm.resize(n + 1);
        hlm.assign(n + 1, std::vector<ExprPtr>(n + 1));
        for (int d = 0; d <= n; ++d) glm[d] = ex::diff(lm, d);
        for (int d = 0; d <= n; ++d)
            for (int e = 0; e <= n; ++e) hlm[d][e] = ex::diff(glm[d], e);
    }
};

DensityEngine::DensityEngine(ArStructure s)
    : sys_(std::make_shared<const HamiltonianSystem>(std::move(s))),
      forms_(std::make_shared<const ClosedForms>(*sys_)) {}

double DensityEngine::measure_term_at(std::span<const double> q,
                                      std::span<const double> grad_delta,
                                      std::span<const double> f) const {
    const int n = sys_->n();
    double term = 0.0;
    for (int d = 0; d <= n; ++d) {
        for (int e = 0; e <= n; ++e) {
            if (grad_delta[d] == 0.0 || grad_delta[e] == 0.0) continue;
            term += grad_delta[d] * grad_delta[e] * ex::evaluate(forms_->hlm[d][e], q);
        }
        term += ex::evaluate(forms_->glm[d], q) * f[d];
    }
    return term;
}

DensityJet DensityEngine::assemble(std::span<const double> q, std::vector<double> grad_delta,
                                   std::vector<double> f, std::vector<double> h_full,
                                   double h_n, Mat B1, Mat B2, Pipeline p) const {
    const int n = sys_->n();
    DensityJet jet;
    jet.q.assign(q.begin(), q.end());
    jet.pipeline = p;
    jet.h_n = h_n;
    jet.h_full = std::move(h_full);

    jet.B0 = Mat(n + 1, n + 1);
    for (int i = 0; i <= n; ++i) jet.B0(i, 0) = grad_delta[i];
    for (int d = 0; d < n; ++d) jet.B0(d, d + 1) = 1.0;

    Lu lu(jet.B0);
    if (lu.singular())
        throw ArError(ErrorCode::SingularB0, "frame matrix at s=0 is singular");

    // C1 = B0^-1 B1, C2 = B0^-1 B2, column by column.
    Mat C1(n + 1, n + 1), C2(n + 1, n + 1);
    std::vector<double> col(n + 1);
    for (int j = 0; j <= n; ++j) {
        for (int i = 0; i <= n; ++i) col[i] = B1(i, j);
        auto x1 = lu.solve(col);
        for (int i = 0; i <= n; ++i) C1(i, j) = x1[i];
        for (int i = 0; i <= n; ++i) col[i] = B2(i, j);
        auto x2 = lu.solve(col);
        for (int i = 0; i <= n; ++i) C2(i, j) = x2[i];
    }
    double tr_sq = 0.0;
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) tr_sq += C1(i, j) * C1(j, i);
    jet.trace_term = C2.trace() - tr_sq;
    jet.measure_term = measure_term_at(q, grad_delta, f);
    jet.log_h_second = jet.trace_term + jet.measure_term;

    jet.grad_delta = std::move(grad_delta);
    jet.f = std::move(f);
    jet.B1 = std::move(B1);
    jet.B2 = std::move(B2);
    return jet;
}

DensityJet DensityEngine::closed_form_jet(std::span<const double> q) const {
    const int n = sys_->n();
    sys_->initial_state(q); // validates the surface point and beta floor

    std::vector<double> gd(n + 1), f(n + 1);
    for (int i = 0; i <= n; ++i) {
        gd[i] = ex::evaluate(forms_->gd[i], q);
        f[i] = ex::evaluate(forms_->f[i], q);
    }
    const double h_n = ex::evaluate(forms_->h_n, q);

    Mat B1(n + 1, n + 1), B2(n + 1, n + 1);
    for (int i = 0; i <= n; ++i) {
        B1(i, 0) = f[i];
        B2(i, 0) = 0.0;
    }
    B2(n, 0) = h_n;
    for (int d = 0; d < n; ++d)
        for (int i = 0; i <= n; ++i) {
            B1(i, d + 1) = ex::evaluate(forms_->dgd[d][i], q);
            B2(i, d + 1) = ex::evaluate(forms_->df[d][i], q);
        }
    return assemble(q, std::move(gd), std::move(f), {}, h_n, std::move(B1), std::move(B2),
                    Pipeline::ClosedForm);
}

namespace {

/** Length scale of a base point: |x| or beta(q), whichever is larger. */
double base_scale(const HamiltonianSystem& sys, std::span<const double> q) {
    double b2 = ex::evaluate(sys.fields().beta_sq, q);
    double beta = b2 > 0.0 ? std::sqrt(b2) : 0.0;
    return std::max(std::abs(q[0]), beta);
}

/**
 * Least-squares Taylor read-off at s=0 from one arc: fills the value,
 * first, second, and (optionally) third derivative of every position
 * component, using a degree-`degree` fit in the scaled variable s/s0.
 */
struct ArcFit {
    std::vector<double> value, d1, d2, d3;

    ArcFit(const GeodesicArc& arc, double s0, const FitParams& fp, bool want_third) {
        const int n = arc.n();
        const int k = fp.half_points;
        const int rows = 2 * k + 1, cols = fp.degree + 1;
        Mat design(rows, cols);
        std::vector<std::vector<double>> pos(rows);
        for (int r = 0; r < rows; ++r) {
            const double u = static_cast<double>(r - k) / k;
            double p = 1.0;
            for (int c = 0; c < cols; ++c) {
                design(r, c) = p;
                p *= u;
            }
            pos[r] = arc.position(u * s0);
        }
        value.resize(n + 1);
        d1.resize(n + 1);
        d2.resize(n + 1);
        if (want_third) d3.resize(n + 1);
        std::vector<double> b(rows);
        for (int comp = 0; comp <= n; ++comp) {
            for (int r = 0; r < rows; ++r) b[r] = pos[r][comp];
            double cond = 0.0;
            auto coef = lstsq(design, b, &cond);
            if (cond > fp.cond_limit)
                throw ArError(ErrorCode::FitConditioning,
                              "fit condition estimate " + std::to_string(cond));
            value[comp] = coef[0];
            d1[comp] = coef[1] / s0;
            d2[comp] = 2.0 * coef[2] / (s0 * s0);
            if (want_third) d3[comp] = 6.0 * coef[3] / (s0 * s0 * s0);
        }
    }
};

} // namespace

DensityJet DensityEngine::numeric_taylor_jet(std::span<const double> q,
                                             const FitParams& fit) const {
    const int n = sys_->n();
    const double scale = base_scale(*sys_, q);
    const double s0 = std::min(fit.s0_cap, fit.s0_frac * scale);
    if (!(s0 > 0.0))
        throw ArError(ErrorCode::CharacteristicPoint,
                      "no usable arc length at the requested surface point");

    GeodesicArc center = GeodesicArc::from_surface(sys_, q, s0, fit.arc_tol);
    ArcFit cfit(center, s0, fit, /*want_third=*/true);

    const double h = fit.step_scale * scale;
    Mat B1(n + 1, n + 1), B2(n + 1, n + 1);
    for (int i = 0; i <= n; ++i) {
        B1(i, 0) = cfit.d2[i];
        B2(i, 0) = cfit.d3[i];
    }
    std::vector<double> qp(q.begin(), q.end());
    for (int d = 0; d < n; ++d) {
        qp[d] = q[d] + h;
        GeodesicArc plus = GeodesicArc::from_surface(sys_, qp, s0, fit.arc_tol);
        ArcFit pfit(plus, s0, fit, false);
        qp[d] = q[d] - h;
        GeodesicArc minus = GeodesicArc::from_surface(sys_, qp, s0, fit.arc_tol);
        ArcFit mfit(minus, s0, fit, false);
        qp[d] = q[d];
        for (int i = 0; i <= n; ++i) {
            B1(i, d + 1) = (pfit.d1[i] - mfit.d1[i]) / (2.0 * h);
            B2(i, d + 1) = (pfit.d2[i] - mfit.d2[i]) / (2.0 * h);
        }
    }
    return assemble(q, cfit.d1, cfit.d2, cfit.d3, cfit.d3[n], std::move(B1), std::move(B2),
                    Pipeline::NumericTaylor);
}

DensityJet DensityEngine::jet(std::span<const double> q, Pipeline p,
                              const FitParams& fit) const {
    return p == Pipeline::ClosedForm ? closed_form_jet(q) : numeric_taylor_jet(q, fit);
}

double DensityEngine::log_h_second_derivative(std::span<const double> q, Pipeline p,
                                              const FitParams& fit) const {
    return jet(q, p, fit).log_h_second;
}

std::vector<ProfilePoint> DensityEngine::density_profile(std::span<const double> q,
                                                         std::span<const double> s_grid,
                                                         double step_scale,
                                                         double arc_tol) const {
    const int n = sys_->n();
    double s_max = 0.0;
    for (double s : s_grid) s_max = std::max(s_max, std::abs(s));
    if (!(s_max > 0.0)) throw ArError(ErrorCode::BadInput, "profile grid is degenerate");

    const double scale = base_scale(*sys_, q);
    const double h = step_scale * scale;

    GeodesicArc center = GeodesicArc::from_surface(sys_, q, s_max, arc_tol);
    std::vector<GeodesicArc> plus, minus;
    plus.reserve(n);
    minus.reserve(n);
    std::vector<double> qp(q.begin(), q.end());
    for (int d = 0; d < n; ++d) {
        qp[d] = q[d] + h;
        plus.push_back(GeodesicArc::from_surface(sys_, qp, s_max, arc_tol));
        qp[d] = q[d] - h;
        minus.push_back(GeodesicArc::from_surface(sys_, qp, s_max, arc_tol));
        qp[d] = q[d];
    }

    std::vector<ProfilePoint> out;
    out.reserve(s_grid.size());
    Mat frame(n + 1, n + 1);
    for (double s : s_grid) {
        std::vector<double> y = center.state(s);
        std::vector<double> vel = sys_->velocity(y);
        for (int i = 0; i <= n; ++i) frame(i, 0) = vel[i];
        for (int d = 0; d < n; ++d) {
            std::vector<double> pp = plus[d].position(s);
            std::vector<double> pm = minus[d].position(s);
            for (int i = 0; i <= n; ++i) frame(i, d + 1) = (pp[i] - pm[i]) / (2.0 * h);
        }
        const double dens = ex::evaluate(structure().m, std::span<const double>(y).subspan(0, n + 1));
        out.push_back({s, dens * std::abs(det(frame))});
    }
    return out;
}

double DensityEngine::profile_second_derivative(std::span<const double> q, double delta,
                                                double step_scale) const {
    const double grid[5] = {-2.0 * delta, -delta, 0.0, delta, 2.0 * delta};
    auto prof = density_profile(q, grid, step_scale);
    double lg[5];
    for (int i = 0; i < 5; ++i) {
        if (!(prof[i].h > 0.0))
            throw ArError(ErrorCode::DomainError, "density profile is not positive near s=0");
        lg[i] = std::log(prof[i].h);
    }
    return (-lg[4] + 16.0 * lg[3] - 30.0 * lg[2] + 16.0 * lg[1] - lg[0]) / (12.0 * delta * delta);
}

double DensityEngine::strongly_regular_second_derivative(std::span<const double> q) const {
    const ArStructure& s = structure();
    const int n = s.n;
    if (s.regularity != Regularity::StronglyRegular || n < 2)
        throw ArError(ErrorCode::WrongRegularityClass,
                      "component expansion requires a strongly regular structure with n >= 2");
    sys_->initial_state(q); // surface-point and beta-floor validation

    const ClosedForms& cf = *forms_;
    auto ev = [&](const ExprPtr& e) { return ex::evaluate(e, q); };

    const double beta = ev(cf.gd[n]);
    const double h_n = ev(cf.h_n);
    std::vector<double> f(n + 1), gd(n + 1);
    for (int i = 0; i <= n; ++i) {
        f[i] = ev(cf.f[i]);
        gd[i] = ev(cf.gd[i]);
    }

    // tr(B0^-1 B2) in components.
    double value = h_n / beta + ev(cf.df[0][0]);
    for (int a = 1; a < n; ++a)
        value += ev(cf.df[a][a]) - (gd[a] / beta) * ev(cf.df[a][n]);

    // -tr((B0^-1 B1)^2) in components.
    value -= (f[n] / beta) * (f[n] / beta);
    value -= 2.0 * (ev(cf.dgd[0][n]) / beta) * f[0];
    for (int a = 1; a < n; ++a)
        value -= 2.0 * (ev(cf.dgd[a][n]) / beta) * (f[a] - (gd[a] / beta) * f[n]);
    for (int a = 1; a < n; ++a)
        for (int b = 1; b < n; ++b) {
            const double dab = ev(cf.dgd[b][a]) - (gd[a] / beta) * ev(cf.dgd[b][n]);
            const double dba = ev(cf.dgd[a][b]) - (gd[b] / beta) * ev(cf.dgd[a][n]);
            value -= dab * dba;
        }
    return value;
}

DensityJet closed_form_jet(const ArStructure& s, std::span<const double> q) {
    return DensityEngine(s).closed_form_jet(q);
}

DensityJet numeric_taylor_jet(const ArStructure& s, std::span<const double> q,
                              const FitParams& fit) {
    return DensityEngine(s).numeric_taylor_jet(q, fit);
}

double log_h_second_derivative(const ArStructure& s, std::span<const double> q, Pipeline p) {
    return DensityEngine(s).log_h_second_derivative(q, p);
}

std::vector<ProfilePoint> density_profile(const ArStructure& s, std::span<const double> q,
                                          std::span<const double> s_grid) {
    return DensityEngine(s).density_profile(q, s_grid);
}

double strongly_regular_second_derivative(const ArStructure& s, std::span<const double> q) {
    return DensityEngine(s).strongly_regular_second_derivative(q);
}

} // namespace arcd
