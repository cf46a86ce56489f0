#include "arcd/ode.hpp"

#include <algorithm>
#include <cmath>

namespace arcd::ode {

namespace {

// Dormand-Prince RK5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
// Difference between the 5th- and 4th-order weights.
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// Dense-output weights (Hairer, Norsett, Wanner).
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

} // namespace

void DenseSolution::push_segment(double t_left, double h, std::vector<double> rcont) {
    seg_t_.push_back(t_left);
    seg_h_.push_back(h);
    rcont_.insert(rcont_.end(), rcont.begin(), rcont.end());
}

void DenseSolution::eval(double t, std::span<double> y) const {
    if (seg_t_.empty()) throw ArError(ErrorCode::BadInput, "empty dense solution");
    const double lo = std::min(t0_, t1_), hi = std::max(t0_, t1_);
    const double slack = 1e-9 * (hi - lo + 1.0);
    if (t < lo - slack || t > hi + slack)
        throw ArError(ErrorCode::BadInput, "dense solution evaluated outside its span");
    // Locate the step containing t; steps are ordered in integration direction.
    const bool forward = t1_ >= t0_;
    size_t k = seg_t_.size() - 1;
    for (size_t i = 0; i < seg_t_.size(); ++i) {
        const double right = seg_t_[i] + seg_h_[i];
        if (forward ? (t <= right + slack) : (t >= right - slack)) {
            k = i;
            break;
        }
    }
    const double theta = std::clamp((t - seg_t_[k]) / seg_h_[k], 0.0, 1.0);
    const double* r = rcont_.data() + 5 * static_cast<size_t>(dim_) * k;
    const double th1 = 1.0 - theta;
    for (int i = 0; i < dim_; ++i) {
        const double r1 = r[i], r2 = r[dim_ + i], r3 = r[2 * dim_ + i], r4 = r[3 * dim_ + i],
                     r5 = r[4 * dim_ + i];
        y[i] = r1 + theta * (r2 + th1 * (r3 + theta * (r4 + th1 * r5)));
    }
}

DenseSolution integrate(const Rhs& f, std::span<const double> y0, double t0, double t1,
                        const Options& opts, const Guard* guard) {
    const int n = static_cast<int>(y0.size());
    const double dir = (t1 >= t0) ? 1.0 : -1.0;
    const double span = std::abs(t1 - t0);
    DenseSolution sol(n, t0);
    if (span == 0.0) {
        std::vector<double> rcont(5 * static_cast<size_t>(n), 0.0);
        std::copy(y0.begin(), y0.end(), rcont.begin());
        sol.push_segment(t0, 1.0, std::move(rcont));
        sol.set_end(t1);
        return sol;
    }

    std::vector<double> y(y0.begin(), y0.end());
    std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n);
    double t = t0;
    f(t, y, k1);

    double h;
    if (opts.fixed_step) {
        if (opts.fixed_step_size <= 0.0)
            throw ArError(ErrorCode::BadInput, "fixed-step mode needs a positive step size");
        h = opts.fixed_step_size;
    } else if (opts.initial_step > 0.0) {
        h = opts.initial_step;
    } else {
        // Crude but serviceable starter; the controller corrects it quickly.
        double ynorm = 0.0, fnorm = 0.0;
        for (int i = 0; i < n; ++i) {
            ynorm = std::max(ynorm, std::abs(y[i]));
            fnorm = std::max(fnorm, std::abs(k1[i]));
        }
        h = (fnorm > 0.0) ? 0.01 * std::max(ynorm, 1.0) / fnorm : 0.01 * span;
        h = std::min(h, span);
    }
    h = std::min(h, span);

    const double h_floor = opts.min_step_frac * span;
    long steps = 0;
    double err_old = 1e-4; // PI controller memory

    while (dir * (t1 - t) > 0.0) {
        if (++steps > opts.max_steps)
            throw ArError(ErrorCode::StiffnessFailure,
                          "step budget exhausted after " + std::to_string(opts.max_steps) +
                              " steps at t=" + std::to_string(t));
        if (!opts.fixed_step && h < h_floor)
            throw ArError(ErrorCode::StiffnessFailure,
                          "step size underflow at t=" + std::to_string(t));
        h = std::min(h, dir * (t1 - t));
        const double hs = dir * h;

        for (int i = 0; i < n; ++i) ytmp[i] = y[i] + hs * a21 * k1[i];
        f(t + c2 * hs, ytmp, k2);
        for (int i = 0; i < n; ++i) ytmp[i] = y[i] + hs * (a31 * k1[i] + a32 * k2[i]);
        f(t + c3 * hs, ytmp, k3);
        for (int i = 0; i < n; ++i)
            ytmp[i] = y[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        f(t + c4 * hs, ytmp, k4);
        for (int i = 0; i < n; ++i)
            ytmp[i] = y[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        f(t + c5 * hs, ytmp, k5);
        for (int i = 0; i < n; ++i)
            ytmp[i] = y[i] + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                                   a65 * k5[i]);
        f(t + hs, ytmp, k6);
        for (int i = 0; i < n; ++i)
            ynew[i] = y[i] + hs * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] +
                                   a76 * k6[i]);
        f(t + hs, ynew, k7);

        double err = 0.0;
        for (int i = 0; i < n; ++i) {
            const double sc = opts.abs_tol +
                              opts.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            const double ei = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                    e6 * k6[i] + e7 * k7[i]);
            err += (ei / sc) * (ei / sc);
        }
        err = std::sqrt(err / n);

        if (opts.fixed_step || err <= 1.0) {
            std::vector<double> rcont(5 * static_cast<size_t>(n));
            for (int i = 0; i < n; ++i) {
                const double dy = ynew[i] - y[i];
                const double bspl = hs * k1[i] - dy;
                rcont[i] = y[i];
                rcont[n + i] = dy;
                rcont[2 * n + i] = bspl;
                rcont[3 * n + i] = dy - hs * k7[i] - bspl;
                rcont[4 * n + i] = hs * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] +
                                         d6 * k6[i] + d7 * k7[i]);
            }
            sol.push_segment(t, hs, std::move(rcont));
            t += hs;
            y.swap(ynew);
            k1.swap(k7); // FSAL
            if (guard && !(*guard)(t, y))
                throw ArError(ErrorCode::LeftChart,
                              "trajectory left the chart at t=" + std::to_string(t));
            if (!opts.fixed_step) {
                const double fac = 0.9 * std::pow(err > 1e-30 ? err : 1e-30, -0.7 / 5.0) *
                                   std::pow(err_old, 0.4 / 5.0);
                h *= std::clamp(fac, 0.2, 10.0);
                err_old = std::max(err, 1e-30);
            }
        } else {
            h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 1.0);
        }
    }
    sol.set_end(t1);
    return sol;
}

} // namespace arcd::ode
