#ifndef ARCD_LINALG_HPP
#define ARCD_LINALG_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "arcd/errors.hpp"

namespace arcd {

/** Dense row-major matrix of doubles, sized for small problems. */
class Mat {
public:
    Mat() = default;
    Mat(int rows, int cols) : rows_(rows), cols_(cols), a_(static_cast<size_t>(rows) * cols, 0.0) {}

    static Mat identity(int n) {
        Mat m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& operator()(int i, int j) { return a_[static_cast<size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return a_[static_cast<size_t>(i) * cols_ + j]; }

    std::span<double> row(int i) { return {a_.data() + static_cast<size_t>(i) * cols_, static_cast<size_t>(cols_)}; }
    std::span<const double> row(int i) const { return {a_.data() + static_cast<size_t>(i) * cols_, static_cast<size_t>(cols_)}; }

    Mat operator*(const Mat& other) const {
        Mat out(rows_, other.cols_);
        for (int i = 0; i < rows_; ++i)
            for (int k = 0; k < cols_; ++k) {
                double v = (*this)(i, k);
                if (v == 0.0) continue;
                for (int j = 0; j < other.cols_; ++j) out(i, j) += v * other(k, j);
            }
        return out;
    }

    double trace() const {
        double t = 0.0;
        for (int i = 0; i < rows_ && i < cols_; ++i) t += (*this)(i, i);
        return t;
    }

private:
    int rows_ = 0, cols_ = 0;
    std::vector<double> a_;
};

/** LU factorization with partial pivoting of a square matrix. */
class Lu {
public:
    explicit Lu(Mat m) : lu_(std::move(m)), piv_(lu_.rows()) {
        const int n = lu_.rows();
        sign_ = 1.0;
        for (int i = 0; i < n; ++i) piv_[i] = i;
        for (int k = 0; k < n; ++k) {
            int p = k;
            double best = std::abs(lu_(k, k));
            for (int i = k + 1; i < n; ++i) {
                double v = std::abs(lu_(i, k));
                if (v > best) { best = v; p = i; }
            }
            if (p != k) {
                for (int j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(p, j));
                std::swap(piv_[k], piv_[p]);
                sign_ = -sign_;
            }
            double d = lu_(k, k);
            if (d == 0.0) { singular_ = true; continue; }
            for (int i = k + 1; i < n; ++i) {
                double f = lu_(i, k) / d;
                lu_(i, k) = f;
                for (int j = k + 1; j < n; ++j) lu_(i, j) -= f * lu_(k, j);
            }
        }
    }

    bool singular() const { return singular_; }

    double det() const {
        double d = sign_;
        for (int i = 0; i < lu_.rows(); ++i) d *= lu_(i, i);
        return d;
    }

    /** Solves A x = b; throws ArError(SingularB0) if the factor is singular. */
    std::vector<double> solve(std::span<const double> b) const {
        if (singular_) throw ArError(ErrorCode::SingularB0, "matrix is singular");
        const int n = lu_.rows();
        std::vector<double> x(n);
        for (int i = 0; i < n; ++i) x[i] = b[piv_[i]];
        for (int i = 1; i < n; ++i)
            for (int j = 0; j < i; ++j) x[i] -= lu_(i, j) * x[j];
        for (int i = n - 1; i >= 0; --i) {
            for (int j = i + 1; j < n; ++j) x[i] -= lu_(i, j) * x[j];
            x[i] /= lu_(i, i);
        }
        return x;
    }

    Mat inverse() const {
        const int n = lu_.rows();
        Mat inv(n, n);
        std::vector<double> e(n, 0.0);
        for (int j = 0; j < n; ++j) {
            e[j] = 1.0;
            auto col = solve(e);
            for (int i = 0; i < n; ++i) inv(i, j) = col[i];
            e[j] = 0.0;
        }
        return inv;
    }

private:
    Mat lu_;
    std::vector<int> piv_;
    double sign_ = 1.0;
    bool singular_ = false;
};

inline double det(const Mat& m) { return Lu(m).det(); }

/**
 * Least-squares solution of an overdetermined system by Householder QR.
 * Returns the coefficient vector; reports the R-diagonal condition
 * estimate max|r_ii|/min|r_ii| through *cond when requested.
 */
inline std::vector<double> lstsq(Mat a, std::vector<double> b, double* cond = nullptr) {
    const int m = a.rows(), n = a.cols();
    if (m < n) throw ArError(ErrorCode::BadInput, "least squares needs rows >= cols");
    for (int k = 0; k < n; ++k) {
        double norm = 0.0;
        for (int i = k; i < m; ++i) norm += a(i, k) * a(i, k);
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;
        if (a(k, k) > 0.0) norm = -norm;
        for (int i = k; i < m; ++i) a(i, k) /= norm;
        a(k, k) -= 1.0;
        for (int j = k + 1; j < n; ++j) {
            double s = 0.0;
            for (int i = k; i < m; ++i) s += a(i, k) * a(i, j);
            s /= a(k, k);
            for (int i = k; i < m; ++i) a(i, j) += s * a(i, k);
        }
        double s = 0.0;
        for (int i = k; i < m; ++i) s += a(i, k) * b[i];
        s /= a(k, k);
        for (int i = k; i < m; ++i) b[i] += s * a(i, k);
        a(k, k) = norm; // stash r_kk where the reflector pivot lived
    }
    double rmax = 0.0, rmin = 0.0;
    for (int k = 0; k < n; ++k) {
        double v = std::abs(a(k, k));
        rmax = std::max(rmax, v);
        rmin = (k == 0) ? v : std::min(rmin, v);
    }
    if (cond) *cond = (rmin == 0.0) ? std::numeric_limits<double>::infinity() : rmax / rmin;
    std::vector<double> x(n);
    for (int i = n - 1; i >= 0; --i) {
        double s = b[i];
        for (int j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
        if (a(i, i) == 0.0) throw ArError(ErrorCode::FitConditioning, "rank-deficient least squares");
        x[i] = s / a(i, i);
    }
    return x;
}

} // namespace arcd

#endif
