#include "mpinn/refsolver/linear.hpp"

#include <algorithm>
#include <cmath>

namespace mpinn::ref {

FiveBandMatrix::FiveBandMatrix(std::size_t n, std::size_t stride) : n_(n), stride_(stride) {
    if (n == 0) throw std::invalid_argument("empty matrix");
    if (stride == 0) throw std::invalid_argument("band stride must be positive");
    for (auto& b : band_) b.assign(n, 0.0);
}

int FiveBandMatrix::band_of(std::size_t row, std::size_t col) const {
    if (row >= n_ || col >= n_) throw std::out_of_range("matrix index out of range");
    if (col == row) return 2;
    if (col + 1 == row) return 1;
    if (col == row + 1) return 3;
    if (col + stride_ == row) return 0;
    if (col == row + stride_) return 4;
    throw std::invalid_argument("entry outside the five bands");
}

void FiveBandMatrix::add(std::size_t row, std::size_t col, double value) {
    band_[band_of(row, col)][row] += value;
}

double FiveBandMatrix::get(std::size_t row, std::size_t col) const {
    if (row >= n_ || col >= n_) throw std::out_of_range("matrix index out of range");
    const std::size_t d = row > col ? row - col : col - row;
    if (d > 1 && d != stride_) return 0.0;
    return band_[band_of(row, col)][row];
}

std::vector<double> FiveBandMatrix::multiply(std::span<const double> x) const {
    if (x.size() != n_) throw std::invalid_argument("matrix-vector size mismatch");
    std::vector<double> y(n_);
    const std::size_t s = stride_;
    for (std::size_t r = 0; r < n_; ++r) {
        double acc = band_[2][r] * x[r];
        if (r >= s) acc += band_[0][r] * x[r - s];
        if (r >= 1) acc += band_[1][r] * x[r - 1];
        if (r + 1 < n_) acc += band_[3][r] * x[r + 1];
        if (r + s < n_) acc += band_[4][r] * x[r + s];
        y[r] = acc;
    }
    return y;
}

std::vector<double> banded_lu_solve(const FiveBandMatrix& a, std::span<const double> rhs, double pivot_tol) {
    const std::size_t n = a.size();
    if (rhs.size() != n) throw std::invalid_argument("right-hand side size mismatch");
    const std::size_t s = a.stride();
    const std::size_t w = 2 * s + 1;
    // band(i, j) = A(i, j) for |i - j| <= s, stored at i * w + (j + s - i).
    std::vector<double> band(n * w, 0.0);
    auto at = [&](std::size_t i, std::size_t j) -> double& { return band[i * w + (j + s - i)]; };
    double scale = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        at(r, r) += a.band_[2][r];
        if (r >= s) at(r, r - s) += a.band_[0][r];
        if (r >= 1) at(r, r - 1) += a.band_[1][r];
        if (r + 1 < n) at(r, r + 1) += a.band_[3][r];
        if (r + s < n) at(r, r + s) += a.band_[4][r];
        scale = std::max(scale, std::abs(a.band_[2][r]));
    }
    std::vector<double> x(rhs.begin(), rhs.end());
    const double threshold = pivot_tol * scale;
    for (std::size_t k = 0; k < n; ++k) {
        const double pivot = at(k, k);
        if (!(std::abs(pivot) > threshold)) {
            throw SingularSystemError("singular system: pivot " + std::to_string(pivot) + " at row " +
                                      std::to_string(k));
        }
        const std::size_t last = std::min(n - 1, k + s);
        for (std::size_t i = k + 1; i <= last; ++i) {
            const double l = at(i, k) / pivot;
            if (l == 0.0) continue;
            at(i, k) = l;
            for (std::size_t j = k + 1; j <= last; ++j) at(i, j) -= l * at(k, j);
            x[i] -= l * x[k];
        }
    }
    for (std::size_t k = n; k-- > 0;) {
        double acc = x[k];
        const std::size_t last = std::min(n - 1, k + s);
        for (std::size_t j = k + 1; j <= last; ++j) acc -= at(k, j) * x[j];
        x[k] = acc / at(k, k);
    }
    return x;
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace

std::vector<double> bicgstab_solve(const FiveBandMatrix& a, std::span<const double> b,
                                   const LinearSolveOptions& opts, LinearSolveInfo* info) {
    const std::size_t n = a.size();
    if (b.size() != n) throw std::invalid_argument("right-hand side size mismatch");
    const std::size_t max_iters = opts.max_iters ? opts.max_iters : 10 * n;
    std::vector<double> inv_diag(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a.diagonal(i);
        if (d == 0.0) throw SingularSystemError("zero diagonal entry at row " + std::to_string(i));
        inv_diag[i] = 1.0 / d;
    }
    std::vector<double> x(n, 0.0);
    LinearSolveInfo local;
    LinearSolveInfo& out = info ? *info : local;
    out = {};
    const double bnorm = norm(b);
    if (bnorm == 0.0) return x;

    std::vector<double> r(b.begin(), b.end()), rhat, p(n), v(n), s(n), y(n), z(n), t(n);
    std::size_t it = 0;
    while (it < max_iters) {
        // (Re)start from the true residual.
        const auto ax = a.multiply(x);
        for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ax[i];
        double rel = norm(r) / bnorm;
        if (rel <= opts.tolerance) {
            out.relative_residual = rel;
            out.iterations = it;
            return x;
        }
        rhat = r;
        double rho = 1.0, alpha = 1.0, omega = 1.0;
        std::fill(p.begin(), p.end(), 0.0);
        std::fill(v.begin(), v.end(), 0.0);
        bool restart = false;
        while (it < max_iters && !restart) {
            ++it;
            const double rho_new = dot(rhat, r);
            if (rho_new == 0.0 || !std::isfinite(rho_new)) {
                throw SolverError("BiCGStab breakdown (rho = 0)", out.residual_history);
            }
            const double beta = (rho_new / rho) * (alpha / omega);
            rho = rho_new;
            for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
            for (std::size_t i = 0; i < n; ++i) y[i] = inv_diag[i] * p[i];
            v = a.multiply(y);
            const double rv = dot(rhat, v);
            if (rv == 0.0) throw SolverError("BiCGStab breakdown (rhat . v = 0)", out.residual_history);
            alpha = rho / rv;
            for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
            if (norm(s) / bnorm <= opts.tolerance) {
                for (std::size_t i = 0; i < n; ++i) x[i] += alpha * y[i];
                out.residual_history.push_back(norm(s) / bnorm);
                restart = true;
                break;
            }
            for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * s[i];
            t = a.multiply(z);
            const double tt = dot(t, t);
            omega = tt > 0.0 ? dot(t, s) / tt : 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                x[i] += alpha * y[i] + omega * z[i];
                r[i] = s[i] - omega * t[i];
            }
            rel = norm(r) / bnorm;
            out.residual_history.push_back(rel);
            if (!std::isfinite(rel)) throw SolverError("BiCGStab diverged", out.residual_history);
            if (rel <= opts.tolerance) restart = true;
            if (omega == 0.0) {
                throw SolverError("BiCGStab breakdown (omega = 0)", out.residual_history);
            }
        }
    }
    const auto ax = a.multiply(x);
    std::vector<double> res(n);
    for (std::size_t i = 0; i < n; ++i) res[i] = b[i] - ax[i];
    out.relative_residual = norm(res) / bnorm;
    out.iterations = it;
    if (out.relative_residual <= opts.tolerance) return x;
    throw SolverError("BiCGStab did not converge in " + std::to_string(max_iters) + " iterations (residual " +
                          std::to_string(out.relative_residual) + ")",
                      out.residual_history);
}

std::vector<double> linear_solve(const FiveBandMatrix& a, std::span<const double> rhs, const LinearSolveOptions& opts,
                                 LinearSolveInfo* info) {
    if (a.size() <= opts.direct_limit) {
        auto x = banded_lu_solve(a, rhs);
        if (info) {
            *info = {};
            info->direct = true;
            const auto ax = a.multiply(x);
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                num += (rhs[i] - ax[i]) * (rhs[i] - ax[i]);
                den += rhs[i] * rhs[i];
            }
            info->relative_residual = den > 0.0 ? std::sqrt(num / den) : 0.0;
        }
        return x;
    }
    return bicgstab_solve(a, rhs, opts, info);
}

}  // namespace mpinn::ref
