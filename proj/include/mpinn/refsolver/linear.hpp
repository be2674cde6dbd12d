#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpinn::ref {

/// Sparse matrix with nonzeros on the diagonals 0, +-1 and +-stride, as
/// produced by a 5-point stencil on a structured grid.
class FiveBandMatrix {
public:
    FiveBandMatrix(std::size_t n, std::size_t stride);

    std::size_t size() const noexcept { return n_; }
    std::size_t stride() const noexcept { return stride_; }

    /// Adds `value` to entry (row, col); col - row must be 0, +-1 or +-stride.
    /// get() returns 0 for entries off the bands.
    void add(std::size_t row, std::size_t col, double value);
    double get(std::size_t row, std::size_t col) const;
    std::vector<double> multiply(std::span<const double> x) const;
    double diagonal(std::size_t row) const { return band_[2][row]; }

private:
    friend std::vector<double> banded_lu_solve(const FiveBandMatrix&, std::span<const double>, double);
    int band_of(std::size_t row, std::size_t col) const;

    std::size_t n_;
    std::size_t stride_;
    // -stride, -1, 0, +1, +stride
    std::vector<double> band_[5];
};

class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, std::vector<double> history)
        : std::runtime_error(what), history_(std::move(history)) {}
    const std::vector<double>& residual_history() const noexcept { return history_; }

private:
    std::vector<double> history_;
};

class SingularSystemError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LinearSolveOptions {
    double tolerance = 1e-10;      // relative residual ||b - Ax|| / ||b||
    std::size_t max_iters = 0;     // 0 selects 10 * n
    std::size_t direct_limit = 20000;
};

struct LinearSolveInfo {
    bool direct = false;
    std::size_t iterations = 0;
    double relative_residual = 0.0;
    std::vector<double> residual_history;
};

/// Gaussian elimination without pivoting inside the band. Throws
/// SingularSystemError when a pivot falls below `pivot_tol` times the
/// largest diagonal magnitude.
std::vector<double> banded_lu_solve(const FiveBandMatrix& a, std::span<const double> rhs, double pivot_tol = 1e-12);

/// Jacobi-preconditioned BiCGStab. Throws SolverError on breakdown or when
/// the iteration cap is reached.
std::vector<double> bicgstab_solve(const FiveBandMatrix& a, std::span<const double> rhs,
                                   const LinearSolveOptions& opts, LinearSolveInfo* info = nullptr);

/// Direct elimination up to `direct_limit` unknowns, BiCGStab beyond.
std::vector<double> linear_solve(const FiveBandMatrix& a, std::span<const double> rhs,
                                 const LinearSolveOptions& opts = {}, LinearSolveInfo* info = nullptr);

}  // namespace mpinn::ref
