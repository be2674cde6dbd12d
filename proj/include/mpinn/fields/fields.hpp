#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "mpinn/refsolver/grid.hpp"

namespace mpinn::fields {

using physics::DomainSpec;
using physics::Point2;
using ref::FieldGrid;

/// K(x) = 0.5 sin(4 pi x1) sin(4 pi x2) + 1.
double analytic_k(Point2 p);
std::vector<double> analytic_k(std::span<const Point2> points);
FieldGrid analytic_k_grid(std::size_t nx, std::size_t ny, DomainSpec dom);

enum class CovarianceForm {
    exponential,  // sigma2 exp(-r / (2 lambda^2))
    gaussian,     // sigma2 exp(-r^2 / (2 lambda^2))
};
std::string_view to_string(CovarianceForm f) noexcept;
CovarianceForm parse_covariance_form(std::string_view text);

struct GrfSpec {
    double lambda = 0.2;
    double sigma2 = 1.0;
    std::uint64_t seed = 0;
    CovarianceForm form = CovarianceForm::exponential;

    double covariance(double r) const;
    void validate() const;
};

class EmbeddingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// In-place FFT of any non-zero length. The inverse transform is
/// unnormalized.
void fft(std::span<std::complex<double>> data, bool inverse = false);
/// 2-D FFT of a rows x cols row-major array.
void fft2(std::span<std::complex<double>> data, std::size_t rows, std::size_t cols, bool inverse = false);

/// Zero-mean stationary Gaussian field Y on the cell centers of an nx x ny
/// grid, sampled by circulant embedding. The embedding starts at twice the
/// grid (rounded up to powers of two) and doubles up to three times if it
/// has significantly negative eigenvalues.
FieldGrid sample_grf(std::size_t nx, std::size_t ny, DomainSpec dom, const GrfSpec& spec);

/// exp(Y) elementwise.
FieldGrid lognormal_k(std::size_t nx, std::size_t ny, DomainSpec dom, const GrfSpec& spec);

/// Bilinear interpolation between cell centers; within half a cell of the
/// boundary the edge values are held constant. Points outside the domain
/// are rejected.
double bilinear_sample(const FieldGrid& f, Point2 p);
std::vector<double> bilinear_sample(const FieldGrid& f, std::span<const Point2> points);

}  // namespace mpinn::fields
