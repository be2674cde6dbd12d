#include "mpinn/fields/fields.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <unsupported/Eigen/FFT>

#include "mpinn/util/random.hpp"

namespace mpinn::fields {

using std::numbers::pi;

double analytic_k(Point2 p) { return 0.5 * std::sin(4.0 * pi * p.x1) * std::sin(4.0 * pi * p.x2) + 1.0; }

std::vector<double> analytic_k(std::span<const Point2> points) {
    std::vector<double> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(analytic_k(p));
    return out;
}

FieldGrid analytic_k_grid(std::size_t nx, std::size_t ny, DomainSpec dom) {
    return FieldGrid::from_function(nx, ny, dom, [](Point2 p) { return analytic_k(p); });
}

std::string_view to_string(CovarianceForm f) noexcept {
    return f == CovarianceForm::exponential ? "exponential" : "gaussian";
}

CovarianceForm parse_covariance_form(std::string_view text) {
    if (text == "exponential") return CovarianceForm::exponential;
    if (text == "gaussian") return CovarianceForm::gaussian;
    throw std::invalid_argument("unknown covariance form '" + std::string(text) + "'");
}

double GrfSpec::covariance(double r) const {
    const double scale = 2.0 * lambda * lambda;
    return sigma2 * std::exp(form == CovarianceForm::exponential ? -r / scale : -r * r / scale);
}

void GrfSpec::validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("correlation length must be positive");
    if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) throw std::invalid_argument("variance must be non-negative");
}

namespace {

using FftEngine = Eigen::FFT<double>;

FftEngine make_engine() {
    FftEngine e;
    e.SetFlag(FftEngine::Unscaled);
    return e;
}

void transform(FftEngine& engine, std::span<std::complex<double>> a, bool inverse,
               std::vector<std::complex<double>>& out) {
    if (a.size() == 1) return;  // identity, and kissfft cannot plan length 1
    out.resize(a.size());
    if (inverse) engine.inv(out.data(), a.data(), static_cast<FftEngine::Index>(a.size()));
    else engine.fwd(out.data(), a.data(), static_cast<FftEngine::Index>(a.size()));
    std::copy(out.begin(), out.end(), a.begin());
}

}  // namespace

void fft(std::span<std::complex<double>> a, bool inverse) {
    if (a.empty()) throw std::invalid_argument("fft of an empty sequence");
    auto engine = make_engine();
    std::vector<std::complex<double>> out;
    transform(engine, a, inverse, out);
}

void fft2(std::span<std::complex<double>> data, std::size_t rows, std::size_t cols, bool inverse) {
    if (data.size() != rows * cols || data.empty()) throw std::invalid_argument("fft2 size mismatch");
    auto engine = make_engine();
    std::vector<std::complex<double>> out;
    for (std::size_t r = 0; r < rows; ++r) transform(engine, data.subspan(r * cols, cols), inverse, out);
    std::vector<std::complex<double>> col(rows);
    for (std::size_t c = 0; c < cols; ++c) {
        for (std::size_t r = 0; r < rows; ++r) col[r] = data[r * cols + c];
        transform(engine, col, inverse, out);
        for (std::size_t r = 0; r < rows; ++r) data[r * cols + c] = col[r];
    }
}

namespace {

// Eigenvalues of the block-circulant covariance on an mx x my periodic grid.
std::vector<double> embedding_eigenvalues(std::size_t mx, std::size_t my, double dx, double dy, const GrfSpec& spec) {
    std::vector<std::complex<double>> c(mx * my);
    for (std::size_t j = 0; j < my; ++j) {
        const double ly = static_cast<double>(std::min(j, my - j)) * dy;
        for (std::size_t i = 0; i < mx; ++i) {
            const double lx = static_cast<double>(std::min(i, mx - i)) * dx;
            c[j * mx + i] = spec.covariance(std::hypot(lx, ly));
        }
    }
    fft2(c, my, mx);
    std::vector<double> ev(c.size());
    for (std::size_t k = 0; k < c.size(); ++k) ev[k] = c[k].real();
    return ev;
}

constexpr std::uint64_t kGrfStream = 0x677266;
constexpr int kMaxEnlargements = 3;
// Negative eigenvalues down to this fraction of the largest are round-off
// and clipped to zero.
constexpr double kNegativeTolerance = 1e-10;

}  // namespace

FieldGrid sample_grf(std::size_t nx, std::size_t ny, DomainSpec dom, const GrfSpec& spec) {
    spec.validate();
    FieldGrid y(nx, ny, dom, 0.0);
    y.validate();
    if (spec.sigma2 == 0.0) return y;

    std::size_t mx = std::bit_ceil(2 * nx);
    std::size_t my = std::bit_ceil(2 * ny);
    std::vector<double> ev;
    for (int attempt = 0;; ++attempt) {
        ev = embedding_eigenvalues(mx, my, y.dx(), y.dy(), spec);
        const double top = *std::max_element(ev.begin(), ev.end());
        const double bottom = *std::min_element(ev.begin(), ev.end());
        if (bottom >= -kNegativeTolerance * top) break;
        if (attempt == kMaxEnlargements) {
            throw EmbeddingError("circulant embedding is not positive definite (min eigenvalue " +
                                 std::to_string(bottom / top) + " of max) after " +
                                 std::to_string(kMaxEnlargements) + " enlargements");
        }
        mx *= 2;
        my *= 2;
    }

    util::Rng rng{spec.seed, kGrfStream};
    const double norm = 1.0 / static_cast<double>(mx * my);
    std::vector<std::complex<double>> z(mx * my);
    for (std::size_t k = 0; k < z.size(); ++k) {
        const double s = std::sqrt(std::max(ev[k], 0.0) * norm);
        const double re = rng.normal();
        const double im = rng.normal();
        z[k] = {s * re, s * im};
    }
    fft2(z, my, mx);
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) y.at(i, j) = z[j * mx + i].real();
    }
    return y;
}

FieldGrid lognormal_k(std::size_t nx, std::size_t ny, DomainSpec dom, const GrfSpec& spec) {
    auto k = sample_grf(nx, ny, dom, spec);
    for (auto& v : k.values) v = std::exp(v);
    return k;
}

double bilinear_sample(const FieldGrid& f, Point2 p) {
    if (!f.domain.contains(p)) {
        throw std::invalid_argument("sample point (" + std::to_string(p.x1) + ", " + std::to_string(p.x2) +
                                    ") outside the domain");
    }
    auto locate = [](double x, double h, std::size_t n, std::size_t& i0, double& t) {
        const double s = std::clamp(x / h - 0.5, 0.0, static_cast<double>(n - 1));
        i0 = std::min(static_cast<std::size_t>(s), n >= 2 ? n - 2 : 0);
        t = n >= 2 ? s - static_cast<double>(i0) : 0.0;
    };
    std::size_t i0, j0;
    double tx, ty;
    locate(p.x1, f.dx(), f.nx, i0, tx);
    locate(p.x2, f.dy(), f.ny, j0, ty);
    const std::size_t i1 = f.nx >= 2 ? i0 + 1 : i0;
    const std::size_t j1 = f.ny >= 2 ? j0 + 1 : j0;
    const double lower = (1.0 - tx) * f.at(i0, j0) + tx * f.at(i1, j0);
    const double upper = (1.0 - tx) * f.at(i0, j1) + tx * f.at(i1, j1);
    return (1.0 - ty) * lower + ty * upper;
}

std::vector<double> bilinear_sample(const FieldGrid& f, std::span<const Point2> points) {
    std::vector<double> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back(bilinear_sample(f, p));
    return out;
}

}  // namespace mpinn::fields
