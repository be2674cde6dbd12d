#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "mpinn/fields/fields.hpp"
#include "mpinn/util/random.hpp"

using namespace mpinn;
using fields::FieldGrid;
using physics::Point2;

namespace {

const physics::DomainSpec kDomain{1.0, 0.5};

// Naive DFT for checking the FFT.
std::vector<std::complex<double>> dft(const std::vector<std::complex<double>>& x, bool inverse) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n);
    const double sign = inverse ? 1.0 : -1.0;
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t t = 0; t < n; ++t) {
            const double a = sign * 2.0 * std::numbers::pi * static_cast<double>(k * t % n) / static_cast<double>(n);
            out[k] += x[t] * std::complex<double>(std::cos(a), std::sin(a));
        }
    }
    return out;
}

// Mean of Y(x) Y(x + lag) over pairs along both axes, lag given in cells and
// interpolated linearly between neighbouring integer lags.
double axis_covariance(const FieldGrid& y, double lag_cells) {
    auto at_lag = [&](std::size_t l) {
        double acc = 0.0;
        std::size_t n = 0;
        for (std::size_t j = 0; j < y.ny; ++j) {
            for (std::size_t i = 0; i + l < y.nx; ++i, ++n) acc += y.at(i, j) * y.at(i + l, j);
        }
        for (std::size_t j = 0; j + l < y.ny; ++j) {
            for (std::size_t i = 0; i < y.nx; ++i, ++n) acc += y.at(i, j) * y.at(i, j + l);
        }
        return acc / static_cast<double>(n);
    };
    const auto l0 = static_cast<std::size_t>(lag_cells);
    const double t = lag_cells - static_cast<double>(l0);
    return (1.0 - t) * at_lag(l0) + t * at_lag(l0 + 1);
}

}  // namespace

TEST_CASE("analytic conductivity values") {
    CHECK(fields::analytic_k({0.0, 0.0}) == 1.0);
    CHECK(fields::analytic_k({0.125, 0.125}) == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(fields::analytic_k({0.125, 0.375}) == doctest::Approx(0.5).epsilon(1e-15));
    util::Rng rng(3);
    for (int t = 0; t < 1000; ++t) {
        const double k = fields::analytic_k({rng.uniform(0, 1), rng.uniform(0, 0.5)});
        CHECK(k >= 0.5);
        CHECK(k <= 1.5);
    }
}

TEST_CASE("FFT matches the direct transform") {
    util::Rng rng(11);
    for (std::size_t n : {1, 2, 6, 8, 64}) {
        std::vector<std::complex<double>> x(n);
        for (auto& v : x) v = {rng.normal(), rng.normal()};
        for (bool inverse : {false, true}) {
            auto y = x;
            fields::fft(y, inverse);
            const auto ref = dft(x, inverse);
            for (std::size_t k = 0; k < n; ++k) CHECK(std::abs(y[k] - ref[k]) < 1e-11);
        }
        auto y = x;
        fields::fft(y);
        fields::fft(y, true);
        for (std::size_t k = 0; k < n; ++k) CHECK(std::abs(y[k] / static_cast<double>(n) - x[k]) < 1e-14);
    }
    std::vector<std::complex<double>> empty;
    CHECK_THROWS(fields::fft(empty));
}

TEST_CASE("2-D FFT of a separable plane wave is a single spike") {
    const std::size_t rows = 8, cols = 16;
    std::vector<std::complex<double>> a(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const double ph = 2.0 * std::numbers::pi * (3.0 * c / cols + 5.0 * r / rows);
            a[r * cols + c] = {std::cos(ph), std::sin(ph)};
        }
    }
    fields::fft2(a, rows, cols);
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double expect = k == 5 * cols + 3 ? static_cast<double>(rows * cols) : 0.0;
        CHECK(std::abs(a[k] - expect) < 1e-10);
    }
}

TEST_CASE("covariance forms") {
    fields::GrfSpec s;
    s.lambda = 0.2;
    s.sigma2 = 2.0;
    CHECK(s.covariance(0.0) == 2.0);
    CHECK(s.covariance(0.2) == doctest::Approx(2.0 * std::exp(-1.0 / (2 * 0.2))));
    s.form = fields::CovarianceForm::gaussian;
    CHECK(s.covariance(0.2) == doctest::Approx(2.0 * std::exp(-0.5)));
    CHECK(fields::parse_covariance_form("gaussian") == fields::CovarianceForm::gaussian);
    CHECK_THROWS(fields::parse_covariance_form("matern"));
    s.lambda = 0.0;
    CHECK_THROWS(s.validate());
}

TEST_CASE("zero variance gives a unit conductivity") {
    fields::GrfSpec s;
    s.sigma2 = 0.0;
    const auto y = fields::sample_grf(32, 16, kDomain, s);
    for (double v : y.values) CHECK(v == 0.0);
    const auto k = fields::lognormal_k(32, 16, kDomain, s);
    for (double v : k.values) CHECK(v == 1.0);
}

TEST_CASE("random field is deterministic in the seed and K is positive") {
    fields::GrfSpec s;
    s.seed = 5;
    const auto a = fields::sample_grf(64, 32, kDomain, s);
    const auto b = fields::sample_grf(64, 32, kDomain, s);
    CHECK(a.values == b.values);
    s.seed = 6;
    const auto c = fields::sample_grf(64, 32, kDomain, s);
    CHECK(a.values != c.values);
    for (double lam : {0.05, 0.2, 0.5}) {
        s.lambda = lam;
        for (double v : fields::lognormal_k(64, 32, kDomain, s).values) CHECK(v > 0.0);
    }
}

TEST_CASE("sampler covariance equals the target exactly") {
    // Y = Re(F(sqrt(ev / M) z)) with unit complex normals z has
    // E[Y_a Y_b] = Re(F^-1(ev))[a - b] / M; this must equal the covariance.
    fields::GrfSpec s;
    s.lambda = 0.2;
    const std::size_t nx = 64, ny = 32, mx = 128, my = 64;
    const double dx = kDomain.l1 / nx, dy = kDomain.l2 / ny;
    std::vector<std::complex<double>> c(mx * my);
    for (std::size_t j = 0; j < my; ++j) {
        for (std::size_t i = 0; i < mx; ++i) {
            const double lx = static_cast<double>(std::min(i, mx - i)) * dx;
            const double ly = static_cast<double>(std::min(j, my - j)) * dy;
            c[j * mx + i] = s.covariance(std::hypot(lx, ly));
        }
    }
    auto ev = c;
    fields::fft2(ev, my, mx);
    double min_ev = 1e300;
    for (auto& e : ev) min_ev = std::min(min_ev, e.real());
    CHECK(min_ev > 0.0);
    for (auto& e : ev) e = std::max(e.real(), 0.0);
    fields::fft2(ev, my, mx, true);
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            const double got = ev[j * mx + i].real() / static_cast<double>(mx * my);
            CHECK(got == doctest::Approx(s.covariance(std::hypot(i * dx, j * dy))).epsilon(1e-10));
        }
    }
}

TEST_CASE("single realization variance is close to sigma2") {
    fields::GrfSpec s;
    s.lambda = 0.2;
    s.seed = 0;
    const auto y = fields::sample_grf(256, 128, kDomain, s);
    double mean = 0.0;
    for (double v : y.values) mean += v;
    mean /= static_cast<double>(y.size());
    double var = 0.0;
    for (double v : y.values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(y.size() - 1);
    CHECK(std::abs(var - s.sigma2) < 0.15 * s.sigma2);
}

TEST_CASE("covariance at lag lambda over 20 seeds") {
    fields::GrfSpec s;
    s.lambda = 0.2;
    double avg = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        s.seed = seed;
        const auto y = fields::sample_grf(256, 128, kDomain, s);
        avg += axis_covariance(y, s.lambda / y.dx()) / 20.0;
    }
    const double target = s.sigma2 * std::exp(-1.0 / (2.0 * s.lambda));
    INFO("20-seed covariance " << avg << ", target " << target);
    CHECK(std::abs(avg - target) < 0.1 * target);
}

TEST_CASE("covariance at lag lambda over 400 seeds is within three standard errors") {
    fields::GrfSpec s;
    s.lambda = 0.2;
    const int seeds = 400;
    double sum = 0.0, sq = 0.0;
    for (int seed = 0; seed < seeds; ++seed) {
        s.seed = static_cast<std::uint64_t>(seed);
        const auto y = fields::sample_grf(256, 128, kDomain, s);
        const double c = axis_covariance(y, s.lambda / y.dx());
        sum += c;
        sq += c * c;
    }
    const double mean = sum / seeds;
    const double se = std::sqrt((sq / seeds - mean * mean) / (seeds - 1));
    const double target = s.sigma2 * std::exp(-1.0 / (2.0 * s.lambda));
    INFO("mean " << mean << ", standard error " << se << ", target " << target);
    CHECK(std::abs(mean - target) < 3.0 * se);
}

TEST_CASE("bilinear sampling") {
    const auto lin = FieldGrid::from_function(16, 8, kDomain, [](Point2 p) { return 2.0 * p.x1 + p.x2; });
    CHECK(fields::bilinear_sample(lin, lin.cell_center(3, 5)) == lin.at(3, 5));
    util::Rng rng(2);
    const double dx = lin.dx(), dy = lin.dy();
    for (int t = 0; t < 200; ++t) {
        const Point2 p{rng.uniform(0.5 * dx, 1.0 - 0.5 * dx), rng.uniform(0.5 * dy, 0.5 - 0.5 * dy)};
        CHECK(std::abs(fields::bilinear_sample(lin, p) - (2.0 * p.x1 + p.x2)) < 1e-12);
    }
    const FieldGrid flat(5, 3, kDomain, 0.7);
    for (int t = 0; t < 50; ++t) {
        CHECK(fields::bilinear_sample(flat, {rng.uniform(0, 1), rng.uniform(0, 0.5)}) == doctest::Approx(0.7).epsilon(1e-15));
    }
    // within half a cell of the boundary the edge cell value is held
    CHECK(fields::bilinear_sample(lin, {0.0, lin.cell_center(0, 2).x2}) == doctest::Approx(lin.at(0, 2)).epsilon(1e-15));
    CHECK(fields::bilinear_sample(lin, {1.0, 0.5}) == doctest::Approx(lin.at(15, 7)).epsilon(1e-15));
    CHECK_THROWS(fields::bilinear_sample(lin, Point2{1.01, 0.2}));
    CHECK_THROWS(fields::bilinear_sample(lin, Point2{0.5, -1e-9}));
}

TEST_CASE("embedding that stays indefinite after enlargement is reported") {
    fields::GrfSpec s;
    s.lambda = 1.0;
    CHECK_THROWS_AS(fields::sample_grf(256, 128, kDomain, s), fields::EmbeddingError);
    s.lambda = 0.5;
    CHECK_NOTHROW(fields::sample_grf(256, 128, kDomain, s));
}
