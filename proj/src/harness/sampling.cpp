#include "mpinn/harness/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "mpinn/fields/fields.hpp"
#include "mpinn/util/random.hpp"

namespace mpinn::harness {

double relative_error(const FieldGrid& reference, std::span<const double> estimate) {
    if (estimate.size() != reference.size()) throw std::invalid_argument("relative_error: size mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < estimate.size(); ++k) {
        const double d = reference.values[k] - estimate[k];
        num += d * d;
        den += reference.values[k] * reference.values[k];
    }
    // Uniform cells: the area factors cancel.
    if (den == 0.0) throw std::invalid_argument("relative_error: reference field is identically zero");
    return num / den;
}

double relative_error(const FieldGrid& reference, const FieldGrid& estimate) {
    if (!reference.same_geometry(estimate)) throw std::invalid_argument("relative_error: grids differ");
    return relative_error(reference, std::span<const double>(estimate.values));
}

double relative_error(const FieldGrid& reference, const std::function<double(physics::Point2)>& estimate) {
    std::vector<double> v;
    v.reserve(reference.size());
    for (const auto& p : reference.cell_centers()) v.push_back(estimate(p));
    return relative_error(reference, std::span<const double>(v));
}

namespace {

constexpr std::uint64_t kMeasurementStream = 0x6d6561;
constexpr std::uint64_t kResidualStream = 0x726573;

// Factor pair (gx, gy) with gx * gy == n and gx / gy closest to the grid
// aspect ratio.
std::pair<std::size_t, std::size_t> lattice(std::size_t n, double aspect) {
    std::pair<std::size_t, std::size_t> best{n, 1};
    double best_score = 1e300;
    for (std::size_t gy = 1; gy <= n; ++gy) {
        if (n % gy) continue;
        const std::size_t gx = n / gy;
        const double score = std::abs(std::log(static_cast<double>(gx) / static_cast<double>(gy) / aspect));
        if (score < best_score) {
            best_score = score;
            best = {gx, gy};
        }
    }
    return best;
}

std::vector<double> spaced(double length, std::size_t n) {
    std::vector<double> out(n);
    const double inset = 1e-6 * length;
    if (n == 1) {
        out[0] = 0.5 * length;
        return out;
    }
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = inset + (length - 2.0 * inset) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    return out;
}

}  // namespace

std::vector<std::size_t> select_cells(std::size_t nx, std::size_t ny, std::size_t n, std::uint64_t seed,
                                      MeasurementLayout layout) {
    const std::size_t cells = nx * ny;
    if (n > cells) {
        throw std::invalid_argument("cannot select " + std::to_string(n) + " measurements from " +
                                    std::to_string(cells) + " cells");
    }
    std::vector<std::size_t> out;
    if (layout == MeasurementLayout::grid) {
        if (n == 0) return out;
        const auto [gx, gy] = lattice(n, static_cast<double>(nx) / static_cast<double>(ny));
        if (gx > nx || gy > ny) throw std::invalid_argument("grid layout does not fit the field grid");
        for (std::size_t b = 0; b < gy; ++b) {
            const auto j = static_cast<std::size_t>((static_cast<double>(b) + 0.5) * static_cast<double>(ny) / static_cast<double>(gy));
            for (std::size_t a = 0; a < gx; ++a) {
                const auto i = static_cast<std::size_t>((static_cast<double>(a) + 0.5) * static_cast<double>(nx) / static_cast<double>(gx));
                out.push_back(j * nx + i);
            }
        }
        return out;
    }
    // Partial Fisher-Yates over all cells.
    std::vector<std::size_t> perm(cells);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    util::Rng rng{seed, kMeasurementStream};
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t r = k + static_cast<std::size_t>(rng.below(cells - k));
        std::swap(perm[k], perm[r]);
    }
    perm.resize(n);
    return perm;
}

physics::MeasurementSet select_measurements(const FieldGrid& field, physics::Variable variable, std::size_t n,
                                            std::uint64_t seed, MeasurementLayout layout) {
    physics::MeasurementSet m;
    m.variable = variable;
    for (std::size_t c : select_cells(field.nx, field.ny, n, seed, layout)) {
        const auto p = field.cell_center(c % field.nx, c / field.nx);
        m.points.push_back(p);
        m.values.push_back(fields::bilinear_sample(field, p));
    }
    return m;
}

physics::ResidualPointSet select_residual_points(const physics::DomainSpec& dom, const ResidualCounts& counts,
                                                 std::uint64_t seed) {
    dom.validate();
    physics::ResidualPointSet s;
    util::Rng rng_h{seed, kResidualStream, 0};
    util::Rng rng_c{seed, kResidualStream, 1};
    // Rng::uniform is on the open interval, so the points are strictly inside.
    for (std::size_t k = 0; k < counts.interior_h; ++k) {
        const double x1 = rng_h.uniform(0.0, dom.l1);
        s.interior_h.push_back({x1, rng_h.uniform(0.0, dom.l2)});
    }
    for (std::size_t k = 0; k < counts.interior_c; ++k) {
        const double x1 = rng_c.uniform(0.0, dom.l1);
        s.interior_c.push_back({x1, rng_c.uniform(0.0, dom.l2)});
    }
    auto vertical = [&](double x1, std::size_t n, std::vector<physics::Point2>& out) {
        for (double x2 : spaced(dom.l2, n)) out.push_back({x1, x2});
    };
    auto lateral = [&](std::size_t n, std::vector<physics::Point2>& out) {
        for (double x2 : {0.0, dom.l2}) {
            for (double x1 : spaced(dom.l1, n)) out.push_back({x1, x2});
        }
    };
    vertical(0.0, counts.boundary_h, s.neumann1_h);
    lateral(counts.boundary_h, s.neumann2_h);
    vertical(dom.l1, counts.boundary_h, s.dirichlet_h);
    vertical(dom.l1, counts.boundary_c, s.neumann1_c);
    lateral(counts.boundary_c, s.neumann2_c);
    vertical(0.0, counts.boundary_c, s.dirichlet_c);
    return s;
}

}  // namespace mpinn::harness
