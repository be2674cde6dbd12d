#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "mpinn/refsolver/solvers.hpp"

using namespace mpinn;
using ref::FieldGrid;
using ref::FiveBandMatrix;
using ref::VelocityField;

namespace {

physics::DomainSpec unit_strip(double l1 = 1.0, double l2 = 0.5) { return {l1, l2}; }

// 5-point Laplacian with Dirichlet walls on an n x n grid.
FiveBandMatrix laplacian(std::size_t n) {
    FiveBandMatrix a(n * n, n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t r = j * n + i;
            a.add(r, r, 4.0);
            if (i > 0) a.add(r, r - 1, -1.0);
            if (i + 1 < n) a.add(r, r + 1, -1.0);
            if (j > 0) a.add(r, r - n, -1.0);
            if (j + 1 < n) a.add(r, r + n, -1.0);
        }
    }
    return a;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

VelocityField uniform_velocity(std::size_t nx, std::size_t ny, physics::DomainSpec dom, double v0) {
    VelocityField v(nx, ny, dom);
    for (auto& x : v.vx) x = v0;
    return v;
}

// Steady 1-D advection-diffusion with C(0) = 1, C(L) = 0.
double ade_profile(double x, double l, double v0, double d) {
    const double pe = v0 * l / d;
    return (std::exp(pe) - std::exp(pe * x / l)) / (std::exp(pe) - 1.0);
}

double ade_1d_error(std::size_t nx, const physics::PhysicalParams& p, double v0) {
    const auto dom = unit_strip();
    const auto v = uniform_velocity(nx, 2, dom, v0);
    ref::AdeOptions opts;
    opts.inlet = [](double) { return 1.0; };
    opts.outlet_value = 0.0;
    const auto c = ref::solve_ade(v, {}, p, {}, opts);
    const double d = p.d_w * p.tau + p.alpha_l * v0;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < nx; ++i) {
        const double exact = ade_profile(c.cell_center(i, 0).x1, dom.l1, v0, d);
        num += std::pow(c.at(i, 0) - exact, 2);
        den += exact * exact;
    }
    return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("field file round trip is bit exact") {
    auto f = FieldGrid::from_function(7, 3, unit_strip(), [](physics::Point2 p) {
        return std::exp(p.x1) / 3.0 - std::sin(1e3 * p.x2);
    });
    f.values[4] = 1e-300;
    f.values[5] = -0.1;
    std::stringstream ss;
    ref::write_field(ss, f);
    const auto g = ref::read_field(ss);
    CHECK(g.nx == 7);
    CHECK(g.ny == 3);
    CHECK(g.domain.l1 == f.domain.l1);
    CHECK(g.domain.l2 == f.domain.l2);
    CHECK(g.values == f.values);
}

TEST_CASE("field file errors") {
    std::stringstream short_file("2 2 1 1\n1 2 3\n");
    CHECK_THROWS(ref::read_field(short_file));
    std::stringstream long_file("1 1 1 1\n1 2\n");
    CHECK_THROWS(ref::read_field(long_file));
    std::stringstream junk("1 1 1 1\nabc\n");
    CHECK_THROWS(ref::read_field(junk));
}

TEST_CASE("identity system returns the right-hand side") {
    FiveBandMatrix a(50, 7);
    for (std::size_t i = 0; i < 50; ++i) a.add(i, i, 1.0);
    std::vector<double> b(50);
    for (std::size_t i = 0; i < 50; ++i) b[i] = std::sin(static_cast<double>(i));
    CHECK(max_abs_diff(ref::banded_lu_solve(a, b), b) == 0.0);
    CHECK(max_abs_diff(ref::bicgstab_solve(a, b, {}), b) < 1e-14);
}

TEST_CASE("BiCGStab agrees with direct elimination on a Laplacian") {
    const auto a = laplacian(10);
    std::vector<double> b(100);
    for (std::size_t i = 0; i < 100; ++i) b[i] = std::cos(0.3 * static_cast<double>(i)) + 0.1;
    const auto direct = ref::banded_lu_solve(a, b);
    ref::LinearSolveInfo info;
    const auto iter = ref::bicgstab_solve(a, b, {}, &info);
    double nrm = 0.0;
    for (double v : direct) nrm = std::max(nrm, std::abs(v));
    CHECK(max_abs_diff(direct, iter) / nrm < 1e-10);
    CHECK(info.relative_residual < 1e-10);
    CHECK_FALSE(info.residual_history.empty());
    const auto r = a.multiply(direct);
    CHECK(max_abs_diff(r, b) < 1e-12);
}

TEST_CASE("singular all-Neumann system is reported") {
    const std::size_t n = 6;
    FiveBandMatrix a(n * n, n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t r = j * n + i;
            auto link = [&](std::size_t c) {
                a.add(r, r, 1.0);
                a.add(r, c, -1.0);
            };
            if (i > 0) link(r - 1);
            if (i + 1 < n) link(r + 1);
            if (j > 0) link(r - n);
            if (j + 1 < n) link(r + n);
        }
    }
    std::vector<double> b(n * n, 0.0);
    b[0] = 1.0;
    CHECK_THROWS_AS(ref::banded_lu_solve(a, b), ref::SingularSystemError);
    ref::LinearSolveOptions opts;
    opts.max_iters = 500;
    CHECK_THROWS_AS(ref::bicgstab_solve(a, b, opts), ref::SolverError);
}

TEST_CASE("band access rejects entries off the stencil") {
    FiveBandMatrix a(20, 5);
    CHECK_THROWS(a.add(0, 2, 1.0));
    a.add(3, 8, 2.0);
    CHECK(a.get(3, 8) == 2.0);
    CHECK(a.get(3, 9) == 0.0);
}

TEST_CASE("uniform conductivity reproduces the linear head") {
    const auto dom = unit_strip();
    physics::BoundarySpec bc;
    bc.q = 1.0;
    bc.h2 = 0.3;
    for (auto [nx, ny] : {std::pair<std::size_t, std::size_t>{20, 10}, {256, 128}}) {
        const FieldGrid k(nx, ny, dom, 1.0);
        const auto sol = ref::solve_darcy(k, bc, {});
        double err = 0.0;
        for (std::size_t j = 0; j < ny; ++j) {
            for (std::size_t i = 0; i < nx; ++i) {
                const double x = sol.h.cell_center(i, j).x1;
                err = std::max(err, std::abs(sol.h.at(i, j) - (bc.q * (dom.l1 - x) + bc.h2)));
            }
        }
        CHECK(err < 1e-8);
        CHECK(ref::darcy_mass_balance_error(k, sol.h, bc) < 1e-10);
    }
}

TEST_CASE("two-layer conductivity matches the series-resistance solution") {
    const auto dom = unit_strip();
    physics::BoundarySpec bc;
    bc.q = 2.0;
    const std::size_t nx = 40, ny = 4;
    const auto k = FieldGrid::from_function(nx, ny, dom, [](physics::Point2 p) { return p.x1 < 0.5 ? 1.0 : 2.0; });
    const auto sol = ref::solve_darcy(k, bc, {});
    auto exact = [&](double x) {
        if (x >= 0.5) return bc.h2 + bc.q * (dom.l1 - x) / 2.0;
        return bc.h2 + bc.q * 0.5 / 2.0 + bc.q * (0.5 - x) / 1.0;
    };
    double err = 0.0;
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            err = std::max(err, std::abs(sol.h.at(i, j) - exact(sol.h.cell_center(i, j).x1)));
        }
    }
    CHECK(err < 1e-8);
    // head drop across the interface cells
    const double drop = sol.h.at(19, 0) - sol.h.at(20, 0);
    CHECK(drop == doctest::Approx(exact(sol.h.cell_center(19, 0).x1) - exact(sol.h.cell_center(20, 0).x1)).epsilon(1e-10));
}

TEST_CASE("heterogeneous Darcy flow conserves mass per cell") {
    const auto dom = unit_strip();
    physics::BoundarySpec bc;
    bc.q = 0.7;
    const auto k = FieldGrid::from_function(64, 32, dom, [](physics::Point2 p) {
        return 0.5 * std::sin(4 * M_PI * p.x1) * std::sin(4 * M_PI * p.x2) + 1.0;
    });
    const physics::PhysicalParams params;
    const auto sol = ref::solve_darcy(k, bc, params);
    CHECK(ref::darcy_mass_balance_error(k, sol.h, bc) < 1e-10);
    const auto div = sol.v.cell_divergence();
    // Pore velocity divergence is zero except where the boundaries feed the cell.
    double interior = 0.0;
    for (std::size_t j = 0; j < 32; ++j) {
        for (std::size_t i = 0; i < 64; ++i) interior = std::max(interior, std::abs(div[j * 64 + i]));
    }
    CHECK(interior < 1e-10 * bc.q / params.phi);
    CHECK_THROWS(ref::solve_darcy(FieldGrid(4, 4, dom, 0.0), bc, params));
}

TEST_CASE("Darcy solve is deterministic") {
    const auto k = FieldGrid::from_function(32, 16, unit_strip(), [](physics::Point2 p) { return 1.0 + p.x1 * p.x2; });
    const auto a = ref::solve_darcy(k, {}, {});
    const auto b = ref::solve_darcy(k, {}, {});
    CHECK(a.h.values == b.h.values);
    CHECK(a.v.vx == b.v.vx);
}

TEST_CASE("Darcy error decreases at second order") {
    // K = exp(x1): h = h2 + q (exp(-x1) - exp(-l1)).
    const auto dom = unit_strip();
    physics::BoundarySpec bc;
    std::vector<double> errs;
    for (std::size_t nx : {16, 32, 64}) {
        const auto k = FieldGrid::from_function(nx, 2, dom, [](physics::Point2 p) { return std::exp(p.x1); });
        const auto sol = ref::solve_darcy(k, bc, {});
        double err = 0.0;
        for (std::size_t i = 0; i < nx; ++i) {
            const double x = sol.h.cell_center(i, 0).x1;
            err = std::max(err, std::abs(sol.h.at(i, 0) - (bc.h2 + bc.q * (std::exp(-x) - std::exp(-dom.l1)))));
        }
        errs.push_back(err);
    }
    for (std::size_t l = 0; l + 1 < errs.size(); ++l) {
        const double slope = std::log2(errs[l] / errs[l + 1]);
        CHECK(slope == doctest::Approx(2.0).epsilon(0.2));
    }
}

TEST_CASE("no flow and uniform inlet give a uniform concentration") {
    const auto dom = unit_strip();
    const VelocityField v(16, 8, dom);
    ref::AdeOptions opts;
    opts.inlet = [](double) { return 0.42; };
    const auto c = ref::solve_ade(v, {}, {}, {}, opts);
    for (double x : c.values) CHECK(x == doctest::Approx(0.42).epsilon(1e-12));
}

TEST_CASE("upwind transport matches the 1-D profile on a refined grid") {
    const physics::PhysicalParams p;
    CHECK(ade_1d_error(1024, p, 1.0) < 0.01);
}

TEST_CASE("upwind transport error decreases at first order") {
    const physics::PhysicalParams p;
    std::vector<double> errs;
    for (std::size_t nx : {256, 512, 1024}) errs.push_back(ade_1d_error(nx, p, 1.0));
    for (std::size_t l = 0; l + 1 < errs.size(); ++l) {
        const double slope = std::log2(errs[l] / errs[l + 1]);
        CHECK(slope == doctest::Approx(1.0).epsilon(0.2));
    }
}

TEST_CASE("transport through heterogeneous flow respects the max principle and conserves solute") {
    const auto dom = unit_strip();
    const physics::BoundarySpec bc;
    const physics::PhysicalParams params;
    const auto k = FieldGrid::from_function(64, 32, dom, [](physics::Point2 p) {
        return 0.5 * std::sin(4 * M_PI * p.x1) * std::sin(4 * M_PI * p.x2) + 1.0;
    });
    const auto flow = ref::solve_darcy(k, bc, params);
    const auto c = ref::solve_ade(flow.v, bc, params);
    double lo = 1e300, hi = -1e300;
    for (std::size_t j = 0; j < 32; ++j) {
        const double c0 = bc.inlet_concentration(c.cell_center(0, j).x2, dom);
        lo = std::min(lo, c0);
        hi = std::max(hi, c0);
    }
    for (double x : c.values) {
        CHECK(x >= lo - 1e-12);
        CHECK(x <= hi + 1e-12);
    }
    const auto bal = ref::ade_mass_balance(flow.v, c, bc, params);
    CHECK(std::abs(bal.inflow - bal.outflow) / std::abs(bal.inflow) < 1e-8);
}

TEST_CASE("transport solve is deterministic") {
    const auto dom = unit_strip();
    const auto v = uniform_velocity(32, 16, dom, 2.0);
    const auto a = ref::solve_ade(v, {}, {});
    const auto b = ref::solve_ade(v, {}, {});
    CHECK(a.values == b.values);
}

TEST_CASE("256x128 reference pipeline conserves mass") {
    const auto dom = unit_strip();
    const physics::BoundarySpec bc;
    const physics::PhysicalParams params;
    const auto k = FieldGrid::from_function(256, 128, dom, [](physics::Point2 p) {
        return 0.5 * std::sin(4 * M_PI * p.x1) * std::sin(4 * M_PI * p.x2) + 1.0;
    });
    const auto flow = ref::solve_darcy(k, bc, params);
    CHECK_FALSE(flow.info.direct);
    CHECK(ref::darcy_mass_balance_error(k, flow.h, bc) < 1e-10);
    ref::LinearSolveInfo info;
    const auto c = ref::solve_ade(flow.v, bc, params, {}, {}, &info);
    CHECK(info.relative_residual < 1e-10);
    const auto bal = ref::ade_mass_balance(flow.v, c, bc, params);
    CHECK(std::abs(bal.inflow - bal.outflow) / std::abs(bal.inflow) < 1e-8);
}
