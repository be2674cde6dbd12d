#include "mpinn/refsolver/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mpinn::ref {

namespace {

// Unknown numbering that keeps the band narrow: the shorter grid direction
// varies fastest.
struct Ordering {
    std::size_t nx, ny;
    bool y_fast;

    Ordering(std::size_t nx_, std::size_t ny_) : nx(nx_), ny(ny_), y_fast(ny_ <= nx_) {}
    std::size_t stride() const { return y_fast ? ny : nx; }
    std::size_t operator()(std::size_t i, std::size_t j) const { return y_fast ? i * ny + j : j * nx + i; }
};

double harmonic(double a, double b) { return 2.0 * a * b / (a + b); }

void check_conductivity(const FieldGrid& k) {
    k.validate();
    for (double v : k.values) {
        if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("conductivity must be positive and finite");
    }
}

}  // namespace

DarcySolution solve_darcy(const FieldGrid& k, const BoundarySpec& bc, const PhysicalParams& params,
                          const LinearSolveOptions& opts) {
    check_conductivity(k);
    bc.validate();
    params.validate();
    const std::size_t nx = k.nx, ny = k.ny;
    const double dx = k.dx(), dy = k.dy();
    const Ordering ord(nx, ny);
    FiveBandMatrix a(nx * ny, ord.stride());
    std::vector<double> rhs(nx * ny, 0.0);

    auto couple = [&](std::size_t r, std::size_t c, double t) {
        a.add(r, r, t);
        a.add(r, c, -t);
    };
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            const std::size_t r = ord(i, j);
            const double kp = k.at(i, j);
            if (i > 0) couple(r, ord(i - 1, j), harmonic(k.at(i - 1, j), kp) * dy / dx);
            if (i + 1 < nx) couple(r, ord(i + 1, j), harmonic(k.at(i + 1, j), kp) * dy / dx);
            if (j > 0) couple(r, ord(i, j - 1), harmonic(k.at(i, j - 1), kp) * dx / dy);
            if (j + 1 < ny) couple(r, ord(i, j + 1), harmonic(k.at(i, j + 1), kp) * dx / dy);
            if (i == 0) rhs[r] += bc.q * dy;
            if (i + 1 == nx) {
                const double tb = kp * dy / (0.5 * dx);
                a.add(r, r, tb);
                rhs[r] += tb * bc.h2;
            }
        }
    }

    DarcySolution sol;
    const auto x = linear_solve(a, rhs, opts, &sol.info);
    sol.h = FieldGrid(nx, ny, k.domain);
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) sol.h.at(i, j) = x[ord(i, j)];
    }

    auto& v = sol.v;
    v = VelocityField(nx, ny, k.domain);
    const double phi = params.phi;
    for (std::size_t j = 0; j < ny; ++j) {
        v.x_face(0, j) = bc.q / phi;
        for (std::size_t i = 1; i < nx; ++i) {
            v.x_face(i, j) = harmonic(k.at(i - 1, j), k.at(i, j)) * (sol.h.at(i - 1, j) - sol.h.at(i, j)) / dx / phi;
        }
        v.x_face(nx, j) = k.at(nx - 1, j) * (sol.h.at(nx - 1, j) - bc.h2) / (0.5 * dx) / phi;
    }
    for (std::size_t j = 1; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            v.y_face(i, j) = harmonic(k.at(i, j - 1), k.at(i, j)) * (sol.h.at(i, j - 1) - sol.h.at(i, j)) / dy / phi;
        }
    }
    return sol;
}

std::vector<double> darcy_cell_imbalance(const FieldGrid& k, const FieldGrid& h, const BoundarySpec& bc) {
    if (!k.same_geometry(h)) throw std::invalid_argument("conductivity and head grids differ");
    const std::size_t nx = k.nx, ny = k.ny;
    const double dx = k.dx(), dy = k.dy();
    std::vector<double> out(nx * ny, 0.0);
    // Darcy flux across each interior face, positive along +x / +y.
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i + 1 < nx; ++i) {
            const double f = harmonic(k.at(i, j), k.at(i + 1, j)) * (h.at(i, j) - h.at(i + 1, j)) / dx * dy;
            out[k.index(i, j)] += f;
            out[k.index(i + 1, j)] -= f;
        }
    }
    for (std::size_t j = 0; j + 1 < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            const double f = harmonic(k.at(i, j), k.at(i, j + 1)) * (h.at(i, j) - h.at(i, j + 1)) / dy * dx;
            out[k.index(i, j)] += f;
            out[k.index(i, j + 1)] -= f;
        }
    }
    for (std::size_t j = 0; j < ny; ++j) {
        out[k.index(0, j)] -= bc.q * dy;
        out[k.index(nx - 1, j)] += k.at(nx - 1, j) * (h.at(nx - 1, j) - bc.h2) / (0.5 * dx) * dy;
    }
    return out;
}

double darcy_mass_balance_error(const FieldGrid& k, const FieldGrid& h, const BoundarySpec& bc) {
    const auto imb = darcy_cell_imbalance(k, h, bc);
    double m = 0.0;
    for (double v : imb) m = std::max(m, std::abs(v));
    return m / (std::abs(bc.q) * k.domain.l2);
}

double x_face_speed(const VelocityField& v, std::size_t i, std::size_t j) {
    auto cell_vy = [&](std::size_t c) { return 0.5 * (v.y_face(c, j) + v.y_face(c, j + 1)); };
    double vy;
    if (i == 0) vy = cell_vy(0);
    else if (i == v.nx) vy = cell_vy(v.nx - 1);
    else vy = 0.5 * (cell_vy(i - 1) + cell_vy(i));
    const double vx = v.x_face(i, j);
    return std::sqrt(vx * vx + vy * vy);
}

double y_face_speed(const VelocityField& v, std::size_t i, std::size_t j) {
    auto cell_vx = [&](std::size_t c) { return 0.5 * (v.x_face(i, c) + v.x_face(i + 1, c)); };
    double vx;
    if (j == 0) vx = cell_vx(0);
    else if (j == v.ny) vx = cell_vx(v.ny - 1);
    else vx = 0.5 * (cell_vx(j - 1) + cell_vx(j));
    const double vy = v.y_face(i, j);
    return std::sqrt(vx * vx + vy * vy);
}

namespace {

struct AdeGeometry {
    const VelocityField& v;
    const PhysicalParams& p;
    double dx, dy, molecular;

    double d11(std::size_t i, std::size_t j) const { return molecular + p.alpha_l * x_face_speed(v, i, j); }
    double d22(std::size_t i, std::size_t j) const { return molecular + p.alpha_t * y_face_speed(v, i, j); }
};

std::function<double(double)> inlet_profile(const BoundarySpec& bc, const DomainSpec& dom, const AdeOptions& ade) {
    if (ade.inlet) return ade.inlet;
    return [bc, dom](double x2) { return bc.inlet_concentration(x2, dom); };
}

}  // namespace

FieldGrid solve_ade(const VelocityField& v, const BoundarySpec& bc, const PhysicalParams& params,
                    const LinearSolveOptions& opts, const AdeOptions& ade, LinearSolveInfo* info) {
    params.validate();
    const std::size_t nx = v.nx, ny = v.ny;
    if (nx == 0 || ny == 0 || v.vx.size() != (nx + 1) * ny || v.vy.size() != nx * (ny + 1)) {
        throw std::invalid_argument("malformed velocity field");
    }
    const AdeGeometry g{v, params, v.dx(), v.dy(), params.d_w * params.tau};
    const auto inlet = inlet_profile(bc, v.domain, ade);
    const Ordering ord(nx, ny);
    FiveBandMatrix a(nx * ny, ord.stride());
    std::vector<double> rhs(nx * ny, 0.0);

    // Face between cell r and neighbor c; `flow` is the volumetric flux from
    // r towards c and `t` the dispersive transmissibility.
    auto interior_face = [&](std::size_t r, std::size_t c, double flow, double t) {
        if (flow >= 0.0) a.add(r, r, flow);
        else a.add(r, c, flow);
        a.add(r, r, t);
        a.add(r, c, -t);
    };
    for (std::size_t j = 0; j < ny; ++j) {
        const double yc = (static_cast<double>(j) + 0.5) * g.dy;
        for (std::size_t i = 0; i < nx; ++i) {
            const std::size_t r = ord(i, j);
            // west
            const double fw = -v.x_face(i, j) * g.dy;  // outward
            if (i > 0) {
                interior_face(r, ord(i - 1, j), fw, g.d11(i, j) * g.dy / g.dx);
            } else {
                const double cb = inlet(yc);
                const double t = g.d11(0, j) * g.dy / (0.5 * g.dx);
                if (fw >= 0.0) a.add(r, r, fw);
                else rhs[r] -= fw * cb;
                a.add(r, r, t);
                rhs[r] += t * cb;
            }
            // east
            const double fe = v.x_face(i + 1, j) * g.dy;
            if (i + 1 < nx) {
                interior_face(r, ord(i + 1, j), fe, g.d11(i + 1, j) * g.dy / g.dx);
            } else if (ade.outlet_value) {
                const double cb = *ade.outlet_value;
                const double t = g.d11(nx, j) * g.dy / (0.5 * g.dx);
                if (fe >= 0.0) a.add(r, r, fe);
                else rhs[r] -= fe * cb;
                a.add(r, r, t);
                rhs[r] += t * cb;
            } else {
                a.add(r, r, fe);  // zero gradient: boundary value equals the cell value
            }
            // south
            const double fs = -v.y_face(i, j) * g.dx;
            if (j > 0) interior_face(r, ord(i, j - 1), fs, g.d22(i, j) * g.dx / g.dy);
            else a.add(r, r, fs);
            // north
            const double fn = v.y_face(i, j + 1) * g.dx;
            if (j + 1 < ny) interior_face(r, ord(i, j + 1), fn, g.d22(i, j + 1) * g.dx / g.dy);
            else a.add(r, r, fn);
        }
    }

    const auto x = linear_solve(a, rhs, opts, info);
    FieldGrid c(nx, ny, v.domain);
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) c.at(i, j) = x[ord(i, j)];
    }
    return c;
}

SoluteBalance ade_mass_balance(const VelocityField& v, const FieldGrid& c, const BoundarySpec& bc,
                               const PhysicalParams& params, const AdeOptions& ade) {
    const AdeGeometry g{v, params, v.dx(), v.dy(), params.d_w * params.tau};
    const auto inlet = inlet_profile(bc, v.domain, ade);
    const std::size_t nx = v.nx, ny = v.ny;
    SoluteBalance b;
    for (std::size_t j = 0; j < ny; ++j) {
        const double yc = (static_cast<double>(j) + 0.5) * g.dy;
        // inlet face, flux into the domain
        const double cb = inlet(yc);
        const double u = v.x_face(0, j) * g.dy;
        const double t = g.d11(0, j) * g.dy / (0.5 * g.dx);
        b.inflow += (u >= 0.0 ? u * cb : u * c.at(0, j)) + t * (cb - c.at(0, j));
        // outlet face, flux out of the domain
        const double ue = v.x_face(nx, j) * g.dy;
        if (ade.outlet_value) {
            const double te = g.d11(nx, j) * g.dy / (0.5 * g.dx);
            b.outflow += (ue >= 0.0 ? ue * c.at(nx - 1, j) : ue * *ade.outlet_value) +
                         te * (c.at(nx - 1, j) - *ade.outlet_value);
        } else {
            b.outflow += ue * c.at(nx - 1, j);
        }
    }
    for (std::size_t i = 0; i < nx; ++i) {
        b.outflow += v.y_face(i, ny) * g.dx * c.at(i, ny - 1) - v.y_face(i, 0) * g.dx * c.at(i, 0);
    }
    return b;
}

}  // namespace mpinn::ref
