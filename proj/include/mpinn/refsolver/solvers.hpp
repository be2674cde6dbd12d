#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "mpinn/physics/model.hpp"
#include "mpinn/refsolver/grid.hpp"
#include "mpinn/refsolver/linear.hpp"

namespace mpinn::ref {

using physics::BoundarySpec;
using physics::PhysicalParams;

struct DarcySolution {
    FieldGrid h;
    VelocityField v;
    LinearSolveInfo info;
};

/// Steady Darcy flow div(K grad h) = 0 with a prescribed inflow flux q at
/// x1 = 0, h = h2 at x1 = l1 and no flow across x2 = 0, l2. Face
/// conductivities are harmonic means of the adjacent cells; the outlet face
/// uses the half-cell distance.
DarcySolution solve_darcy(const FieldGrid& k, const BoundarySpec& bc, const PhysicalParams& params,
                          const LinearSolveOptions& opts = {});

/// Net Darcy outflow minus prescribed inflow of each cell, in flux units.
std::vector<double> darcy_cell_imbalance(const FieldGrid& k, const FieldGrid& h, const BoundarySpec& bc);

/// max |cell imbalance| / (q * l2).
double darcy_mass_balance_error(const FieldGrid& k, const FieldGrid& h, const BoundarySpec& bc);

struct AdeOptions {
    /// Inlet concentration profile; defaults to BoundarySpec::inlet_concentration.
    std::function<double(double x2)> inlet;
    /// Dirichlet outlet value in place of the zero-gradient outlet (used for
    /// verification against 1-D analytic profiles).
    std::optional<double> outlet_value;
};

/// Steady advection-dispersion div(v C - D grad C) = 0 with upwind
/// advection and central dispersion. Face dispersion uses the face velocity
/// magnitude: D11 on x-faces, D22 on y-faces.
FieldGrid solve_ade(const VelocityField& v, const BoundarySpec& bc, const PhysicalParams& params,
                    const LinearSolveOptions& opts = {}, const AdeOptions& ade = {},
                    LinearSolveInfo* info = nullptr);

struct SoluteBalance {
    double inflow = 0.0;   // advective + dispersive flux entering the domain
    double outflow = 0.0;  // flux leaving the domain
};
SoluteBalance ade_mass_balance(const VelocityField& v, const FieldGrid& c, const BoundarySpec& bc,
                               const PhysicalParams& params, const AdeOptions& ade = {});

/// Velocity magnitude at x-face (i, j) and y-face (i, j).
double x_face_speed(const VelocityField& v, std::size_t i, std::size_t j);
double y_face_speed(const VelocityField& v, std::size_t i, std::size_t j);

}  // namespace mpinn::ref
