#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "mpinn/network/mlp.hpp"

namespace mpinn::physics {

using nn::Point2;

/// Porous-medium and transport coefficients.
struct PhysicalParams {
    double phi = 0.317;     // porosity
    double d_w = 0.09;      // diffusion coefficient, m^2/hr
    double tau = 0.681;     // tortuosity (phi^(1/3))
    double alpha_l = 0.01;  // longitudinal dispersivity, m
    double alpha_t = 0.001; // transverse dispersivity, m

    void validate() const;
    friend bool operator==(const PhysicalParams&, const PhysicalParams&) = default;
};

/// Omega = [0, l1] x [0, l2].
struct DomainSpec {
    double l1 = 1.0;
    double l2 = 0.5;

    void validate() const;
    bool contains(const Point2& p) const;
    bool strictly_inside(const Point2& p) const;
    friend bool operator==(const DomainSpec&, const DomainSpec&) = default;
};

/// Boundary data: outlet head h2 at x1 = l1, inlet Darcy flux q at x1 = 0 and
/// the inlet concentration profile c0(x2) = amp * exp(-(x2 - l2/2)^2 / width^2).
struct BoundarySpec {
    double h2 = 0.0;
    double q = 1.0;
    double c0_amp = 1.0;
    double c0_width = 0.25;

    void validate() const;
    double inlet_concentration(double x2, const DomainSpec& dom) const;
    friend bool operator==(const BoundarySpec&, const BoundarySpec&) = default;
};

struct LossWeights {
    double omega_f = 1.0;
    double omega_b = 1.0;
    friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

enum class Variable { K = 0, h = 1, C = 2 };
inline constexpr std::array<Variable, 3> kAllVariables{Variable::K, Variable::h, Variable::C};
std::string_view to_string(Variable v) noexcept;
Variable parse_variable(std::string_view text);

struct MeasurementSet {
    Variable variable = Variable::K;
    std::vector<Point2> points;
    std::vector<double> values;

    std::size_t size() const noexcept { return points.size(); }
    void validate(const DomainSpec& dom) const;
};

/// Collocation points per loss term.
struct ResidualPointSet {
    std::vector<Point2> interior_h;   // Darcy residual
    std::vector<Point2> interior_c;   // advection-dispersion residual
    std::vector<Point2> neumann1_h;   // inlet flux, x1 = 0
    std::vector<Point2> neumann2_h;   // no-flow, x2 = 0 or l2
    std::vector<Point2> dirichlet_h;  // fixed head, x1 = l1
    std::vector<Point2> neumann1_c;   // zero gradient, x1 = l1
    std::vector<Point2> neumann2_c;   // zero gradient, x2 = 0 or l2
    std::vector<Point2> dirichlet_c;  // inlet concentration, x1 = 0

    bool empty() const;
    bool has_flow_terms() const;
    bool has_transport_terms() const;
    /// Throws if an interior point is not strictly inside or a boundary point
    /// is off its segment.
    void validate(const DomainSpec& dom) const;
};

}  // namespace mpinn::physics
