#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mpinn/harness/config.hpp"
#include "mpinn/physics/model.hpp"
#include "mpinn/refsolver/grid.hpp"

namespace mpinn::harness {

using ref::FieldGrid;

/// Squared-norm ratio sum (g - g_hat)^2 A / sum g^2 A over cells (midpoint
/// quadrature). Throws if the reference is identically zero.
double relative_error(const FieldGrid& reference, std::span<const double> estimate);
double relative_error(const FieldGrid& reference, const FieldGrid& estimate);
double relative_error(const FieldGrid& reference, const std::function<double(physics::Point2)>& estimate);

/// Cell indices chosen for n measurements. uniform_random takes the first n
/// entries of a seeded shuffle, so smaller sets are nested in larger ones.
/// grid spreads n cells over a near-square lattice.
std::vector<std::size_t> select_cells(std::size_t nx, std::size_t ny, std::size_t n, std::uint64_t seed,
                                      MeasurementLayout layout);

/// Measurements of `field` at n cell centers.
physics::MeasurementSet select_measurements(const FieldGrid& field, physics::Variable variable, std::size_t n,
                                            std::uint64_t seed, MeasurementLayout layout);

struct ResidualCounts {
    std::size_t interior_h = 0;
    std::size_t interior_c = 0;
    std::size_t boundary_h = 0;  // per segment
    std::size_t boundary_c = 0;
};

/// Interior points uniform in the open domain; boundary points equally
/// spaced along each segment, inset 1e-6 of the segment length from the
/// corners. The lateral sets hold points from both x2 = 0 and x2 = l2.
physics::ResidualPointSet select_residual_points(const physics::DomainSpec& dom, const ResidualCounts& counts,
                                                 std::uint64_t seed);

}  // namespace mpinn::harness
