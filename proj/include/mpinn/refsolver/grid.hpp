#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <vector>

#include "mpinn/physics/model.hpp"

namespace mpinn::ref {

using physics::DomainSpec;
using physics::Point2;

/// Cell-centered scalar field. values[j * nx + i] is cell (i, j), i along
/// x1 and j along x2.
struct FieldGrid {
    std::size_t nx = 0;
    std::size_t ny = 0;
    DomainSpec domain;
    std::vector<double> values;

    FieldGrid() = default;
    FieldGrid(std::size_t nx_, std::size_t ny_, DomainSpec dom, double fill = 0.0);

    static FieldGrid from_function(std::size_t nx, std::size_t ny, DomainSpec dom,
                                   const std::function<double(Point2)>& f);

    double dx() const { return domain.l1 / static_cast<double>(nx); }
    double dy() const { return domain.l2 / static_cast<double>(ny); }
    std::size_t size() const { return values.size(); }
    std::size_t index(std::size_t i, std::size_t j) const { return j * nx + i; }
    double& at(std::size_t i, std::size_t j) { return values[index(i, j)]; }
    double at(std::size_t i, std::size_t j) const { return values[index(i, j)]; }
    Point2 cell_center(std::size_t i, std::size_t j) const;
    /// Cell centers in storage order.
    std::vector<Point2> cell_centers() const;
    bool same_geometry(const FieldGrid& other) const;

    /// Throws if the value count does not match nx * ny or the geometry is
    /// degenerate.
    void validate() const;
};

/// Text format: "nx ny l1 l2" then nx*ny values (y outer) at 17 significant
/// digits, which round-trips doubles exactly.
void write_field(std::ostream& os, const FieldGrid& f);
FieldGrid read_field(std::istream& is);
void write_field(const std::filesystem::path& path, const FieldGrid& f);
FieldGrid read_field(const std::filesystem::path& path);

/// Face-normal pore velocities. x-faces: (nx + 1) * ny entries, face (i, j)
/// at x1 = i * dx, index j * (nx + 1) + i. y-faces: nx * (ny + 1) entries,
/// face (i, j) at x2 = j * dy, index j * nx + i.
struct VelocityField {
    std::size_t nx = 0;
    std::size_t ny = 0;
    DomainSpec domain;
    std::vector<double> vx;
    std::vector<double> vy;

    VelocityField() = default;
    VelocityField(std::size_t nx_, std::size_t ny_, DomainSpec dom);

    double dx() const { return domain.l1 / static_cast<double>(nx); }
    double dy() const { return domain.l2 / static_cast<double>(ny); }
    double& x_face(std::size_t i, std::size_t j) { return vx[j * (nx + 1) + i]; }
    double x_face(std::size_t i, std::size_t j) const { return vx[j * (nx + 1) + i]; }
    double& y_face(std::size_t i, std::size_t j) { return vy[j * nx + i]; }
    double y_face(std::size_t i, std::size_t j) const { return vy[j * nx + i]; }

    /// Net outflow (velocity times face length) of every cell.
    std::vector<double> cell_divergence() const;
};

}  // namespace mpinn::ref
