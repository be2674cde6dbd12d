#include "mpinn/refsolver/grid.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace mpinn::ref {

FieldGrid::FieldGrid(std::size_t nx_, std::size_t ny_, DomainSpec dom, double fill)
    : nx(nx_), ny(ny_), domain(dom), values(nx_ * ny_, fill) {
    validate();
}

FieldGrid FieldGrid::from_function(std::size_t nx, std::size_t ny, DomainSpec dom,
                                   const std::function<double(Point2)>& f) {
    FieldGrid g(nx, ny, dom);
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) g.at(i, j) = f(g.cell_center(i, j));
    }
    return g;
}

Point2 FieldGrid::cell_center(std::size_t i, std::size_t j) const {
    return {(static_cast<double>(i) + 0.5) * dx(), (static_cast<double>(j) + 0.5) * dy()};
}

std::vector<Point2> FieldGrid::cell_centers() const {
    std::vector<Point2> pts;
    pts.reserve(size());
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) pts.push_back(cell_center(i, j));
    }
    return pts;
}

bool FieldGrid::same_geometry(const FieldGrid& other) const {
    return nx == other.nx && ny == other.ny && domain == other.domain;
}

void FieldGrid::validate() const {
    if (nx == 0 || ny == 0) throw std::invalid_argument("field grid needs at least one cell per direction");
    domain.validate();
    if (values.size() != nx * ny) {
        throw std::invalid_argument("field grid has " + std::to_string(values.size()) + " values for " +
                                    std::to_string(nx) + "x" + std::to_string(ny) + " cells");
    }
}

void write_field(std::ostream& os, const FieldGrid& f) {
    f.validate();
    os << f.nx << ' ' << f.ny << ' ' << std::setprecision(17) << f.domain.l1 << ' ' << f.domain.l2 << '\n';
    char buf[32];
    for (std::size_t j = 0; j < f.ny; ++j) {
        for (std::size_t i = 0; i < f.nx; ++i) {
            const int len = std::snprintf(buf, sizeof buf, "%.17g", f.at(i, j));
            os.write(buf, len);
            os.put(i + 1 == f.nx ? '\n' : ' ');
        }
    }
}

FieldGrid read_field(std::istream& is) {
    FieldGrid f;
    if (!(is >> f.nx >> f.ny >> f.domain.l1 >> f.domain.l2)) {
        throw std::runtime_error("field file: malformed header (expected 'nx ny l1 l2')");
    }
    if (f.nx == 0 || f.ny == 0) throw std::runtime_error("field file: empty grid");
    f.values.resize(f.nx * f.ny);
    std::string tok;
    for (auto& v : f.values) {
        if (!(is >> tok)) throw std::runtime_error("field file: expected " + std::to_string(f.nx * f.ny) + " values");
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
            throw std::runtime_error("field file: bad value '" + tok + "'");
        }
    }
    if (is >> tok) throw std::runtime_error("field file: trailing data");
    f.validate();
    return f;
}

void write_field(const std::filesystem::path& path, const FieldGrid& f) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_field(os, f);
    if (!os) throw std::runtime_error("failed writing " + path.string());
}

FieldGrid read_field(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    return read_field(is);
}

VelocityField::VelocityField(std::size_t nx_, std::size_t ny_, DomainSpec dom)
    : nx(nx_), ny(ny_), domain(dom), vx((nx_ + 1) * ny_, 0.0), vy(nx_ * (ny_ + 1), 0.0) {}

std::vector<double> VelocityField::cell_divergence() const {
    std::vector<double> div(nx * ny);
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            div[j * nx + i] = (x_face(i + 1, j) - x_face(i, j)) * dy() + (y_face(i, j + 1) - y_face(i, j)) * dx();
        }
    }
    return div;
}

}  // namespace mpinn::ref
