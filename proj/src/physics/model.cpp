#include "mpinn/physics/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mpinn::physics {

void PhysicalParams::validate() const {
    if (!(phi > 0.0 && phi < 1.0)) throw std::invalid_argument("porosity must lie in (0, 1)");
    if (!(d_w > 0.0) || !(tau > 0.0) || !(alpha_l > 0.0) || !(alpha_t > 0.0)) {
        throw std::invalid_argument("transport coefficients must be strictly positive");
    }
}

void DomainSpec::validate() const {
    if (!(l1 > 0.0) || !(l2 > 0.0)) throw std::invalid_argument("domain lengths must be positive");
}

bool DomainSpec::contains(const Point2& p) const {
    return p.x1 >= 0.0 && p.x1 <= l1 && p.x2 >= 0.0 && p.x2 <= l2;
}

bool DomainSpec::strictly_inside(const Point2& p) const {
    return p.x1 > 0.0 && p.x1 < l1 && p.x2 > 0.0 && p.x2 < l2;
}

void BoundarySpec::validate() const {
    if (!(c0_width > 0.0)) throw std::invalid_argument("inlet profile width must be positive");
    if (!std::isfinite(h2) || !std::isfinite(q) || !std::isfinite(c0_amp)) {
        throw std::invalid_argument("boundary values must be finite");
    }
}

double BoundarySpec::inlet_concentration(double x2, const DomainSpec& dom) const {
    const double d = x2 - 0.5 * dom.l2;
    return c0_amp * std::exp(-(d * d) / (c0_width * c0_width));
}

std::string_view to_string(Variable v) noexcept {
    switch (v) {
        case Variable::K: return "K";
        case Variable::h: return "h";
        case Variable::C: return "C";
    }
    return "?";
}

Variable parse_variable(std::string_view text) {
    if (text == "K") return Variable::K;
    if (text == "h") return Variable::h;
    if (text == "C") return Variable::C;
    throw std::invalid_argument("unknown variable '" + std::string(text) + "'");
}

void MeasurementSet::validate(const DomainSpec& dom) const {
    if (points.size() != values.size()) {
        throw std::invalid_argument("measurement set for " + std::string(to_string(variable)) +
                                    ": " + std::to_string(points.size()) + " points but " +
                                    std::to_string(values.size()) + " values");
    }
    for (const auto& p : points) {
        if (!dom.contains(p)) throw std::invalid_argument("measurement location outside the domain");
    }
}

bool ResidualPointSet::empty() const { return !has_flow_terms() && !has_transport_terms(); }

bool ResidualPointSet::has_flow_terms() const {
    return !interior_h.empty() || !neumann1_h.empty() || !neumann2_h.empty() || !dirichlet_h.empty();
}

bool ResidualPointSet::has_transport_terms() const {
    return !interior_c.empty() || !neumann1_c.empty() || !neumann2_c.empty() || !dirichlet_c.empty();
}

namespace {

void check_segment(const std::vector<Point2>& pts, const char* name, auto&& on_segment) {
    for (const auto& p : pts) {
        if (!on_segment(p)) throw std::invalid_argument(std::string("point off its segment in ") + name);
    }
}

}  // namespace

void ResidualPointSet::validate(const DomainSpec& dom) const {
    auto inside = [&](const Point2& p) { return dom.strictly_inside(p); };
    auto left = [&](const Point2& p) { return p.x1 == 0.0 && p.x2 >= 0.0 && p.x2 <= dom.l2; };
    auto right = [&](const Point2& p) { return p.x1 == dom.l1 && p.x2 >= 0.0 && p.x2 <= dom.l2; };
    auto lateral = [&](const Point2& p) {
        return (p.x2 == 0.0 || p.x2 == dom.l2) && p.x1 >= 0.0 && p.x1 <= dom.l1;
    };
    check_segment(interior_h, "interior_h", inside);
    check_segment(interior_c, "interior_c", inside);
    check_segment(neumann1_h, "neumann1_h", left);
    check_segment(neumann2_h, "neumann2_h", lateral);
    check_segment(dirichlet_h, "dirichlet_h", right);
    check_segment(neumann1_c, "neumann1_c", right);
    check_segment(neumann2_c, "neumann2_c", lateral);
    check_segment(dirichlet_c, "dirichlet_c", left);
}

}  // namespace mpinn::physics
