#include "mpinn/physics/residuals.hpp"

#include <stdexcept>
#include <string>

namespace mpinn::physics {

using ad::TensorValue;
using nn::DerivativeOrder;

namespace {

void require_order(const EvalBundle& b, DerivativeOrder order, const char* what) {
    if (static_cast<int>(b.order) < static_cast<int>(order) || !b.u.valid()) {
        throw std::invalid_argument(std::string(what) + ": bundle lacks required derivative channels");
    }
}

void require_same_batch(const EvalBundle& a, const EvalBundle& b, const char* what) {
    if (a.batch != b.batch) {
        throw std::invalid_argument(std::string(what) + ": batch length mismatch (" +
                                    std::to_string(a.batch) + " vs " + std::to_string(b.batch) + ")");
    }
}

}  // namespace

EvalBundle constant_bundle(Tape& tape, const ChannelValues& values) {
    EvalBundle b;
    b.batch = values.u.size();
    auto channel = [&](const std::vector<double>& v) -> NodeRef {
        if (v.empty()) return {};
        if (v.size() != b.batch) throw std::invalid_argument("constant_bundle: channel length mismatch");
        return tape.constant(TensorValue::column(v));
    };
    b.u = channel(values.u);
    b.d1 = channel(values.d1);
    b.d2 = channel(values.d2);
    b.d11 = channel(values.d11);
    b.d12 = channel(values.d12);
    b.d22 = channel(values.d22);
    if (b.d11.valid() && b.d12.valid() && b.d22.valid() && b.d1.valid() && b.d2.valid()) {
        b.order = DerivativeOrder::second;
    } else if (b.d1.valid() && b.d2.valid()) {
        b.order = DerivativeOrder::first;
    }
    return b;
}

EvalBundle exp_transform(Tape& tape, const EvalBundle& u) {
    EvalBundle k;
    k.batch = u.batch;
    k.order = u.order;
    k.u = tape.exp(u.u);
    if (u.order == DerivativeOrder::value) return k;
    k.d1 = tape.mul(k.u, u.d1);
    k.d2 = tape.mul(k.u, u.d2);
    if (u.order == DerivativeOrder::first) return k;
    // K_kl = K (u_kl + u_k u_l)
    k.d11 = tape.mul(k.u, tape.add(u.d11, tape.square(u.d1)));
    k.d12 = tape.mul(k.u, tape.add(u.d12, tape.mul(u.d1, u.d2)));
    k.d22 = tape.mul(k.u, tape.add(u.d22, tape.square(u.d2)));
    return k;
}

NodeRef darcy_residual(Tape& tape, const EvalBundle& k, const EvalBundle& h) {
    require_order(k, DerivativeOrder::first, "darcy_residual(K)");
    require_order(h, DerivativeOrder::second, "darcy_residual(h)");
    require_same_batch(k, h, "darcy_residual");
    const NodeRef grad_term = tape.add(tape.mul(k.d1, h.d1), tape.mul(k.d2, h.d2));
    const NodeRef laplacian = tape.add(h.d11, h.d22);
    return tape.add(grad_term, tape.mul(k.u, laplacian));
}

VelocityNorm velocity_norm_and_gradient(Tape& tape, const EvalBundle& k, const EvalBundle& h,
                                        const PhysicalParams& params, double delta) {
    if (!(delta > 0.0)) throw std::invalid_argument("velocity regularizer must be positive");
    require_order(k, DerivativeOrder::first, "velocity_norm(K)");
    require_order(h, DerivativeOrder::second, "velocity_norm(h)");
    require_same_batch(k, h, "velocity_norm");

    // g = sqrt(h_1^2 + h_2^2 + delta^2)
    const NodeRef g = tape.sqrt(
        tape.add_scalar(tape.add(tape.square(h.d1), tape.square(h.d2)), delta * delta));
    VelocityNorm out;
    out.norm = tape.div_scalar(tape.mul(k.u, g), params.phi);

    // d_k |v| = (K_k g + K (h_1 h_1k + h_2 h_2k) / g) / phi
    const NodeRef k_over_g = tape.div(k.u, g);
    const NodeRef dot1 = tape.add(tape.mul(h.d1, h.d11), tape.mul(h.d2, h.d12));
    const NodeRef dot2 = tape.add(tape.mul(h.d1, h.d12), tape.mul(h.d2, h.d22));
    out.d1 = tape.div_scalar(tape.add(tape.mul(k.d1, g), tape.mul(k_over_g, dot1)), params.phi);
    out.d2 = tape.div_scalar(tape.add(tape.mul(k.d2, g), tape.mul(k_over_g, dot2)), params.phi);
    return out;
}

Dispersion dispersion(Tape& tape, NodeRef v_norm, const PhysicalParams& params) {
    const double molecular = params.d_w * params.tau;
    return {tape.add_scalar(tape.scale(v_norm, params.alpha_l), molecular),
            tape.add_scalar(tape.scale(v_norm, params.alpha_t), molecular)};
}

NodeRef ade_residual(Tape& tape, const EvalBundle& k, const EvalBundle& h, const EvalBundle& c,
                     const PhysicalParams& params, AdeMode mode, double delta) {
    require_order(c, DerivativeOrder::second, "ade_residual(C)");
    require_same_batch(k, c, "ade_residual");
    const auto v = velocity_norm_and_gradient(tape, k, h, params, delta);
    const auto D = dispersion(tape, v.norm, params);

    // -(1/phi) K grad h . grad C
    const NodeRef grad_dot = tape.add(tape.mul(h.d1, c.d1), tape.mul(h.d2, c.d2));
    const NodeRef advection = tape.scale(tape.mul(k.u, grad_dot), -1.0 / params.phi);

    NodeRef div_flux = tape.add(tape.mul(D.d11, c.d11), tape.mul(D.d22, c.d22));
    if (mode == AdeMode::full) {
        const NodeRef dd11 = tape.scale(v.d1, params.alpha_l);
        const NodeRef dd22 = tape.scale(v.d2, params.alpha_t);
        div_flux = tape.add(div_flux, tape.mul(dd11, c.d1));
        div_flux = tape.add(div_flux, tape.mul(dd22, c.d2));
    }
    return tape.sub(advection, div_flux);
}

NodeRef neumann_residual(Tape& tape, const EvalBundle* k, const EvalBundle* h, const EvalBundle* c,
                         NeumannTerm term, const BoundarySpec& bc) {
    auto need = [](const EvalBundle* b, const char* what) -> const EvalBundle& {
        if (b == nullptr) throw std::invalid_argument(std::string("neumann_residual: missing ") + what);
        return *b;
    };
    switch (term) {
        case NeumannTerm::head_inlet: {
            const auto& kk = need(k, "K");
            const auto& hh = need(h, "h");
            require_order(hh, DerivativeOrder::first, "neumann_residual(h)");
            require_same_batch(kk, hh, "neumann_residual");
            return tape.add_scalar(tape.neg(tape.mul(kk.u, hh.d1)), -bc.q);
        }
        case NeumannTerm::head_lateral: {
            const auto& kk = need(k, "K");
            const auto& hh = need(h, "h");
            require_order(hh, DerivativeOrder::first, "neumann_residual(h)");
            require_same_batch(kk, hh, "neumann_residual");
            return tape.neg(tape.mul(kk.u, hh.d2));
        }
        case NeumannTerm::conc_outlet: {
            const auto& cc = need(c, "C");
            require_order(cc, DerivativeOrder::first, "neumann_residual(C)");
            return cc.d1;
        }
        case NeumannTerm::conc_lateral: {
            const auto& cc = need(c, "C");
            require_order(cc, DerivativeOrder::first, "neumann_residual(C)");
            return cc.d2;
        }
    }
    throw std::invalid_argument("neumann_residual: unknown boundary segment");
}

NodeRef head_dirichlet_residual(Tape& tape, const EvalBundle& h, const BoundarySpec& bc) {
    return tape.add_scalar(h.u, -bc.h2);
}

NodeRef conc_dirichlet_residual(Tape& tape, const EvalBundle& c, std::span<const Point2> points,
                                const BoundarySpec& bc, const DomainSpec& dom) {
    if (points.size() != c.batch) throw std::invalid_argument("conc_dirichlet_residual: batch mismatch");
    std::vector<double> target;
    target.reserve(points.size());
    for (const auto& p : points) target.push_back(bc.inlet_concentration(p.x2, dom));
    return tape.sub(c.u, tape.constant(TensorValue::column(target)));
}

}  // namespace mpinn::physics
