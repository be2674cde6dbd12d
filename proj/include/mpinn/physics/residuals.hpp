#pragma once

#include <span>

#include "mpinn/autodiff/tape.hpp"
#include "mpinn/network/mlp.hpp"
#include "mpinn/physics/model.hpp"

namespace mpinn::physics {

using ad::NodeRef;
using ad::Tape;
using nn::EvalBundle;

inline constexpr double kDefaultVelocityRegularizer = 1e-8;

/// Bundle of constant channels, for closed-form fields in tests and for
/// residuals of gridded reference solutions. Channels left empty are not
/// recorded.
struct ChannelValues {
    std::vector<double> u, d1, d2, d11, d12, d22;
};
EvalBundle constant_bundle(Tape& tape, const ChannelValues& values);

/// K = exp(u) applied channel-wise to a network bundle.
EvalBundle exp_transform(Tape& tape, const EvalBundle& u);

/// f^h = dK/dx1 dh/dx1 + dK/dx2 dh/dx2 + K (d2h/dx1^2 + d2h/dx2^2).
NodeRef darcy_residual(Tape& tape, const EvalBundle& k, const EvalBundle& h);

struct VelocityNorm {
    NodeRef norm;
    NodeRef d1;
    NodeRef d2;
};

/// |v| = (K / phi) sqrt(h_1^2 + h_2^2 + delta^2) and its spatial gradient.
VelocityNorm velocity_norm_and_gradient(Tape& tape, const EvalBundle& k, const EvalBundle& h,
                                        const PhysicalParams& params,
                                        double delta = kDefaultVelocityRegularizer);

struct Dispersion {
    NodeRef d11;
    NodeRef d22;
};

/// Diagonal dispersion: D11 = d_w tau + alpha_l |v|, D22 = d_w tau + alpha_t |v|.
Dispersion dispersion(Tape& tape, NodeRef v_norm, const PhysicalParams& params);

/// `frozen` drops the dD11/dx1 and dD22/dx2 terms of div(D grad C).
enum class AdeMode { full, frozen };

/// f^C = -(1/phi) K grad h . grad C - div(D grad C).
NodeRef ade_residual(Tape& tape, const EvalBundle& k, const EvalBundle& h, const EvalBundle& c,
                     const PhysicalParams& params, AdeMode mode = AdeMode::full,
                     double delta = kDefaultVelocityRegularizer);

enum class NeumannTerm {
    head_inlet,    // -K dh/dx1 - q on x1 = 0
    head_lateral,  // -K dh/dx2 on x2 = 0, l2
    conc_outlet,   // dC/dx1 on x1 = l1
    conc_lateral,  // dC/dx2 on x2 = 0, l2
};

/// Bundles that a term does not use may be null.
NodeRef neumann_residual(Tape& tape, const EvalBundle* k, const EvalBundle* h, const EvalBundle* c,
                         NeumannTerm term, const BoundarySpec& bc);

/// h - h2 at outlet points.
NodeRef head_dirichlet_residual(Tape& tape, const EvalBundle& h, const BoundarySpec& bc);
/// C - c0(x2) at inlet points.
NodeRef conc_dirichlet_residual(Tape& tape, const EvalBundle& c, std::span<const Point2> points,
                                const BoundarySpec& bc, const DomainSpec& dom);

}  // namespace mpinn::physics
