#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mpinn/autodiff/tape.hpp"
#include "mpinn/network/mlp.hpp"
#include "mpinn/optimize/objective.hpp"
#include "mpinn/physics/model.hpp"
#include "mpinn/physics/residuals.hpp"

namespace mpinn::physics {

enum class Method { data_driven, pinn_darcy, mpinn };
std::string_view to_string(Method m) noexcept;
Method parse_method(std::string_view text);

/// Loss terms in summation order.
enum class Term {
    data_K,
    data_h,
    data_C,
    pde_h,
    pde_C,
    neumann1_h,
    neumann2_h,
    dirichlet_h,
    neumann1_C,
    neumann2_C,
    dirichlet_C,
};
inline constexpr std::size_t kTermCount = 11;
std::string_view to_string(Term t) noexcept;

struct PhysicsSetup {
    PhysicalParams params;
    DomainSpec domain;
    BoundarySpec bc;
    LossWeights weights;
    AdeMode ade_mode = AdeMode::full;
    double velocity_delta = kDefaultVelocityRegularizer;
    /// Represent K as exp of the network output.
    bool log_k = false;
};

struct LossProblem {
    Method method = Method::mpinn;
    PhysicsSetup physics;
    std::array<std::optional<MeasurementSet>, 3> data;  // indexed by Variable
    ResidualPointSet points;

    const MeasurementSet* measurements(Variable v) const;
    /// Networks the method trains; data_driven trains whichever variables
    /// have measurements.
    std::vector<Variable> trained_variables() const;
    /// True if any physics term is active (non-empty point set with a
    /// non-zero weight). Without such terms the loss separates per network.
    bool coupled() const;
};

/// Bound networks by variable; entries the method does not use may be null.
struct NetworkSet {
    const nn::BoundNetwork* K = nullptr;
    const nn::BoundNetwork* h = nullptr;
    const nn::BoundNetwork* C = nullptr;

    const nn::BoundNetwork* get(Variable v) const;
};

struct LossNodes {
    ad::NodeRef total;
    std::array<ad::NodeRef, kTermCount> terms{};  // weighted; absent if skipped
};

/// Records J = J_d + w_f (J_f^h + J_f^C) + w_b (boundary terms) on the tape.
/// Every term is a mean of squares. `batch` groups are indexed by Variable
/// (K, h, C) and subsample only the data terms.
LossNodes assemble_loss(const LossProblem& problem, const NetworkSet& nets, ad::Tape& tape,
                        const opt::MiniBatch* batch = nullptr);

/// Network values as physical fields (applies exp when log_k).
std::vector<double> predict(const nn::ParameterVector& params, std::span<const Point2> points,
                            Variable v, const PhysicsSetup& setup);

/// The loss over the concatenation of the trained networks' parameters.
class LossObjective {
public:
    LossObjective(LossProblem problem, std::vector<Variable> variables,
                  std::vector<nn::MlpArchitecture> architectures);

    const LossProblem& problem() const noexcept { return problem_; }
    const std::vector<Variable>& variables() const noexcept { return variables_; }
    std::size_t dimension() const noexcept { return dimension_; }

    std::vector<double> concat(std::span<const nn::ParameterVector> params) const;
    std::vector<nn::ParameterVector> split(std::span<const double> x) const;

    /// Measurement counts per trained variable, for mini-batching.
    std::vector<std::size_t> data_sizes() const;

    opt::Evaluation evaluate(std::span<const double> x, const opt::MiniBatch& batch) const;
    opt::Objective objective() const;

private:
    LossProblem problem_;
    std::vector<Variable> variables_;
    std::vector<nn::MlpArchitecture> architectures_;
    std::size_t dimension_ = 0;
};

}  // namespace mpinn::physics
