#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mpinn/network/mlp.hpp"
#include "mpinn/optimize/minimizers.hpp"
#include "mpinn/physics/loss.hpp"

namespace mpinn::opt {

enum class StrategyKind { data_only, pinn_darcy, mpinn_simultaneous, mpinn_sequential };
std::string_view to_string(StrategyKind k) noexcept;
StrategyKind parse_strategy(std::string_view text);

/// Minimizer used within every training stage. `hybrid` runs Adam until the
/// loss falls below `hybrid_switch_loss` (or Adam's iteration cap), then L-BFGS.
enum class OptimizerKind { lbfgs, adam, hybrid };
std::string_view to_string(OptimizerKind k) noexcept;
OptimizerKind parse_optimizer(std::string_view text);

struct TrainingStrategy {
    StrategyKind kind = StrategyKind::mpinn_sequential;
    OptimizerKind optimizer = OptimizerKind::lbfgs;
    double hybrid_switch_loss = 5e-4;
    AdamConfig adam;
    LbfgsConfig lbfgs;

    void validate() const;
};

/// Measurements, residual points and physics shared by all stages. The
/// method field of `base` is ignored; each stage sets its own.
struct TrainingProblem {
    physics::LossProblem base;
    std::array<nn::MlpArchitecture, 3> architectures;  // indexed by Variable
};

struct StageReport {
    std::string name;
    std::vector<physics::Variable> variables;
    MinimizeResult result;
};

struct TrainReport {
    std::array<std::optional<nn::ParameterVector>, 3> params;  // indexed by Variable
    std::vector<StageReport> stages;
    /// All stages concatenated; iterations are cumulative and `phase` reads
    /// "<stage>:<optimizer>".
    std::vector<HistoryEntry> history;
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    Termination termination = Termination::converged;
    double final_loss = 0.0;
};

/// Initialization seed of one network for a replication seed.
std::uint64_t network_seed(std::uint64_t seed, physics::Variable v);

physics::Method method_for(StrategyKind k);

/// Trains the networks a strategy needs from fresh Xavier initializations.
/// A loss without active physics terms is separable, so each network is
/// then trained on its own.
TrainReport train(const TrainingStrategy& strategy, const TrainingProblem& problem, std::uint64_t seed);

}  // namespace mpinn::opt
