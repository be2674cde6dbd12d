#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mpinn/optimize/objective.hpp"

namespace mpinn::opt {

enum class Termination { converged, max_iters, line_search_failure };
std::string_view to_string(Termination t) noexcept;

struct HistoryEntry {
    std::size_t iteration = 0;
    double loss = 0.0;
    std::vector<double> terms;
    std::string phase;
};

struct MinimizeResult {
    std::vector<double> x;
    std::vector<HistoryEntry> history;
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    Termination termination = Termination::max_iters;
    double final_loss = 0.0;
};

/// Raised when the objective produces a non-finite value. Carries the
/// iterations completed before the failure.
class OptimizationError : public std::runtime_error {
public:
    OptimizationError(const std::string& what, MinimizeResult partial)
        : std::runtime_error(what), partial_(std::move(partial)) {}
    const MinimizeResult& partial() const noexcept { return partial_; }

private:
    MinimizeResult partial_;
};

struct AdamConfig {
    double learning_rate = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t batch_size = 1000;  // per data group; residual terms stay full
    std::size_t max_iters = 50000;
    std::size_t history_every = 1;

    void validate() const;
};

struct LbfgsConfig {
    std::size_t memory = 10;
    std::size_t max_iters = 15000;
    double gradient_tolerance = 1e-9;  // on the max-norm
    double step_tolerance = 2.22e-9;   // relative reduction of f
    double wolfe_c1 = 1e-4;
    double wolfe_c2 = 0.9;
    std::size_t max_line_search_evals = 20;
    std::size_t history_every = 1;

    void validate() const;
};

/// Adam with bias correction. Data groups larger than `batch_size` are
/// visited in reshuffled epochs; smaller groups are used whole. Stops early
/// with `converged` once the step loss drops below `stop_below` (if > 0).
MinimizeResult adam_minimize(const Objective& objective, std::vector<double> x0, const AdamConfig& cfg,
                             std::uint64_t seed, double stop_below = 0.0);

/// L-BFGS with a strong-Wolfe line search.
MinimizeResult lbfgs_minimize(const Objective& objective, std::vector<double> x0, const LbfgsConfig& cfg);

}  // namespace mpinn::opt
