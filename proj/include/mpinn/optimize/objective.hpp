#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace mpinn::opt {

/// Selection of measurement rows for one objective evaluation. One entry per
/// data group; an empty optional (or an empty `groups` vector) means the
/// whole group is used.
struct MiniBatch {
    std::vector<std::optional<std::vector<std::size_t>>> groups;

    bool full() const {
        for (const auto& g : groups) {
            if (g) return false;
        }
        return true;
    }
};

struct Evaluation {
    double loss = 0.0;
    std::vector<double> gradient;
    /// Per-term contributions, summed in order they give `loss` exactly.
    std::vector<double> terms;
};

/// Differentiable objective over a flat parameter vector. `data_group_sizes`
/// lists the measurement counts that mini-batching may subsample.
struct Objective {
    std::function<Evaluation(std::span<const double>, const MiniBatch&)> evaluate;
    std::vector<std::size_t> data_group_sizes;
};

}  // namespace mpinn::opt
