#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpinn/fields/fields.hpp"
#include "mpinn/network/mlp.hpp"
#include "mpinn/optimize/training.hpp"
#include "mpinn/physics/loss.hpp"

namespace mpinn::harness {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class FieldSource { analytic, grf, file };
std::string_view to_string(FieldSource s) noexcept;

enum class MeasurementLayout { uniform_random, grid };
std::string_view to_string(MeasurementLayout l) noexcept;
MeasurementLayout parse_layout(std::string_view text);

enum class SweepAxis { N, N_K, N_C, width, N_f_h };
std::string_view to_string(SweepAxis a) noexcept;
SweepAxis parse_axis(std::string_view text);

struct FieldConfig {
    FieldSource source = FieldSource::analytic;
    std::size_t nx = 256;
    std::size_t ny = 128;
    double lambda = 0.2;
    double sigma2 = 1.0;
    std::uint64_t seed = 0;
    fields::CovarianceForm covariance = fields::CovarianceForm::exponential;
    std::filesystem::path file;  // K field for source = file

    fields::GrfSpec grf() const { return {lambda, sigma2, seed, covariance}; }
    /// Short label used in CSV output.
    std::string label() const;
    friend bool operator==(const FieldConfig&, const FieldConfig&) = default;
};

struct DataConfig {
    std::size_t n_k = 16;
    std::size_t n_h = 16;
    std::size_t n_c = 0;
    MeasurementLayout layout = MeasurementLayout::uniform_random;
    std::uint64_t seed = 0;
    friend bool operator==(const DataConfig&, const DataConfig&) = default;
};

struct ResidualConfig {
    std::size_t n_interior_h = 0;
    std::size_t n_interior_c = 0;
    std::size_t n_boundary_h = 64;  // per boundary segment
    std::size_t n_boundary_c = 64;
    std::uint64_t seed = 0;
    friend bool operator==(const ResidualConfig&, const ResidualConfig&) = default;
};

struct PhysicsConfig {
    double phi = 0.317;
    double d_w = 0.09;
    double tau = 0.681;
    double alpha_l = 0.01;
    double alpha_t = 0.001;
    double l1 = 1.0;
    double l2 = 0.5;
    double h2 = 0.0;
    double q = 1.0;
    double c0_amp = 1.0;
    double c0_width = 0.25;
    double omega_f = 1.0;
    double omega_b = 1.0;
    physics::AdeMode ade_mode = physics::AdeMode::full;
    double velocity_delta = physics::kDefaultVelocityRegularizer;
    bool log_k = false;

    physics::PhysicsSetup setup() const;
    friend bool operator==(const PhysicsConfig&, const PhysicsConfig&) = default;
};

struct TrainingConfig {
    std::string strategy = "sequential";  // sequential | simultaneous, for mpinn
    opt::OptimizerKind optimizer = opt::OptimizerKind::lbfgs;
    double hybrid_switch_loss = 5e-4;
    std::size_t lbfgs_memory = 10;
    std::size_t lbfgs_max_iters = 15000;
    double lbfgs_gtol = 1e-9;
    double lbfgs_ftol = 2.22e-9;
    double adam_lr = 2e-4;
    std::size_t adam_batch_size = 1000;
    std::size_t adam_max_iters = 50000;
    std::size_t history_every = 1;
    friend bool operator==(const TrainingConfig&, const TrainingConfig&) = default;
};

enum class Method { data_driven, pinn_darcy, mpinn };
std::string_view to_string(Method m) noexcept;
Method parse_method(std::string_view text);

struct ExperimentConfig {
    std::string name = "experiment";
    std::vector<Method> methods{Method::data_driven};
    std::vector<std::uint64_t> seeds{1};
    std::filesystem::path output = "out";
    std::size_t threads = 1;
    bool record_wall_time = false;

    FieldConfig field;
    PhysicsConfig physics;
    DataConfig data;
    ResidualConfig residuals;
    nn::MlpArchitecture arch_k{{32, 32, 32}};
    nn::MlpArchitecture arch_h{{32, 32}};
    nn::MlpArchitecture arch_c{{32, 32}};
    TrainingConfig training;

    // Optional sweep definition used by the sweep subcommand.
    std::optional<SweepAxis> sweep_axis;
    std::vector<double> sweep_values;

    opt::TrainingStrategy strategy_for(Method m) const;
    /// Throws ConfigError with a message naming the offending key.
    void validate() const;
    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// INI text: `key = value` lines under [section] headers. Unknown sections
/// or keys are errors. Relative file paths resolve against `base_dir`.
ExperimentConfig parse_config(std::istream& is, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Every setting, in a form parse_config reads back to an equal config.
std::string echo_config(const ExperimentConfig& cfg);

/// "1,2,3" -> {1, 2, 3}
std::vector<std::uint64_t> parse_seed_list(std::string_view text);

}  // namespace mpinn::harness
