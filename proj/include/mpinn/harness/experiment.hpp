#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mpinn/harness/config.hpp"
#include "mpinn/harness/sampling.hpp"
#include "mpinn/optimize/replicate.hpp"
#include "mpinn/optimize/training.hpp"

namespace mpinn::harness {

/// Version stamp written into reports.
std::string_view code_version() noexcept;

struct ReferenceFields {
    FieldGrid k, h, c;
};

/// Builds K from the field source and solves for h and C.
ReferenceFields generate_reference(const ExperimentConfig& cfg);
void save_reference(const std::filesystem::path& dir, const ReferenceFields& ref);
ReferenceFields load_reference(const std::filesystem::path& dir);
/// Loads the fields from `dir` when they were generated from the same field
/// and physics settings, otherwise generates and stores them there.
ReferenceFields cached_reference(const ExperimentConfig& cfg, const std::filesystem::path& dir);

/// Measurements and residual points of an experiment. Measurement locations
/// and residual points are fixed by the data and residual seeds and shared
/// by all replication seeds.
opt::TrainingProblem build_problem(const ExperimentConfig& cfg, const ReferenceFields& ref);

struct SeedResult {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    std::array<std::optional<double>, 3> eps;  // by Variable; empty if not trained
    double final_loss = 0.0;
    std::size_t iterations = 0;
    double wall_time_s = 0.0;
    std::string termination;
    std::vector<opt::HistoryEntry> history;
    std::array<std::optional<nn::ParameterVector>, 3> params;
};

struct MethodReport {
    Method method = Method::data_driven;
    std::vector<SeedResult> runs;  // seed-list order
    std::array<opt::Summary, 3> eps;  // over successful runs that trained the variable
    opt::Summary final_loss;
    opt::Summary iterations;
    bool partial = false;
};

struct ExperimentReport {
    ExperimentConfig config;
    std::string axis;                   // empty outside sweeps
    std::optional<double> axis_value;
    std::vector<MethodReport> methods;

    bool partial() const;
    const MethodReport* find(Method m) const;
};

struct RunOptions {
    bool write_outputs = true;
    /// Reference field cache; defaults to <output>/reference.
    std::optional<std::filesystem::path> reference_dir;
    std::string axis;
    std::optional<double> axis_value;
};

/// Reference fields, sampling, training of every method over every seed,
/// errors on the full grid. With write_outputs the output directory gets
/// results.csv, report.json, config.ini, histories and network files.
ExperimentReport run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

/// Relative errors of trained networks against reference fields.
std::array<std::optional<double>, 3> field_errors(const std::array<std::optional<nn::ParameterVector>, 3>& params,
                                                  const ReferenceFields& ref, const physics::PhysicsSetup& setup);

inline constexpr std::string_view kCsvHeader =
    "experiment,method,field,axis_value,seed,eps_K,eps_h,eps_C,eps_K_rooted,eps_h_rooted,eps_C_rooted,"
    "final_loss,iters,wall_time_s,architecture";

/// One row per (method, seed) and two aggregate rows (seed = mean, std) per
/// method. No header.
void write_csv_rows(std::ostream& os, const ExperimentReport& report);
std::string report_csv(const ExperimentReport& report);
std::string report_json(const ExperimentReport& report);

ExperimentConfig apply_axis(const ExperimentConfig& base, SweepAxis axis, double value);

struct SweepResult {
    std::vector<ExperimentReport> reports;
    bool partial = false;
};

/// One experiment per value in <output>/<axis>_<value>, sharing one
/// reference cache, plus a combined sweep.csv in <output>. A failing cell
/// is recorded and the sweep continues.
SweepResult sweep(const ExperimentConfig& base, SweepAxis axis, std::span<const double> values,
                  bool write_outputs = true);
std::string sweep_csv(const SweepResult& result);

/// Errors of the networks saved by a previous run in <output>/networks,
/// in CSV form.
std::string evaluate_saved(const ExperimentConfig& cfg);

}  // namespace mpinn::harness
