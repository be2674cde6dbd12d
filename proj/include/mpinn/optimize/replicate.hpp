#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mpinn::opt {

struct Summary {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation; 0 for a single value
    std::size_t count = 0;
};

Summary summarize(std::span<const double> values);

struct SeedRun {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    std::vector<double> metrics;
};

struct Replication {
    std::vector<SeedRun> runs;        // in seed-list order
    std::vector<Summary> aggregate;   // per metric, over successful runs
    bool partial = false;             // some seed failed
};

/// Runs `run(index, seed)` for every seed, on up to `threads` worker
/// threads, and aggregates the returned metrics. A throwing run is recorded
/// as failed. Requires at least two seeds.
Replication replicate(std::span<const std::uint64_t> seeds,
                      const std::function<std::vector<double>(std::size_t, std::uint64_t)>& run,
                      std::size_t threads = 1);

/// Same scheduling without the two-seed requirement.
Replication run_seeds(std::span<const std::uint64_t> seeds,
                      const std::function<std::vector<double>(std::size_t, std::uint64_t)>& run,
                      std::size_t threads = 1);

}  // namespace mpinn::opt
