#include "mpinn/optimize/replicate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace mpinn::opt {

Summary summarize(std::span<const double> values) {
    Summary s;
    s.count = values.size();
    if (values.empty()) {
        s.mean = s.stddev = std::nan("");
        return s;
    }
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

Replication run_seeds(std::span<const std::uint64_t> seeds,
                      const std::function<std::vector<double>(std::size_t, std::uint64_t)>& run,
                      std::size_t threads) {
    Replication rep;
    rep.runs.resize(seeds.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < seeds.size(); i = next++) {
            auto& r = rep.runs[i];
            r.seed = seeds[i];
            try {
                r.metrics = run(i, seeds[i]);
                r.ok = true;
            } catch (const std::exception& e) {
                r.error = e.what();
            }
        }
    };
    const std::size_t n_threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(seeds.size(), 1));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }

    std::size_t n_metrics = 0;
    for (const auto& r : rep.runs) {
        if (r.ok) n_metrics = std::max(n_metrics, r.metrics.size());
        else rep.partial = true;
    }
    for (std::size_t m = 0; m < n_metrics; ++m) {
        std::vector<double> vals;
        for (const auto& r : rep.runs) {
            if (r.ok && m < r.metrics.size()) vals.push_back(r.metrics[m]);
        }
        rep.aggregate.push_back(summarize(vals));
    }
    return rep;
}

Replication replicate(std::span<const std::uint64_t> seeds,
                      const std::function<std::vector<double>(std::size_t, std::uint64_t)>& run,
                      std::size_t threads) {
    if (seeds.size() < 2) throw std::invalid_argument("replication needs at least two seeds");
    return run_seeds(seeds, run, threads);
}

}  // namespace mpinn::opt
