// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any selected criterion fails.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mpinn/fields/fields.hpp"
#include "mpinn/harness/experiment.hpp"
#include "mpinn/refsolver/solvers.hpp"
#include "support/fd_oracle.hpp"

using namespace mpinn;
using namespace mpinn::harness;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

struct Context {
    fs::path configs;
    fs::path out;
    std::size_t threads = 1;

    // Loads a config and redirects its output below `out`.
    ExperimentConfig config(const std::string& file) const {
        auto cfg = load_config(configs / file);
        cfg.output = out / cfg.name;
        cfg.threads = threads;
        return cfg;
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

double mean_eps(const ExperimentReport& r, Method m, physics::Variable v) {
    const auto* mr = r.find(m);
    if (!mr || mr->partial) throw std::runtime_error(std::string(harness::to_string(m)) + " has failed seeds");
    return mr->eps[static_cast<std::size_t>(v)].mean;
}

// 1: op adjoints and network channels against central differences.
Outcome autodiff_correctness(const Context&) {
    constexpr double tol = 1e-5;
    constexpr int instances = 100;
    double worst_op = 0.0;
    std::string worst_name;
    for (const auto& op : testing::op_cases()) {
        util::Rng rng{0x6f70, std::hash<std::string>{}(op.name)};
        for (int i = 0; i < instances; ++i) {
            const double e = testing::max_fd_relative_error(op.build, op.make_inputs(rng), rng);
            if (e > worst_op) {
                worst_op = e;
                worst_name = op.name;
            }
        }
    }
    double worst_channel = 0.0;
    util::Rng rng(0x6368);
    for (int i = 0; i < instances; ++i) {
        const std::size_t depth = 1 + rng.below(3);
        std::vector<std::size_t> widths(depth);
        for (auto& w : widths) w = 2 + rng.below(9);
        const auto p = nn::init_xavier(nn::MlpArchitecture{widths}, rng.bits());
        std::vector<nn::Point2> pts(5);
        for (auto& x : pts) x = {rng.uniform(0.0, 1.0), rng.uniform(0.0, 0.5)};
        const auto c = testing::channels(p, pts);
        const auto fd = testing::fd_channels(p, pts);
        for (auto ch : {&testing::Channels::u, &testing::Channels::d1, &testing::Channels::d2,
                        &testing::Channels::d11, &testing::Channels::d12, &testing::Channels::d22}) {
            worst_channel = std::max(worst_channel, testing::rel_err(c.*ch, fd.*ch));
        }
    }
    return {worst_op < tol && worst_channel < tol,
            fmt("max op rel err %.2e (%s), max channel rel err %.2e", worst_op, worst_name.c_str(), worst_channel)};
}

// 2: Darcy and transport solvers against analytic solutions.
Outcome forward_solver(const Context&) {
    const physics::DomainSpec dom{1.0, 0.5};
    const std::size_t nx = 256, ny = 128;
    physics::BoundarySpec bc;
    const physics::PhysicalParams params;

    const ref::FieldGrid uniform(nx, ny, dom, 1.0);
    const auto flat = ref::solve_darcy(uniform, bc, params);
    double head_err = 0.0;
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            const double x = flat.h.cell_center(i, j).x1;
            head_err = std::max(head_err, std::abs(flat.h.at(i, j) - (bc.q * (dom.l1 - x) + bc.h2)));
        }
    }
    const auto k = fields::analytic_k_grid(nx, ny, dom);
    const auto flow = ref::solve_darcy(k, bc, params);
    const double balance = std::max(ref::darcy_mass_balance_error(uniform, flat.h, bc),
                                    ref::darcy_mass_balance_error(k, flow.h, bc));

    const auto c = ref::solve_ade(flow.v, bc, params);
    double lo = 1e300, hi = -1e300;
    for (std::size_t j = 0; j < ny; ++j) {
        const double c0 = bc.inlet_concentration(c.cell_center(0, j).x2, dom);
        lo = std::min(lo, c0);
        hi = std::max(hi, c0);
    }
    double overshoot = 0.0;
    for (double x : c.values) overshoot = std::max({overshoot, lo - x, x - hi});

    // 1-D profile with C(0) = 1, C(l1) = 0 and unit velocity on a refined grid.
    const std::size_t fine = 1024;
    ref::VelocityField v(fine, 2, dom);
    for (auto& x : v.vx) x = 1.0;
    ref::AdeOptions opts;
    opts.inlet = [](double) { return 1.0; };
    opts.outlet_value = 0.0;
    const auto c1 = ref::solve_ade(v, {}, params, {}, opts);
    const double d = params.d_w * params.tau + params.alpha_l * 1.0;
    const double pe = dom.l1 / d;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < fine; ++i) {
        const double x = c1.cell_center(i, 0).x1;
        const double exact = (std::exp(pe) - std::exp(pe * x / dom.l1)) / (std::exp(pe) - 1.0);
        num += std::pow(c1.at(i, 0) - exact, 2);
        den += exact * exact;
    }
    const double profile = std::sqrt(num / den);

    return {head_err < 1e-8 && balance < 1e-10 * bc.q && overshoot <= 1e-12 && profile < 0.01,
            fmt("head err %.2e, mass balance %.2e, max principle overshoot %.2e, 1-D profile rel L2 %.4f", head_err,
                balance, overshoot, profile)};
}

// 3: parameter counts of [2-m-m-m-1] networks.
Outcome parameter_counts(const Context&) {
    const std::size_t widths[] = {10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
    const std::size_t expected[] = {261, 921, 1981, 3441, 5301, 7561, 10221, 13281, 16741, 20601};
    std::size_t matched = 0;
    std::string got;
    for (std::size_t i = 0; i < 10; ++i) {
        const auto n = nn::param_count(nn::MlpArchitecture{{widths[i], widths[i], widths[i]}});
        matched += n == expected[i];
        got += (i ? " " : "") + std::to_string(n);
    }
    return {matched == 10, fmt("%zu/10 match: %s", matched, got.c_str())};
}

// Shared by criteria 4 and 6.
const ExperimentReport& physics_effect_runs(const Context& ctx) {
    static std::optional<ExperimentReport> report;
    if (!report) report = run_experiment(ctx.config("example1_physics_effect.ini"));
    return *report;
}

// 4: PINN-Darcy conductivity error at most a third of the data-driven one.
Outcome physics_effect(const Context& ctx) {
    const auto& r = physics_effect_runs(ctx);
    const double dd = mean_eps(r, Method::data_driven, physics::Variable::K);
    const double pinn = mean_eps(r, Method::pinn_darcy, physics::Variable::K);
    return {pinn <= dd / 3.0, fmt("mean eps_K data-driven %.4g, PINN-Darcy %.4g, ratio %.2f", dd, pinn, dd / pinn)};
}

// 5: MPINN concentration error against data-driven with the same C data.
Outcome mpinn_concentration(const Context& ctx) {
    const auto r = run_experiment(ctx.config("example1_mpinn.ini"));
    const double dd = mean_eps(r, Method::data_driven, physics::Variable::C);
    const double mp = mean_eps(r, Method::mpinn, physics::Variable::C);
    return {mp < 0.08 && dd > 0.15, fmt("mean eps_C MPINN %.4g (< 0.08), data-driven %.4g (> 0.15)", mp, dd)};
}

// 6: head error at most a fifth of the conductivity error for PINN-Darcy.
Outcome head_gap(const Context& ctx) {
    const auto& r = physics_effect_runs(ctx);
    const double k = mean_eps(r, Method::pinn_darcy, physics::Variable::K);
    const double h = mean_eps(r, Method::pinn_darcy, physics::Variable::h);
    return {h <= k / 5.0, fmt("PINN-Darcy mean eps_h %.4g, eps_K %.4g, ratio %.1f", h, k, k / h)};
}

// 7: data-driven conductivity error non-increasing in N up to one small inversion.
Outcome monotone_in_n(const Context& ctx) {
    const auto cfg = ctx.config("example1_data_sweep.ini");
    if (!cfg.sweep_axis) throw std::runtime_error("sweep config has no axis");
    const auto result = sweep(cfg, *cfg.sweep_axis, cfg.sweep_values);
    if (result.partial) throw std::runtime_error("sweep has failed cells");
    std::vector<double> means;
    std::string text;
    for (const auto& rep : result.reports) {
        means.push_back(mean_eps(rep, Method::data_driven, physics::Variable::K));
        text += fmt("%sN=%g: %.4g", text.empty() ? "" : ", ", *rep.axis_value, means.back());
    }
    int inversions = 0;
    bool small = true;
    for (std::size_t i = 0; i + 1 < means.size(); ++i) {
        if (means[i + 1] > means[i]) {
            ++inversions;
            small = small && (means[i + 1] - means[i]) < 0.1 * means[i];
        }
    }
    return {inversions == 0 || (inversions == 1 && small), fmt("%s; %d inversion(s)", text.c_str(), inversions)};
}

// 8: lognormal field, ordering of the three methods.
Outcome lognormal_ordering(const Context& ctx) {
    const auto r = run_experiment(ctx.config("example2_lognormal.ini"));
    const double dd = mean_eps(r, Method::data_driven, physics::Variable::K);
    const double pinn = mean_eps(r, Method::pinn_darcy, physics::Variable::K);
    const double mp = mean_eps(r, Method::mpinn, physics::Variable::K);
    const double cdd = mean_eps(r, Method::data_driven, physics::Variable::C);
    const double cmp = mean_eps(r, Method::mpinn, physics::Variable::C);
    return {mp < pinn && pinn < dd && cmp <= cdd / 5.0,
            fmt("eps_K MPINN %.4g < PINN %.4g < data-driven %.4g; eps_C MPINN %.4g vs data-driven %.4g (ratio %.3g)",
                mp, pinn, dd, cmp, cdd, cdd / cmp)};
}

// 9: MPINN with zero physics weights and no residual points.
Outcome reduction(const Context& ctx) {
    auto dd = ctx.config("example1_smoke.ini");
    dd.name = "reduction";
    dd.data.n_c = 32;
    dd.residuals.n_interior_h = dd.residuals.n_interior_c = 0;
    dd.residuals.n_boundary_h = dd.residuals.n_boundary_c = 0;
    dd.training.history_every = 1;
    auto mp = dd;
    dd.methods = {Method::data_driven};
    mp.methods = {Method::mpinn};
    mp.physics.omega_f = 0.0;
    mp.physics.omega_b = 0.0;
    RunOptions quiet;
    quiet.write_outputs = false;
    quiet.reference_dir = ctx.out / "example1_smoke" / "reference";
    const auto a = run_experiment(dd, quiet);
    const auto b = run_experiment(mp, quiet);
    std::size_t compared = 0;
    bool same = true;
    const auto& ra = a.methods.at(0).runs;
    const auto& rb = b.methods.at(0).runs;
    for (std::size_t s = 0; s < ra.size(); ++s) {
        same = same && ra[s].ok && rb[s].ok && ra[s].history.size() == rb[s].history.size();
        for (std::size_t i = 0; same && i < ra[s].history.size(); ++i) {
            same = ra[s].history[i].loss == rb[s].history[i].loss && ra[s].history[i].terms == rb[s].history[i].terms;
            ++compared;
        }
        for (std::size_t v = 0; same && v < 3; ++v) same = ra[s].eps[v] == rb[s].eps[v];
    }
    return {same && compared > 0, fmt("%zu loss entries over %zu seeds %s", compared, ra.size(),
                                      same ? "bit-identical" : "differ")};
}

// 10: identical CSVs from two runs of the same config.
Outcome determinism(const Context& ctx) {
    auto first = ctx.config("example1_smoke.ini");
    auto second = first;
    second.output = ctx.out / "example1_smoke_rerun";
    second.threads = ctx.threads > 1 ? 1 : 2;
    run_experiment(first);
    run_experiment(second);
    const auto a = slurp(first.output / "results.csv");
    const auto b = slurp(second.output / "results.csv");
    return {!a.empty() && a == b, fmt("results.csv %zu bytes, %s", a.size(), a == b ? "byte-identical" : "differs")};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance checks"};
    std::vector<int> only;
    Context ctx;
    ctx.configs = MPINN_CONFIG_DIR;
    ctx.out = fs::temp_directory_path() / "mpinn_acceptance";
    app.add_option("--only", only, "Criteria to run (default all)")->check(CLI::Range(1, 10));
    app.add_option("--out", ctx.out, "Output directory");
    app.add_option("--configs", ctx.configs, "Config directory")->check(CLI::ExistingDirectory);
    app.add_option("--threads", ctx.threads, "Worker threads")->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);

    const std::map<int, std::pair<const char*, Outcome (*)(const Context&)>> criteria{
        {1, {"autodiff correctness", autodiff_correctness}},
        {2, {"forward solver validation", forward_solver}},
        {3, {"parameter counts", parameter_counts}},
        {4, {"physics regularization effect", physics_effect}},
        {5, {"MPINN concentration error", mpinn_concentration}},
        {6, {"head vs conductivity gap", head_gap}},
        {7, {"data-driven error trend in N", monotone_in_n}},
        {8, {"lognormal method ordering", lognormal_ordering}},
        {9, {"reduction to data-driven", reduction}},
        {10, {"CSV determinism", determinism}},
    };
    const std::set<int> selected(only.begin(), only.end());
    fs::create_directories(ctx.out);

    int failures = 0;
    for (const auto& [id, entry] : criteria) {
        if (!selected.empty() && !selected.count(id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = entry.second(ctx);
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failures += !o.pass;
        std::cout << "criterion " << id << " " << (o.pass ? "PASS" : "FAIL") << " [" << entry.first << "] "
                  << o.detail << fmt(" (%.1f s)", secs) << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
