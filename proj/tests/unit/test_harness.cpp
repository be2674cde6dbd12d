#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "mpinn/fields/fields.hpp"
#include "mpinn/harness/experiment.hpp"

using namespace mpinn;
using namespace mpinn::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("mpinn_harness_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Coarse grid and small networks so a full experiment takes well under a second.
ExperimentConfig tiny_config(const std::string& name) {
    ExperimentConfig cfg;
    cfg.name = name;
    cfg.output = scratch(name);
    cfg.methods = {Method::data_driven, Method::pinn_darcy};
    cfg.seeds = {1, 2};
    cfg.field.nx = 32;
    cfg.field.ny = 16;
    cfg.data.n_k = 16;
    cfg.data.n_h = 16;
    cfg.residuals.n_interior_h = 40;
    cfg.residuals.n_boundary_h = 8;
    cfg.residuals.n_boundary_c = 8;
    cfg.arch_k = nn::MlpArchitecture::parse("2-8-8-1");
    cfg.arch_h = nn::MlpArchitecture::parse("2-8-1");
    cfg.arch_c = nn::MlpArchitecture::parse("2-8-1");
    cfg.training.lbfgs_max_iters = 60;
    return cfg;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            cells.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        rows.push_back(cells);
    }
    return rows;
}

RunOptions quiet() {
    RunOptions o;
    o.write_outputs = false;
    return o;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("relative error values") {
    const auto ref = FieldGrid::from_function(8, 4, {}, [](physics::Point2 p) { return 1.0 + p.x1 - p.x2; });
    CHECK(relative_error(ref, ref) == 0.0);
    CHECK(relative_error(ref, FieldGrid(8, 4, {}, 0.0)) == doctest::Approx(1.0).epsilon(1e-15));
    auto twice = ref;
    for (auto& v : twice.values) v *= 2.0;
    CHECK(relative_error(ref, twice) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(relative_error(ref, [](physics::Point2 p) { return 1.0 + p.x1 - p.x2; }) == doctest::Approx(0.0));
    CHECK_THROWS(relative_error(FieldGrid(8, 4, {}, 0.0), ref));
    CHECK_THROWS(relative_error(ref, FieldGrid(4, 4, {}, 1.0)));
}

TEST_CASE("measurement selection") {
    SUBCASE("all cells are selected exactly once") {
        const auto cells = select_cells(8, 4, 32, 7, MeasurementLayout::uniform_random);
        CHECK(std::set<std::size_t>(cells.begin(), cells.end()).size() == 32);
    }
    SUBCASE("deterministic and nested") {
        const auto a = select_cells(256, 128, 40, 3, MeasurementLayout::uniform_random);
        CHECK(a == select_cells(256, 128, 40, 3, MeasurementLayout::uniform_random));
        const auto b = select_cells(256, 128, 16, 3, MeasurementLayout::uniform_random);
        CHECK(std::equal(b.begin(), b.end(), a.begin()));
        CHECK(a != select_cells(256, 128, 40, 4, MeasurementLayout::uniform_random));
    }
    SUBCASE("too many measurements") {
        CHECK_THROWS(select_cells(4, 4, 17, 0, MeasurementLayout::uniform_random));
    }
    SUBCASE("grid layout") {
        const auto cells = select_cells(256, 128, 8, 0, MeasurementLayout::grid);
        REQUIRE(cells.size() == 8);
        CHECK(std::set<std::size_t>(cells.begin(), cells.end()).size() == 8);
        CHECK(cells[0] == 32 * 256 + 32);  // 4 x 2 lattice, first cell at (32, 32)
    }
    SUBCASE("values are exact at cell centers") {
        const auto k = fields::analytic_k_grid(64, 32, {});
        const auto m = select_measurements(k, physics::Variable::K, 20, 1, MeasurementLayout::uniform_random);
        REQUIRE(m.size() == 20);
        for (std::size_t i = 0; i < m.size(); ++i) {
            const auto ix = static_cast<std::size_t>(m.points[i].x1 / k.dx());
            const auto iy = static_cast<std::size_t>(m.points[i].x2 / k.dy());
            CHECK(m.values[i] == k.at(ix, iy));
        }
    }
}

TEST_CASE("uniform selection frequencies") {
    // n = 16 of 64 cells, 1e4 draws: counts are Binomial(1e4, 1/4) per cell.
    const std::size_t trials = 10000, cells = 64, n = 16;
    std::vector<double> count(cells, 0.0);
    for (std::size_t t = 0; t < trials; ++t) {
        for (auto c : select_cells(8, 8, n, t, MeasurementLayout::uniform_random)) count[c] += 1.0;
    }
    const double p = static_cast<double>(n) / cells;
    const double expect = trials * p;
    const double se = std::sqrt(trials * p * (1.0 - p));
    double chi2 = 0.0;
    for (double c : count) {
        CHECK(std::abs(c - expect) < 3.0 * se);
        chi2 += (c - expect) * (c - expect) / (se * se);
    }
    // 99.9% quantile of chi-square with 63 degrees of freedom
    CHECK(chi2 < 103.4);
}

TEST_CASE("residual point sampling") {
    const physics::DomainSpec dom{1.0, 0.5};
    const auto empty = select_residual_points(dom, {}, 0);
    CHECK(empty.empty());

    const auto s = select_residual_points(dom, {300, 200, 16, 10}, 9);
    CHECK(s.interior_h.size() == 300);
    CHECK(s.interior_c.size() == 200);
    for (const auto& p : s.interior_h) CHECK(dom.strictly_inside(p));
    for (const auto& p : s.interior_c) CHECK(dom.strictly_inside(p));
    REQUIRE(s.neumann1_h.size() == 16);
    for (std::size_t i = 0; i < 16; ++i) {
        CHECK(s.neumann1_h[i].x1 == 0.0);
        if (i > 0) CHECK(s.neumann1_h[i].x2 > s.neumann1_h[i - 1].x2);
    }
    CHECK(s.neumann1_h.front().x2 == doctest::Approx(0.5e-6));
    CHECK(s.neumann1_h.front().x2 > 0.0);
    CHECK(s.neumann1_h.back().x2 < 0.5);
    CHECK(s.neumann2_h.size() == 32);
    CHECK(s.dirichlet_c.size() == 10);
    CHECK(s.neumann2_c.size() == 20);
    CHECK_NOTHROW(s.validate(dom));

    const auto again = select_residual_points(dom, {300, 200, 16, 10}, 9);
    CHECK(again.interior_h.front().x1 == s.interior_h.front().x1);
    CHECK(again.interior_c.back().x2 == s.interior_c.back().x2);
}

TEST_CASE("config parsing") {
    SUBCASE("defaults validate") { CHECK_NOTHROW(ExperimentConfig{}.validate()); }
    SUBCASE("round trip through the echo") {
        std::istringstream is(R"([experiment]
name = round_trip
methods = data_driven, pinn_darcy, mpinn
seeds = 4, 5, 6
output = results/rt
threads = 2
record_wall_time = true

[field]
source = grf
lambda = 0.5
sigma2 = 1.3
seed = 17
covariance = gaussian

[physics]
phi = 0.3
omega_f = 0.25
ade_mode = frozen
log_k = true

[data]
n_k = 40
n_h = 40
n_c = 100
layout = grid

[residuals]
n_interior_h = 1000
n_interior_c = 1000

[network]
k = 2-60-60-60-1
c = 40-40

[training]
strategy = simultaneous
optimizer = hybrid
lbfgs_max_iters = 2000
adam_lr = 0.001

[sweep]
axis = width
values = 10, 20, 50
)");
        const auto cfg = parse_config(is);
        CHECK(cfg.name == "round_trip");
        CHECK(cfg.methods.size() == 3);
        CHECK(cfg.seeds == std::vector<std::uint64_t>{4, 5, 6});
        CHECK(cfg.field.source == FieldSource::grf);
        CHECK(cfg.field.covariance == fields::CovarianceForm::gaussian);
        CHECK(cfg.physics.phi == 0.3);
        CHECK(cfg.arch_k.hidden_widths == std::vector<std::size_t>{60, 60, 60});
        CHECK(cfg.training.optimizer == opt::OptimizerKind::hybrid);
        CHECK(cfg.sweep_axis == SweepAxis::width);
        CHECK(cfg.strategy_for(Method::mpinn).kind == opt::StrategyKind::mpinn_simultaneous);
        CHECK_NOTHROW(cfg.validate());

        std::istringstream echo(echo_config(cfg));
        const auto back = parse_config(echo);
        CHECK(back == cfg);
        CHECK(echo_config(back) == echo_config(cfg));
        std::istringstream defaults(echo_config(ExperimentConfig{}));
        CHECK(parse_config(defaults) == ExperimentConfig{});
    }
    SUBCASE("unknown keys and sections are errors") {
        std::istringstream typo("[data]\nn_kk = 3\n");
        CHECK_THROWS_AS(parse_config(typo), ConfigError);
        std::istringstream section("[dta]\nn_k = 3\n");
        CHECK_THROWS_AS(parse_config(section), ConfigError);
        std::istringstream bare("n_k = 3\n");
        CHECK_THROWS_AS(parse_config(bare), ConfigError);
    }
    SUBCASE("malformed values") {
        std::istringstream num("[data]\nn_k = 3x\n");
        CHECK_THROWS_AS(parse_config(num), ConfigError);
        std::istringstream neg("[data]\nn_k = -3\n");
        CHECK_THROWS_AS(parse_config(neg), ConfigError);
        std::istringstream method("[experiment]\nmethods = pinn\n");
        CHECK_THROWS_AS(parse_config(method), ConfigError);
        std::istringstream arch("[network]\nk = 2-0-1\n");
        CHECK_THROWS_AS(parse_config(arch), ConfigError);
        CHECK_THROWS_AS(parse_seed_list(""), ConfigError);
    }
    SUBCASE("validation") {
        ExperimentConfig cfg;
        cfg.data.n_k = 1u << 20;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
        cfg = {};
        cfg.methods = {Method::mpinn};
        cfg.data.n_c = 0;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
        cfg = {};
        cfg.field.source = FieldSource::file;
        cfg.field.file = "/nonexistent/K.txt";
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
        cfg = {};
        cfg.physics.phi = 1.5;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
}

TEST_CASE("smoke experiment emits every column and consistent aggregates") {
    const auto cfg = tiny_config("smoke");
    const auto report = run_experiment(cfg);
    CHECK_FALSE(report.partial());
    const auto rows = csv_rows(slurp(cfg.output / "results.csv"));
    REQUIRE(rows.size() == 1 + 2 * (2 + 2));
    const auto header = rows.front();
    CHECK(header.size() == 15);
    for (const auto& r : rows) CHECK(r.size() == header.size());
    for (const auto* name : {"report.json", "config.ini", "history/pinn_darcy_seed2.csv", "networks/pinn_darcy_seed1_K.bin",
                             "reference/K.txt", "reference/C.txt"}) {
        CHECK(fs::exists(cfg.output / name));
    }
    for (const auto& m : report.methods) {
        for (std::size_t v = 0; v < 2; ++v) {
            double mean = 0.0;
            for (const auto& r : m.runs) mean += *r.eps[v] / 2.0;
            CHECK(m.eps[v].mean == doctest::Approx(mean).epsilon(1e-14));
        }
        CHECK_FALSE(m.runs[0].eps[2].has_value());
    }
    // head is recovered better than conductivity by the physics-informed fit
    const auto* pinn = report.find(Method::pinn_darcy);
    REQUIRE(pinn != nullptr);
    for (const auto& r : pinn->runs) CHECK(*r.eps[1] < *r.eps[0]);

    std::istringstream echo(slurp(cfg.output / "config.ini"));
    CHECK(parse_config(echo) == cfg);
}

TEST_CASE("experiments are byte-for-byte reproducible") {
    auto cfg = tiny_config("determinism_a");
    cfg.threads = 2;
    run_experiment(cfg);
    auto cfg_b = tiny_config("determinism_b");
    cfg_b.name = cfg.name;
    run_experiment(cfg_b);
    CHECK(slurp(cfg.output / "results.csv") == slurp(cfg_b.output / "results.csv"));
    CHECK(slurp(cfg.output / "history/pinn_darcy_seed1.csv") == slurp(cfg_b.output / "history/pinn_darcy_seed1.csv"));
    // a second run reuses the cached reference fields
    const auto before = fs::last_write_time(cfg.output / "reference/K.txt");
    run_experiment(cfg);
    CHECK(fs::last_write_time(cfg.output / "reference/K.txt") == before);
}

TEST_CASE("mpinn without physics terms reduces to data-driven training") {
    auto dd = tiny_config("reduction_dd");
    dd.methods = {Method::data_driven};
    dd.data.n_c = 24;
    dd.residuals = {0, 0, 0, 0, 0};
    auto mp = tiny_config("reduction_mp");
    mp.methods = {Method::mpinn};
    mp.data.n_c = 24;
    mp.residuals = {0, 0, 0, 0, 0};
    mp.physics.omega_f = 0.0;
    mp.physics.omega_b = 0.0;
    const auto a = run_experiment(dd, quiet());
    const auto b = run_experiment(mp, quiet());
    for (std::size_t s = 0; s < 2; ++s) {
        const auto& ra = a.methods[0].runs[s];
        const auto& rb = b.methods[0].runs[s];
        for (std::size_t v = 0; v < 3; ++v) CHECK(*ra.eps[v] == *rb.eps[v]);
        REQUIRE(ra.history.size() == rb.history.size());
        for (std::size_t i = 0; i < ra.history.size(); ++i) CHECK(ra.history[i].loss == rb.history[i].loss);
    }
}

TEST_CASE("sweeps") {
    SUBCASE("single value equals a plain run") {
        auto base = tiny_config("sweep_single");
        const double values[] = {16};
        const auto result = sweep(base, SweepAxis::N, values);
        REQUIRE(result.reports.size() == 1);
        auto plain = tiny_config("sweep_single_plain");
        const auto direct = run_experiment(plain, quiet());
        for (std::size_t m = 0; m < 2; ++m) {
            for (std::size_t s = 0; s < 2; ++s) {
                CHECK(*result.reports[0].methods[m].runs[s].eps[0] == *direct.methods[m].runs[s].eps[0]);
            }
        }
    }
    SUBCASE("width axis reports parameter counts and row counts") {
        auto base = tiny_config("sweep_width");
        base.methods = {Method::data_driven};
        base.arch_k = nn::MlpArchitecture::parse("2-4-4-4-1");
        base.training.lbfgs_max_iters = 5;
        const double values[] = {10, 20, 50};
        const auto result = sweep(base, SweepAxis::width, values);
        const auto rows = csv_rows(slurp(base.output / "sweep.csv"));
        CHECK(rows.size() == 1 + 3 * (2 + 2));
        std::vector<std::string> arch;
        for (std::size_t r = 1; r < rows.size(); r += 4) arch.push_back(rows[r].back());
        CHECK(arch == std::vector<std::string>{"261", "921", "5301"});
        CHECK(rows[1][3] == "10");
        CHECK(fs::exists(base.output / "width_50" / "results.csv"));
    }
    SUBCASE("a failing cell is recorded and the sweep continues") {
        auto base = tiny_config("sweep_fail");
        base.methods = {Method::data_driven};
        base.training.lbfgs_max_iters = 5;
        const double values[] = {100000, 8};
        const auto result = sweep(base, SweepAxis::N, values);
        CHECK(result.partial);
        REQUIRE(result.reports.size() == 2);
        CHECK_FALSE(result.reports[0].methods[0].runs[0].ok);
        CHECK(result.reports[1].methods[0].runs[0].ok);
        const auto rows = csv_rows(sweep_csv(result));
        CHECK(rows[1][5] == "failed");
    }
}

TEST_CASE("saved networks evaluate to the reported errors") {
    auto cfg = tiny_config("eval");
    cfg.methods = {Method::pinn_darcy};
    const auto report = run_experiment(cfg);
    const auto rows = csv_rows(evaluate_saved(cfg));
    REQUIRE(rows.size() == 1 + 2 + 2);
    for (std::size_t s = 0; s < 2; ++s) {
        CHECK(std::stod(rows[1 + s][5]) == *report.methods[0].runs[s].eps[0]);
        CHECK(std::stod(rows[1 + s][6]) == *report.methods[0].runs[s].eps[1]);
    }
}

TEST_CASE("reference generation from a field file") {
    const auto dir = scratch("field_file");
    const auto k = fields::analytic_k_grid(32, 16, {});
    ref::write_field(dir / "K.txt", k);
    auto cfg = tiny_config("field_file_run");
    cfg.field.source = FieldSource::file;
    cfg.field.file = dir / "K.txt";
    const auto from_file = generate_reference(cfg);
    cfg.field.source = FieldSource::analytic;
    const auto analytic = generate_reference(cfg);
    CHECK(from_file.h.values == analytic.h.values);
    CHECK(from_file.c.values == analytic.c.values);
    cfg.field.source = FieldSource::file;
    cfg.field.nx = 64;
    CHECK_THROWS_AS(generate_reference(cfg), ConfigError);
}
