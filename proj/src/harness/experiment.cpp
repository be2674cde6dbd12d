#include "mpinn/harness/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mpinn/fields/fields.hpp"
#include "mpinn/refsolver/solvers.hpp"

#ifndef MPINN_VERSION
#define MPINN_VERSION "unknown"
#endif

namespace mpinn::harness {

namespace fs = std::filesystem;
using physics::Variable;

std::string_view code_version() noexcept { return MPINN_VERSION; }

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_axis(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// The settings reference fields depend on.
std::string reference_stamp(const ExperimentConfig& cfg) {
    ExperimentConfig key;
    key.field = cfg.field;
    key.physics = cfg.physics;
    key.physics.omega_f = key.physics.omega_b = 1.0;
    key.physics.velocity_delta = physics::kDefaultVelocityRegularizer;
    key.physics.log_k = false;
    key.physics.ade_mode = physics::AdeMode::full;
    const auto text = echo_config(key);
    const auto begin = text.find("[field]");
    const auto end = text.find("[data]");
    return text.substr(begin, end - begin);
}

std::string network_file(Method m, std::uint64_t seed, Variable v) {
    return std::string(to_string(m)) + "_seed" + std::to_string(seed) + "_" + std::string(physics::to_string(v)) + ".bin";
}

const nn::MlpArchitecture& arch_of(const ExperimentConfig& cfg, Variable v) {
    switch (v) {
        case Variable::K: return cfg.arch_k;
        case Variable::h: return cfg.arch_h;
        case Variable::C: return cfg.arch_c;
    }
    return cfg.arch_k;
}

}  // namespace

ReferenceFields generate_reference(const ExperimentConfig& cfg) {
    const auto setup = cfg.physics.setup();
    const auto& f = cfg.field;
    ReferenceFields ref;
    switch (f.source) {
        case FieldSource::analytic: ref.k = fields::analytic_k_grid(f.nx, f.ny, setup.domain); break;
        case FieldSource::grf: ref.k = fields::lognormal_k(f.nx, f.ny, setup.domain, f.grf()); break;
        case FieldSource::file:
            ref.k = ref::read_field(f.file);
            if (ref.k.nx != f.nx || ref.k.ny != f.ny || ref.k.domain.l1 != setup.domain.l1 ||
                ref.k.domain.l2 != setup.domain.l2) {
                throw ConfigError("field.file geometry does not match field.nx/ny and physics.l1/l2");
            }
            break;
    }
    auto flow = ref::solve_darcy(ref.k, setup.bc, setup.params);
    ref.h = std::move(flow.h);
    ref.c = ref::solve_ade(flow.v, setup.bc, setup.params);
    return ref;
}

void save_reference(const fs::path& dir, const ReferenceFields& ref) {
    fs::create_directories(dir);
    ref::write_field(dir / "K.txt", ref.k);
    ref::write_field(dir / "h.txt", ref.h);
    ref::write_field(dir / "C.txt", ref.c);
}

ReferenceFields load_reference(const fs::path& dir) {
    return {ref::read_field(dir / "K.txt"), ref::read_field(dir / "h.txt"), ref::read_field(dir / "C.txt")};
}

ReferenceFields cached_reference(const ExperimentConfig& cfg, const fs::path& dir) {
    const auto stamp = reference_stamp(cfg);
    const auto stamp_file = dir / "reference.ini";
    if (fs::exists(stamp_file) && read_text(stamp_file) == stamp) {
        try {
            return load_reference(dir);
        } catch (const std::exception&) {
            // regenerate below
        }
    }
    auto ref = generate_reference(cfg);
    save_reference(dir, ref);
    write_text(stamp_file, stamp);
    return ref;
}

opt::TrainingProblem build_problem(const ExperimentConfig& cfg, const ReferenceFields& ref) {
    opt::TrainingProblem p;
    p.base.physics = cfg.physics.setup();
    const auto& d = cfg.data;
    const std::array<std::pair<const FieldGrid*, std::size_t>, 3> sources{
        {{&ref.k, d.n_k}, {&ref.h, d.n_h}, {&ref.c, d.n_c}}};
    for (auto v : physics::kAllVariables) {
        const auto [grid, n] = sources[static_cast<std::size_t>(v)];
        if (n > 0) p.base.data[static_cast<std::size_t>(v)] = select_measurements(*grid, v, n, d.seed, d.layout);
    }
    const auto& r = cfg.residuals;
    p.base.points = select_residual_points(p.base.physics.domain,
                                           {r.n_interior_h, r.n_interior_c, r.n_boundary_h, r.n_boundary_c}, r.seed);
    p.architectures = {cfg.arch_k, cfg.arch_h, cfg.arch_c};
    return p;
}

std::array<std::optional<double>, 3> field_errors(const std::array<std::optional<nn::ParameterVector>, 3>& params,
                                                  const ReferenceFields& ref, const physics::PhysicsSetup& setup) {
    std::array<std::optional<double>, 3> out;
    const std::array<const FieldGrid*, 3> grids{&ref.k, &ref.h, &ref.c};
    const auto centers = ref.k.cell_centers();
    for (auto v : physics::kAllVariables) {
        const auto i = static_cast<std::size_t>(v);
        if (!params[i]) continue;
        const auto est = physics::predict(*params[i], centers, v, setup);
        out[i] = relative_error(*grids[i], std::span<const double>(est));
    }
    return out;
}

bool ExperimentReport::partial() const {
    for (const auto& m : methods) {
        if (m.partial) return true;
    }
    return false;
}

const MethodReport* ExperimentReport::find(Method m) const {
    for (const auto& r : methods) {
        if (r.method == m) return &r;
    }
    return nullptr;
}

namespace {

void aggregate(MethodReport& m) {
    std::array<std::vector<double>, 3> eps;
    std::vector<double> loss, iters;
    m.partial = false;
    for (const auto& r : m.runs) {
        if (!r.ok) {
            m.partial = true;
            continue;
        }
        for (std::size_t i = 0; i < 3; ++i) {
            if (r.eps[i]) eps[i].push_back(*r.eps[i]);
        }
        loss.push_back(r.final_loss);
        iters.push_back(static_cast<double>(r.iterations));
    }
    for (std::size_t i = 0; i < 3; ++i) m.eps[i] = opt::summarize(eps[i]);
    m.final_loss = opt::summarize(loss);
    m.iterations = opt::summarize(iters);
}

void write_history(const fs::path& path, const std::vector<opt::HistoryEntry>& history) {
    std::ostringstream os;
    os << "iteration,phase,loss";
    for (std::size_t t = 0; t < physics::kTermCount; ++t) os << ',' << physics::to_string(static_cast<physics::Term>(t));
    os << '\n';
    for (const auto& h : history) {
        os << h.iteration << ',' << h.phase << ',' << fmt(h.loss);
        for (std::size_t t = 0; t < physics::kTermCount; ++t) {
            os << ',';
            if (t < h.terms.size()) os << fmt(h.terms[t]);
        }
        os << '\n';
    }
    write_text(path, os.str());
}

void write_outputs(const ExperimentReport& report) {
    const auto& cfg = report.config;
    fs::create_directories(cfg.output / "networks");
    fs::create_directories(cfg.output / "history");
    write_text(cfg.output / "config.ini", echo_config(cfg));
    write_text(cfg.output / "results.csv", std::string(kCsvHeader) + "\n" + report_csv(report));
    write_text(cfg.output / "report.json", report_json(report));
    for (const auto& m : report.methods) {
        for (const auto& r : m.runs) {
            const auto stem = std::string(to_string(m.method)) + "_seed" + std::to_string(r.seed);
            write_history(cfg.output / "history" / (stem + ".csv"), r.history);
            for (auto v : physics::kAllVariables) {
                const auto& p = r.params[static_cast<std::size_t>(v)];
                if (p) nn::save_parameters(cfg.output / "networks" / network_file(m.method, r.seed, v), *p);
            }
        }
    }
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
    cfg.validate();
    const auto ref = cached_reference(cfg, opts.reference_dir.value_or(cfg.output / "reference"));
    const auto problem = build_problem(cfg, ref);

    ExperimentReport report;
    report.config = cfg;
    report.axis = opts.axis;
    report.axis_value = opts.axis_value;
    for (auto method : cfg.methods) {
        MethodReport mr;
        mr.method = method;
        mr.runs.resize(cfg.seeds.size());
        const auto strategy = cfg.strategy_for(method);
        const auto rep = opt::run_seeds(
            cfg.seeds,
            [&](std::size_t index, std::uint64_t seed) {
                const auto t0 = std::chrono::steady_clock::now();
                auto& out = mr.runs[index];
                out.seed = seed;
                auto tr = opt::train(strategy, problem, seed);
                out.eps = field_errors(tr.params, ref, problem.base.physics);
                out.final_loss = tr.final_loss;
                out.iterations = tr.iterations;
                out.termination = std::string(opt::to_string(tr.termination));
                out.history = std::move(tr.history);
                out.params = std::move(tr.params);
                out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                return std::vector<double>{};
            },
            cfg.threads);
        for (std::size_t i = 0; i < rep.runs.size(); ++i) {
            auto& out = mr.runs[i];
            out.seed = rep.runs[i].seed;
            out.ok = rep.runs[i].ok;
            out.error = rep.runs[i].error;
        }
        aggregate(mr);
        report.methods.push_back(std::move(mr));
    }
    if (opts.write_outputs) write_outputs(report);
    return report;
}

void write_csv_rows(std::ostream& os, const ExperimentReport& report) {
    const auto& cfg = report.config;
    const std::string prefix_common = cfg.field.label() + "," + (report.axis_value ? fmt_axis(*report.axis_value) : "");
    const std::string arch = std::to_string(nn::param_count(cfg.arch_k));
    auto opt_eps = [](const std::optional<double>& e, bool rooted) {
        return e ? fmt(rooted ? std::sqrt(*e) : *e) : std::string();
    };
    for (const auto& m : report.methods) {
        const std::string prefix = cfg.name + "," + std::string(to_string(m.method)) + "," + prefix_common + ",";
        for (const auto& r : m.runs) {
            os << prefix << r.seed << ',';
            if (!r.ok) {
                os << "failed,failed,failed,failed,failed,failed,,,," << arch << '\n';
                continue;
            }
            for (bool rooted : {false, true}) {
                for (const auto& e : r.eps) os << opt_eps(e, rooted) << ',';
            }
            os << fmt(r.final_loss) << ',' << r.iterations << ',';
            if (cfg.record_wall_time) os << fmt(r.wall_time_s);
            os << ',' << arch << '\n';
        }
        auto stat_row = [&](const char* label, auto pick) {
            os << prefix << label << ',';
            for (bool rooted : {false, true}) {
                for (std::size_t i = 0; i < 3; ++i) {
                    // Aggregates of the rooted column are over sqrt(eps) per seed.
                    std::vector<double> vals;
                    for (const auto& r : m.runs) {
                        if (r.ok && r.eps[i]) vals.push_back(rooted ? std::sqrt(*r.eps[i]) : *r.eps[i]);
                    }
                    if (!vals.empty()) os << fmt(pick(opt::summarize(vals)));
                    os << ',';
                }
            }
            if (m.final_loss.count) os << fmt(pick(m.final_loss));
            os << ',';
            if (m.iterations.count) os << fmt(pick(m.iterations));
            os << ",," << arch << '\n';
        };
        stat_row("mean", [](const opt::Summary& s) { return s.mean; });
        stat_row("std", [](const opt::Summary& s) { return s.stddev; });
    }
}

std::string report_csv(const ExperimentReport& report) {
    std::ostringstream os;
    write_csv_rows(os, report);
    return os.str();
}

std::string report_json(const ExperimentReport& report) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["version"] = std::string(code_version());
    j["experiment"] = report.config.name;
    j["field"] = report.config.field.label();
    if (!report.axis.empty()) j["axis"] = report.axis;
    if (report.axis_value) j["axis_value"] = *report.axis_value;
    j["config"] = echo_config(report.config);
    j["partial"] = report.partial();
    j["methods"] = ordered_json::array();
    auto eps_json = [](const std::array<std::optional<double>, 3>& e) {
        ordered_json o = ordered_json::object();
        for (auto v : physics::kAllVariables) {
            const auto& x = e[static_cast<std::size_t>(v)];
            if (x) o[std::string(physics::to_string(v))] = *x;
        }
        return o;
    };
    for (const auto& m : report.methods) {
        ordered_json mj;
        mj["method"] = std::string(to_string(m.method));
        mj["partial"] = m.partial;
        mj["runs"] = ordered_json::array();
        for (const auto& r : m.runs) {
            ordered_json rj;
            rj["seed"] = r.seed;
            rj["ok"] = r.ok;
            if (!r.ok) {
                rj["error"] = r.error;
            } else {
                rj["eps"] = eps_json(r.eps);
                rj["final_loss"] = r.final_loss;
                rj["iterations"] = r.iterations;
                rj["termination"] = r.termination;
                rj["wall_time_s"] = r.wall_time_s;
            }
            mj["runs"].push_back(rj);
        }
        ordered_json agg = ordered_json::object();
        for (auto v : physics::kAllVariables) {
            const auto& s = m.eps[static_cast<std::size_t>(v)];
            if (s.count) agg[std::string(physics::to_string(v))] = {{"mean", s.mean}, {"std", s.stddev}, {"count", s.count}};
        }
        mj["aggregate"] = agg;
        j["methods"].push_back(mj);
    }
    return j.dump(2) + "\n";
}

ExperimentConfig apply_axis(const ExperimentConfig& base, SweepAxis axis, double value) {
    if (!(value >= 0.0) || value != std::floor(value)) throw ConfigError("sweep value must be a non-negative integer");
    const auto n = static_cast<std::size_t>(value);
    auto cfg = base;
    switch (axis) {
        case SweepAxis::N: cfg.data.n_k = cfg.data.n_h = n; break;
        case SweepAxis::N_K: cfg.data.n_k = n; break;
        case SweepAxis::N_C: cfg.data.n_c = n; break;
        case SweepAxis::N_f_h: cfg.residuals.n_interior_h = n; break;
        case SweepAxis::width:
            if (n == 0) throw ConfigError("sweep width must be positive");
            for (auto& w : cfg.arch_k.hidden_widths) w = n;
            break;
    }
    cfg.output = base.output / (std::string(to_string(axis)) + "_" + fmt_axis(value));
    cfg.sweep_axis.reset();
    cfg.sweep_values.clear();
    return cfg;
}

SweepResult sweep(const ExperimentConfig& base, SweepAxis axis, std::span<const double> values, bool write_outputs) {
    SweepResult out;
    RunOptions opts;
    opts.write_outputs = write_outputs;
    opts.reference_dir = base.output / "reference";
    opts.axis = std::string(to_string(axis));
    for (double v : values) {
        opts.axis_value = v;
        ExperimentConfig cfg = base;
        try {
            cfg = apply_axis(base, axis, v);
            out.reports.push_back(run_experiment(cfg, opts));
        } catch (const std::exception& e) {
            ExperimentReport failed;
            failed.config = cfg;
            failed.axis = opts.axis;
            failed.axis_value = v;
            for (auto m : base.methods) {
                MethodReport mr;
                mr.method = m;
                for (auto s : base.seeds) {
                    SeedResult r;
                    r.seed = s;
                    r.error = e.what();
                    mr.runs.push_back(std::move(r));
                }
                aggregate(mr);
                failed.methods.push_back(std::move(mr));
            }
            out.reports.push_back(std::move(failed));
        }
        if (out.reports.back().partial()) out.partial = true;
    }
    if (write_outputs) {
        fs::create_directories(base.output);
        write_text(base.output / "sweep.csv", sweep_csv(out));
    }
    return out;
}

std::string sweep_csv(const SweepResult& result) {
    std::ostringstream os;
    os << kCsvHeader << '\n';
    for (const auto& r : result.reports) write_csv_rows(os, r);
    return os.str();
}

std::string evaluate_saved(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto ref = load_reference(cfg.output / "reference");
    const auto setup = cfg.physics.setup();
    ExperimentReport report;
    report.config = cfg;
    for (auto method : cfg.methods) {
        MethodReport mr;
        mr.method = method;
        for (auto seed : cfg.seeds) {
            SeedResult r;
            r.seed = seed;
            bool any = false;
            for (auto v : physics::kAllVariables) {
                const auto path = cfg.output / "networks" / network_file(method, seed, v);
                if (!fs::exists(path)) continue;
                auto p = nn::load_parameters(path);
                if (!(p.architecture() == arch_of(cfg, v))) {
                    throw std::runtime_error("network '" + path.string() + "' does not match the configured architecture");
                }
                r.params[static_cast<std::size_t>(v)] = std::move(p);
                any = true;
            }
            if (any) {
                r.eps = field_errors(r.params, ref, setup);
                r.ok = true;
            } else {
                r.error = "no saved networks";
            }
            mr.runs.push_back(std::move(r));
        }
        aggregate(mr);
        report.methods.push_back(std::move(mr));
    }
    std::ostringstream os;
    os << kCsvHeader << '\n';
    write_csv_rows(os, report);
    return os.str();
}

}  // namespace mpinn::harness
