#include "mpinn/harness/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace mpinn::harness {

namespace pt = boost::property_tree;

std::string_view to_string(FieldSource s) noexcept {
    switch (s) {
        case FieldSource::analytic: return "analytic";
        case FieldSource::grf: return "grf";
        case FieldSource::file: return "file";
    }
    return "?";
}

std::string_view to_string(MeasurementLayout l) noexcept {
    return l == MeasurementLayout::grid ? "grid" : "uniform_random";
}

MeasurementLayout parse_layout(std::string_view text) {
    if (text == "uniform_random") return MeasurementLayout::uniform_random;
    if (text == "grid") return MeasurementLayout::grid;
    throw ConfigError("unknown measurement layout '" + std::string(text) + "'");
}

std::string_view to_string(SweepAxis a) noexcept {
    switch (a) {
        case SweepAxis::N: return "N";
        case SweepAxis::N_K: return "N_K";
        case SweepAxis::N_C: return "N_C";
        case SweepAxis::width: return "width";
        case SweepAxis::N_f_h: return "N_f_h";
    }
    return "?";
}

SweepAxis parse_axis(std::string_view text) {
    for (auto a : {SweepAxis::N, SweepAxis::N_K, SweepAxis::N_C, SweepAxis::width, SweepAxis::N_f_h}) {
        if (text == to_string(a)) return a;
    }
    throw ConfigError("unknown sweep axis '" + std::string(text) + "'");
}

std::string_view to_string(Method m) noexcept {
    switch (m) {
        case Method::data_driven: return "data_driven";
        case Method::pinn_darcy: return "pinn_darcy";
        case Method::mpinn: return "mpinn";
    }
    return "?";
}

Method parse_method(std::string_view text) {
    for (auto m : {Method::data_driven, Method::pinn_darcy, Method::mpinn}) {
        if (text == to_string(m)) return m;
    }
    throw ConfigError("unknown method '" + std::string(text) + "'");
}

namespace {

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto piece = trim(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (!piece.empty()) out.push_back(piece);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

template <class T>
T parse_number(std::string_view text, const std::string& key) {
    const std::string t = trim(text);
    T v{};
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) {
        throw ConfigError(key + ": cannot parse '" + t + "' as a number");
    }
    return v;
}

bool parse_bool(std::string_view text, const std::string& key) {
    const auto t = trim(text);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw ConfigError(key + ": expected true or false, got '" + t + "'");
}

physics::AdeMode parse_ade_mode(std::string_view text) {
    if (text == "full") return physics::AdeMode::full;
    if (text == "frozen") return physics::AdeMode::frozen;
    throw ConfigError("unknown ade_mode '" + std::string(text) + "'");
}

// Binds every key to a reader and a writer so parse and echo share one
// schema.
struct Schema {
    struct Entry {
        std::function<void(const std::string&, const std::string&)> read;
        std::function<std::string()> write;
        bool optional_output = false;
    };
    std::vector<std::pair<std::string, std::vector<std::pair<std::string, Entry>>>> sections;

    void section(std::string name) { sections.push_back({std::move(name), {}}); }
    void key(std::string name, Entry e) { sections.back().second.push_back({std::move(name), std::move(e)}); }

    template <class T>
    void number(std::string name, T& ref) {
        key(std::move(name), {[&ref](const std::string& k, const std::string& v) { ref = parse_number<T>(v, k); },
                              [&ref] {
                                  if constexpr (std::is_floating_point_v<T>) return fmt_double(ref);
                                  else return std::to_string(ref);
                              }});
    }
    void boolean(std::string name, bool& ref) {
        key(std::move(name), {[&ref](const std::string& k, const std::string& v) { ref = parse_bool(v, k); },
                              [&ref] { return std::string(ref ? "true" : "false"); }});
    }
    void text(std::string name, std::string& ref) {
        key(std::move(name), {[&ref](const std::string&, const std::string& v) { ref = trim(v); }, [&ref] { return ref; }});
    }
};

Schema make_schema(ExperimentConfig& c, const std::filesystem::path& base_dir) {
    Schema s;
    s.section("experiment");
    s.text("name", c.name);
    s.key("methods", {[&c](const std::string&, const std::string& v) {
                          c.methods.clear();
                          for (const auto& m : split_list(v)) c.methods.push_back(parse_method(m));
                      },
                      [&c] {
                          std::string out;
                          for (auto m : c.methods) out += (out.empty() ? "" : ", ") + std::string(to_string(m));
                          return out;
                      }});
    s.key("seeds", {[&c](const std::string&, const std::string& v) { c.seeds = parse_seed_list(v); },
                    [&c] {
                        std::string out;
                        for (auto x : c.seeds) out += (out.empty() ? "" : ", ") + std::to_string(x);
                        return out;
                    }});
    s.key("output", {[&c, base_dir](const std::string&, const std::string& v) {
                         const std::filesystem::path p(trim(v));
                         c.output = (base_dir.empty() || p.is_absolute()) ? p : base_dir / p;
                     },
                     [&c] { return c.output.string(); }});
    s.number("threads", c.threads);
    s.boolean("record_wall_time", c.record_wall_time);

    s.section("field");
    s.key("source", {[&c](const std::string&, const std::string& v) {
                         const auto t = trim(v);
                         if (t == "analytic") c.field.source = FieldSource::analytic;
                         else if (t == "grf") c.field.source = FieldSource::grf;
                         else if (t == "file") c.field.source = FieldSource::file;
                         else throw ConfigError("field.source: unknown source '" + t + "'");
                     },
                     [&c] { return std::string(to_string(c.field.source)); }});
    s.number("nx", c.field.nx);
    s.number("ny", c.field.ny);
    s.number("lambda", c.field.lambda);
    s.number("sigma2", c.field.sigma2);
    s.number("seed", c.field.seed);
    s.key("covariance", {[&c](const std::string&, const std::string& v) {
                             try {
                                 c.field.covariance = fields::parse_covariance_form(trim(v));
                             } catch (const std::invalid_argument& e) {
                                 throw ConfigError(std::string("field.covariance: ") + e.what());
                             }
                         },
                         [&c] { return std::string(fields::to_string(c.field.covariance)); }});
    s.key("file", {[&c, base_dir](const std::string&, const std::string& v) {
                       const std::filesystem::path p(trim(v));
                       c.field.file = (base_dir.empty() || p.is_absolute()) ? p : base_dir / p;
                   },
                   [&c] { return c.field.file.string(); }, true});

    auto& p = c.physics;
    s.section("physics");
    s.number("phi", p.phi);
    s.number("d_w", p.d_w);
    s.number("tau", p.tau);
    s.number("alpha_l", p.alpha_l);
    s.number("alpha_t", p.alpha_t);
    s.number("l1", p.l1);
    s.number("l2", p.l2);
    s.number("h2", p.h2);
    s.number("q", p.q);
    s.number("c0_amp", p.c0_amp);
    s.number("c0_width", p.c0_width);
    s.number("omega_f", p.omega_f);
    s.number("omega_b", p.omega_b);
    s.key("ade_mode", {[&p](const std::string&, const std::string& v) { p.ade_mode = parse_ade_mode(trim(v)); },
                       [&p] { return std::string(p.ade_mode == physics::AdeMode::full ? "full" : "frozen"); }});
    s.number("velocity_delta", p.velocity_delta);
    s.boolean("log_k", p.log_k);

    s.section("data");
    s.number("n_k", c.data.n_k);
    s.number("n_h", c.data.n_h);
    s.number("n_c", c.data.n_c);
    s.key("layout", {[&c](const std::string&, const std::string& v) { c.data.layout = parse_layout(trim(v)); },
                     [&c] { return std::string(to_string(c.data.layout)); }});
    s.number("seed", c.data.seed);

    s.section("residuals");
    s.number("n_interior_h", c.residuals.n_interior_h);
    s.number("n_interior_c", c.residuals.n_interior_c);
    s.number("n_boundary_h", c.residuals.n_boundary_h);
    s.number("n_boundary_c", c.residuals.n_boundary_c);
    s.number("seed", c.residuals.seed);

    s.section("network");
    auto arch = [&s](std::string name, nn::MlpArchitecture& a) {
        s.key(std::move(name), {[&a](const std::string& k, const std::string& v) {
                                    try {
                                        a = nn::MlpArchitecture::parse(trim(v));
                                    } catch (const std::invalid_argument& e) {
                                        throw ConfigError(k + ": " + e.what());
                                    }
                                },
                                [&a] { return a.to_string(); }});
    };
    arch("k", c.arch_k);
    arch("h", c.arch_h);
    arch("c", c.arch_c);

    auto& t = c.training;
    s.section("training");
    s.text("strategy", t.strategy);
    s.key("optimizer", {[&t](const std::string& k, const std::string& v) {
                            try {
                                t.optimizer = opt::parse_optimizer(trim(v));
                            } catch (const std::invalid_argument& e) {
                                throw ConfigError(k + ": " + e.what());
                            }
                        },
                        [&t] { return std::string(opt::to_string(t.optimizer)); }});
    s.number("hybrid_switch_loss", t.hybrid_switch_loss);
    s.number("lbfgs_memory", t.lbfgs_memory);
    s.number("lbfgs_max_iters", t.lbfgs_max_iters);
    s.number("lbfgs_gtol", t.lbfgs_gtol);
    s.number("lbfgs_ftol", t.lbfgs_ftol);
    s.number("adam_lr", t.adam_lr);
    s.number("adam_batch_size", t.adam_batch_size);
    s.number("adam_max_iters", t.adam_max_iters);
    s.number("history_every", t.history_every);

    s.section("sweep");
    s.key("axis", {[&c](const std::string&, const std::string& v) { c.sweep_axis = parse_axis(trim(v)); },
                   [&c] { return c.sweep_axis ? std::string(to_string(*c.sweep_axis)) : std::string(); }, true});
    s.key("values", {[&c](const std::string& k, const std::string& v) {
                         c.sweep_values.clear();
                         for (const auto& x : split_list(v)) c.sweep_values.push_back(parse_number<double>(x, k));
                     },
                     [&c] {
                         std::string out;
                         for (double x : c.sweep_values) out += (out.empty() ? "" : ", ") + fmt_double(x);
                         return out;
                     },
                     true});
    return s;
}

}  // namespace

std::string FieldConfig::label() const {
    switch (source) {
        case FieldSource::analytic: return "analytic";
        case FieldSource::grf:
            return "grf:lambda=" + fmt_double(lambda) + ":sigma2=" + fmt_double(sigma2) + ":seed=" + std::to_string(seed) +
                   ":" + std::string(fields::to_string(covariance));
        case FieldSource::file: return "file:" + file.filename().string();
    }
    return "?";
}

physics::PhysicsSetup PhysicsConfig::setup() const {
    physics::PhysicsSetup s;
    s.params = {phi, d_w, tau, alpha_l, alpha_t};
    s.domain = {l1, l2};
    s.bc.h2 = h2;
    s.bc.q = q;
    s.bc.c0_amp = c0_amp;
    s.bc.c0_width = c0_width;
    s.weights = {omega_f, omega_b};
    s.ade_mode = ade_mode;
    s.velocity_delta = velocity_delta;
    s.log_k = log_k;
    return s;
}

opt::TrainingStrategy ExperimentConfig::strategy_for(Method m) const {
    opt::TrainingStrategy s;
    switch (m) {
        case Method::data_driven: s.kind = opt::StrategyKind::data_only; break;
        case Method::pinn_darcy: s.kind = opt::StrategyKind::pinn_darcy; break;
        case Method::mpinn:
            s.kind = training.strategy == "simultaneous" ? opt::StrategyKind::mpinn_simultaneous
                                                         : opt::StrategyKind::mpinn_sequential;
            break;
    }
    s.optimizer = training.optimizer;
    s.hybrid_switch_loss = training.hybrid_switch_loss;
    s.lbfgs.memory = training.lbfgs_memory;
    s.lbfgs.max_iters = training.lbfgs_max_iters;
    s.lbfgs.gradient_tolerance = training.lbfgs_gtol;
    s.lbfgs.step_tolerance = training.lbfgs_ftol;
    s.lbfgs.history_every = training.history_every;
    s.adam.learning_rate = training.adam_lr;
    s.adam.batch_size = training.adam_batch_size;
    s.adam.max_iters = training.adam_max_iters;
    s.adam.history_every = training.history_every;
    return s;
}

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    if (name.empty() || name.find_first_of(",\n\"") != std::string::npos) fail("experiment.name must be non-empty without commas or quotes");
    if (methods.empty()) fail("experiment.methods is empty");
    if (seeds.empty()) fail("experiment.seeds is empty");
    if (threads == 0) fail("experiment.threads must be positive");
    if (field.nx == 0 || field.ny == 0) fail("field.nx and field.ny must be positive");
    if (field.source == FieldSource::grf) {
        try {
            field.grf().validate();
        } catch (const std::invalid_argument& e) {
            fail(std::string("field: ") + e.what());
        }
    }
    if (field.source == FieldSource::file) {
        if (field.file.empty()) fail("field.file is required for source = file");
        if (!std::filesystem::exists(field.file)) fail("field.file '" + field.file.string() + "' does not exist");
    }
    try {
        const auto s = physics.setup();
        s.params.validate();
        s.domain.validate();
        s.bc.validate();
        arch_k.validate();
        arch_h.validate();
        arch_c.validate();
        for (auto m : methods) strategy_for(m).validate();
    } catch (const std::invalid_argument& e) {
        fail(e.what());
    }
    if (physics.omega_f < 0.0 || physics.omega_b < 0.0) fail("physics.omega_f and omega_b must be non-negative");
    if (!(physics.velocity_delta > 0.0)) fail("physics.velocity_delta must be positive");
    if (training.strategy != "sequential" && training.strategy != "simultaneous") {
        fail("training.strategy must be sequential or simultaneous");
    }
    const std::size_t cells = field.nx * field.ny;
    if (data.n_k > cells || data.n_h > cells || data.n_c > cells) fail("data: more measurements than grid cells");
    for (auto m : methods) {
        if (data.n_k == 0) fail("data.n_k must be positive");
        if (m != Method::data_driven && data.n_h == 0) fail("data.n_h must be positive for physics-informed methods");
        if (m == Method::mpinn && data.n_c == 0) fail("data.n_c must be positive for mpinn");
    }
    if (sweep_axis && sweep_values.empty()) fail("sweep.values is empty");
    for (double v : sweep_values) {
        if (!(v >= 0.0) || v != std::floor(v)) fail("sweep.values must be non-negative integers");
        if (sweep_axis == SweepAxis::width && v == 0.0) fail("sweep.values: width must be positive");
    }
}

ExperimentConfig parse_config(std::istream& is, const std::filesystem::path& base_dir) {
    pt::ptree tree;
    try {
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax: ") + e.what());
    }
    ExperimentConfig cfg;
    auto schema = make_schema(cfg, base_dir);
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw ConfigError("key '" + section + "' outside a section");
        auto sec = std::find_if(schema.sections.begin(), schema.sections.end(),
                                [&](const auto& s) { return s.first == section; });
        if (sec == schema.sections.end()) throw ConfigError("unknown section [" + section + "]");
        for (const auto& [key, value] : body) {
            auto entry = std::find_if(sec->second.begin(), sec->second.end(), [&](const auto& e) { return e.first == key; });
            if (entry == sec->second.end()) throw ConfigError("unknown key '" + section + "." + key + "'");
            entry->second.read(section + "." + key, value.data());
        }
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    return parse_config(in, path.parent_path());
}

std::string echo_config(const ExperimentConfig& cfg) {
    ExperimentConfig copy = cfg;
    auto schema = make_schema(copy, {});
    std::ostringstream os;
    bool first = true;
    for (const auto& [section, entries] : schema.sections) {
        std::ostringstream body;
        for (const auto& [key, e] : entries) {
            const auto v = e.write();
            if (e.optional_output && v.empty()) continue;
            body << key << " = " << v << '\n';
        }
        if (body.str().empty()) continue;
        if (!first) os << '\n';
        first = false;
        os << '[' << section << "]\n" << body.str();
    }
    return os.str();
}

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
    std::vector<std::uint64_t> out;
    for (const auto& s : split_list(text)) out.push_back(parse_number<std::uint64_t>(s, "seeds"));
    if (out.empty()) throw ConfigError("seed list is empty");
    return out;
}

}  // namespace mpinn::harness
