#include "mpinn/physics/loss.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mpinn::physics {

using ad::TensorValue;
using nn::DerivativeOrder;

std::string_view to_string(Method m) noexcept {
    switch (m) {
        case Method::data_driven: return "data_driven";
        case Method::pinn_darcy: return "pinn_darcy";
        case Method::mpinn: return "mpinn";
    }
    return "?";
}

Method parse_method(std::string_view text) {
    if (text == "data_driven") return Method::data_driven;
    if (text == "pinn_darcy") return Method::pinn_darcy;
    if (text == "mpinn") return Method::mpinn;
    throw std::invalid_argument("unknown method '" + std::string(text) + "'");
}

std::string_view to_string(Term t) noexcept {
    switch (t) {
        case Term::data_K: return "data_K";
        case Term::data_h: return "data_h";
        case Term::data_C: return "data_C";
        case Term::pde_h: return "pde_h";
        case Term::pde_C: return "pde_C";
        case Term::neumann1_h: return "neumann1_h";
        case Term::neumann2_h: return "neumann2_h";
        case Term::dirichlet_h: return "dirichlet_h";
        case Term::neumann1_C: return "neumann1_C";
        case Term::neumann2_C: return "neumann2_C";
        case Term::dirichlet_C: return "dirichlet_C";
    }
    return "?";
}

const MeasurementSet* LossProblem::measurements(Variable v) const {
    const auto& m = data[static_cast<std::size_t>(v)];
    return m ? &*m : nullptr;
}

std::vector<Variable> LossProblem::trained_variables() const {
    switch (method) {
        case Method::data_driven: {
            std::vector<Variable> vars;
            for (auto v : kAllVariables) {
                if (measurements(v)) vars.push_back(v);
            }
            return vars;
        }
        case Method::pinn_darcy: return {Variable::K, Variable::h};
        case Method::mpinn: return {Variable::K, Variable::h, Variable::C};
    }
    return {};
}

bool LossProblem::coupled() const {
    if (method == Method::data_driven) return false;
    const auto& w = physics.weights;
    const auto& p = points;
    const bool flow = (w.omega_f != 0.0 && !p.interior_h.empty()) ||
                      (w.omega_b != 0.0 &&
                       (!p.neumann1_h.empty() || !p.neumann2_h.empty() || !p.dirichlet_h.empty()));
    if (flow) return true;
    if (method != Method::mpinn) return false;
    return (w.omega_f != 0.0 && !p.interior_c.empty()) ||
           (w.omega_b != 0.0 &&
            (!p.neumann1_c.empty() || !p.neumann2_c.empty() || !p.dirichlet_c.empty()));
}

const nn::BoundNetwork* NetworkSet::get(Variable v) const {
    switch (v) {
        case Variable::K: return K;
        case Variable::h: return h;
        case Variable::C: return C;
    }
    return nullptr;
}

namespace {

class Assembler {
public:
    Assembler(const LossProblem& problem, const NetworkSet& nets, ad::Tape& tape)
        : problem_(problem), nets_(nets), tape_(tape) {}

    EvalBundle eval(Variable v, std::span<const Point2> pts, DerivativeOrder order) {
        const auto* net = nets_.get(v);
        if (net == nullptr) {
            throw std::invalid_argument("loss assembly: no network bound for variable " +
                                        std::string(to_string(v)));
        }
        auto bundle = nn::forward_with_spatial(*net, pts, tape_, order);
        if (v == Variable::K && problem_.physics.log_k) return exp_transform(tape_, bundle);
        return bundle;
    }

    NodeRef mean_square(NodeRef r) { return tape_.mean(tape_.square(r)); }

    void put(LossNodes& out, Term t, NodeRef unweighted, double weight) {
        out.terms[static_cast<std::size_t>(t)] =
            weight == 1.0 ? unweighted : tape_.scale(unweighted, weight);
    }

    NodeRef data_term(const MeasurementSet& m, const std::optional<std::vector<std::size_t>>* subset) {
        std::vector<Point2> pts;
        std::vector<double> vals;
        if (subset && *subset) {
            for (auto i : **subset) {
                pts.push_back(m.points.at(i));
                vals.push_back(m.values.at(i));
            }
        } else {
            pts = m.points;
            vals = m.values;
        }
        const auto b = eval(m.variable, pts, DerivativeOrder::value);
        return mean_square(tape_.sub(b.u, tape_.constant(TensorValue::column(vals))));
    }

private:
    const LossProblem& problem_;
    const NetworkSet& nets_;
    ad::Tape& tape_;
};

}  // namespace

LossNodes assemble_loss(const LossProblem& problem, const NetworkSet& nets, ad::Tape& tape,
                        const opt::MiniBatch* batch) {
    const auto& ph = problem.physics;
    const auto& pts = problem.points;
    const auto& w = ph.weights;
    Assembler as(problem, nets, tape);
    LossNodes out;

    const auto trained = problem.trained_variables();
    if (trained.empty()) throw std::invalid_argument("loss assembly: no variable to train");
    for (auto v : trained) {
        const auto* m = problem.measurements(v);
        if (m == nullptr || m->size() == 0) {
            throw std::invalid_argument("loss assembly: empty measurement set for active variable " +
                                        std::string(to_string(v)));
        }
        if (m->variable != v) throw std::invalid_argument("loss assembly: measurement set variable mismatch");
        if (m->points.size() != m->values.size()) {
            throw std::invalid_argument("loss assembly: inconsistent measurement set dimensions");
        }
        const std::optional<std::vector<std::size_t>>* subset = nullptr;
        const auto idx = static_cast<std::size_t>(v);
        if (batch && idx < batch->groups.size()) subset = &batch->groups[idx];
        as.put(out, static_cast<Term>(idx), as.data_term(*m, subset), 1.0);
    }

    if (problem.method != Method::data_driven) {
        if (w.omega_f != 0.0 && !pts.interior_h.empty()) {
            const auto k = as.eval(Variable::K, pts.interior_h, DerivativeOrder::first);
            const auto h = as.eval(Variable::h, pts.interior_h, DerivativeOrder::second);
            as.put(out, Term::pde_h, as.mean_square(darcy_residual(tape, k, h)), w.omega_f);
        }
        if (w.omega_b != 0.0) {
            if (!pts.neumann1_h.empty()) {
                const auto k = as.eval(Variable::K, pts.neumann1_h, DerivativeOrder::value);
                const auto h = as.eval(Variable::h, pts.neumann1_h, DerivativeOrder::first);
                as.put(out, Term::neumann1_h,
                       as.mean_square(neumann_residual(tape, &k, &h, nullptr, NeumannTerm::head_inlet, ph.bc)),
                       w.omega_b);
            }
            if (!pts.neumann2_h.empty()) {
                const auto k = as.eval(Variable::K, pts.neumann2_h, DerivativeOrder::value);
                const auto h = as.eval(Variable::h, pts.neumann2_h, DerivativeOrder::first);
                as.put(out, Term::neumann2_h,
                       as.mean_square(neumann_residual(tape, &k, &h, nullptr, NeumannTerm::head_lateral, ph.bc)),
                       w.omega_b);
            }
            if (!pts.dirichlet_h.empty()) {
                const auto h = as.eval(Variable::h, pts.dirichlet_h, DerivativeOrder::value);
                as.put(out, Term::dirichlet_h, as.mean_square(head_dirichlet_residual(tape, h, ph.bc)),
                       w.omega_b);
            }
        }
    }

    if (problem.method == Method::mpinn) {
        if (w.omega_f != 0.0 && !pts.interior_c.empty()) {
            const auto k = as.eval(Variable::K, pts.interior_c, DerivativeOrder::first);
            const auto h = as.eval(Variable::h, pts.interior_c, DerivativeOrder::second);
            const auto c = as.eval(Variable::C, pts.interior_c, DerivativeOrder::second);
            as.put(out, Term::pde_C,
                   as.mean_square(ade_residual(tape, k, h, c, ph.params, ph.ade_mode, ph.velocity_delta)),
                   w.omega_f);
        }
        if (w.omega_b != 0.0) {
            if (!pts.neumann1_c.empty()) {
                const auto c = as.eval(Variable::C, pts.neumann1_c, DerivativeOrder::first);
                as.put(out, Term::neumann1_C,
                       as.mean_square(neumann_residual(tape, nullptr, nullptr, &c, NeumannTerm::conc_outlet, ph.bc)),
                       w.omega_b);
            }
            if (!pts.neumann2_c.empty()) {
                const auto c = as.eval(Variable::C, pts.neumann2_c, DerivativeOrder::first);
                as.put(out, Term::neumann2_C,
                       as.mean_square(neumann_residual(tape, nullptr, nullptr, &c, NeumannTerm::conc_lateral, ph.bc)),
                       w.omega_b);
            }
            if (!pts.dirichlet_c.empty()) {
                const auto c = as.eval(Variable::C, pts.dirichlet_c, DerivativeOrder::value);
                as.put(out, Term::dirichlet_C,
                       as.mean_square(conc_dirichlet_residual(tape, c, pts.dirichlet_c, ph.bc, ph.domain)),
                       w.omega_b);
            }
        }
    }

    for (auto t : out.terms) {
        if (!t.valid()) continue;
        out.total = out.total.valid() ? tape.add(out.total, t) : t;
    }
    return out;
}

std::vector<double> predict(const nn::ParameterVector& params, std::span<const Point2> points, Variable v,
                            const PhysicsSetup& setup) {
    auto values = nn::evaluate(params, points);
    if (v == Variable::K && setup.log_k) {
        for (auto& x : values) x = std::exp(x);
    }
    return values;
}

LossObjective::LossObjective(LossProblem problem, std::vector<Variable> variables,
                             std::vector<nn::MlpArchitecture> architectures)
    : problem_(std::move(problem)),
      variables_(std::move(variables)),
      architectures_(std::move(architectures)) {
    if (variables_.size() != architectures_.size() || variables_.empty()) {
        throw std::invalid_argument("LossObjective: one architecture per trained variable required");
    }
    for (const auto& a : architectures_) dimension_ += nn::param_count(a);
}

std::vector<double> LossObjective::concat(std::span<const nn::ParameterVector> params) const {
    if (params.size() != variables_.size()) throw std::invalid_argument("LossObjective::concat: count mismatch");
    std::vector<double> x;
    x.reserve(dimension_);
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!(params[i].architecture() == architectures_[i])) {
            throw std::invalid_argument("LossObjective::concat: architecture mismatch");
        }
        const auto f = params[i].flat();
        x.insert(x.end(), f.begin(), f.end());
    }
    return x;
}

std::vector<nn::ParameterVector> LossObjective::split(std::span<const double> x) const {
    if (x.size() != dimension_) throw std::invalid_argument("LossObjective::split: dimension mismatch");
    std::vector<nn::ParameterVector> out;
    std::size_t offset = 0;
    for (const auto& a : architectures_) {
        const auto n = nn::param_count(a);
        out.emplace_back(a, std::vector<double>(x.begin() + static_cast<std::ptrdiff_t>(offset),
                                                x.begin() + static_cast<std::ptrdiff_t>(offset + n)));
        offset += n;
    }
    return out;
}

std::vector<std::size_t> LossObjective::data_sizes() const {
    std::vector<std::size_t> sizes;
    for (auto v : variables_) {
        const auto* m = problem_.measurements(v);
        sizes.push_back(m ? m->size() : 0);
    }
    return sizes;
}

opt::Evaluation LossObjective::evaluate(std::span<const double> x, const opt::MiniBatch& batch) const {
    const auto params = split(x);
    ad::Tape tape;
    std::vector<nn::BoundNetwork> bound;
    bound.reserve(params.size());
    NetworkSet nets;
    for (std::size_t i = 0; i < params.size(); ++i) {
        bound.push_back(nn::bind(params[i], tape));
        switch (variables_[i]) {
            case Variable::K: nets.K = &bound.back(); break;
            case Variable::h: nets.h = &bound.back(); break;
            case Variable::C: nets.C = &bound.back(); break;
        }
    }

    opt::MiniBatch by_variable;
    const opt::MiniBatch* batch_ptr = nullptr;
    if (!batch.full()) {
        by_variable.groups.resize(3);
        for (std::size_t i = 0; i < variables_.size() && i < batch.groups.size(); ++i) {
            by_variable.groups[static_cast<std::size_t>(variables_[i])] = batch.groups[i];
        }
        batch_ptr = &by_variable;
    }

    const auto nodes = assemble_loss(problem_, nets, tape, batch_ptr);
    const auto grads = tape.backward(nodes.total);

    opt::Evaluation ev;
    ev.loss = tape.scalar_value(nodes.total);
    ev.terms.assign(kTermCount, 0.0);
    for (std::size_t t = 0; t < kTermCount; ++t) {
        if (nodes.terms[t].valid()) ev.terms[t] = tape.scalar_value(nodes.terms[t]);
    }
    ev.gradient.reserve(dimension_);
    for (const auto& b : bound) {
        const auto g = nn::gather_gradient(b, grads);
        ev.gradient.insert(ev.gradient.end(), g.begin(), g.end());
    }
    return ev;
}

opt::Objective LossObjective::objective() const {
    opt::Objective obj;
    obj.evaluate = [this](std::span<const double> x, const opt::MiniBatch& b) { return evaluate(x, b); };
    obj.data_group_sizes = data_sizes();
    return obj;
}

}  // namespace mpinn::physics
