#include "mpinn/optimize/training.hpp"

#include <algorithm>
#include <stdexcept>

#include "mpinn/util/random.hpp"

namespace mpinn::opt {

using physics::Method;
using physics::Variable;

std::string_view to_string(StrategyKind k) noexcept {
    switch (k) {
        case StrategyKind::data_only: return "data_only";
        case StrategyKind::pinn_darcy: return "pinn_darcy";
        case StrategyKind::mpinn_simultaneous: return "mpinn_simultaneous";
        case StrategyKind::mpinn_sequential: return "mpinn_sequential";
    }
    return "?";
}

StrategyKind parse_strategy(std::string_view text) {
    for (auto k : {StrategyKind::data_only, StrategyKind::pinn_darcy, StrategyKind::mpinn_simultaneous,
                   StrategyKind::mpinn_sequential}) {
        if (text == to_string(k)) return k;
    }
    throw std::invalid_argument("unknown training strategy '" + std::string(text) + "'");
}

std::string_view to_string(OptimizerKind k) noexcept {
    switch (k) {
        case OptimizerKind::lbfgs: return "lbfgs";
        case OptimizerKind::adam: return "adam";
        case OptimizerKind::hybrid: return "hybrid";
    }
    return "?";
}

OptimizerKind parse_optimizer(std::string_view text) {
    for (auto k : {OptimizerKind::lbfgs, OptimizerKind::adam, OptimizerKind::hybrid}) {
        if (text == to_string(k)) return k;
    }
    throw std::invalid_argument("unknown optimizer '" + std::string(text) + "'");
}

void TrainingStrategy::validate() const {
    if (!(hybrid_switch_loss > 0.0)) throw std::invalid_argument("hybrid switch loss must be positive");
    adam.validate();
    lbfgs.validate();
}

std::uint64_t network_seed(std::uint64_t seed, Variable v) {
    return util::Rng{seed, 0x6e6574ULL, static_cast<std::uint64_t>(v)}.bits();
}

namespace {

std::uint64_t batch_seed(std::uint64_t seed, Variable first) {
    return util::Rng{seed, 0x626174ULL, static_cast<std::uint64_t>(first)}.bits();
}

int severity(Termination t) {
    switch (t) {
        case Termination::converged: return 0;
        case Termination::max_iters: return 1;
        case Termination::line_search_failure: return 2;
    }
    return 0;
}

MinimizeResult minimize(const TrainingStrategy& st, const Objective& obj, std::vector<double> x0,
                        std::uint64_t seed) {
    switch (st.optimizer) {
        case OptimizerKind::lbfgs: return lbfgs_minimize(obj, std::move(x0), st.lbfgs);
        case OptimizerKind::adam: return adam_minimize(obj, std::move(x0), st.adam, seed);
        case OptimizerKind::hybrid: {
            auto first = adam_minimize(obj, std::move(x0), st.adam, seed, st.hybrid_switch_loss);
            MinimizeResult second;
            try {
                second = lbfgs_minimize(obj, first.x, st.lbfgs);
            } catch (const OptimizationError& e) {
                auto partial = first;
                partial.iterations += e.partial().iterations;
                throw OptimizationError(e.what(), partial);
            }
            MinimizeResult r;
            r.x = std::move(second.x);
            r.history = std::move(first.history);
            for (auto& h : second.history) {
                if (h.iteration == 0) continue;  // same point as Adam's last entry
                h.iteration += first.iterations;
                r.history.push_back(std::move(h));
            }
            r.iterations = first.iterations + second.iterations;
            r.evaluations = first.evaluations + second.evaluations;
            r.termination = second.termination;
            r.final_loss = second.final_loss;
            return r;
        }
    }
    throw std::logic_error("unknown optimizer");
}

class Trainer {
public:
    Trainer(const TrainingStrategy& st, const TrainingProblem& problem, std::uint64_t seed)
        : st_(st), problem_(problem), seed_(seed) {}

    nn::ParameterVector fresh(Variable v) const {
        return nn::init_xavier(problem_.architectures[static_cast<std::size_t>(v)], network_seed(seed_, v));
    }

    /// Trains `vars` jointly under `method`, starting from `init`.
    void stage(TrainReport& report, const std::string& name, Method method, const std::vector<Variable>& vars,
               std::vector<nn::ParameterVector> init) {
        physics::LossProblem lp = problem_.base;
        lp.method = method;
        report.final_loss = 0.0;
        if (!lp.coupled() && vars.size() > 1) {
            for (std::size_t i = 0; i < vars.size(); ++i) {
                physics::LossProblem single;
                single.method = Method::data_driven;
                single.physics = lp.physics;
                const auto idx = static_cast<std::size_t>(vars[i]);
                single.data[idx] = lp.data[idx];
                if (!single.data[idx]) {
                    throw std::invalid_argument("no measurements for " + std::string(physics::to_string(vars[i])));
                }
                run(report, std::string(physics::to_string(vars[i])), single, {vars[i]}, {std::move(init[i])});
            }
            return;
        }
        run(report, name, lp, vars, std::move(init));
    }

private:
    void run(TrainReport& report, const std::string& name, const physics::LossProblem& lp,
             const std::vector<Variable>& vars, std::vector<nn::ParameterVector> init) {
        std::vector<nn::MlpArchitecture> archs;
        for (auto v : vars) archs.push_back(problem_.architectures[static_cast<std::size_t>(v)]);
        const physics::LossObjective objective(lp, vars, archs);
        auto result = minimize(st_, objective.objective(), objective.concat(init), batch_seed(seed_, vars.front()));

        const auto params = objective.split(result.x);
        for (std::size_t i = 0; i < vars.size(); ++i) report.params[static_cast<std::size_t>(vars[i])] = params[i];
        const std::size_t offset = report.iterations;
        for (const auto& h : result.history) {
            auto e = h;
            e.iteration += offset;
            e.phase = name + ":" + h.phase;
            report.history.push_back(std::move(e));
        }
        report.iterations = offset + result.iterations;
        report.evaluations += result.evaluations;
        if (severity(result.termination) > severity(report.termination)) report.termination = result.termination;
        report.final_loss += result.final_loss;
        report.stages.push_back({name, vars, std::move(result)});
    }

    const TrainingStrategy& st_;
    const TrainingProblem& problem_;
    std::uint64_t seed_;
};

}  // namespace

physics::Method method_for(StrategyKind k) {
    switch (k) {
        case StrategyKind::data_only: return Method::data_driven;
        case StrategyKind::pinn_darcy: return Method::pinn_darcy;
        case StrategyKind::mpinn_simultaneous:
        case StrategyKind::mpinn_sequential: return Method::mpinn;
    }
    throw std::logic_error("unknown strategy");
}

TrainReport train(const TrainingStrategy& strategy, const TrainingProblem& problem, std::uint64_t seed) {
    strategy.validate();
    for (const auto& a : problem.architectures) a.validate();
    Trainer trainer(strategy, problem, seed);
    TrainReport report;

    auto fresh_all = [&](const std::vector<Variable>& vars) {
        std::vector<nn::ParameterVector> init;
        for (auto v : vars) init.push_back(trainer.fresh(v));
        return init;
    };

    switch (strategy.kind) {
        case StrategyKind::data_only: {
            physics::LossProblem lp = problem.base;
            lp.method = Method::data_driven;
            const auto vars = lp.trained_variables();
            if (vars.empty()) throw std::invalid_argument("data_only training needs at least one measurement set");
            trainer.stage(report, "data", Method::data_driven, vars, fresh_all(vars));
            break;
        }
        case StrategyKind::pinn_darcy: {
            const std::vector<Variable> vars{Variable::K, Variable::h};
            trainer.stage(report, "pinn_darcy", Method::pinn_darcy, vars, fresh_all(vars));
            break;
        }
        case StrategyKind::mpinn_simultaneous: {
            const std::vector<Variable> vars{Variable::K, Variable::h, Variable::C};
            trainer.stage(report, "mpinn", Method::mpinn, vars, fresh_all(vars));
            break;
        }
        case StrategyKind::mpinn_sequential: {
            physics::LossProblem lp = problem.base;
            lp.method = Method::mpinn;
            if (!lp.coupled()) {
                // Without physics terms the pre-training stage would only
                // repeat the per-network fits, so train once.
                const std::vector<Variable> vars{Variable::K, Variable::h, Variable::C};
                trainer.stage(report, "mpinn", Method::mpinn, vars, fresh_all(vars));
                break;
            }
            const std::vector<Variable> flow{Variable::K, Variable::h};
            trainer.stage(report, "pinn_darcy", Method::pinn_darcy, flow, fresh_all(flow));
            std::vector<nn::ParameterVector> init{*report.params[0], *report.params[1], trainer.fresh(Variable::C)};
            trainer.stage(report, "mpinn", Method::mpinn, {Variable::K, Variable::h, Variable::C}, std::move(init));
            break;
        }
    }

    return report;
}

}  // namespace mpinn::opt
