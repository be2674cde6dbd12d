#include "mpinn/optimize/minimizers.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include "mpinn/autodiff/tensor.hpp"
#include "mpinn/util/random.hpp"

namespace mpinn::opt {

std::string_view to_string(Termination t) noexcept {
    switch (t) {
        case Termination::converged: return "converged";
        case Termination::max_iters: return "max_iters";
        case Termination::line_search_failure: return "line_search_failure";
    }
    return "?";
}

void AdamConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("adam learning rate must be positive");
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
        throw std::invalid_argument("adam betas must lie in (0, 1)");
    }
    if (!(eps > 0.0)) throw std::invalid_argument("adam eps must be positive");
    if (batch_size == 0) throw std::invalid_argument("adam batch size must be positive");
    if (history_every == 0) throw std::invalid_argument("history_every must be positive");
}

void LbfgsConfig::validate() const {
    if (memory == 0) throw std::invalid_argument("lbfgs memory must be at least 1");
    if (!(wolfe_c1 > 0.0 && wolfe_c1 < wolfe_c2 && wolfe_c2 < 1.0)) {
        throw std::invalid_argument("wolfe constants must satisfy 0 < c1 < c2 < 1");
    }
    if (!(gradient_tolerance >= 0.0) || !(step_tolerance >= 0.0)) {
        throw std::invalid_argument("lbfgs tolerances must be non-negative");
    }
    if (max_line_search_evals == 0) throw std::invalid_argument("line search needs at least one evaluation");
    if (history_every == 0) throw std::invalid_argument("history_every must be positive");
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double max_abs(std::span<const double> a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

bool all_finite(std::span<const double> a) {
    return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

class BatchSampler {
public:
    BatchSampler(const std::vector<std::size_t>& sizes, std::size_t batch, std::uint64_t seed)
        : rng_(seed), batch_(batch) {
        for (auto n : sizes) {
            Group g;
            g.active = n > batch;
            if (g.active) {
                g.order.resize(n);
                std::iota(g.order.begin(), g.order.end(), std::size_t{0});
                g.cursor = n;  // forces a shuffle on first use
            }
            groups_.push_back(std::move(g));
        }
    }

    bool active() const {
        return std::any_of(groups_.begin(), groups_.end(), [](const Group& g) { return g.active; });
    }

    MiniBatch next() {
        MiniBatch mb;
        mb.groups.resize(groups_.size());
        for (std::size_t k = 0; k < groups_.size(); ++k) {
            auto& g = groups_[k];
            if (!g.active) continue;
            if (g.cursor + batch_ > g.order.size()) {
                for (std::size_t i = g.order.size() - 1; i > 0; --i) {
                    std::swap(g.order[i], g.order[rng_.below(i + 1)]);
                }
                g.cursor = 0;
            }
            mb.groups[k] = std::vector<std::size_t>(g.order.begin() + static_cast<std::ptrdiff_t>(g.cursor),
                                                    g.order.begin() + static_cast<std::ptrdiff_t>(g.cursor + batch_));
            g.cursor += batch_;
        }
        return mb;
    }

private:
    struct Group {
        bool active = false;
        std::vector<std::size_t> order;
        std::size_t cursor = 0;
    };
    util::Rng rng_;
    std::size_t batch_;
    std::vector<Group> groups_;
};

Evaluation checked_eval(const Objective& obj, std::span<const double> x, const MiniBatch& mb,
                        const MinimizeResult& progress, const char* who) {
    Evaluation ev;
    try {
        ev = obj.evaluate(x, mb);
    } catch (const ad::NonFiniteError& e) {
        throw OptimizationError(std::string(who) + ": " + e.what(), progress);
    }
    if (!std::isfinite(ev.loss) || !all_finite(ev.gradient)) {
        throw OptimizationError(std::string(who) + ": non-finite loss or gradient", progress);
    }
    if (ev.gradient.size() != x.size()) throw std::logic_error("objective gradient has wrong dimension");
    return ev;
}

void record(MinimizeResult& r, std::size_t iteration, const Evaluation& ev, std::string_view phase) {
    r.history.push_back({iteration, ev.loss, ev.terms, std::string(phase)});
}

}  // namespace

MinimizeResult adam_minimize(const Objective& objective, std::vector<double> x0, const AdamConfig& cfg,
                             std::uint64_t seed, double stop_below) {
    cfg.validate();
    MinimizeResult r;
    r.x = std::move(x0);
    const std::size_t n = r.x.size();
    std::vector<double> m(n, 0.0);
    std::vector<double> v(n, 0.0);
    BatchSampler sampler(objective.data_group_sizes, cfg.batch_size, seed);
    const bool batched = sampler.active();
    double b1t = 1.0;
    double b2t = 1.0;
    r.termination = Termination::max_iters;

    Evaluation ev;
    for (std::size_t it = 0; it < cfg.max_iters; ++it) {
        const MiniBatch mb = batched ? sampler.next() : MiniBatch{};
        ev = checked_eval(objective, r.x, mb, r, "adam");
        ++r.evaluations;
        if (it % cfg.history_every == 0) record(r, it, ev, "adam");
        if (stop_below > 0.0 && ev.loss < stop_below) {
            if (it % cfg.history_every != 0) record(r, it, ev, "adam");
            r.termination = Termination::converged;
            break;
        }
        b1t *= cfg.beta1;
        b2t *= cfg.beta2;
        for (std::size_t i = 0; i < n; ++i) {
            const double g = ev.gradient[i];
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
            const double mhat = m[i] / (1.0 - b1t);
            const double vhat = v[i] / (1.0 - b2t);
            r.x[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.eps);
        }
        ++r.iterations;
    }

    if (r.history.empty() || r.history.back().iteration != r.iterations || batched) {
        ev = checked_eval(objective, r.x, MiniBatch{}, r, "adam");
        ++r.evaluations;
        if (!r.history.empty() && r.history.back().iteration == r.iterations) r.history.pop_back();
        record(r, r.iterations, ev, "adam");
    }
    r.final_loss = r.history.back().loss;
    return r;
}

namespace {

struct Trial {
    double alpha = 0.0;
    double f = 0.0;
    double dphi = 0.0;
    bool finite = true;
    Evaluation ev;
};

struct LineSearchOutcome {
    bool ok = false;
    Trial accepted;
    Trial best;  // lowest finite f among evaluated trials
};

// Minimizer of the cubic interpolating (a, fa, da) and (b, fb, db),
// safeguarded to the interior of the bracket.
double cubic_step(const Trial& lo, const Trial& hi) {
    const double a = lo.alpha;
    const double b = hi.alpha;
    const double width = std::abs(b - a);
    const double lo_edge = std::min(a, b) + 0.1 * width;
    const double hi_edge = std::max(a, b) - 0.1 * width;
    double c = 0.5 * (a + b);
    if (hi.finite) {
        const double d1 = lo.dphi + hi.dphi - 3.0 * (lo.f - hi.f) / (a - b);
        const double disc = d1 * d1 - lo.dphi * hi.dphi;
        if (disc >= 0.0) {
            const double d2 = std::copysign(std::sqrt(disc), b - a);
            const double denom = hi.dphi - lo.dphi + 2.0 * d2;
            if (denom != 0.0) {
                const double cand = b - (b - a) * (hi.dphi + d2 - d1) / denom;
                if (std::isfinite(cand)) c = cand;
            }
        }
    }
    return std::clamp(c, lo_edge, hi_edge);
}

class LineSearch {
public:
    LineSearch(const Objective& obj, const LbfgsConfig& cfg, std::span<const double> x, std::span<const double> d,
               double f0, double dphi0, std::size_t& evaluations)
        : obj_(obj), cfg_(cfg), x_(x), d_(d), f0_(f0), dphi0_(dphi0), evals_(evaluations) {}

    LineSearchOutcome run(double alpha0) {
        LineSearchOutcome out;
        Trial prev;
        prev.alpha = 0.0;
        prev.f = f0_;
        prev.dphi = dphi0_;
        double alpha = alpha0;
        for (std::size_t i = 0; used_ < cfg_.max_line_search_evals; ++i) {
            Trial t = probe(alpha, out);
            if (!t.finite || t.f > f0_ + cfg_.wolfe_c1 * alpha * dphi0_ || (i > 0 && t.f >= prev.f)) {
                return zoom(prev, t, out);
            }
            if (std::abs(t.dphi) <= -cfg_.wolfe_c2 * dphi0_) return accept(t, out);
            if (t.dphi >= 0.0) return zoom(t, prev, out);
            prev = std::move(t);
            alpha *= 2.0;
        }
        return out;
    }

private:
    Trial probe(double alpha, LineSearchOutcome& out) {
        Trial t;
        t.alpha = alpha;
        std::vector<double> xt(x_.size());
        for (std::size_t k = 0; k < xt.size(); ++k) xt[k] = x_[k] + alpha * d_[k];
        ++used_;
        ++evals_;
        try {
            t.ev = obj_.evaluate(xt, MiniBatch{});
            t.finite = std::isfinite(t.ev.loss) && all_finite(t.ev.gradient);
        } catch (const ad::NonFiniteError&) {
            t.finite = false;
        }
        if (!t.finite) {
            t.f = std::numeric_limits<double>::infinity();
            return t;
        }
        t.f = t.ev.loss;
        t.dphi = dot(t.ev.gradient, d_);
        if (!out.best.finite || out.best.alpha == 0.0 || t.f < out.best.f) {
            out.best = t;
        }
        return t;
    }

    LineSearchOutcome& accept(Trial& t, LineSearchOutcome& out) {
        // Strong Wolfe conditions hold for every accepted step.
        if (!(t.f <= f0_ + cfg_.wolfe_c1 * t.alpha * dphi0_) || !(std::abs(t.dphi) <= -cfg_.wolfe_c2 * dphi0_)) {
            throw std::logic_error("line search accepted a step violating the Wolfe conditions");
        }
        out.ok = true;
        out.accepted = std::move(t);
        return out;
    }

    LineSearchOutcome zoom(Trial lo, Trial hi, LineSearchOutcome& out) {
        while (used_ < cfg_.max_line_search_evals) {
            const double alpha = cubic_step(lo, hi);
            if (!(std::abs(hi.alpha - lo.alpha) > 0.0) || alpha == lo.alpha) break;
            Trial t = probe(alpha, out);
            if (!t.finite || t.f > f0_ + cfg_.wolfe_c1 * alpha * dphi0_ || t.f >= lo.f) {
                hi = std::move(t);
                continue;
            }
            if (std::abs(t.dphi) <= -cfg_.wolfe_c2 * dphi0_) {
                accept(t, out);
                return out;
            }
            if (t.dphi * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
            lo = std::move(t);
        }
        return out;
    }

    const Objective& obj_;
    const LbfgsConfig& cfg_;
    std::span<const double> x_;
    std::span<const double> d_;
    double f0_;
    double dphi0_;
    std::size_t& evals_;
    std::size_t used_ = 0;
};

}  // namespace

MinimizeResult lbfgs_minimize(const Objective& objective, std::vector<double> x0, const LbfgsConfig& cfg) {
    cfg.validate();
    MinimizeResult r;
    r.x = std::move(x0);
    const std::size_t n = r.x.size();

    Evaluation ev = checked_eval(objective, r.x, MiniBatch{}, r, "lbfgs");
    ++r.evaluations;
    record(r, 0, ev, "lbfgs");
    r.final_loss = ev.loss;
    if (max_abs(ev.gradient) <= cfg.gradient_tolerance) {
        r.termination = Termination::converged;
        return r;
    }

    std::deque<std::vector<double>> s_hist;
    std::deque<std::vector<double>> y_hist;
    std::deque<double> rho_hist;
    std::vector<double> d(n);
    std::vector<double> alpha_buf;
    r.termination = Termination::max_iters;
    bool retried = false;

    while (r.iterations < cfg.max_iters) {
        // Two-loop recursion: d = -H g.
        std::copy(ev.gradient.begin(), ev.gradient.end(), d.begin());
        const std::size_t m = s_hist.size();
        alpha_buf.assign(m, 0.0);
        for (std::size_t j = m; j-- > 0;) {
            alpha_buf[j] = rho_hist[j] * dot(s_hist[j], d);
            for (std::size_t i = 0; i < n; ++i) d[i] -= alpha_buf[j] * y_hist[j][i];
        }
        if (m > 0) {
            const double gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
            for (auto& v : d) v *= gamma;
        }
        for (std::size_t j = 0; j < m; ++j) {
            const double beta = rho_hist[j] * dot(y_hist[j], d);
            for (std::size_t i = 0; i < n; ++i) d[i] += s_hist[j][i] * (alpha_buf[j] - beta);
        }
        for (auto& v : d) v = -v;

        double dphi0 = dot(ev.gradient, d);
        if (!(dphi0 < 0.0)) {
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            for (std::size_t i = 0; i < n; ++i) d[i] = -ev.gradient[i];
            dphi0 = dot(ev.gradient, d);
        }

        const double alpha0 = m == 0 ? std::min(1.0, 1.0 / max_abs(d)) : 1.0;
        LineSearch ls(objective, cfg, r.x, d, ev.loss, dphi0, r.evaluations);
        auto outcome = ls.run(alpha0);
        if (!outcome.ok) {
            if (!s_hist.empty() && !retried) {
                // Retry once along steepest descent with fresh memory.
                s_hist.clear();
                y_hist.clear();
                rho_hist.clear();
                retried = true;
                continue;
            }
            if (outcome.best.finite && outcome.best.alpha > 0.0 && outcome.best.f < ev.loss) {
                for (std::size_t i = 0; i < n; ++i) r.x[i] += outcome.best.alpha * d[i];
                ev = std::move(outcome.best.ev);
                ++r.iterations;
                record(r, r.iterations, ev, "lbfgs");
            }
            r.termination = Termination::line_search_failure;
            break;
        }
        retried = false;

        const double f_old = ev.loss;
        const Trial& t = outcome.accepted;
        std::vector<double> s(n);
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = t.alpha * d[i];
            y[i] = t.ev.gradient[i] - ev.gradient[i];
            r.x[i] += s[i];
        }
        ev = std::move(outcome.accepted.ev);
        ++r.iterations;
        if (r.iterations % cfg.history_every == 0) record(r, r.iterations, ev, "lbfgs");

        const double sy = dot(s, y);
        if (sy > std::numeric_limits<double>::epsilon() * dot(y, y)) {
            if (s_hist.size() == cfg.memory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
        }

        if (max_abs(ev.gradient) <= cfg.gradient_tolerance) {
            r.termination = Termination::converged;
            break;
        }
        const double scale = std::max({std::abs(f_old), std::abs(ev.loss), 1.0});
        if ((f_old - ev.loss) / scale <= cfg.step_tolerance) {
            r.termination = Termination::converged;
            break;
        }
    }

    if (r.history.back().iteration != r.iterations) record(r, r.iterations, ev, "lbfgs");
    r.final_loss = ev.loss;
    return r;
}

}  // namespace mpinn::opt
