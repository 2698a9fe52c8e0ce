#include "ccd/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

#include "ccd/errors.hpp"

namespace ccd {

const char* to_string(Method m) noexcept {
    switch (m) {
        case Method::CBO: return "CBO";
        case Method::DCBO: return "DCBO";
        case Method::BO: break;
    }
    return "BO";
}

Method parse_method(std::string_view name) {
    if (name == "BO") return Method::BO;
    if (name == "CBO") return Method::CBO;
    if (name == "DCBO") return Method::DCBO;
    throw ValidationError("methods", fmt::format("unknown method '{}' (expected BO, CBO or DCBO)", name));
}

const char* to_string(SetKind s) noexcept {
    switch (s) {
        case SetKind::PI: return "PI";
        case SetKind::I: return "I";
        case SetKind::P: break;
    }
    return "P";
}

SetKind parse_set(std::string_view name) {
    if (name == "P") return SetKind::P;
    if (name == "PI") return SetKind::PI;
    if (name == "I") return SetKind::I;
    throw ParseError(fmt::format("unknown intervention set '{}'", name));
}

std::size_t set_dims(SetKind s) noexcept { return s == SetKind::PI ? 2 : 1; }

bool set_has(SetKind s, Var v) noexcept {
    if (v == Var::P) return s != SetKind::I;
    if (v == Var::I) return s != SetKind::P;
    return false;
}

InterventionSet::InterventionSet(SetKind kind, std::vector<double> values) : kind_(kind), values_(std::move(values)) {
    if (values_.size() != set_dims(kind_))
        throw ValidationError("intervention", fmt::format("set {} needs {} value(s)", to_string(kind_), set_dims(kind_)));
    for (auto v : values_)
        if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("intervention", "values must lie in [0, 1]");
}

Eigen::VectorXd InterventionSet::point() const {
    return Eigen::Map<const Eigen::VectorXd>(values_.data(), static_cast<Eigen::Index>(values_.size()));
}

std::optional<double> InterventionSet::value_of(Var v) const {
    if (!set_has(kind_, v)) return std::nullopt;
    if (v == Var::I && kind_ == SetKind::PI) return values_[1];
    return values_[0];
}

BluePolicy InterventionSet::apply(const BluePolicy& baseline) const {
    return {value_of(Var::P).value_or(baseline.p_res), value_of(Var::I).value_or(baseline.p_iso)};
}

double intervention_unit_cost(const InterventionSet& set) {
    return static_cast<double>(set.values().size());
}

void InterventionHistory::append(HistoryEntry entry) {
    if (!entries_.empty() && entry.t <= entries_.back().t)
        throw std::invalid_argument("InterventionHistory: time slices must strictly increase");
    entries_.push_back(std::move(entry));
}

const HistoryEntry* InterventionHistory::at(std::size_t t) const {
    for (const auto& e : entries_)
        if (e.t == t) return &e;
    return nullptr;
}

// ---------------------------------------------------------------------------
// Estimated SEM

SemFunction::SemFunction(std::string name, const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                         const HyperGrid& grid)
    : name_(std::move(name)) {
    if (inputs.rows() < 1) throw FitError(name_ + ": no training pairs");
    lo_ = inputs.colwise().minCoeff().transpose();
    span_ = (inputs.colwise().maxCoeff().transpose() - lo_).unaryExpr([](double s) { return s > 0.0 ? s : 1.0; });
    y_mean_ = targets.mean();
    const double sd = std::sqrt((targets.array() - y_mean_).square().mean());
    y_scale_ = sd > 0.0 ? sd : 1.0;

    Eigen::MatrixXd x = (inputs.rowwise() - lo_.transpose()).array().rowwise() / span_.transpose().array();
    Eigen::VectorXd y = (targets.array() - y_mean_) / y_scale_;
    try {
        model_ = std::make_shared<const GpModel>(GpModel::fit(std::move(x), std::move(y), zero_mean, grid));
    } catch (const FitError& e) {
        throw FitError(name_ + ": " + e.what());
    }
}

Posterior SemFunction::predict(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd z = (x - lo_).cwiseQuotient(span_);
    auto p = model_->posterior(z);
    return {y_mean_ + y_scale_ * p.mean, y_scale_ * y_scale_ * p.variance};
}

double SemFunction::mean(const Eigen::VectorXd& x) const {
    return y_mean_ + y_scale_ * model_->posterior_mean((x - lo_).cwiseQuotient(span_));
}

double SemFunction::noise_variance() const noexcept {
    return y_scale_ * y_scale_ * model_->params().noise;
}

EstimatedSem fit_sem_estimators(const ObservationalDataset& data, const HyperGrid& grid) {
    if (data.n_envs == 0 || data.horizon == 0) throw ValidationError("dataset", "empty");
    using Pairs = std::pair<std::vector<std::vector<double>>, std::vector<double>>;
    Pairs s, c, h, a, tt;
    auto at = [&data](Var v, std::size_t e, std::size_t t) {
        return data[v](static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(t));
    };
    for (std::size_t e = 0; e < data.n_envs; ++e)
        for (std::size_t t = 0; t < data.horizon; ++t) {
            if (data.padded(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(t))) continue;
            if (t > 0) {
                s.first.push_back({at(Var::C, e, t - 1), at(Var::I, e, t)});
                s.second.push_back(at(Var::S, e, t));
                c.first.push_back({at(Var::H, e, t - 1)});
                c.second.push_back(at(Var::C, e, t));
            }
            h.first.push_back({at(Var::P, e, t), at(Var::C, e, t)});
            h.second.push_back(at(Var::H, e, t));
            a.first.push_back({at(Var::P, e, t), at(Var::I, e, t)});
            a.second.push_back(at(Var::A, e, t));
            tt.first.push_back({at(Var::C, e, t), at(Var::A, e, t)});
            tt.second.push_back(at(Var::T, e, t));
        }
    auto fit = [&grid](const char* name, const Pairs& pairs) {
        const auto n = static_cast<Eigen::Index>(pairs.second.size());
        if (n == 0) throw FitError(fmt::format("{}: no training pairs", name));
        const auto d = static_cast<Eigen::Index>(pairs.first.front().size());
        Eigen::MatrixXd x(n, d);
        Eigen::VectorXd y(n);
        for (Eigen::Index r = 0; r < n; ++r) {
            for (Eigen::Index j = 0; j < d; ++j) x(r, j) = pairs.first[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)];
            y[r] = pairs.second[static_cast<std::size_t>(r)];
        }
        return std::make_shared<const SemFunction>(name, x, y, grid);
    };
    EstimatedSem sem;
    sem.f_s = fit("f_S", s);
    sem.f_c = fit("f_C", c);
    sem.f_h = fit("f_H", h);
    sem.f_a = fit("f_A", a);
    sem.f_t = fit("f_T", tt);
    sem.horizon = data.horizon;
    for (std::size_t t = 0; t < data.horizon; ++t) {
        sem.mean_h.push_back(data.slice_mean(Var::H, t));
        sem.mean_c.push_back(data.slice_mean(Var::C, t));
    }
    sem.mean_p = data.mean(Var::P);
    sem.mean_i = data.mean(Var::I);
    return sem;
}

namespace {

double draw(const SemFunction& f, const Eigen::VectorXd& x, Rng& rng) {
    const auto p = f.predict(x);
    return p.mean + std::sqrt(p.variance + f.noise_variance()) * normal(rng, 0.0, 1.0);
}

}  // namespace

double interventional_mean(const EstimatedSem& sem, const InterventionSet& set, const InterventionHistory& history,
                           std::size_t t, std::size_t n_mc, Rng& rng) {
    if (n_mc < 1) throw ValidationError("n_mc", "must be positive");
    if (!sem.f_c || !sem.f_a || !sem.f_t) throw ValidationError("sem", "not fitted");
    const auto last = sem.horizon - 1;

    // Transition input H_{t-1}. Only the ancestors of T_t are rolled: C_t, A_t.
    std::optional<double> h_prev;
    if (t > 0) {
        if (const auto* e = history.at(t - 1)) h_prev = e->achieved.h;
        else h_prev = sem.mean_h[std::min(t - 1, last)];
    }
    const double p = set.value_of(Var::P).value_or(sem.mean_p);
    const double i = set.value_of(Var::I).value_or(sem.mean_i);

    Eigen::VectorXd pi(2);
    pi << p, i;
    double sum = 0.0;
    for (std::size_t k = 0; k < n_mc; ++k) {
        double c = sem.mean_c[std::min(t, last)];
        if (h_prev) c = draw(*sem.f_c, Eigen::VectorXd::Constant(1, *h_prev), rng);
        const double a = draw(*sem.f_a, pi, rng);
        Eigen::VectorXd ca(2);
        ca << c, a;
        sum += draw(*sem.f_t, ca, rng);
    }
    return sum / static_cast<double>(n_mc);
}

double expected_improvement(double mean, double variance, double best) {
    if (variance < 0.0) throw std::invalid_argument("expected_improvement: negative variance");
    const double gap = best - mean;
    const double sigma = std::sqrt(variance);
    if (sigma <= 0.0) return std::max(gap, 0.0);
    const double z = gap / sigma;
    const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    return std::max(0.0, gap * cdf + sigma * pdf);
}

SemSample evaluate_intervention(const ScenarioConfig& config, std::shared_ptr<const NetworkGraph> graph,
                                const InterventionSet& set, std::size_t t, const InterventionHistory& history,
                                std::size_t n_rollouts, std::uint64_t seed) {
    if (t >= config.horizon) throw ValidationError("t", fmt::format("slice {} is outside the horizon", t));
    if (n_rollouts < 1) throw ValidationError("n_rollouts", "must be positive");
    const auto rules = EngineRules::from(config);
    const auto costs = Costs::from(config);
    const BluePolicy baseline{config.policy_mean, config.policy_mean};
    const PolicySchedule schedule = [&](std::size_t s) {
        if (s == t) return set.apply(baseline);
        if (const auto* e = history.at(s)) return e->set.apply(baseline);
        return baseline;
    };

    SemSample mean;
    mean.t = t;
    for (std::size_t r = 0; r < n_rollouts; ++r) {
        Rng rng(derive_seed(seed, {stream::kRollout, r}));
        const auto records = run_episode(rules, graph, schedule, t + 1, rng);
        const auto s = episode_slices(records, costs, t + 1).samples[t];
        mean.p += s.p;
        mean.i += s.i;
        mean.s += s.s;
        mean.c += s.c;
        mean.h += s.h;
        mean.a += s.a;
        mean.total += s.total;
    }
    const double n = static_cast<double>(n_rollouts);
    for (double* f : {&mean.p, &mean.i, &mean.s, &mean.c, &mean.h, &mean.a, &mean.total}) *f /= n;
    return mean;
}

// ---------------------------------------------------------------------------
// Optimisers

PriorMean make_causal_prior(std::shared_ptr<const EstimatedSem> sem, SetKind kind, InterventionHistory history,
                            std::size_t t, std::size_t n_mc, std::uint64_t prior_seed) {
    struct State {
        std::shared_ptr<const EstimatedSem> sem;
        SetKind kind;
        InterventionHistory history;
        std::size_t t;
        std::size_t n_mc;
        std::uint64_t seed;
        std::map<std::vector<double>, double> cache;
    };
    auto state = std::make_shared<State>(State{std::move(sem), kind, std::move(history), t, n_mc, prior_seed, {}});
    return [state](const Eigen::VectorXd& x) {
        std::vector<double> key(x.data(), x.data() + x.size());
        for (auto& v : key) v = std::clamp(v, 0.0, 1.0);
        if (auto it = state->cache.find(key); it != state->cache.end()) return it->second;
        Rng rng(state->seed);
        const double m = interventional_mean(*state->sem, InterventionSet(state->kind, key), state->history,
                                             state->t, state->n_mc, rng);
        state->cache.emplace(std::move(key), m);
        return m;
    };
}

namespace {

struct Arm {
    SetKind kind;
    PriorMean prior;
    Eigen::VectorXd probe;
    std::vector<Eigen::VectorXd> pool;
    std::vector<Eigen::VectorXd> xs;
    std::vector<double> ys;
};

Eigen::VectorXd uniform_point(std::size_t dims, Rng& rng) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(dims));
    for (Eigen::Index j = 0; j < x.size(); ++j) x[j] = uniform01(rng);
    return x;
}

Arm make_arm(SetKind kind, PriorMean prior, std::uint64_t run_seed, std::size_t n_candidates) {
    Arm arm{kind, std::move(prior), {}, {}, {}, {}};
    const auto d = set_dims(kind);
    Rng rng(derive_seed(run_seed, {static_cast<std::uint64_t>(kind)}));
    arm.probe = uniform_point(d, rng);
    for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
        Eigen::VectorXd corner(static_cast<Eigen::Index>(d));
        for (std::size_t j = 0; j < d; ++j) corner[static_cast<Eigen::Index>(j)] = static_cast<double>((mask >> j) & 1U);
        arm.pool.push_back(std::move(corner));
    }
    for (std::size_t k = 0; k < n_candidates; ++k) arm.pool.push_back(uniform_point(d, rng));
    return arm;
}

struct Choice {
    double ei;
    double mean;
    SetKind kind;
    Eigen::VectorXd x;
};

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

bool better(const Choice& a, const Choice& b) {
    if (a.ei != b.ei) return a.ei > b.ei;
    if (a.mean != b.mean) return a.mean < b.mean;
    if (a.kind != b.kind) return a.kind < b.kind;
    return lex_less(a.x, b.x);
}

InterventionSet to_set(SetKind kind, const Eigen::VectorXd& x) {
    std::vector<double> v(x.data(), x.data() + x.size());
    for (auto& e : v) e = std::clamp(e, 0.0, 1.0);
    return {kind, std::move(v)};
}

}  // namespace

ConvergenceTrace run_optimizer(Method method, const Objective& objective, std::shared_ptr<const EstimatedSem> sem,
                               const InterventionHistory& history, std::size_t t, const OptimizerOptions& options,
                               Rng& rng) {
    if (options.budget < 1) throw ValidationError("budget", "must be at least one trial");
    if (method != Method::BO && !sem) throw ValidationError("sem", "CBO and DCBO need an estimated SEM");
    {
        auto order = options.set_order;
        std::sort(order.begin(), order.end());
        if (order != std::vector<SetKind>(kAllSets.begin(), kAllSets.end()))
            throw ValidationError("set_order", "must be a permutation of every intervention set");
    }
    const std::uint64_t run_seed = rng();

    std::vector<Arm> arms;
    if (method == Method::BO) {
        arms.push_back(make_arm(SetKind::PI, zero_mean, run_seed, options.candidates_per_set));
    } else {
        const InterventionHistory prior_history = method == Method::DCBO ? history : InterventionHistory{};
        for (auto kind : options.set_order)
            arms.push_back(make_arm(kind, make_causal_prior(sem, kind, prior_history, t, options.n_mc, options.prior_seed),
                                    run_seed, options.candidates_per_set));
    }

    ConvergenceTrace trace;
    trace.method = method;
    trace.t = t;
    double cumulative = 0.0;
    double best = std::numeric_limits<double>::infinity();

    for (std::size_t k = 0; k < options.budget; ++k) {
        std::optional<Choice> choice;
        // Unprobed sets go first, in canonical order.
        for (const auto& arm : arms)
            if (arm.xs.empty() && (!choice || arm.kind < choice->kind)) choice = Choice{0.0, 0.0, arm.kind, arm.probe};
        if (!choice) {
            for (const auto& arm : arms) {
                Eigen::MatrixXd x(static_cast<Eigen::Index>(arm.xs.size()), static_cast<Eigen::Index>(set_dims(arm.kind)));
                for (std::size_t r = 0; r < arm.xs.size(); ++r) x.row(static_cast<Eigen::Index>(r)) = arm.xs[r].transpose();
                const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(arm.ys.data(), static_cast<Eigen::Index>(arm.ys.size()));
                const auto surrogate = GpModel::fit(std::move(x), y, arm.prior, options.grid);
                for (const auto& cand : arm.pool) {
                    const auto post = surrogate.posterior(cand);
                    Choice c{expected_improvement(post.mean, post.variance, best), post.mean, arm.kind, cand};
                    if (!choice || better(c, *choice)) choice = std::move(c);
                }
            }
        }

        const auto set = to_set(choice->kind, choice->x);
        SemSample outcome;
        try {
            outcome = objective(set);
        } catch (const std::exception& e) {
            throw std::runtime_error(fmt::format("trial {}: objective failed: {}", k, e.what()));
        }
        const double y = outcome.total;
        for (auto& arm : arms)
            if (arm.kind == choice->kind) {
                arm.xs.push_back(set.point());
                arm.ys.push_back(y);
            }
        cumulative += intervention_unit_cost(set);
        if (y < best || !trace.best_set) {
            best = std::min(best, y);
            trace.best_set = set;
            trace.best_value = y;
            trace.best_slice = outcome;
        }
        trace.trials.push_back({k, set, y, cumulative, best});
    }
    return trace;
}

std::uint64_t prior_seed_for(std::uint64_t base, std::size_t t) {
    return derive_seed(base, {stream::kPrior, t});
}

SequenceResult run_sequence(Method method, const SequentialObjective& objective,
                            std::shared_ptr<const EstimatedSem> sem, const std::vector<std::size_t>& slices,
                            const InterventionHistory& applied, const OptimizerOptions& options,
                            std::uint64_t run_seed) {
    for (std::size_t k = 1; k < slices.size(); ++k)
        if (slices[k] <= slices[k - 1]) throw ValidationError("slices", "must be strictly increasing");
    SequenceResult out;
    for (auto t : slices) {
        auto opts = options;
        opts.prior_seed = prior_seed_for(options.prior_seed, t);
        Rng rng(derive_seed(run_seed, {stream::kOptimizer, t}));
        const Objective at_t = [&](const InterventionSet& set) { return objective(set, t, applied); };
        auto trace = run_optimizer(method, at_t, sem, out.history, t, opts, rng);
        out.history.append({t, *trace.best_set, trace.best_value, trace.best_slice});
        out.traces.push_back(std::move(trace));
    }
    return out;
}

}  // namespace ccd
