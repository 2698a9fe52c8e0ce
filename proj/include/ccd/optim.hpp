#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "ccd/gp.hpp"
#include "ccd/rng.hpp"
#include "ccd/scenario.hpp"
#include "ccd/scm.hpp"

namespace ccd {

enum class Method { BO, CBO, DCBO };

const char* to_string(Method m) noexcept;
Method parse_method(std::string_view name);  // throws ValidationError("methods", ...)

/// Which manipulative variables are clamped. Canonical order is {P}, {P,I}, {I}:
/// lexicographic over variable indices (P = 0, I = 1).
enum class SetKind : std::uint8_t { P = 0, PI = 1, I = 2 };

inline constexpr std::array<SetKind, 3> kAllSets{SetKind::P, SetKind::PI, SetKind::I};

const char* to_string(SetKind s) noexcept;  // "P", "PI", "I"
SetKind parse_set(std::string_view name);
std::size_t set_dims(SetKind s) noexcept;
bool set_has(SetKind s, Var v) noexcept;

/// A nonempty subset of {P, I} with a value in [0, 1] for each member.
class InterventionSet {
public:
    /// `values` follow variable order (P before I). Throws ValidationError.
    InterventionSet(SetKind kind, std::vector<double> values);
    static InterventionSet P(double p) { return {SetKind::P, {p}}; }
    static InterventionSet I(double i) { return {SetKind::I, {i}}; }
    static InterventionSet PI(double p, double i) { return {SetKind::PI, {p, i}}; }

    SetKind kind() const noexcept { return kind_; }
    const std::vector<double>& values() const noexcept { return values_; }
    Eigen::VectorXd point() const;
    std::optional<double> value_of(Var v) const;
    /// Fills non-intervened variables from `baseline`.
    BluePolicy apply(const BluePolicy& baseline) const;

    friend bool operator==(const InterventionSet&, const InterventionSet&) = default;

private:
    SetKind kind_;
    std::vector<double> values_;
};

/// One per intervened variable.
double intervention_unit_cost(const InterventionSet& set);

/// An optimised slice: what was applied and the slice it produced.
struct HistoryEntry {
    std::size_t t;
    InterventionSet set;
    double y_star;
    SemSample achieved;  // mean slice at the optimum (H and C feed the next slice)
};

/// Strictly increasing in t.
class InterventionHistory {
public:
    void append(HistoryEntry entry);
    const std::vector<HistoryEntry>& entries() const noexcept { return entries_; }
    const HistoryEntry* at(std::size_t t) const;
    bool empty() const noexcept { return entries_.empty(); }
    std::size_t size() const noexcept { return entries_.size(); }

private:
    std::vector<HistoryEntry> entries_;
};

/// A GP estimate of one structural function. Inputs are min-max scaled and
/// targets standardised internally; predictions are in data units.
class SemFunction {
public:
    SemFunction(std::string name, const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                const HyperGrid& grid = HyperGrid::defaults());

    const std::string& name() const noexcept { return name_; }
    std::size_t dims() const noexcept { return model_->dims(); }
    std::size_t size() const noexcept { return model_->size(); }
    const GpModel& model() const noexcept { return *model_; }

    /// Latent posterior in data units.
    Posterior predict(const Eigen::VectorXd& x) const;
    double mean(const Eigen::VectorXd& x) const;
    /// Observation noise in data units.
    double noise_variance() const noexcept;

private:
    std::string name_;
    Eigen::VectorXd lo_;
    Eigen::VectorXd span_;
    double y_mean_ = 0.0;
    double y_scale_ = 1.0;
    std::shared_ptr<const GpModel> model_;
};

/// GP estimates of S = f(C_{t-1}, I_t), C = f(H_{t-1}), H = f(P_t, C_t),
/// A = f(P_t, I_t), T = f(C_t, A_t), plus the dataset summaries the
/// forward roll needs.
struct EstimatedSem {
    std::shared_ptr<const SemFunction> f_s, f_c, f_h, f_a, f_t;
    std::vector<double> mean_h;  // per-slice observational means
    std::vector<double> mean_c;
    double mean_p = 0.5;
    double mean_i = 0.5;
    std::size_t horizon = 0;
};

/// Fits every function on (parents -> child) pairs pooled over envs and
/// slices, excluding padded rows. Fit errors name the function.
EstimatedSem fit_sem_estimators(const ObservationalDataset& data, const HyperGrid& grid = HyperGrid::defaults());

/// Monte-Carlo E[T_t | do(set)] by forward sampling the estimated SEM. H_{t-1}
/// comes from history at t-1 when present, else the observational mean.
/// Each function contributes its posterior mean plus a Gaussian draw with its
/// predictive variance.
double interventional_mean(const EstimatedSem& sem, const InterventionSet& set, const InterventionHistory& history,
                           std::size_t t, std::size_t n_mc, Rng& rng);

/// Minimisation EI: (best - mean) Phi(z) + sigma phi(z), z = (best - mean) / sigma.
double expected_improvement(double mean, double variance, double best);

/// Mean structural slice t over `n_rollouts` simulator runs. Rollout r uses
/// stream derive_seed(seed, {kRollout, r}) whatever the intervention, so
/// calls sharing a seed see common random numbers. Slices with a history
/// entry apply its values, slice t applies `set`, all others run the
/// observational policy mean.
SemSample evaluate_intervention(const ScenarioConfig& config, std::shared_ptr<const NetworkGraph> graph,
                                const InterventionSet& set, std::size_t t, const InterventionHistory& history,
                                std::size_t n_rollouts, std::uint64_t seed);

struct Trial {
    std::size_t index = 0;
    InterventionSet set = InterventionSet::P(0.0);
    double observed_y = 0.0;
    double cumulative_cost = 0.0;
    double best_so_far = 0.0;
};

struct ConvergenceTrace {
    Method method = Method::BO;
    std::size_t t = 0;
    std::vector<Trial> trials;
    std::optional<InterventionSet> best_set;
    double best_value = 0.0;
    SemSample best_slice{};
};

/// Black-box objective: the mean slice produced by an intervention.
using Objective = std::function<SemSample(const InterventionSet&)>;

struct OptimizerOptions {
    std::size_t budget = 50;
    std::size_t candidates_per_set = 200;
    std::size_t n_mc = 50;
    /// Seed shared by every causal-prior evaluation, so the prior is a smooth
    /// deterministic function of the intervention values.
    std::uint64_t prior_seed = 0;
    HyperGrid grid = HyperGrid::defaults();
    /// Order sets are visited in; the result does not depend on it.
    std::vector<SetKind> set_order{kAllSets.begin(), kAllSets.end()};
};

/// Causal prior mean for one set: x -> interventional_mean(sem, set(x), history, t)
/// with a fresh Rng(prior_seed) per evaluation. Memoised.
PriorMean make_causal_prior(std::shared_ptr<const EstimatedSem> sem, SetKind kind, InterventionHistory history,
                            std::size_t t, std::size_t n_mc, std::uint64_t prior_seed);

/// BO searches {P,I} with a zero-mean surrogate. CBO and DCBO search every
/// subset with a causal prior mean; DCBO conditions it on `history`, CBO on
/// nothing. The first trial of each set is a uniform probe; later trials take
/// the EI maximiser over each set's candidate pool (the box corners plus
/// candidates_per_set uniform draws), ties broken by lower surrogate mean,
/// then set order, then smaller values.
ConvergenceTrace run_optimizer(Method method, const Objective& objective, std::shared_ptr<const EstimatedSem> sem,
                               const InterventionHistory& history, std::size_t t, const OptimizerOptions& options,
                               Rng& rng);

/// Objective at slice t given the interventions already applied.
using SequentialObjective = std::function<SemSample(const InterventionSet&, std::size_t t, const InterventionHistory&)>;

struct SequenceResult {
    std::vector<ConvergenceTrace> traces;
    InterventionHistory history;
};

/// Optimises `slices` in order. The objective at slice t sees `applied`,
/// the interventions the system actually ran at earlier slices (the same for
/// every method). Each slice's optimum is appended to the returned history;
/// only DCBO feeds that history into its causal prior. Slice seeds are
/// derive_seed(run_seed, {kOptimizer, t}); prior seeds prior_seed_for(options.prior_seed, t).
SequenceResult run_sequence(Method method, const SequentialObjective& objective,
                            std::shared_ptr<const EstimatedSem> sem, const std::vector<std::size_t>& slices,
                            const InterventionHistory& applied, const OptimizerOptions& options,
                            std::uint64_t run_seed);

/// Per-slice prior seed used by run_sequence: derive_seed(base, {kPrior, t}).
std::uint64_t prior_seed_for(std::uint64_t base, std::size_t t);

}  // namespace ccd
