#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "ccd/engine.hpp"
#include "ccd/scenario.hpp"

namespace ccd {

/// Per-slice variables of the causal model, in diagram order.
enum class Var : std::uint8_t { P, I, S, C, H, A, T };

inline constexpr std::array<Var, 7> kAllVars{Var::P, Var::I, Var::S, Var::C, Var::H, Var::A, Var::T};
inline constexpr std::size_t kVarsPerSlice = kAllVars.size();

const char* to_string(Var v) noexcept;

/// A variable at a time slice.
struct SliceVar {
    Var var;
    std::size_t t;
    friend bool operator==(const SliceVar&, const SliceVar&) = default;
    friend auto operator<=>(const SliceVar&, const SliceVar&) = default;
};

std::string to_string(const SliceVar& v);

/// Time-unrolled causal diagram with homogeneous slices.
struct CausalDiagram {
    std::size_t n_slices = 0;
    std::vector<std::pair<SliceVar, SliceVar>> within_slice_edges;
    std::vector<std::pair<SliceVar, SliceVar>> transition_edges;

    std::vector<SliceVar> variables() const;
    std::vector<SliceVar> parents(const SliceVar& v) const;
    /// Kahn's algorithm; throws std::logic_error if the graph has a cycle.
    std::vector<SliceVar> topological_order() const;
};

/// Within-slice edges and transition (t-1 -> t) edges of one slice.
inline constexpr std::array<std::pair<Var, Var>, 7> kWithinSliceEdges{{
    {Var::I, Var::S}, {Var::C, Var::H}, {Var::A, Var::T}, {Var::P, Var::H},
    {Var::P, Var::A}, {Var::I, Var::A}, {Var::C, Var::T},
}};
inline constexpr std::array<std::pair<Var, Var>, 2> kTransitionEdges{{
    {Var::H, Var::C}, {Var::C, Var::S},
}};

CausalDiagram build_dag(std::size_t n_slices);

/// One `src -> dst` per line, e.g. `H_0 -> C_1`.
void write_dag_edges(std::ostream& out, const CausalDiagram& dag);

struct SemSample {
    std::size_t t = 0;
    double p = 0.0;
    double i = 0.0;
    double s = 0.0;
    double c = 0.0;
    double h = 0.0;
    double a = 0.0;
    double total = 0.0;

    double get(Var v) const noexcept;
    friend bool operator==(const SemSample&, const SemSample&) = default;
};

struct Costs {
    double compromise = 1.0;
    double restore = 1.5;
    double isolate = 0.75;

    static Costs from(const ScenarioConfig& config) {
        return {config.cost_compromise, config.cost_restore, config.cost_isolate};
    }
};

/// Evaluates the true structural equations on a state sampled after the blue phase.
SemSample compute_slice(const EpisodeState& sampled, const BlueAction& action, const BluePolicy& policy,
                        const Costs& costs);

/// Structural samples of an episode, padded to `horizon` by repeating the
/// terminal slice with zero action cost. `padded[k]` marks filler rows.
struct EpisodeSlices {
    std::vector<SemSample> samples;
    std::vector<bool> padded;
};

EpisodeSlices episode_slices(const std::vector<StepRecord>& records, const Costs& costs, std::size_t horizon);

struct ObservationalDataset {
    std::size_t n_envs = 0;
    std::size_t horizon = 0;
    /// One n_envs x horizon array per variable, indexed by Var.
    std::array<Eigen::MatrixXd, kVarsPerSlice> values;
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> padded;
    std::vector<BluePolicy> policies;
    std::vector<std::uint64_t> seeds;

    const Eigen::MatrixXd& operator[](Var v) const { return values[static_cast<std::size_t>(v)]; }
    Eigen::MatrixXd& operator[](Var v) { return values[static_cast<std::size_t>(v)]; }

    SemSample sample(std::size_t env, std::size_t t) const;
    /// Mean of `v` at slice t over non-padded rows (all rows if every one is padded).
    double slice_mean(Var v, std::size_t t) const;
    /// Mean of `v` over all non-padded rows.
    double mean(Var v) const;
};

/// Runs n_envs episodes on one shared network, each with a blue policy drawn
/// from Normal(policy_mean, policy_sd) clipped to [0, 1].
ObservationalDataset collect_observational(const ScenarioConfig& config, const NetworkGraph& graph,
                                           std::size_t n_envs, std::size_t horizon, double policy_mean,
                                           double policy_sd, Rng& rng);

/// Uses the scenario's n_envs, horizon and policy distribution.
ObservationalDataset collect_observational(const ScenarioConfig& config, const NetworkGraph& graph, Rng& rng);

/// CSV: env,t,p,i,s,c,h,a,total,padded
void write_dataset_csv(std::ostream& out, const ObservationalDataset& data);
ObservationalDataset read_dataset_csv(std::istream& in);

}  // namespace ccd
