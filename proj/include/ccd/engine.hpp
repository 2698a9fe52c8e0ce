#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <vector>

#include "ccd/rng.hpp"
#include "ccd/scenario.hpp"

namespace ccd {

enum class ActionKind { NoOp, Restore, Isolate };

const char* to_string(ActionKind kind) noexcept;

struct BlueAction {
    ActionKind kind = ActionKind::NoOp;
    std::optional<NodeId> target{};

    static BlueAction noop() { return {}; }
    static BlueAction restore(NodeId n) { return {ActionKind::Restore, n}; }
    static BlueAction isolate(NodeId n) { return {ActionKind::Isolate, n}; }

    friend bool operator==(const BlueAction&, const BlueAction&) = default;
};

/// Per-step action probabilities of the probabilistic blue agent.
struct BluePolicy {
    double p_res = 0.0;
    double p_iso = 0.0;

    void validate() const;
    friend bool operator==(const BluePolicy&, const BluePolicy&) = default;
};

/// Blue policy as a function of the time index.
using PolicySchedule = std::function<BluePolicy(std::size_t t)>;

/// The game rules an episode needs from a scenario.
struct EngineRules {
    double red_skill = 0.25;
    std::size_t isolation_duration = 5;
    Detection detection{};

    static EngineRules from(const ScenarioConfig& config);
};

struct EpisodeState {
    std::shared_ptr<const NetworkGraph> graph;
    std::size_t t = 0;
    std::set<NodeId> compromised;
    std::set<NodeId> blue_seen_compromised;
    /// Isolated node -> remaining isolation steps, each in [1, isolation_duration].
    std::map<NodeId, std::size_t> isolated;
    bool hvt_compromised = false;
    bool terminated = false;

    static EpisodeState initial(std::shared_ptr<const NetworkGraph> graph);

    bool is_compromised(NodeId n) const { return compromised.contains(n); }
    bool is_isolated(NodeId n) const { return isolated.contains(n); }

    friend bool operator==(const EpisodeState& a, const EpisodeState& b);
};

/// Phases of one step, in execution order.
enum class Phase { RedAction, RedWinCheck, BlueAction, BlueWinCheck, Advance };

struct StepRecord {
    std::size_t t = 0;
    std::optional<NodeId> red_target{};
    bool red_succeeded = false;
    BlueAction blue_action{};
    BluePolicy policy{};
    /// Snapshot at the end of the blue phase; the point structural variables are sampled at.
    EpisodeState state_sampled{};
    /// Snapshot after isolation counters tick and t advances.
    EpisodeState state_after{};
    std::vector<Phase> phases{};
};

/// 100 * skill^2 / (skill + (1 - vuln)); 0 for an inert (skill 0) attacker.
double attack_score(double skill, double vuln);

/// Succeeds iff attack_score >= u, u ~ Uniform[0, 100).
bool attempt_compromise(double skill, double vuln, Rng& rng);

/// Uncompromised, non-isolated nodes that are entry nodes or adjacent to a
/// compromised, non-isolated node. Sorted.
std::vector<NodeId> red_candidates(const EpisodeState& state);

std::optional<NodeId> red_select_target(const EpisodeState& state, Rng& rng);

/// Restore with p_res, else isolate with p_iso, else no-op. The target is
/// drawn uniformly from the blue-seen compromised nodes; if there are none the
/// action is a no-op and no draw is made.
BlueAction blue_select_action(const BluePolicy& policy, const EpisodeState& state, Rng& rng);

EpisodeState apply_blue_action(EpisodeState state, const BlueAction& action, std::size_t isolation_duration);

/// Advances one time step. Throws std::logic_error on a terminated state.
StepRecord step(EpisodeState& state, const EngineRules& rules, const BluePolicy& policy, Rng& rng);

/// Runs until `horizon` steps or until the high value target falls.
std::vector<StepRecord> run_episode(const EngineRules& rules, std::shared_ptr<const NetworkGraph> graph,
                                    const PolicySchedule& policy, std::size_t horizon, Rng& rng);

std::vector<StepRecord> run_episode(const EngineRules& rules, std::shared_ptr<const NetworkGraph> graph,
                                    const BluePolicy& policy, std::size_t horizon, Rng& rng);

/// CSV: t,red_target,red_succeeded,blue_action_kind,blue_target,n_compromised,n_isolated,hvt_compromised
void write_trajectory_csv(std::ostream& out, const std::vector<StepRecord>& records);

}  // namespace ccd
