#include "ccd/engine.hpp"

#include <algorithm>
#include <stdexcept>

#include <fmt/format.h>

#include "ccd/errors.hpp"

namespace ccd {

const char* to_string(ActionKind kind) noexcept {
    switch (kind) {
        case ActionKind::Restore: return "restore";
        case ActionKind::Isolate: return "isolate";
        case ActionKind::NoOp: break;
    }
    return "noop";
}

void BluePolicy::validate() const {
    if (!(p_res >= 0.0 && p_res <= 1.0)) throw ValidationError("p_res", "must lie in [0, 1]");
    if (!(p_iso >= 0.0 && p_iso <= 1.0)) throw ValidationError("p_iso", "must lie in [0, 1]");
}

EngineRules EngineRules::from(const ScenarioConfig& config) {
    return {config.red_skill, config.isolation_duration, config.detection};
}

EpisodeState EpisodeState::initial(std::shared_ptr<const NetworkGraph> graph) {
    EpisodeState s;
    s.graph = std::move(graph);
    return s;
}

bool operator==(const EpisodeState& a, const EpisodeState& b) {
    return a.graph == b.graph && a.t == b.t && a.compromised == b.compromised &&
           a.blue_seen_compromised == b.blue_seen_compromised && a.isolated == b.isolated &&
           a.hvt_compromised == b.hvt_compromised && a.terminated == b.terminated;
}

double attack_score(double skill, double vuln) {
    if (skill <= 0.0) return 0.0;
    return 100.0 * skill * skill / (skill + (1.0 - vuln));
}

bool attempt_compromise(double skill, double vuln, Rng& rng) {
    const double u = 100.0 * uniform01(rng);
    return attack_score(skill, vuln) >= u && skill > 0.0;
}

std::vector<NodeId> red_candidates(const EpisodeState& state) {
    const auto& g = *state.graph;
    std::vector<NodeId> out;
    for (NodeId v = 0; v < g.size(); ++v) {
        if (state.is_compromised(v) || state.is_isolated(v)) continue;
        bool reachable = g.node(v).is_entry;
        for (auto u : g.neighbours(v)) {
            if (reachable) break;
            reachable = state.is_compromised(u) && !state.is_isolated(u);
        }
        if (reachable) out.push_back(v);
    }
    return out;
}

std::optional<NodeId> red_select_target(const EpisodeState& state, Rng& rng) {
    const auto candidates = red_candidates(state);
    if (candidates.empty()) return std::nullopt;
    return candidates[uniform_index(rng, candidates.size())];
}

BlueAction blue_select_action(const BluePolicy& policy, const EpisodeState& state, Rng& rng) {
    const auto& seen = state.blue_seen_compromised;
    if (seen.empty()) return BlueAction::noop();
    ActionKind kind = ActionKind::NoOp;
    if (uniform01(rng) < policy.p_res) kind = ActionKind::Restore;
    else if (uniform01(rng) < policy.p_iso) kind = ActionKind::Isolate;
    if (kind == ActionKind::NoOp) return BlueAction::noop();
    const auto target = *std::next(seen.begin(), static_cast<std::ptrdiff_t>(uniform_index(rng, seen.size())));
    return {kind, target};
}

EpisodeState apply_blue_action(EpisodeState state, const BlueAction& action, std::size_t isolation_duration) {
    if (action.kind == ActionKind::NoOp) return state;
    const auto n = action.target.value();
    if (n >= state.graph->size()) throw std::out_of_range("apply_blue_action: target out of range");
    if (action.kind == ActionKind::Restore) {
        state.compromised.erase(n);
        state.blue_seen_compromised.erase(n);
    } else {
        state.isolated[n] = isolation_duration;
    }
    return state;
}

StepRecord step(EpisodeState& state, const EngineRules& rules, const BluePolicy& policy, Rng& rng) {
    if (state.terminated) throw std::logic_error("step: episode already terminated");
    const auto& g = *state.graph;
    StepRecord rec;
    rec.t = state.t;
    rec.policy = policy;

    // (1) red acts
    rec.phases.push_back(Phase::RedAction);
    rec.red_target = red_select_target(state, rng);
    if (rec.red_target) {
        const auto v = *rec.red_target;
        rec.red_succeeded = attempt_compromise(rules.red_skill, g.node(v).vulnerability, rng);
        if (rec.red_succeeded) {
            state.compromised.insert(v);
            if (rules.detection.mode == DetectionMode::Perfect) state.blue_seen_compromised.insert(v);
        }
    }

    // (2) has red won?
    rec.phases.push_back(Phase::RedWinCheck);
    if (state.is_compromised(g.hvt())) {
        state.hvt_compromised = true;
        state.terminated = true;
    }

    // (3) blue acts
    if (!state.terminated) {
        rec.phases.push_back(Phase::BlueAction);
        if (rules.detection.mode == DetectionMode::Probabilistic) {
            for (auto n : state.compromised)
                if (!state.blue_seen_compromised.contains(n) && uniform01(rng) < rules.detection.reveal_probability)
                    state.blue_seen_compromised.insert(n);
        }
        rec.blue_action = blue_select_action(policy, state, rng);
        state = apply_blue_action(std::move(state), rec.blue_action, rules.isolation_duration);
        // (5) blue never wins in this configuration; episodes end by horizon or HVT loss.
        rec.phases.push_back(Phase::BlueWinCheck);
    }
    rec.state_sampled = state;

    rec.phases.push_back(Phase::Advance);
    for (auto it = state.isolated.begin(); it != state.isolated.end();) {
        if (--it->second == 0) it = state.isolated.erase(it);
        else ++it;
    }
    ++state.t;
    rec.state_after = state;
    return rec;
}

std::vector<StepRecord> run_episode(const EngineRules& rules, std::shared_ptr<const NetworkGraph> graph,
                                    const PolicySchedule& policy, std::size_t horizon, Rng& rng) {
    if (horizon < 1) throw ValidationError("horizon", "must be positive");
    auto state = EpisodeState::initial(std::move(graph));
    std::vector<StepRecord> records;
    records.reserve(horizon);
    while (records.size() < horizon && !state.terminated)
        records.push_back(step(state, rules, policy(state.t), rng));
    return records;
}

std::vector<StepRecord> run_episode(const EngineRules& rules, std::shared_ptr<const NetworkGraph> graph,
                                    const BluePolicy& policy, std::size_t horizon, Rng& rng) {
    return run_episode(rules, std::move(graph), [&policy](std::size_t) { return policy; }, horizon, rng);
}

void write_trajectory_csv(std::ostream& out, const std::vector<StepRecord>& records) {
    out << "t,red_target,red_succeeded,blue_action_kind,blue_target,n_compromised,n_isolated,hvt_compromised\n";
    for (const auto& r : records) {
        const auto& s = r.state_sampled;
        out << fmt::format("{},{},{},{},{},{},{},{}\n", r.t,
                           r.red_target ? std::to_string(*r.red_target) : std::string(),
                           r.red_succeeded ? 1 : 0, to_string(r.blue_action.kind),
                           r.blue_action.target ? std::to_string(*r.blue_action.target) : std::string(),
                           s.compromised.size(), s.isolated.size(), s.hvt_compromised ? 1 : 0);
    }
}

}  // namespace ccd
