#include "ccd/scm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <fmt/format.h>

#include "ccd/csv.hpp"
#include "ccd/errors.hpp"

namespace ccd {

const char* to_string(Var v) noexcept {
    static constexpr const char* names[] = {"P", "I", "S", "C", "H", "A", "T"};
    return names[static_cast<std::size_t>(v)];
}

std::string to_string(const SliceVar& v) {
    return fmt::format("{}_{}", to_string(v.var), v.t);
}

std::vector<SliceVar> CausalDiagram::variables() const {
    std::vector<SliceVar> out;
    for (std::size_t t = 0; t < n_slices; ++t)
        for (auto v : kAllVars) out.push_back({v, t});
    return out;
}

std::vector<SliceVar> CausalDiagram::parents(const SliceVar& v) const {
    std::vector<SliceVar> out;
    for (const auto* edges : {&transition_edges, &within_slice_edges})
        for (const auto& [src, dst] : *edges)
            if (dst == v) out.push_back(src);
    return out;
}

std::vector<SliceVar> CausalDiagram::topological_order() const {
    const auto vars = variables();
    std::map<SliceVar, std::size_t> indegree;
    std::map<SliceVar, std::vector<SliceVar>> children;
    for (const auto& v : vars) indegree[v] = 0;
    for (const auto* edges : {&within_slice_edges, &transition_edges})
        for (const auto& [src, dst] : *edges) {
            ++indegree.at(dst);
            children[src].push_back(dst);
        }
    std::vector<SliceVar> ready, order;
    for (const auto& v : vars)
        if (indegree[v] == 0) ready.push_back(v);
    while (!ready.empty()) {
        const auto v = ready.front();
        ready.erase(ready.begin());
        order.push_back(v);
        for (const auto& c : children[v])
            if (--indegree[c] == 0) ready.push_back(c);
    }
    if (order.size() != vars.size()) throw std::logic_error("causal diagram contains a cycle");
    return order;
}

CausalDiagram build_dag(std::size_t n_slices) {
    if (n_slices < 1) throw ValidationError("n_slices", "must be positive");
    CausalDiagram dag;
    dag.n_slices = n_slices;
    for (std::size_t t = 0; t < n_slices; ++t) {
        for (auto [src, dst] : kWithinSliceEdges) dag.within_slice_edges.push_back({{src, t}, {dst, t}});
        if (t > 0)
            for (auto [src, dst] : kTransitionEdges) dag.transition_edges.push_back({{src, t - 1}, {dst, t}});
    }
    return dag;
}

void write_dag_edges(std::ostream& out, const CausalDiagram& dag) {
    for (std::size_t t = 0; t < dag.n_slices; ++t) {
        for (const auto& [src, dst] : dag.transition_edges)
            if (dst.t == t) out << to_string(src) << " -> " << to_string(dst) << '\n';
        for (const auto& [src, dst] : dag.within_slice_edges)
            if (dst.t == t) out << to_string(src) << " -> " << to_string(dst) << '\n';
    }
}

double SemSample::get(Var v) const noexcept {
    switch (v) {
        case Var::P: return p;
        case Var::I: return i;
        case Var::S: return s;
        case Var::C: return c;
        case Var::H: return h;
        case Var::A: return a;
        case Var::T: return total;
    }
    return 0.0;
}

SemSample compute_slice(const EpisodeState& sampled, const BlueAction& action, const BluePolicy& policy,
                        const Costs& costs) {
    const auto& g = *sampled.graph;
    SemSample out;
    out.t = sampled.t;
    out.p = policy.p_res;
    out.i = policy.p_iso;

    std::size_t exposed = 0;
    for (NodeId n = 0; n < g.size(); ++n)
        if (!sampled.is_compromised(n) && !sampled.is_isolated(n)) ++exposed;
    out.s = static_cast<double>(exposed);

    out.c = std::pow(costs.compromise * static_cast<double>(sampled.compromised.size()), 1.5);

    double likelihood = 0.0;
    for (auto n : sampled.compromised)
        for (auto v : g.neighbours(n))
            if (!sampled.is_isolated(v)) likelihood += g.node(v).vulnerability;
    out.h = likelihood;

    switch (action.kind) {
        case ActionKind::Restore: out.a = costs.restore; break;
        case ActionKind::Isolate: out.a = costs.isolate; break;
        case ActionKind::NoOp: out.a = 0.0; break;
    }
    out.total = out.c + out.a;
    return out;
}

EpisodeSlices episode_slices(const std::vector<StepRecord>& records, const Costs& costs, std::size_t horizon) {
    EpisodeSlices out;
    for (const auto& r : records) {
        if (out.samples.size() == horizon) break;
        out.samples.push_back(compute_slice(r.state_sampled, r.blue_action, r.policy, costs));
        out.padded.push_back(false);
    }
    if (out.samples.empty()) throw std::invalid_argument("episode_slices: no records");
    auto fill = out.samples.back();
    fill.total -= fill.a;
    fill.a = 0.0;
    while (out.samples.size() < horizon) {
        fill.t = out.samples.size();
        out.samples.push_back(fill);
        out.padded.push_back(true);
    }
    return out;
}

SemSample ObservationalDataset::sample(std::size_t env, std::size_t t) const {
    SemSample s;
    s.t = t;
    s.p = (*this)[Var::P](env, t);
    s.i = (*this)[Var::I](env, t);
    s.s = (*this)[Var::S](env, t);
    s.c = (*this)[Var::C](env, t);
    s.h = (*this)[Var::H](env, t);
    s.a = (*this)[Var::A](env, t);
    s.total = (*this)[Var::T](env, t);
    return s;
}

double ObservationalDataset::slice_mean(Var v, std::size_t t) const {
    const auto& m = (*this)[v];
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t e = 0; e < n_envs; ++e)
        if (!padded(e, t)) {
            sum += m(e, t);
            ++n;
        }
    if (n == 0) return m.col(static_cast<Eigen::Index>(t)).mean();
    return sum / static_cast<double>(n);
}

double ObservationalDataset::mean(Var v) const {
    const auto& m = (*this)[v];
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t e = 0; e < n_envs; ++e)
        for (std::size_t t = 0; t < horizon; ++t)
            if (!padded(e, t)) {
                sum += m(e, t);
                ++n;
            }
    return n == 0 ? m.mean() : sum / static_cast<double>(n);
}

namespace {

ObservationalDataset empty_dataset(std::size_t n_envs, std::size_t horizon) {
    ObservationalDataset d;
    d.n_envs = n_envs;
    d.horizon = horizon;
    for (auto& m : d.values) m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_envs), static_cast<Eigen::Index>(horizon));
    d.padded.setConstant(static_cast<Eigen::Index>(n_envs), static_cast<Eigen::Index>(horizon), false);
    d.policies.resize(n_envs);
    d.seeds.resize(n_envs);
    return d;
}

void store(ObservationalDataset& d, std::size_t e, const SemSample& s) {
    for (auto v : kAllVars) d[v](static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(s.t)) = s.get(v);
}

}  // namespace

ObservationalDataset collect_observational(const ScenarioConfig& config, const NetworkGraph& graph,
                                           std::size_t n_envs, std::size_t horizon, double policy_mean,
                                           double policy_sd, Rng& rng) {
    if (n_envs < 1) throw ValidationError("n_envs", "must be positive");
    if (horizon < 1) throw ValidationError("horizon", "must be positive");
    auto d = empty_dataset(n_envs, horizon);
    const auto shared = std::make_shared<const NetworkGraph>(graph);
    const auto rules = EngineRules::from(config);
    const auto costs = Costs::from(config);

    // All draws from `rng` happen up front so episodes are independent streams.
    for (std::size_t e = 0; e < n_envs; ++e) {
        auto clip = [](double x) { return std::clamp(x, 0.0, 1.0); };
        const double p_res = clip(normal(rng, policy_mean, policy_sd));
        const double p_iso = clip(normal(rng, policy_mean, policy_sd));
        d.policies[e] = {p_res, p_iso};
        d.seeds[e] = rng();
    }
    for (std::size_t e = 0; e < n_envs; ++e) {
        Rng episode_rng(d.seeds[e]);
        const auto records = run_episode(rules, shared, d.policies[e], horizon, episode_rng);
        const auto slices = episode_slices(records, costs, horizon);
        for (std::size_t t = 0; t < horizon; ++t) {
            store(d, e, slices.samples[t]);
            d.padded(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(t)) = slices.padded[t];
        }
    }
    return d;
}

ObservationalDataset collect_observational(const ScenarioConfig& config, const NetworkGraph& graph, Rng& rng) {
    return collect_observational(config, graph, config.n_envs, config.horizon, config.policy_mean,
                                 config.policy_sd, rng);
}

void write_dataset_csv(std::ostream& out, const ObservationalDataset& d) {
    out << "env,t,p,i,s,c,h,a,total,padded\n";
    for (std::size_t e = 0; e < d.n_envs; ++e)
        for (std::size_t t = 0; t < d.horizon; ++t) {
            const auto s = d.sample(e, t);
            out << fmt::format("{},{},{},{},{},{},{},{},{},{}\n", e, t, csv::real(s.p), csv::real(s.i),
                               csv::real(s.s), csv::real(s.c), csv::real(s.h), csv::real(s.a),
                               csv::real(s.total), d.padded(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(t)) ? 1 : 0);
        }
}

ObservationalDataset read_dataset_csv(std::istream& in) {
    const std::vector<std::string> cols{"env", "t", "p", "i", "s", "c", "h", "a", "total", "padded"};
    const auto table = csv::Table::read(in, cols);
    if (table.rows() == 0) throw ParseError("dataset csv: no data rows");
    std::size_t n_envs = 0, horizon = 0;
    const auto ce = table.column("env"), ct = table.column("t");
    for (std::size_t r = 0; r < table.rows(); ++r) {
        n_envs = std::max(n_envs, table.count_at(r, ce) + 1);
        horizon = std::max(horizon, table.count_at(r, ct) + 1);
    }
    if (table.rows() != n_envs * horizon)
        throw ParseError(fmt::format("dataset csv: {} rows do not form a {} x {} array", table.rows(), n_envs, horizon));
    auto d = empty_dataset(n_envs, horizon);
    std::vector<bool> filled(n_envs * horizon, false);
    for (std::size_t r = 0; r < table.rows(); ++r) {
        const auto e = table.count_at(r, ce), t = table.count_at(r, ct);
        if (filled[e * horizon + t]) throw ParseError(fmt::format("dataset csv: duplicate row env={} t={}", e, t));
        filled[e * horizon + t] = true;
        SemSample s;
        s.t = t;
        s.p = table.real_at(r, table.column("p"));
        s.i = table.real_at(r, table.column("i"));
        s.s = table.real_at(r, table.column("s"));
        s.c = table.real_at(r, table.column("c"));
        s.h = table.real_at(r, table.column("h"));
        s.a = table.real_at(r, table.column("a"));
        s.total = table.real_at(r, table.column("total"));
        store(d, e, s);
        d.padded(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(t)) = table.count_at(r, table.column("padded")) != 0;
        if (t == 0) d.policies[e] = {s.p, s.i};
    }
    return d;
}

}  // namespace ccd
