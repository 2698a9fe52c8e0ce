#include "ccd/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <queue>
#include <sstream>

#include <fmt/format.h>

#include "ccd/errors.hpp"

namespace ccd {

namespace {

constexpr int kConnectRetries = 64;

std::string_view trim(std::string_view s) {
    const auto* ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

double parse_real(std::string_view key, std::string_view v) {
    const std::string s(v);
    char* end = nullptr;
    const double out = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(out))
        throw ParseError(fmt::format("{}: expected a real number, got '{}'", key, v));
    return out;
}

std::uint64_t parse_uint(std::string_view key, std::string_view v) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size())
        throw ParseError(fmt::format("{}: expected a non-negative integer, got '{}'", key, v));
    return out;
}

std::vector<std::string_view> split_list(std::string_view v) {
    std::vector<std::string_view> parts;
    while (!v.empty()) {
        const auto comma = v.find(',');
        parts.push_back(trim(v.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        v.remove_prefix(comma + 1);
    }
    return parts;
}

Detection parse_detection(std::string_view v) {
    if (v == "perfect") return {};
    constexpr std::string_view prefix = "probabilistic";
    if (v.substr(0, prefix.size()) == prefix) {
        const auto rest = trim(v.substr(prefix.size()));
        return {DetectionMode::Probabilistic, parse_real("detection", rest)};
    }
    throw ParseError(fmt::format("detection: expected 'perfect' or 'probabilistic <p>', got '{}'", v));
}

}  // namespace

void ScenarioConfig::validate() const {
    if (n_nodes < 2) throw ValidationError("n_nodes", "need at least 2 nodes (entry and high value target)");
    if (horizon < 1) throw ValidationError("horizon", "must be positive");
    // 0 is admitted as an inert attacker.
    if (!(red_skill >= 0.0 && red_skill <= 1.0)) throw ValidationError("red_skill", "must lie in [0, 1]");
    if (!(vuln_lo >= 0.0 && vuln_lo <= vuln_hi && vuln_hi <= 1.0))
        throw ValidationError("vuln_range", "need 0 <= lo <= hi <= 1");
    if (!(cost_compromise >= 0.0)) throw ValidationError("cost_compromise", "must be non-negative");
    if (!(cost_restore >= 0.0)) throw ValidationError("cost_restore", "must be non-negative");
    if (!(cost_isolate >= 0.0)) throw ValidationError("cost_isolate", "must be non-negative");
    if (isolation_duration < 1) throw ValidationError("isolation_duration", "must be positive");
    if (!(edge_probability > 0.0 && edge_probability <= 1.0))
        throw ValidationError("edge_probability", "must lie in (0, 1]");
    if (detection.mode == DetectionMode::Probabilistic &&
        !(detection.reveal_probability >= 0.0 && detection.reveal_probability <= 1.0))
        throw ValidationError("detection", "reveal probability must lie in [0, 1]");
    for (auto e : entry_nodes)
        if (e >= n_nodes) throw ValidationError("entry_nodes", fmt::format("node {} out of range", e));
    if (entry_nodes.size() >= n_nodes)
        throw ValidationError("entry_nodes", "at least one node must remain a candidate high value target");
    if (n_envs < 1) throw ValidationError("n_envs", "must be positive");
    if (!(policy_mean >= 0.0 && policy_mean <= 1.0)) throw ValidationError("policy_mean", "must lie in [0, 1]");
    if (!(policy_sd >= 0.0)) throw ValidationError("policy_sd", "must be non-negative");
}

ScenarioConfig load_scenario(std::string_view text) {
    ScenarioConfig c;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line_no = 0;
    std::map<std::string, std::size_t, std::less<>> seen;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ParseError(fmt::format("line {}: expected 'key = value'", line_no));
        const auto key = trim(line.substr(0, eq));
        const auto val = trim(line.substr(eq + 1));
        if (auto [it, fresh] = seen.emplace(std::string(key), line_no); !fresh)
            throw ParseError(fmt::format("line {}: duplicate key '{}' (first on line {})", line_no, key, it->second));

        if (key == "n_nodes") c.n_nodes = parse_uint(key, val);
        else if (key == "horizon") c.horizon = parse_uint(key, val);
        else if (key == "red_skill") c.red_skill = parse_real(key, val);
        else if (key == "vuln_range") {
            const auto parts = split_list(val);
            if (parts.size() != 2) throw ParseError("vuln_range: expected 'lo, hi'");
            c.vuln_lo = parse_real(key, parts[0]);
            c.vuln_hi = parse_real(key, parts[1]);
        }
        else if (key == "cost_compromise") c.cost_compromise = parse_real(key, val);
        else if (key == "cost_restore") c.cost_restore = parse_real(key, val);
        else if (key == "cost_isolate") c.cost_isolate = parse_real(key, val);
        else if (key == "isolation_duration") c.isolation_duration = parse_uint(key, val);
        else if (key == "topology_seed") c.topology_seed = parse_uint(key, val);
        else if (key == "episode_seed") c.episode_seed = parse_uint(key, val);
        else if (key == "edge_probability") c.edge_probability = parse_real(key, val);
        else if (key == "detection") c.detection = parse_detection(val);
        else if (key == "entry_nodes") {
            c.entry_nodes.clear();
            if (!val.empty())
                for (auto p : split_list(val)) c.entry_nodes.push_back(parse_uint(key, p));
        }
        else if (key == "n_envs") c.n_envs = parse_uint(key, val);
        else if (key == "policy_mean") c.policy_mean = parse_real(key, val);
        else if (key == "policy_sd") c.policy_sd = parse_real(key, val);
        else throw ParseError(fmt::format("line {}: unknown key '{}'", line_no, key));
    }
    c.validate();
    return c;
}

ScenarioConfig load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(fmt::format("cannot open scenario file '{}'", path));
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_scenario(ss.str());
}

std::string to_text(const ScenarioConfig& c) {
    std::string out;
    auto kv = [&out](std::string_view k, const std::string& v) { out += fmt::format("{} = {}\n", k, v); };
    auto real = [](double x) { return fmt::format("{:.17g}", x); };
    kv("n_nodes", std::to_string(c.n_nodes));
    kv("horizon", std::to_string(c.horizon));
    kv("red_skill", real(c.red_skill));
    kv("vuln_range", real(c.vuln_lo) + ", " + real(c.vuln_hi));
    kv("cost_compromise", real(c.cost_compromise));
    kv("cost_restore", real(c.cost_restore));
    kv("cost_isolate", real(c.cost_isolate));
    kv("isolation_duration", std::to_string(c.isolation_duration));
    kv("topology_seed", std::to_string(c.topology_seed));
    kv("episode_seed", std::to_string(c.episode_seed));
    kv("edge_probability", real(c.edge_probability));
    kv("detection", c.detection.mode == DetectionMode::Perfect
                        ? std::string("perfect")
                        : "probabilistic " + real(c.detection.reveal_probability));
    if (!c.entry_nodes.empty()) kv("entry_nodes", fmt::format("{}", fmt::join(c.entry_nodes, ", ")));
    kv("n_envs", std::to_string(c.n_envs));
    kv("policy_mean", real(c.policy_mean));
    kv("policy_sd", real(c.policy_sd));
    return out;
}

std::string scenario_schema() {
    return R"(# Scenario file: one `key = value` per line, `#` starts a comment.
# Omitted keys take the default shown.
n_nodes = 10              # hosts in the network, >= 2
horizon = 25              # time steps per episode, >= 1
red_skill = 0.25          # attacker skill in [0, 1] (0 = inert attacker)
vuln_range = 0.2, 0.8     # node vulnerabilities ~ Uniform(lo, hi), 0 <= lo <= hi <= 1
cost_compromise = 1       # per compromised node, >= 0
cost_restore = 1.5        # cost of a restore action, >= 0
cost_isolate = 0.75       # cost of an isolate action, >= 0
isolation_duration = 5    # steps until an isolated node reconnects, >= 1
topology_seed = 1         # seeds network generation
episode_seed = 1          # seeds episode randomness (combined with --seed)
edge_probability = 0.4    # Erdos-Renyi edge probability in (0, 1]
detection = perfect       # or: probabilistic <p>, p in [0, 1]
entry_nodes =             # optional comma-separated node indices; empty = one random entry
n_envs = 10               # observational environments, >= 1
policy_mean = 0.5         # mean of the Gaussian the blue policies are drawn from
policy_sd = 0.2           # its standard deviation (draws clipped to [0, 1])
)";
}

bool operator==(const ScenarioConfig& a, const ScenarioConfig& b) {
    return to_text(a) == to_text(b);
}

NetworkGraph::NetworkGraph(std::vector<NodeAttr> nodes, const std::vector<std::pair<NodeId, NodeId>>& edges,
                           std::vector<NodeId> entries, NodeId hvt)
    : nodes_(std::move(nodes)), adjacency_(nodes_.size()), entries_(std::move(entries)), hvt_(hvt) {
    const auto n = nodes_.size();
    for (auto [a, b] : edges) {
        if (a >= n || b >= n) throw ValidationError("edges", fmt::format("edge ({}, {}) out of range", a, b));
        if (a == b) throw ValidationError("edges", fmt::format("self-loop on node {}", a));
        if (adjacent(a, b)) throw ValidationError("edges", fmt::format("duplicate edge ({}, {})", a, b));
        adjacency_[a].insert(std::lower_bound(adjacency_[a].begin(), adjacency_[a].end(), b), b);
        adjacency_[b].insert(std::lower_bound(adjacency_[b].begin(), adjacency_[b].end(), a), a);
    }
    if (entries_.empty()) throw ValidationError("entry_nodes", "need at least one entry node");
    for (auto e : entries_) {
        if (e >= n) throw ValidationError("entry_nodes", fmt::format("node {} out of range", e));
        nodes_[e].is_entry = true;
    }
    if (hvt_ >= n) throw ValidationError("hvt", "out of range");
}

bool NetworkGraph::adjacent(NodeId a, NodeId b) const {
    const auto& adj = adjacency_.at(a);
    return std::binary_search(adj.begin(), adj.end(), b);
}

std::vector<std::pair<NodeId, NodeId>> NetworkGraph::edges() const {
    std::vector<std::pair<NodeId, NodeId>> out;
    for (NodeId a = 0; a < adjacency_.size(); ++a)
        for (auto b : adjacency_[a])
            if (a < b) out.emplace_back(a, b);
    return out;
}

std::size_t NetworkGraph::edge_count() const noexcept {
    std::size_t deg = 0;
    for (const auto& adj : adjacency_) deg += adj.size();
    return deg / 2;
}

bool NetworkGraph::connected() const {
    if (nodes_.empty()) return true;
    const auto d = bfs_hops(*this, 0);
    return std::none_of(d.begin(), d.end(), [](auto x) { return x == kUnreachable; });
}

std::vector<std::size_t> bfs_hops(const NetworkGraph& graph, NodeId source) {
    std::vector<std::size_t> dist(graph.size(), kUnreachable);
    std::queue<NodeId> frontier;
    dist.at(source) = 0;
    frontier.push(source);
    while (!frontier.empty()) {
        const auto u = frontier.front();
        frontier.pop();
        for (auto v : graph.neighbours(u)) {
            if (dist[v] != kUnreachable) continue;
            dist[v] = dist[u] + 1;
            frontier.push(v);
        }
    }
    return dist;
}

std::size_t shortest_path_hops(const NetworkGraph& graph, NodeId a, NodeId b) {
    if (b >= graph.size()) throw std::out_of_range("shortest_path_hops: node index out of range");
    return bfs_hops(graph, a)[b];
}

namespace {

using EdgeList = std::vector<std::pair<NodeId, NodeId>>;

EdgeList draw_er_edges(std::size_t n, double p, Rng& rng) {
    EdgeList edges;
    for (NodeId a = 0; a < n; ++a)
        for (NodeId b = a + 1; b < n; ++b)
            if (uniform01(rng) < p) edges.emplace_back(a, b);
    return edges;
}

// Component label per node.
std::vector<std::size_t> components(std::size_t n, const EdgeList& edges) {
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&parent](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (auto [a, b] : edges) parent[find(a)] = find(b);
    std::vector<std::size_t> label(n);
    for (std::size_t i = 0; i < n; ++i) label[i] = find(i);
    return label;
}

// Joins components by linking a random member of each to a random node
// already in the growing connected block.
void stitch(std::size_t n, EdgeList& edges, Rng& rng) {
    const auto label = components(n, edges);
    std::map<std::size_t, std::vector<NodeId>> groups;
    for (NodeId i = 0; i < n; ++i) groups[label[i]].push_back(i);
    if (groups.size() <= 1) return;
    auto it = groups.begin();
    std::vector<NodeId> block = it->second;
    for (++it; it != groups.end(); ++it) {
        const auto a = block[uniform_index(rng, block.size())];
        const auto b = it->second[uniform_index(rng, it->second.size())];
        edges.emplace_back(std::min(a, b), std::max(a, b));
        block.insert(block.end(), it->second.begin(), it->second.end());
    }
}

}  // namespace

NetworkGraph generate_network(const ScenarioConfig& config, Rng& rng) {
    config.validate();
    const auto n = config.n_nodes;

    EdgeList edges;
    for (int attempt = 0; attempt < kConnectRetries; ++attempt) {
        edges = draw_er_edges(n, config.edge_probability, rng);
        const auto label = components(n, edges);
        if (std::all_of(label.begin(), label.end(), [&](auto l) { return l == label[0]; })) break;
        if (attempt + 1 == kConnectRetries) stitch(n, edges, rng);
    }

    std::vector<NodeAttr> nodes(n);
    for (auto& node : nodes) node.vulnerability = uniform(rng, config.vuln_lo, config.vuln_hi);

    std::vector<NodeId> entries = config.entry_nodes;
    if (entries.empty()) entries.push_back(uniform_index(rng, n));

    NetworkGraph probe(nodes, edges, entries, entries.front());
    // Distance to the nearest entry node.
    std::vector<std::size_t> dist(n, kUnreachable);
    for (auto e : entries) {
        const auto d = bfs_hops(probe, e);
        for (NodeId i = 0; i < n; ++i) dist[i] = std::min(dist[i], d[i]);
    }
    const auto far = *std::max_element(dist.begin(), dist.end());
    std::vector<NodeId> candidates;
    for (NodeId i = 0; i < n; ++i)
        if (dist[i] == far) candidates.push_back(i);
    const auto hvt = candidates[uniform_index(rng, candidates.size())];
    return NetworkGraph(std::move(nodes), edges, std::move(entries), hvt);
}

NetworkGraph generate_network(const ScenarioConfig& config) {
    Rng rng(config.topology_seed);
    return generate_network(config, rng);
}

}  // namespace ccd
