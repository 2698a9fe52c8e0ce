#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ccd/rng.hpp"

namespace ccd {

using NodeId = std::size_t;

enum class DetectionMode { Perfect, Probabilistic };

struct Detection {
    DetectionMode mode = DetectionMode::Perfect;
    double reveal_probability = 1.0;  // only used when mode == Probabilistic
};

struct ScenarioConfig {
    std::size_t n_nodes = 10;
    std::size_t horizon = 25;
    double red_skill = 0.25;
    double vuln_lo = 0.2;
    double vuln_hi = 0.8;
    double cost_compromise = 1.0;
    double cost_restore = 1.5;
    double cost_isolate = 0.75;
    std::size_t isolation_duration = 5;
    std::uint64_t topology_seed = 1;
    std::uint64_t episode_seed = 1;
    double edge_probability = 0.4;
    Detection detection{};
    /// Explicit entry nodes. Empty means one entry node drawn at random.
    std::vector<NodeId> entry_nodes{};
    // Observational data collection.
    std::size_t n_envs = 10;
    double policy_mean = 0.5;
    double policy_sd = 0.2;

    /// Throws ValidationError naming the offending key.
    void validate() const;
};

/// Parses `key = value` lines (`#` starts a comment). Unknown keys and
/// malformed lines raise ParseError; invariant violations ValidationError.
ScenarioConfig load_scenario(std::string_view text);
ScenarioConfig load_scenario_file(const std::string& path);

/// Serialises every key, so that load_scenario(to_text(c)) == c.
std::string to_text(const ScenarioConfig& config);

/// Human-readable description of all keys, their domains and defaults.
std::string scenario_schema();

bool operator==(const ScenarioConfig& a, const ScenarioConfig& b);

struct NodeAttr {
    double vulnerability = 0.0;
    bool is_entry = false;
};

inline constexpr std::size_t kUnreachable = std::numeric_limits<std::size_t>::max();

/// Undirected host graph. Adjacency lists are kept sorted.
class NetworkGraph {
public:
    NetworkGraph() = default;
    NetworkGraph(std::vector<NodeAttr> nodes, const std::vector<std::pair<NodeId, NodeId>>& edges,
                 std::vector<NodeId> entries, NodeId hvt);

    std::size_t size() const noexcept { return nodes_.size(); }
    const NodeAttr& node(NodeId n) const { return nodes_.at(n); }
    const std::vector<NodeAttr>& nodes() const noexcept { return nodes_; }
    const std::vector<NodeId>& neighbours(NodeId n) const { return adjacency_.at(n); }
    bool adjacent(NodeId a, NodeId b) const;
    std::vector<std::pair<NodeId, NodeId>> edges() const;
    std::size_t edge_count() const noexcept;

    NodeId entry_node() const noexcept { return entries_.front(); }
    const std::vector<NodeId>& entries() const noexcept { return entries_; }
    NodeId hvt() const noexcept { return hvt_; }

    bool connected() const;

private:
    std::vector<NodeAttr> nodes_;
    std::vector<std::vector<NodeId>> adjacency_;
    std::vector<NodeId> entries_;
    NodeId hvt_ = 0;
};

/// Hop distances from `source` to every node (kUnreachable if disconnected).
std::vector<std::size_t> bfs_hops(const NetworkGraph& graph, NodeId source);

std::size_t shortest_path_hops(const NetworkGraph& graph, NodeId a, NodeId b);

/// Erdős–Rényi draw, retried until connected; after a bounded number of
/// attempts the components of the last draw are stitched with random edges.
NetworkGraph generate_network(const ScenarioConfig& config, Rng& rng);

/// generate_network seeded from config.topology_seed.
NetworkGraph generate_network(const ScenarioConfig& config);

}  // namespace ccd
