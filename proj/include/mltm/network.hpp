#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace mltm {

// Directed sensing edge: the owning agent observes `to` and assigns it
// attention `weight`. Influence travels against the arrow: when `to`
// activates, the owner feels it.
struct Edge {
    int to = 0;
    double weight = 0.0;
};

// A multiplex network on n agents and m layers. Agents are 0-based
// internally; all file formats and user-facing messages use 1-based ids,
// converted only at the I/O boundary.
//
// Invariants established by load_network / finalize_weights:
//   - out[k][i] is sorted by target id, has no self-loops or duplicates,
//   - every nonempty out-neighborhood has weights summing to exactly 1
//     (renormalized after a 1e-9 tolerance check).
struct MultiplexNetwork {
    int n = 0;
    int m = 0;
    std::vector<std::vector<std::vector<Edge>>> out;  // [layer][agent] -> edges
    std::vector<std::string> agent_names;             // optional; empty or size n
    std::vector<std::string> layer_names;             // optional; empty or size m

    const std::vector<Edge>& edges(int layer, int agent) const { return out[layer][agent]; }
    int out_degree(int layer, int agent) const { return static_cast<int>(out[layer][agent].size()); }

    // Number of layers in which the agent observes at least one other agent.
    int nonempty_layers(int agent) const;
    bool has_out_edges(int agent) const { return nonempty_layers(agent) > 0; }
};

// Monoplex view: one adjacency shared by all projection/Bayes-net code.
struct MonoplexNetwork {
    int n = 0;
    std::vector<std::vector<Edge>> out;  // [agent] -> edges, sorted by target
};

// Parse a network document. Throws ValidationError on any schema or
// consistency violation (bad ids, self-loops, duplicate edges, nonpositive
// weights, neighborhood weights off by more than 1e-9, mixed presence of
// weighted and unweighted edges within one neighborhood).
MultiplexNetwork load_network(const nlohmann::json& doc);
MultiplexNetwork load_network_file(const std::string& path);

// Inverse of load_network up to edge order: serialize -> load is identity.
nlohmann::json serialize_network(const MultiplexNetwork& net);

// Aggregate projection: the union of all layers' edge sets, reweighted
// uniformly to 1/out-degree.
MonoplexNetwork project(const MultiplexNetwork& net);

bool is_dag(const MonoplexNetwork& g);

// Topological order (sources of the sensing graph last or first is a
// convention; here: if i appears before j, then j does not sense i ... i.e.
// every agent's out-edges point to earlier entries). Throws ValidationError
// on a cycle.
std::vector<int> topological_order(const MonoplexNetwork& g);

// True when g is a DAG whose undirected skeleton is a forest.
bool is_polytree(const MonoplexNetwork& g);

// Parse a 1-based seed list against a network of n agents: ids in range,
// no duplicates. Returns 0-based ids, sorted.
std::vector<int> parse_seeds(const nlohmann::json& doc, int n);
std::vector<int> parse_seeds_file(const std::string& path, int n);
nlohmann::json serialize_seeds(const std::vector<int>& seeds);

}  // namespace mltm
