#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mltm/network.hpp"
#include "mltm/protocol.hpp"

namespace mltm {

// One live-edge configuration: every unseeded agent keeps exactly one
// out-edge per nonempty layer. target[i*m + k] is the kept target of agent i
// in layer k, or -1 when the slot has no edges (seeded agents' slots are all
// -1: a seed is already persuaded and keeps nothing). q is the probability of
// this configuration: the product of the kept weights.
struct Selection {
    std::vector<int> target;
    double q = 1.0;
    // Enumerator bookkeeping (choice index per slot); treat as opaque.
    std::vector<int> choice;
};

// Streams live-edge selections in lexicographic order over slots sorted by
// (agent, layer), each slot running through the agent's out-edges in target
// order. Selections are also addressable by rank, which is what lets the
// exact engine split the space into deterministic chunks.
class SelectionEnumerator {
   public:
    SelectionEnumerator(const MultiplexNetwork& net, const std::vector<int>& seeds);

    // Total number of selections; saturates at UINT64_MAX on overflow.
    uint64_t total() const { return total_; }
    int slot_count() const { return static_cast<int>(slots_.size()); }

    // Selection of a given rank (mixed-radix decode of the slot choices).
    void decode(uint64_t rank, Selection& out) const;
    // Advance to the successor rank; returns false past the last selection.
    bool advance(Selection& inout) const;

   private:
    struct Slot {
        int agent = 0;
        int layer = 0;
        const std::vector<Edge>* choices = nullptr;
    };
    const MultiplexNetwork* net_;
    std::vector<Slot> slots_;
    std::vector<int> choice_;  // scratch for advance: current index per slot
    uint64_t total_ = 1;

    friend class SelectionCursor;
};

// Options shared by the exact computations.
struct LemOptions {
    uint64_t selection_cap = 10000000;  // enumeration refuses beyond this
    int threads = 0;                    // <= 0: hardware concurrency
};

// Reads MLTM_ENUM_CAP (and leaves the rest at defaults). Explicit fields set
// by callers take precedence over the environment.
LemOptions default_lem_options();

// Steady state of the deterministic cascade a selection induces: starting
// from the seeds, an unseeded agent joins once at least quota[i] of its kept
// edges point into the active set. Slots with no edge never fire, so an
// all-layers agent with an empty layer can never join.
std::vector<uint8_t> reachable_fixed_point(const MultiplexNetwork& net, const Selection& sel,
                                           const std::vector<int>& quotas,
                                           const std::vector<int>& seeds);

struct ExactResult {
    std::vector<double> activation;  // exact steady-state activation probability
    double spread = 0.0;             // == sum(activation)
    uint64_t selections = 0;         // number of configurations enumerated
};

// Exact activation probabilities by total enumeration: sum q over the
// selections whose cascade reaches each agent. Protocols must be pure OR/AND
// per agent. Throws CapacityError when the selection count exceeds the cap.
// Deterministic for every thread count (fixed chunking, compensated sums,
// in-order reduction).
ExactResult exact_probabilities(const MultiplexNetwork& net, const ProtocolSequence& protocols,
                                const std::vector<int>& seeds, const LemOptions& opts = {});

// Influence of a single agent: the expected final cascade size when {j}
// seeds the network. The seed itself counts 1.
double cascade_centrality(const MultiplexNetwork& net, const ProtocolSequence& protocols, int j,
                          const LemOptions& opts = {});

// ---- Live-edge tree oracle -------------------------------------------------
//
// The tree unfolds a selection from one root: each node expands along the
// owning agent's kept edge per layer, pruning a child that already occurs on
// the path; a path becomes a branch when it ends in a seed. This is the
// reference semantics the fixed point is checked against in tests.

struct TreeNode {
    int agent = 0;
    int parent = -1;                        // node index, -1 at the root
    std::vector<std::pair<int, int>> children;  // (layer, node index)
};

struct Branch {
    std::vector<int> agents;                    // root ... seed
    std::vector<std::pair<int, int>> edges;     // (agent, layer) along the path
};

struct LiveEdgeTree {
    int root = 0;
    std::vector<TreeNode> nodes;   // nodes[0] is the root
    std::vector<Branch> branches;  // seed-terminated root paths, DFS order
    std::vector<int> selection_target;  // the generating selection's targets
};

// Throws CapacityError when the unfolding exceeds node_cap nodes.
LiveEdgeTree build_live_edge_tree(const MultiplexNetwork& net, const Selection& sel, int root,
                                  const std::vector<int>& seeds, size_t node_cap = 200000);

// Branch-subset reachability: the root is reachable iff some nonempty subset
// of branches is feasible -- every all-layers agent occurring in the subset's
// node set has all m of its kept edges present in the subset's edge set (and
// has no empty layer). Protocols must be pure OR/AND. Exponential in the
// branch count; refuses (CapacityError) beyond branch_cap branches. Reads
// MLTM_TREE_BRANCH_CAP when branch_cap <= 0.
bool reachable_in_tree(const MultiplexNetwork& net, const LiveEdgeTree& tree,
                       const ProtocolSequence& protocols, const std::vector<int>& seeds,
                       int branch_cap = 0);

}  // namespace mltm
