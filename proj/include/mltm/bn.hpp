#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mltm/network.hpp"
#include "mltm/protocol.hpp"

namespace mltm {

// Conditional probability table of one agent's steady-state indicator given
// its parents (the agents it observes, in the aggregate projection). Stored
// structurally -- per-layer weight terms plus the protocol -- so that a row
// is O(parents) to evaluate and the table never has to be materialized for
// wide families.
//
// Row semantics: s_k = sum of the agent's layer-k attention on active
// parents; P(active | parents) = 1 - prod_k (1 - s_k) for any-layer agents,
// prod_k s_k for all-layers agents.
struct Cpt {
    int agent = 0;
    int m = 0;
    bool all_layers = false;        // false: OR, true: AND
    std::vector<int> parents;       // ascending agent ids
    // layer_terms[k]: (index into `parents`, weight) for the agent's layer-k
    // out-edges.
    std::vector<std::vector<std::pair<int, double>>> layer_terms;

    double prob_active(uint64_t parent_bits) const;
    // All 2^|parents| rows, parent bits little-endian in `parents` order.
    // Throws CapacityError beyond 20 parents.
    std::vector<double> materialize() const;
};

struct BayesNet {
    int n = 0;
    int m = 0;
    std::vector<Cpt> cpts;      // one per agent, indexed by agent
    MonoplexNetwork dag;        // the aggregate projection (validated acyclic)
    std::vector<int> topo;      // parents-first agent order
};

// Maps a multiplex network + pure OR/AND protocols onto the equivalent
// Bayesian network. Throws ValidationError when the projection has a cycle
// or a protocol is neither OR nor AND.
BayesNet build_bayes_net(const MultiplexNetwork& net, const ProtocolSequence& protocols);

// Evidence vector: -1 unobserved, 0 pinned inactive, 1 pinned active.
// Pinned nodes are interventions: their own tables are replaced by point
// masses, and they enter neighbors' tables as constants. (Conditioning
// instead would divide by a zero-probability event whenever a pinned-active
// node's parents are all inactive.)
using Evidence = std::vector<int8_t>;

// The evidence set that turns marginals into influence probabilities:
// seeds pinned active; agents that observe nobody and are not seeded pinned
// inactive.
Evidence influence_evidence(const BayesNet& bn, const std::vector<int>& seeds);

struct MarginalResult {
    std::vector<double> marginal;  // per-agent P(active); pinned agents keep their value
    double spread = 0.0;           // == sum(marginal)
    std::string method;            // "exact" or "lbp"
    bool converged = true;         // always true for exact
    int iterations = 0;
    double residual = 0.0;         // exact: |total mass - 1|; lbp: last message delta
};

// Exact marginals by enumerating the unobserved nodes' joint assignments.
// Throws CapacityError beyond `unobserved_cap` unobserved nodes (<= 0 reads
// MLTM_BN_ENUM_CAP, default 25).
MarginalResult exact_marginals(const BayesNet& bn, const Evidence& evidence,
                               int unobserved_cap = 0);

struct LbpOptions {
    double damping = 0.5;   // blend kept from the previous iteration (0 = none)
    double tol = 1e-6;      // convergence threshold on the max message change
    int max_iters = 200;
    bool retry_undamped_failure = false;  // if damping==0 fails, rerun at 0.5
};

// Loopy belief propagation on the factor graph, flooding schedule (all
// factor-to-variable messages recomputed per iteration from the previous
// ones, then variable products refreshed). Messages are computed from the
// structured tables by moment expansion, never by row enumeration, so wide
// families cost O(parents) per message. Exact on polytrees. Non-convergence
// is reported in the result, not thrown.
MarginalResult loopy_bp(const BayesNet& bn, const Evidence& evidence, const LbpOptions& opts = {});

enum class BnMethod { Auto, Exact, Lbp };

// Influence spread through the Bayes-net backend: build, pin the influence
// evidence, run the requested inference. Auto picks exact while the
// unobserved count fits the enumeration cap, otherwise LBP.
MarginalResult influence_spread_bn(const MultiplexNetwork& net, const ProtocolSequence& protocols,
                                   const std::vector<int>& seeds, BnMethod method = BnMethod::Auto,
                                   const LbpOptions& lbp = {}, int unobserved_cap = 0);

}  // namespace mltm
