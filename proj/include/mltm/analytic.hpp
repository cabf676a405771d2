#pragma once

#include <cstdint>

#include "mltm/network.hpp"

namespace mltm {

// ---- Closed-form network families -------------------------------------–---
//
// All generators index agents 1..N in the construction described and emit the
// usual 0-based network. Every agent observes its listed neighbors with equal
// attention (1/out-degree).

// Monoplex path 1-2-...-N.
MultiplexNetwork path_network(int N);

// Duplex network whose two layers are both the path 1-2-...-N.
MultiplexNetwork repeated_path_network(int N);

// Monoplex cycle 1-2-...-N-1.
MultiplexNetwork cycle_network(int N);

// Duplex near-cycle: layer 1 is the cycle with link {1,N} removed, layer 2
// the cycle with link {N-1,N} removed.
MultiplexNetwork permutation_network(int N);

// Random duplex DAG: independently per layer, agent j observes each i < j
// with probability p_e; attention is split evenly. Agent 1 observes nobody
// (it is the natural root/source of influence). Deterministic in `seed`.
MultiplexNetwork random_duplex_dag(int n, double p_e, uint64_t seed);

// ---- Closed forms ----------------------------------------------------------

enum class RepeatedPathVariant {
    AnyLayer,     // duplex path, OR protocols: per-step copy probability 3/4
    AllLayers,    // duplex path, AND protocols: 1/4
    SingleLayer,  // monoplex path: 1/2
};

// Cascade centrality of seed j (1-based) on the (repeated) path of length N:
// h_j(p0) with p0 determined by the variant. Matches the exact engine to
// 1e-12 for all N and j. Throws ValidationError unless 1 <= j <= N, N >= 2.
double repeated_path_centrality(int N, int j, RepeatedPathVariant variant);

enum class PermutationVariant {
    AnyLayer,   // permutation network, OR protocols
    AllLayers,  // permutation network, AND protocols
    Cycle,      // monoplex cycle baseline
};

// Steady-state activation probability of agent i when {j} seeds the
// permutation network (or the cycle for the baseline variant), both 1-based.
// Valid on the interior domain 3 <= i <= N-3 with j in {2..i-2} u {i+2..N-2};
// throws ValidationError outside it.
double permutation_probability(int N, int i, int j, PermutationVariant variant);

}  // namespace mltm
