#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mltm/bn.hpp"
#include "mltm/lem.hpp"
#include "mltm/network.hpp"
#include "mltm/protocol.hpp"

namespace mltm {

// Which layers carry the external signal an agent starts observing:
// a real event is perceptible on every layer, a spurious one on a single
// layer only.
enum class SignalMode { Real, SpuriousLayer1, SpuriousLayer2 };

// What happens to the observer's existing attention in a layer the signal
// enters: Replace drops those edges (the signal takes the whole layer,
// weight 1); Renormalize keeps them, inserting the signal at raw weight 1
// and rescaling the layer back to total attention 1.
enum class SignalEdgePolicy { Replace, Renormalize };

// Returns the base network extended by one signal agent (id n+1, 1-based)
// with no out-edges, observed by `observer` (0-based) on the layers the mode
// selects. SpuriousLayer2 requires m >= 2.
MultiplexNetwork build_signal_network(const MultiplexNetwork& base, int observer, SignalMode mode,
                                      SignalEdgePolicy policy = SignalEdgePolicy::Replace);

// Group utility of a protocol assignment at false-alarm cost c: the mean
// over observers of [centrality of a real signal] minus c/2 times the mean
// total centrality of the two one-layer spurious signals. Centralities seed
// the signal agent and count it, so a signal nobody reacts to scores 1.
// `protocols` covers the base agents; the signal agent is appended
// internally.
double utility_q(const MultiplexNetwork& base, const ProtocolSequence& protocols, double c,
                 SignalEdgePolicy policy = SignalEdgePolicy::Replace,
                 const LemOptions& opts = {});

struct UtilitySweepRow {
    double c = 0.0;
    double q_opt = 0.0;
    double fraction_all_layers = 0.0;  // of the best assignment (ties: smallest)
    std::vector<uint64_t> optimal_masks;  // bit i set = agent i uses AND; sorted
};

// Exhaustive protocol-assignment sweep over a cost grid: for each c, the
// maximizing OR/AND assignments (ties within 1e-9). Gated to n <= 20 base
// agents (CapacityError). The per-assignment utilities are computed once and
// reused across the grid.
std::vector<UtilitySweepRow> optimal_protocol_sweep(const MultiplexNetwork& base,
                                                    const std::vector<double>& c_grid,
                                                    SignalEdgePolicy policy = SignalEdgePolicy::Replace,
                                                    const LemOptions& opts = {});

enum class SweepBackend { Auto, Exact, Lbp };

struct PeSweepRow {
    double p_e = 0.0;
    std::string mode;             // "or", "and", "mixed"
    double mean_centrality = 0.0; // mean over replicates of the root's cascade size
    double std_error = 0.0;       // sample standard error of that mean
    int non_converged = 0;        // replicates whose LBP run did not converge
};

// Density sweep on random duplex DAGs: for every p_e in the grid, generate
// `replicates` networks (substreams of master_seed; one network is evaluated
// under all three protocol modes) and average the cascade size seeded at the
// root. "mixed" draws each agent's protocol uniformly. Auto backend uses
// exact enumeration up to n = 12 and LBP beyond.
std::vector<PeSweepRow> pe_sweep(int n, const std::vector<double>& pe_grid, int replicates,
                                 uint64_t master_seed, SweepBackend backend = SweepBackend::Auto);

}  // namespace mltm
