#pragma once

#include <cstdint>
#include <vector>

#include "mltm/network.hpp"
#include "mltm/protocol.hpp"
#include "mltm/rng.hpp"

namespace mltm {

struct TrialResult {
    std::vector<uint8_t> active;  // size n, 1 = activated by convergence
    int rounds = 0;               // synchronous rounds until the fixed point
};

// One threshold-model trial. Thresholds mu[i][k] ~ U(0,1) are drawn once,
// for every (agent, layer) pair in row-major order (all seeds included, so
// the stream layout does not depend on the seed set), then the synchronous
// dynamics run to convergence: layer k fires for agent i when the total
// attention i pays to active agents in k strictly exceeds mu[i][k]; agent i
// joins when at least `quota[i]` layers fire. Activation is monotone, so the
// process stops after at most n rounds.
TrialResult run_trial(const MultiplexNetwork& net, const ProtocolSequence& protocols,
                      const std::vector<int>& seeds, SplitMix64& rng);

struct SpreadEstimate {
    std::vector<double> activation;  // per-agent activation frequency
    double spread = 0.0;             // == sum(activation), exactly
    long long trials = 0;
    uint64_t master_seed = 0;
};

// Monte Carlo estimate over `trials` independent trials. Trial t uses the
// substream seeded by (master_seed, t), and per-agent tallies are integers,
// so the estimate is bit-identical for every thread count. threads <= 0
// means hardware concurrency.
SpreadEstimate estimate_spread(const MultiplexNetwork& net, const ProtocolSequence& protocols,
                               const std::vector<int>& seeds, long long trials,
                               uint64_t master_seed, int threads = 0);

}  // namespace mltm
