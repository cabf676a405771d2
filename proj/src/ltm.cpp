#include "mltm/ltm.hpp"

#include <atomic>
#include <mutex>
#include <numeric>
#include <thread>

#include "mltm/errors.hpp"

namespace mltm {

namespace {

void check_inputs(const MultiplexNetwork& net, const ProtocolSequence& protocols,
                  const std::vector<int>& seeds) {
    if (protocols.size() != net.n)
        throw ValidationError("protocol sequence covers " + std::to_string(protocols.size()) +
                              " agents, network has " + std::to_string(net.n));
    for (int s : seeds)
        if (s < 0 || s >= net.n) throw ValidationError("seed id out of range");
}

struct TrialScratch {
    std::vector<double> mu;
    std::vector<int> newly;
};

// The trial proper, without validation or allocation; `active` must come in
// zeroed except for the seeds.
int run_trial_impl(const MultiplexNetwork& net, const std::vector<int>& quota,
                   SplitMix64& rng, TrialScratch& scratch, std::vector<uint8_t>& active) {
    const int n = net.n, m = net.m;

    // One threshold per (agent, layer), drawn up front in row-major order so
    // the stream consumption is a fixed function of (n, m).
    scratch.mu.resize(static_cast<size_t>(n) * m);
    for (auto& v : scratch.mu) v = rng.next_double();

    int rounds = 0;
    for (;;) {
        scratch.newly.clear();
        for (int i = 0; i < n; ++i) {
            if (active[i]) continue;
            int fired = 0;
            for (int k = 0; k < m; ++k) {
                double pull = 0.0;
                for (const auto& e : net.out[k][i])
                    if (active[e.to]) pull += e.weight;
                if (scratch.mu[static_cast<size_t>(i) * m + k] < pull) ++fired;
            }
            if (fired >= quota[i]) scratch.newly.push_back(i);
        }
        if (scratch.newly.empty()) break;
        for (int i : scratch.newly) active[i] = 1;
        ++rounds;
    }
    return rounds;
}

}  // namespace

TrialResult run_trial(const MultiplexNetwork& net, const ProtocolSequence& protocols,
                      const std::vector<int>& seeds, SplitMix64& rng) {
    check_inputs(net, protocols, seeds);
    TrialResult res;
    res.active.assign(net.n, 0);
    for (int s : seeds) res.active[s] = 1;
    TrialScratch scratch;
    res.rounds = run_trial_impl(net, protocols.quotas(net.m), rng, scratch, res.active);
    return res;
}

SpreadEstimate estimate_spread(const MultiplexNetwork& net, const ProtocolSequence& protocols,
                               const std::vector<int>& seeds, long long trials,
                               uint64_t master_seed, int threads) {
    check_inputs(net, protocols, seeds);
    if (trials <= 0) throw ValidationError("trial count must be positive");
    const std::vector<int> quota = protocols.quotas(net.m);

    constexpr long long kChunk = 4096;
    const long long chunks = (trials + kChunk - 1) / kChunk;
    int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;
    workers = static_cast<int>(std::min<long long>(workers, chunks));

    // Integer per-agent tallies: addition commutes exactly, so the merged
    // counts (hence the estimate) cannot depend on the worker count.
    std::vector<uint64_t> counts(net.n, 0);
    std::mutex merge_mutex;
    std::atomic<long long> next_chunk{0};

    auto work = [&]() {
        std::vector<uint64_t> local(net.n, 0);
        std::vector<uint8_t> active(net.n);
        TrialScratch scratch;
        for (;;) {
            long long c = next_chunk.fetch_add(1);
            if (c >= chunks) break;
            long long lo = c * kChunk, hi = std::min(trials, lo + kChunk);
            for (long long t = lo; t < hi; ++t) {
                SplitMix64 rng(substream_seed(master_seed, static_cast<uint64_t>(t)));
                std::fill(active.begin(), active.end(), 0);
                for (int s : seeds) active[s] = 1;
                run_trial_impl(net, quota, rng, scratch, active);
                for (int i = 0; i < net.n; ++i) local[i] += active[i];
            }
        }
        std::lock_guard<std::mutex> lock(merge_mutex);
        for (int i = 0; i < net.n; ++i) counts[i] += local[i];
    };

    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }

    SpreadEstimate est;
    est.trials = trials;
    est.master_seed = master_seed;
    est.activation.resize(net.n);
    for (int i = 0; i < net.n; ++i)
        est.activation[i] = static_cast<double>(counts[i]) / static_cast<double>(trials);
    est.spread = std::accumulate(est.activation.begin(), est.activation.end(), 0.0);
    return est;
}

}  // namespace mltm
