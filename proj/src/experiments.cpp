#include "mltm/experiments.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "mltm/analytic.hpp"
#include "mltm/errors.hpp"
#include "mltm/rng.hpp"

namespace mltm {

MultiplexNetwork build_signal_network(const MultiplexNetwork& base, int observer, SignalMode mode,
                                      SignalEdgePolicy policy) {
    if (observer < 0 || observer >= base.n) throw ValidationError("observer id out of range");
    if (mode == SignalMode::SpuriousLayer2 && base.m < 2)
        throw ValidationError("a layer-2 signal needs at least 2 layers");

    MultiplexNetwork net;
    net.n = base.n + 1;
    net.m = base.m;
    net.out.assign(net.m, std::vector<std::vector<Edge>>(net.n));
    for (int k = 0; k < net.m; ++k)
        for (int i = 0; i < base.n; ++i) net.out[k][i] = base.out[k][i];
    net.layer_names = base.layer_names;
    if (!base.agent_names.empty()) {
        net.agent_names = base.agent_names;
        net.agent_names.push_back("signal");
    }

    const int signal = base.n;
    for (int k = 0; k < net.m; ++k) {
        bool affected = mode == SignalMode::Real || (mode == SignalMode::SpuriousLayer1 && k == 0) ||
                        (mode == SignalMode::SpuriousLayer2 && k == 1);
        if (!affected) continue;
        auto& list = net.out[k][observer];
        if (policy == SignalEdgePolicy::Replace) {
            list = {{signal, 1.0}};
        } else {
            // Keep the old attention, insert the signal at raw weight 1, and
            // rescale the layer back to a unit budget.
            list.push_back({signal, 1.0});
            double sum = 0.0;
            for (const auto& e : list) sum += e.weight;
            for (auto& e : list) e.weight /= sum;
        }
    }
    return net;
}

namespace {

ProtocolSequence with_signal_protocol(const ProtocolSequence& base) {
    ProtocolSequence seq = base;
    seq.agents.push_back(ProtocolSpec::any_layer());  // the signal seeds; its protocol is moot
    return seq;
}

// Mean signal centralities over observers: first = real events, second =
// total of the two single-layer spurious events.
std::pair<double, double> signal_centralities(const MultiplexNetwork& base,
                                              const ProtocolSequence& protocols,
                                              SignalEdgePolicy policy, const LemOptions& opts) {
    const ProtocolSequence seq = with_signal_protocol(protocols);
    const int signal = base.n;
    double real = 0.0, spurious = 0.0;
    for (int l = 0; l < base.n; ++l) {
        real += cascade_centrality(build_signal_network(base, l, SignalMode::Real, policy), seq,
                                   signal, opts);
        spurious += cascade_centrality(
            build_signal_network(base, l, SignalMode::SpuriousLayer1, policy), seq, signal, opts);
        spurious += cascade_centrality(
            build_signal_network(base, l, SignalMode::SpuriousLayer2, policy), seq, signal, opts);
    }
    return {real / base.n, spurious / base.n};
}

}  // namespace

double utility_q(const MultiplexNetwork& base, const ProtocolSequence& protocols, double c,
                 SignalEdgePolicy policy, const LemOptions& opts) {
    if (protocols.size() != base.n)
        throw ValidationError("protocol sequence must cover the base agents");
    auto [real, spurious] = signal_centralities(base, protocols, policy, opts);
    return real - 0.5 * c * spurious;
}

std::vector<UtilitySweepRow> optimal_protocol_sweep(const MultiplexNetwork& base,
                                                    const std::vector<double>& c_grid,
                                                    SignalEdgePolicy policy,
                                                    const LemOptions& opts) {
    const int n = base.n;
    if (n > 20)
        throw CapacityError("protocol sweep enumerates 2^n assignments; n = " +
                            std::to_string(n) + " is over the limit of 20");

    // Per-assignment means: utility is linear in c, so one pass over the
    // assignments serves the whole grid.
    const uint64_t count = uint64_t{1} << n;
    std::vector<double> real(count), spurious(count);
    for (uint64_t mask = 0; mask < count; ++mask) {
        auto [r, s] = signal_centralities(base, ProtocolSequence::from_mask(n, mask), policy, opts);
        real[mask] = r;
        spurious[mask] = s;
    }

    constexpr double kTieTol = 1e-9;
    std::vector<UtilitySweepRow> rows;
    rows.reserve(c_grid.size());
    for (double c : c_grid) {
        UtilitySweepRow row;
        row.c = c;
        double best = -std::numeric_limits<double>::infinity();
        for (uint64_t mask = 0; mask < count; ++mask)
            best = std::max(best, real[mask] - 0.5 * c * spurious[mask]);
        for (uint64_t mask = 0; mask < count; ++mask)
            if (real[mask] - 0.5 * c * spurious[mask] >= best - kTieTol)
                row.optimal_masks.push_back(mask);
        row.q_opt = best;
        // Representative for the fraction: fewest all-layers agents, then
        // numerically smallest.
        uint64_t rep = row.optimal_masks.front();
        for (uint64_t mask : row.optimal_masks)
            if (std::popcount(mask) < std::popcount(rep)) rep = mask;
        row.fraction_all_layers = static_cast<double>(std::popcount(rep)) / n;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<PeSweepRow> pe_sweep(int n, const std::vector<double>& pe_grid, int replicates,
                                 uint64_t master_seed, SweepBackend backend) {
    if (n < 1) throw ValidationError("need at least 1 agent");
    if (replicates < 1) throw ValidationError("need at least 1 replicate");
    for (double p : pe_grid)
        if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("edge probabilities must lie in [0, 1]");

    const std::vector<std::string> modes = {"or", "and", "mixed"};
    // Undamped flooding reaches the exact fixed point on the degenerate
    // grid endpoints and on trees; fall back to damping only when an instance
    // actually oscillates.
    LbpOptions lbp;
    lbp.damping = 0.0;
    lbp.tol = 1e-9;
    lbp.max_iters = 500;
    lbp.retry_undamped_failure = true;

    // Welford running moments: the naive sum/sum-of-squares form cancels
    // catastrophically when all replicates agree to ~1e-12 (the endpoint
    // densities), reporting a standard error of ~1e-7 out of thin air.
    struct Tally {
        int count = 0;
        double mean = 0.0, m2 = 0.0;
        int non_converged = 0;
        void add(double x) {
            ++count;
            double delta = x - mean;
            mean += delta / count;
            m2 += delta * (x - mean);
        }
    };
    std::vector<PeSweepRow> rows;
    for (size_t pi = 0; pi < pe_grid.size(); ++pi) {
        std::vector<Tally> tally(modes.size());
        for (int r = 0; r < replicates; ++r) {
            const uint64_t id = static_cast<uint64_t>(pi) * replicates + r;
            MultiplexNetwork net = random_duplex_dag(n, pe_grid[pi], substream_seed(master_seed, id));
            // One protocol draw per replicate, shared by the mixed mode
            // regardless of evaluation order.
            SplitMix64 coin(substream_seed(master_seed ^ 0xC0FFEE5EEDULL, id));
            ProtocolSequence mixed;
            for (int i = 0; i < n; ++i)
                mixed.agents.push_back(coin.next_double() < 0.5 ? ProtocolSpec::any_layer()
                                                                : ProtocolSpec::all_layers());
            for (size_t mi = 0; mi < modes.size(); ++mi) {
                const ProtocolSequence& protocols =
                    mi == 0   ? ProtocolSequence::uniform(n, ProtocolKind::Or)
                    : mi == 1 ? ProtocolSequence::uniform(n, ProtocolKind::And)
                              : mixed;
                BnMethod method = BnMethod::Lbp;
                if (backend == SweepBackend::Exact || (backend == SweepBackend::Auto && n <= 12))
                    method = BnMethod::Exact;
                MarginalResult res = influence_spread_bn(net, protocols, {0}, method, lbp);
                tally[mi].add(res.spread);
                tally[mi].non_converged += res.converged ? 0 : 1;
            }
        }
        for (size_t mi = 0; mi < modes.size(); ++mi) {
            PeSweepRow row;
            row.p_e = pe_grid[pi];
            row.mode = modes[mi];
            row.mean_centrality = tally[mi].mean;
            if (replicates > 1) {
                double var = tally[mi].m2 / (replicates - 1);
                row.std_error = std::sqrt(std::max(0.0, var) / replicates);
            }
            row.non_converged = tally[mi].non_converged;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

}  // namespace mltm
