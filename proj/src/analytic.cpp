#include "mltm/analytic.hpp"

#include <algorithm>
#include <cmath>

#include "mltm/errors.hpp"
#include "mltm/rng.hpp"

namespace mltm {

namespace {

// Assemble a network from target lists, splitting attention evenly.
MultiplexNetwork from_targets(int n, const std::vector<std::vector<std::vector<int>>>& targets) {
    MultiplexNetwork net;
    net.n = n;
    net.m = static_cast<int>(targets.size());
    net.out.assign(net.m, std::vector<std::vector<Edge>>(n));
    for (int k = 0; k < net.m; ++k)
        for (int i = 0; i < n; ++i) {
            auto ts = targets[k][i];
            std::sort(ts.begin(), ts.end());
            if (ts.empty()) continue;
            double w = 1.0 / static_cast<double>(ts.size());
            for (int t : ts) net.out[k][i].push_back({t, w});
        }
    return net;
}

std::vector<std::vector<int>> path_targets(int N) {
    std::vector<std::vector<int>> t(N);
    for (int i = 0; i < N; ++i) {
        if (i > 0) t[i].push_back(i - 1);
        if (i < N - 1) t[i].push_back(i + 1);
    }
    return t;
}

}  // namespace

MultiplexNetwork path_network(int N) {
    if (N < 2) throw ValidationError("path networks need at least 2 agents");
    return from_targets(N, {path_targets(N)});
}

MultiplexNetwork repeated_path_network(int N) {
    if (N < 2) throw ValidationError("path networks need at least 2 agents");
    auto t = path_targets(N);
    return from_targets(N, {t, t});
}

MultiplexNetwork cycle_network(int N) {
    if (N < 3) throw ValidationError("cycle networks need at least 3 agents");
    std::vector<std::vector<int>> t(N);
    for (int i = 0; i < N; ++i) {
        t[i].push_back((i + N - 1) % N);
        t[i].push_back((i + 1) % N);
    }
    return from_targets(N, {t});
}

MultiplexNetwork permutation_network(int N) {
    if (N < 3) throw ValidationError("the near-cycle construction needs at least 3 agents");
    // Undirected cycle links, with one link removed per layer: layer 1 loses
    // {1, N}, layer 2 loses {N-1, N} (1-based).
    std::vector<std::vector<std::vector<int>>> targets(2,
                                                       std::vector<std::vector<int>>(N));
    for (int k = 0; k < 2; ++k) {
        int drop_a = (k == 0) ? 0 : N - 2;  // 0-based endpoints of the dropped link
        int drop_b = N - 1;
        for (int i = 0; i < N; ++i) {
            int a = i, b = (i + 1) % N;
            if ((a == drop_a && b == drop_b) || (a == drop_b && b == drop_a)) continue;
            targets[k][a].push_back(b);
            targets[k][b].push_back(a);
        }
    }
    return from_targets(N, targets);
}

MultiplexNetwork random_duplex_dag(int n, double p_e, uint64_t seed) {
    if (n < 1) throw ValidationError("need at least 1 agent");
    if (!(p_e >= 0.0 && p_e <= 1.0)) throw ValidationError("edge probability must lie in [0, 1]");
    SplitMix64 rng(seed);
    std::vector<std::vector<std::vector<int>>> targets(2, std::vector<std::vector<int>>(n));
    // Fixed draw order (layer, observer, target) keeps the construction a
    // pure function of the seed.
    for (int k = 0; k < 2; ++k)
        for (int j = 1; j < n; ++j)
            for (int i = 0; i < j; ++i)
                if (rng.next_double() < p_e) targets[k][j].push_back(i);
    return from_targets(n, targets);
}

namespace {

double geometric_sum(double p0, int count) {  // sum_{l=0}^{count-1} p0^l
    double sum = 0.0, term = 1.0;
    for (int l = 0; l < count; ++l) {
        sum += term;
        term *= p0;
    }
    return sum;
}

}  // namespace

double repeated_path_centrality(int N, int j, RepeatedPathVariant variant) {
    if (N < 2) throw ValidationError("path networks need at least 2 agents");
    if (j < 1 || j > N) throw ValidationError("seed position out of range 1..N");
    double p0 = 0.0;
    switch (variant) {
        case RepeatedPathVariant::AnyLayer: p0 = 0.75; break;
        case RepeatedPathVariant::AllLayers: p0 = 0.25; break;
        case RepeatedPathVariant::SingleLayer: p0 = 0.5; break;
    }
    // Influence decays geometrically along the interior of the path, one
    // p0 per interior step; a degree-1 end copies its sole neighbor with
    // probability 1, which shows up as the doubled final term (and, for an
    // off-end seed, the leading constant 1).
    if (j == 1 || j == N)
        return geometric_sum(p0, N - 1) + std::pow(p0, N - 2);
    if (j == 2 || j == N - 1)
        return 1.0 + geometric_sum(p0, N - 2) + std::pow(p0, N - 3);
    return geometric_sum(p0, j - 1) + std::pow(p0, j - 2) + (geometric_sum(p0, N - j) - 1.0) +
           std::pow(p0, N - j - 1);
}

double permutation_probability(int N, int i, int j, PermutationVariant variant) {
    if (i < 3 || i > N - 3)
        throw ValidationError("target position must satisfy 3 <= i <= N-3");
    if (!((j >= 2 && j <= i - 2) || (j >= i + 2 && j <= N - 2)))
        throw ValidationError("seed position must lie in {2..i-2} or {i+2..N-2}");
    const int d = std::abs(i - j);
    switch (variant) {
        case PermutationVariant::AnyLayer:
            // Direct arc, plus the arc through the wrap link (agents 1 and N
            // pass deterministically, agent N-1 at 1/2), minus the both-ways
            // overlap: the target needs its two kept edges to cover both
            // directions (1/4) and the wrap leg still pays agent N-1's 1/2.
            return std::pow(0.75, d) + 0.5 * std::pow(0.75, N - d - 3) -
                   0.25 * std::pow(0.75, N - 5);
        case PermutationVariant::AllLayers:
            return std::pow(0.25, d);
        case PermutationVariant::Cycle:
            // The two directions need disjoint selections of the target's
            // single kept edge, so the event union is a plain sum.
            return std::pow(0.5, d) + std::pow(0.5, N - d);
    }
    throw ValidationError("unknown variant");
}

}  // namespace mltm
