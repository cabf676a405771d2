#include "mltm/lem.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <thread>

#include "mltm/errors.hpp"
#include "mltm/numeric.hpp"

namespace mltm {

namespace {

uint64_t env_u64(const char* name, uint64_t fallback) {
    const char* raw = std::getenv(name);
    if (!raw || !*raw) return fallback;
    char* end = nullptr;
    unsigned long long v = std::strtoull(raw, &end, 10);
    if (end == raw || *end != '\0')
        throw ValidationError(std::string(name) + " must be a nonnegative integer, got \"" + raw +
                              "\"");
    return static_cast<uint64_t>(v);
}

void check_or_and(const MultiplexNetwork& net, const ProtocolSequence& protocols,
                  const char* what) {
    if (protocols.size() != net.n)
        throw ValidationError("protocol sequence covers " + std::to_string(protocols.size()) +
                              " agents, network has " + std::to_string(net.n));
    if (!protocols.is_or_and(net.m))
        throw ValidationError(std::string(what) +
                              " requires every agent to use a pure any-layer or all-layers "
                              "protocol");
}

std::vector<uint8_t> seed_flags(int n, const std::vector<int>& seeds) {
    std::vector<uint8_t> flag(n, 0);
    for (int s : seeds) {
        if (s < 0 || s >= n) throw ValidationError("seed id out of range");
        flag[s] = 1;
    }
    return flag;
}

}  // namespace

LemOptions default_lem_options() {
    LemOptions opts;
    opts.selection_cap = env_u64("MLTM_ENUM_CAP", opts.selection_cap);
    return opts;
}

SelectionEnumerator::SelectionEnumerator(const MultiplexNetwork& net,
                                         const std::vector<int>& seeds)
    : net_(&net) {
    auto seeded = seed_flags(net.n, seeds);
    for (int i = 0; i < net.n; ++i) {
        if (seeded[i]) continue;  // a seed keeps no edges
        for (int k = 0; k < net.m; ++k) {
            const auto& choices = net.out[k][i];
            if (choices.empty()) continue;
            slots_.push_back({i, k, &choices});
            // Saturating product: past UINT64_MAX the exact count no longer
            // matters, only that it exceeds every cap.
            uint64_t sz = choices.size();
            total_ = (total_ > UINT64_MAX / sz) ? UINT64_MAX : total_ * sz;
        }
    }
    choice_.assign(slots_.size(), 0);
}

void SelectionEnumerator::decode(uint64_t rank, Selection& out) const {
    const int n = net_->n, m = net_->m;
    out.target.assign(static_cast<size_t>(n) * m, -1);
    out.choice.assign(slots_.size(), 0);
    out.q = 1.0;
    // Mixed radix, last slot least significant (lexicographic over ranks).
    for (int s = static_cast<int>(slots_.size()) - 1; s >= 0; --s) {
        uint64_t sz = slots_[s].choices->size();
        int digit = static_cast<int>(rank % sz);
        rank /= sz;
        out.choice[s] = digit;
        const Edge& e = (*slots_[s].choices)[digit];
        out.target[static_cast<size_t>(slots_[s].agent) * m + slots_[s].layer] = e.to;
        out.q *= e.weight;
    }
}

bool SelectionEnumerator::advance(Selection& inout) const {
    const int m = net_->m;
    int s = static_cast<int>(slots_.size()) - 1;
    for (; s >= 0; --s) {
        if (inout.choice[s] + 1 < static_cast<int>(slots_[s].choices->size())) {
            ++inout.choice[s];
            break;
        }
        inout.choice[s] = 0;
    }
    if (s < 0) return false;
    // Only slots s.. changed; refresh their targets and rebuild q. Rebuilding
    // in full keeps q exactly the product of the current weights (no drift
    // from repeated division).
    for (int t = s; t < static_cast<int>(slots_.size()); ++t) {
        const Edge& e = (*slots_[t].choices)[inout.choice[t]];
        inout.target[static_cast<size_t>(slots_[t].agent) * m + slots_[t].layer] = e.to;
    }
    inout.q = 1.0;
    for (int t = 0; t < static_cast<int>(slots_.size()); ++t)
        inout.q *= (*slots_[t].choices)[inout.choice[t]].weight;
    return true;
}

std::vector<uint8_t> reachable_fixed_point(const MultiplexNetwork& net, const Selection& sel,
                                           const std::vector<int>& quotas,
                                           const std::vector<int>& seeds) {
    const int n = net.n, m = net.m;
    if (static_cast<int>(quotas.size()) != n) throw ValidationError("quota vector size mismatch");
    std::vector<uint8_t> active = seed_flags(n, seeds);
    // Monotone closure; within-pass propagation changes the route, never the
    // fixed point.
    bool changed = true;
    while (changed) {
        changed = false;
        for (int i = 0; i < n; ++i) {
            if (active[i]) continue;
            int live = 0;
            for (int k = 0; k < m; ++k) {
                int t = sel.target[static_cast<size_t>(i) * m + k];
                if (t >= 0 && active[t]) ++live;
            }
            if (live >= quotas[i]) {
                active[i] = 1;
                changed = true;
            }
        }
    }
    return active;
}

namespace {

// Fixed-point evaluation inlined for the enumeration loop: no allocation,
// reuses the caller's buffers.
void fixed_point_into(const MultiplexNetwork& net, const Selection& sel,
                      const std::vector<int>& quotas, const std::vector<uint8_t>& seeded,
                      std::vector<uint8_t>& active) {
    const int n = net.n, m = net.m;
    std::copy(seeded.begin(), seeded.end(), active.begin());
    bool changed = true;
    while (changed) {
        changed = false;
        for (int i = 0; i < n; ++i) {
            if (active[i]) continue;
            int live = 0;
            for (int k = 0; k < m; ++k) {
                int t = sel.target[static_cast<size_t>(i) * m + k];
                if (t >= 0 && active[t]) ++live;
            }
            if (live >= quotas[i]) {
                active[i] = 1;
                changed = true;
            }
        }
    }
}

}  // namespace

ExactResult exact_probabilities(const MultiplexNetwork& net, const ProtocolSequence& protocols,
                                const std::vector<int>& seeds, const LemOptions& opts) {
    check_or_and(net, protocols, "exact enumeration");
    const auto seeded = seed_flags(net.n, seeds);
    const auto quotas = protocols.quotas(net.m);

    SelectionEnumerator en(net, seeds);
    const uint64_t total = en.total();
    if (total > opts.selection_cap)
        throw CapacityError("live-edge enumeration needs " + std::to_string(total) +
                            " selections, over the cap of " + std::to_string(opts.selection_cap) +
                            " (raise --cap or MLTM_ENUM_CAP to allow it)");

    constexpr uint64_t kChunk = 8192;
    const uint64_t chunks = (total + kChunk - 1) / kChunk;
    int workers = opts.threads > 0 ? opts.threads
                                   : static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;
    workers = static_cast<int>(std::min<uint64_t>(static_cast<uint64_t>(workers), chunks));

    struct ChunkSums {
        std::vector<double> acc;
        double qsum = 0.0;
    };
    std::vector<ChunkSums> per_chunk(chunks);
    std::atomic<uint64_t> next_chunk{0};

    auto work = [&]() {
        Selection sel;
        std::vector<uint8_t> active(net.n);
        for (;;) {
            uint64_t c = next_chunk.fetch_add(1);
            if (c >= chunks) break;
            uint64_t lo = c * kChunk, hi = std::min(total, lo + kChunk);
            std::vector<NeumaierSum> acc(net.n);
            NeumaierSum qsum;
            en.decode(lo, sel);
            for (uint64_t r = lo; r < hi; ++r) {
                fixed_point_into(net, sel, quotas, seeded, active);
                for (int i = 0; i < net.n; ++i)
                    if (active[i]) acc[i].add(sel.q);
                qsum.add(sel.q);
                if (r + 1 < hi) en.advance(sel);
            }
            auto& out = per_chunk[c];
            out.acc.resize(net.n);
            for (int i = 0; i < net.n; ++i) out.acc[i] = acc[i].value();
            out.qsum = qsum.value();
        }
    };

    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }

    // In-order reduction over chunks: the result is a pure function of the
    // chunk layout, not of which worker produced which chunk.
    std::vector<NeumaierSum> acc(net.n);
    NeumaierSum qsum;
    for (const auto& ch : per_chunk) {
        for (int i = 0; i < net.n; ++i) acc[i].add(ch.acc[i]);
        qsum.add(ch.qsum);
    }
    double mass = qsum.value();
    if (std::fabs(mass - 1.0) > 1e-9)
        throw std::runtime_error("internal: selection probabilities sum to " +
                                 std::to_string(mass));

    ExactResult res;
    res.selections = total;
    res.activation.resize(net.n);
    for (int i = 0; i < net.n; ++i) res.activation[i] = acc[i].value();
    res.spread = std::accumulate(res.activation.begin(), res.activation.end(), 0.0);
    return res;
}

double cascade_centrality(const MultiplexNetwork& net, const ProtocolSequence& protocols, int j,
                          const LemOptions& opts) {
    if (j < 0 || j >= net.n) throw ValidationError("agent id out of range");
    return exact_probabilities(net, protocols, {j}, opts).spread;
}

LiveEdgeTree build_live_edge_tree(const MultiplexNetwork& net, const Selection& sel, int root,
                                  const std::vector<int>& seeds, size_t node_cap) {
    if (root < 0 || root >= net.n) throw ValidationError("root agent id out of range");
    const auto seeded = seed_flags(net.n, seeds);
    const int m = net.m;

    LiveEdgeTree tree;
    tree.root = root;
    tree.selection_target = sel.target;
    tree.nodes.push_back({root, -1, {}});

    if (seeded[root]) {
        // A seeded root is its own (trivial) branch.
        tree.branches.push_back({{root}, {}});
        return tree;
    }

    std::vector<uint8_t> on_path(net.n, 0);
    std::vector<int> path_agents{root};
    std::vector<std::pair<int, int>> path_edges;
    on_path[root] = 1;

    // Depth-first unfolding, layers in ascending order: a node expands along
    // the owning agent's kept edge per layer, skipping a child already on the
    // path; reaching a seed closes a branch.
    auto expand = [&](auto&& self, int node_idx) -> void {
        const int agent = tree.nodes[node_idx].agent;
        for (int k = 0; k < m; ++k) {
            int child = sel.target[static_cast<size_t>(agent) * m + k];
            if (child < 0 || on_path[child]) continue;
            if (tree.nodes.size() >= node_cap)
                throw CapacityError("live-edge tree exceeds " + std::to_string(node_cap) +
                                    " nodes");
            int child_idx = static_cast<int>(tree.nodes.size());
            tree.nodes.push_back({child, node_idx, {}});
            tree.nodes[node_idx].children.push_back({k, child_idx});
            path_agents.push_back(child);
            path_edges.push_back({agent, k});
            if (seeded[child]) {
                tree.branches.push_back({path_agents, path_edges});
            } else {
                on_path[child] = 1;
                self(self, child_idx);
                on_path[child] = 0;
            }
            path_agents.pop_back();
            path_edges.pop_back();
        }
    };
    expand(expand, 0);
    return tree;
}

bool reachable_in_tree(const MultiplexNetwork& net, const LiveEdgeTree& tree,
                       const ProtocolSequence& protocols, const std::vector<int>& seeds,
                       int branch_cap) {
    check_or_and(net, protocols, "tree reachability");
    const auto seeded = seed_flags(net.n, seeds);
    if (seeded[tree.root]) return true;
    if (tree.branches.empty()) return false;

    if (branch_cap <= 0)
        branch_cap = static_cast<int>(env_u64("MLTM_TREE_BRANCH_CAP", 20));
    const int b = static_cast<int>(tree.branches.size());
    if (b > branch_cap)
        throw CapacityError("tree has " + std::to_string(b) + " branches, over the cap of " +
                            std::to_string(branch_cap) +
                            " (raise MLTM_TREE_BRANCH_CAP to allow it)");
    if (net.n > 64)
        throw CapacityError("tree reachability supports at most 64 agents");

    const int n = net.n, m = net.m;
    const auto quotas = protocols.quotas(m);
    const int slot_words = (n * m + 63) / 64;

    // Per-branch agent sets and kept-edge sets, as bitmasks.
    std::vector<uint64_t> agents_of(b, 0);
    std::vector<uint64_t> edges_of(static_cast<size_t>(b) * slot_words, 0);
    for (int i = 0; i < b; ++i) {
        for (int a : tree.branches[i].agents) agents_of[i] |= uint64_t{1} << a;
        for (auto [agent, layer] : tree.branches[i].edges) {
            int slot = agent * m + layer;
            edges_of[static_cast<size_t>(i) * slot_words + slot / 64] |= uint64_t{1}
                                                                         << (slot % 64);
        }
    }

    // All-layers agents: which slots they must see covered, and whether they
    // keep an edge in every layer at all (an empty layer rules them out).
    std::vector<uint8_t> demanding(n, 0);
    std::vector<uint8_t> complete(n, 0);
    std::vector<uint64_t> required(static_cast<size_t>(n) * slot_words, 0);
    for (int i = 0; i < n; ++i) {
        if (seeded[i] || quotas[i] != m || m == 1) continue;  // quota m==1 is plain OR
        demanding[i] = 1;
        int kept = 0;
        for (int k = 0; k < m; ++k) {
            int slot = i * m + k;
            if (tree.selection_target[slot] >= 0) {
                ++kept;
                required[static_cast<size_t>(i) * slot_words + slot / 64] |= uint64_t{1}
                                                                             << (slot % 64);
            }
        }
        complete[i] = (kept == m);
    }

    std::vector<uint64_t> covered(slot_words);
    for (uint64_t mask = 1; mask < (uint64_t{1} << b); ++mask) {
        uint64_t agents = 0;
        std::fill(covered.begin(), covered.end(), 0);
        for (int i = 0; i < b; ++i) {
            if (!((mask >> i) & 1)) continue;
            agents |= agents_of[i];
            for (int w = 0; w < slot_words; ++w)
                covered[w] |= edges_of[static_cast<size_t>(i) * slot_words + w];
        }
        bool feasible = true;
        for (uint64_t rest = agents; rest && feasible; rest &= rest - 1) {
            int v = std::countr_zero(rest);
            if (!demanding[v]) continue;
            if (!complete[v]) {
                feasible = false;
                break;
            }
            for (int w = 0; w < slot_words; ++w) {
                uint64_t req = required[static_cast<size_t>(v) * slot_words + w];
                if ((covered[w] & req) != req) {
                    feasible = false;
                    break;
                }
            }
        }
        if (feasible) return true;
    }
    return false;
}

}  // namespace mltm
