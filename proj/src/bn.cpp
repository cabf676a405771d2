#include "mltm/bn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include "mltm/errors.hpp"

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

double clamp01(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

}  // namespace

double Cpt::prob_active(uint64_t parent_bits) const {
    if (all_layers) {
        double p = 1.0;
        for (const auto& terms : layer_terms) {
            double s = 0.0;
            for (auto [idx, w] : terms)
                if ((parent_bits >> idx) & 1) s += w;
            p *= s;
            if (p == 0.0) break;
        }
        return p;
    }
    double none = 1.0;
    for (const auto& terms : layer_terms) {
        double s = 0.0;
        for (auto [idx, w] : terms)
            if ((parent_bits >> idx) & 1) s += w;
        none *= 1.0 - s;
    }
    return clamp01(1.0 - none);
}

std::vector<double> Cpt::materialize() const {
    if (parents.size() > 20)
        throw CapacityError("refusing to materialize a table over " +
                            std::to_string(parents.size()) + " parents");
    std::vector<double> rows(uint64_t{1} << parents.size());
    for (uint64_t bits = 0; bits < rows.size(); ++bits) rows[bits] = prob_active(bits);
    return rows;
}

BayesNet build_bayes_net(const MultiplexNetwork& net, const ProtocolSequence& protocols) {
    if (protocols.size() != net.n)
        throw ValidationError("protocol sequence covers " + std::to_string(protocols.size()) +
                              " agents, network has " + std::to_string(net.n));
    if (!protocols.is_or_and(net.m))
        throw ValidationError(
            "the Bayes-net mapping requires every agent to use a pure any-layer or all-layers "
            "protocol");

    BayesNet bn;
    bn.n = net.n;
    bn.m = net.m;
    bn.dag = project(net);
    bn.topo = topological_order(bn.dag);  // throws on a cycle
    const auto quotas = protocols.quotas(net.m);

    bn.cpts.resize(net.n);
    for (int i = 0; i < net.n; ++i) {
        Cpt& c = bn.cpts[i];
        c.agent = i;
        c.m = net.m;
        c.all_layers = (net.m > 1 && quotas[i] == net.m);
        for (const auto& e : bn.dag.out[i]) c.parents.push_back(e.to);  // already sorted
        c.layer_terms.assign(net.m, {});
        for (int k = 0; k < net.m; ++k)
            for (const auto& e : net.out[k][i]) {
                auto it = std::lower_bound(c.parents.begin(), c.parents.end(), e.to);
                c.layer_terms[k].push_back(
                    {static_cast<int>(it - c.parents.begin()), e.weight});
            }
    }
    return bn;
}

Evidence influence_evidence(const BayesNet& bn, const std::vector<int>& seeds) {
    Evidence ev(bn.n, -1);
    for (int s : seeds) {
        if (s < 0 || s >= bn.n) throw ValidationError("seed id out of range");
        ev[s] = 1;
    }
    for (int i = 0; i < bn.n; ++i)
        if (ev[i] == -1 && bn.cpts[i].parents.empty()) ev[i] = 0;
    return ev;
}

MarginalResult exact_marginals(const BayesNet& bn, const Evidence& evidence, int unobserved_cap) {
    if (static_cast<int>(evidence.size()) != bn.n)
        throw ValidationError("evidence vector size mismatch");
    if (unobserved_cap <= 0)
        unobserved_cap = static_cast<int>(env_u64("MLTM_BN_ENUM_CAP", 25));

    std::vector<int> unobserved;
    for (int i = 0; i < bn.n; ++i)
        if (evidence[i] == -1) unobserved.push_back(i);
    const int u = static_cast<int>(unobserved.size());
    if (u > unobserved_cap)
        throw CapacityError("exact inference over " + std::to_string(u) +
                            " unobserved agents exceeds the cap of " +
                            std::to_string(unobserved_cap) +
                            " (raise MLTM_BN_ENUM_CAP to allow it)");

    // Joint weight of an assignment: the product of the unobserved agents'
    // table rows only. Pinned agents contribute no factor (their tables are
    // replaced by the pin) but do feed parent states.
    std::vector<uint8_t> value(bn.n, 0);
    for (int i = 0; i < bn.n; ++i)
        if (evidence[i] == 1) value[i] = 1;

    std::vector<double> acc(bn.n, 0.0);
    double total = 0.0;
    const uint64_t assignments = uint64_t{1} << u;
    for (uint64_t bits = 0; bits < assignments; ++bits) {
        for (int j = 0; j < u; ++j) value[unobserved[j]] = (bits >> j) & 1;
        double w = 1.0;
        for (int j = 0; j < u && w > 0.0; ++j) {
            const Cpt& c = bn.cpts[unobserved[j]];
            uint64_t parent_bits = 0;
            for (size_t p = 0; p < c.parents.size(); ++p)
                parent_bits |= uint64_t{value[c.parents[p]]} << p;
            double p1 = c.prob_active(parent_bits);
            w *= value[c.agent] ? p1 : 1.0 - p1;
        }
        if (w == 0.0) continue;
        total += w;
        for (int j = 0; j < u; ++j)
            if (value[unobserved[j]]) acc[unobserved[j]] += w;
    }
    if (total <= 0.0) throw std::runtime_error("internal: zero total probability mass");

    MarginalResult res;
    res.method = "exact";
    res.converged = true;
    res.iterations = 1;
    res.residual = std::fabs(total - 1.0);
    res.marginal.resize(bn.n);
    for (int i = 0; i < bn.n; ++i)
        res.marginal[i] = evidence[i] == -1 ? acc[i] / total : static_cast<double>(evidence[i]);
    res.spread = std::accumulate(res.marginal.begin(), res.marginal.end(), 0.0);
    return res;
}

// ---- Loopy belief propagation ----------------------------------------------

namespace {

// One agent's table folded against the evidence: pinned-active parents join
// the per-layer constant, unobserved parents keep structured terms. Messages
// are then moments of the row function under independent parent beliefs --
// never a sum over rows, so width costs O(parents), not O(2^parents).
struct Factor {
    int child = 0;
    bool all_layers = false;
    int m = 0;
    std::vector<int> parents;                 // unobserved parents, agent ids
    std::vector<double> base;                 // per layer: pinned-active mass
    std::vector<std::vector<std::pair<int, double>>> terms;  // per layer: (parent slot, w)
    std::vector<double> w1, w2;               // dense per-slot weights (duplex fast path)
};

// E[prod_{k in K} s_k] for s_k = base_k + sum_p w_{k,p} x_p, x_p ~
// Bernoulli(pi_p) independent, with one optional slot overridden to a fixed
// value. Subset dynamic program over which layers of K are already covered;
// the constant base enters as a virtual always-on parent.
double expected_layer_product(const Factor& f, const std::vector<int>& layers,
                              const std::vector<double>& pi, int cond_slot, double cond_val) {
    const int kk = static_cast<int>(layers.size());
    if (kk == 0) return 1.0;
    const uint32_t full = (uint32_t{1} << kk) - 1;
    std::vector<double> dp(full + 1, 0.0), ndp(full + 1);
    dp[0] = 1.0;

    // weight of parent p on compact layer index c
    auto step = [&](double prob, auto&& weight_of) {
        std::fill(ndp.begin(), ndp.end(), 0.0);
        for (uint32_t s = 0; s <= full; ++s) {
            double cur = dp[s];
            if (cur == 0.0) continue;
            ndp[s] += cur;  // T empty: parent covers nothing
            uint32_t rest = full & ~s;
            // enumerate nonempty T subset of rest
            for (uint32_t t = rest; t; t = (t - 1) & rest) {
                double w = prob;
                for (uint32_t bits = t; bits;) {
                    int c = std::countr_zero(bits);
                    bits &= bits - 1;
                    w *= weight_of(c);
                    if (w == 0.0) break;
                }
                if (w != 0.0) ndp[s | t] += cur * w;
            }
        }
        dp.swap(ndp);
    };

    for (size_t p = 0; p < f.parents.size(); ++p) {
        double prob = (static_cast<int>(p) == cond_slot) ? cond_val : pi[p];
        step(prob, [&](int c) {
            int k = layers[c];
            for (auto [slot, w] : f.terms[k])
                if (slot == static_cast<int>(p)) return w;
            return 0.0;
        });
    }
    step(1.0, [&](int c) { return f.base[layers[c]]; });
    return dp[full];
}

// P(child active) as a function of independent parent beliefs, optionally
// conditioning one parent. Generic in m via inclusion-exclusion over layers.
double prob_active_moment(const Factor& f, const std::vector<double>& pi, int cond_slot,
                          double cond_val) {
    std::vector<int> layers;
    if (f.all_layers) {
        layers.resize(f.m);
        for (int k = 0; k < f.m; ++k) layers[k] = k;
        return clamp01(expected_layer_product(f, layers, pi, cond_slot, cond_val));
    }
    // 1 - E[prod_k (1 - s_k)] = 1 - sum_K (-1)^|K| E[prod_K s_k]
    double none = 0.0;
    const uint32_t subsets = uint32_t{1} << f.m;
    for (uint32_t mask = 0; mask < subsets; ++mask) {
        layers.clear();
        for (int k = 0; k < f.m; ++k)
            if ((mask >> k) & 1) layers.push_back(k);
        double term = expected_layer_product(f, layers, pi, cond_slot, cond_val);
        none += (std::popcount(mask) & 1) ? -term : term;
    }
    return clamp01(1.0 - none);
}

// Duplex fast path: all moments are linear/bilinear, so the child message and
// every per-parent conditioning come out of three running sums in O(parents).
struct DuplexMoments {
    double s1 = 0.0, s2 = 0.0;  // E[s_k], virtual base parent included
    double cross = 0.0;         // sum_p pi(1-pi) w1 w2
    double c12 = 0.0;           // E[s1 s2]
};

DuplexMoments duplex_moments(const Factor& f, const std::vector<double>& pi) {
    DuplexMoments dm;
    dm.s1 = f.base[0];
    dm.s2 = f.base[1];
    for (size_t p = 0; p < f.parents.size(); ++p) {
        dm.s1 += pi[p] * f.w1[p];
        dm.s2 += pi[p] * f.w2[p];
        dm.cross += pi[p] * (1.0 - pi[p]) * f.w1[p] * f.w2[p];
    }
    dm.c12 = dm.s1 * dm.s2 + dm.cross;
    return dm;
}

struct Message {
    double p0 = 0.5, p1 = 0.5;
};

Message normalized(double a0, double a1) {
    double s = a0 + a1;
    if (s <= 0.0) return {0.5, 0.5};
    return {a0 / s, a1 / s};
}

}  // namespace

MarginalResult loopy_bp(const BayesNet& bn, const Evidence& evidence, const LbpOptions& opts) {
    if (static_cast<int>(evidence.size()) != bn.n)
        throw ValidationError("evidence vector size mismatch");
    if (bn.m > 12)
        throw CapacityError("belief propagation supports at most 12 layers");

    // Build folded factors over the unobserved agents.
    std::vector<Factor> factors;
    for (int i = 0; i < bn.n; ++i) {
        if (evidence[i] != -1) continue;
        Factor f;
        f.child = i;
        f.all_layers = bn.cpts[i].all_layers;
        f.m = bn.m;
        f.base.assign(bn.m, 0.0);
        f.terms.assign(bn.m, {});
        std::vector<int> slot_of(bn.cpts[i].parents.size(), -1);
        for (size_t p = 0; p < bn.cpts[i].parents.size(); ++p) {
            int parent = bn.cpts[i].parents[p];
            if (evidence[parent] == -1) {
                slot_of[p] = static_cast<int>(f.parents.size());
                f.parents.push_back(parent);
            }
        }
        for (int k = 0; k < bn.m; ++k)
            for (auto [idx, w] : bn.cpts[i].layer_terms[k]) {
                int parent = bn.cpts[i].parents[idx];
                if (evidence[parent] == 1)
                    f.base[k] += w;
                else if (evidence[parent] == -1)
                    f.terms[k].push_back({slot_of[idx], w});
            }
        if (bn.m == 2) {
            f.w1.assign(f.parents.size(), 0.0);
            f.w2.assign(f.parents.size(), 0.0);
            for (auto [slot, w] : f.terms[0]) f.w1[slot] = w;
            for (auto [slot, w] : f.terms[1]) f.w2[slot] = w;
        }
        factors.push_back(std::move(f));
    }

    // Incidences: for every unobserved agent, the factors touching it.
    // Entry (factor, slot): slot -1 means the agent is the factor's child.
    std::vector<std::vector<std::pair<int, int>>> incident(bn.n);
    for (int fi = 0; fi < static_cast<int>(factors.size()); ++fi) {
        incident[factors[fi].child].push_back({fi, -1});
        for (size_t p = 0; p < factors[fi].parents.size(); ++p)
            incident[factors[fi].parents[p]].push_back({fi, static_cast<int>(p)});
    }

    // factor -> variable messages: one to the child, one per parent slot.
    std::vector<Message> to_child(factors.size());
    std::vector<std::vector<Message>> to_parent(factors.size());
    for (size_t fi = 0; fi < factors.size(); ++fi)
        to_parent[fi].assign(factors[fi].parents.size(), {});

    // variable -> factor beliefs (P(active) seen by each factor), plus the
    // incoming child message per factor.
    std::vector<std::vector<double>> pi(factors.size());
    std::vector<Message> from_child(factors.size());
    for (size_t fi = 0; fi < factors.size(); ++fi) pi[fi].assign(factors[fi].parents.size(), 0.5);

    MarginalResult res;
    res.method = "lbp";
    res.converged = false;

    std::vector<Message> scratch;
    int iter = 0;
    for (iter = 1; iter <= opts.max_iters; ++iter) {
        // Variable pass: product of incident factor messages, leaving one out
        // via prefix/suffix products.
        for (int v = 0; v < bn.n; ++v) {
            const auto& inc = incident[v];
            if (inc.empty()) continue;
            scratch.resize(inc.size());
            for (size_t a = 0; a < inc.size(); ++a) {
                auto [fi, slot] = inc[a];
                scratch[a] = slot < 0 ? to_child[fi] : to_parent[fi][slot];
            }
            for (size_t a = 0; a < inc.size(); ++a) {
                double p0 = 1.0, p1 = 1.0;
                for (size_t b = 0; b < inc.size(); ++b) {
                    if (a == b) continue;
                    p0 *= scratch[b].p0;
                    p1 *= scratch[b].p1;
                }
                Message msg = normalized(p0, p1);
                auto [fi, slot] = inc[a];
                if (slot < 0)
                    from_child[fi] = msg;
                else
                    pi[fi][slot] = msg.p1;
            }
        }

        // Factor pass: recompute all outgoing messages from the variable
        // beliefs, then blend with the previous iteration.
        const double lambda = (iter == 1) ? 0.0 : opts.damping;
        double residual = 0.0;
        auto blend = [&](Message& old, double a0, double a1) {
            Message fresh = normalized(a0, a1);
            Message next{lambda * old.p0 + (1.0 - lambda) * fresh.p0,
                         lambda * old.p1 + (1.0 - lambda) * fresh.p1};
            residual = std::max(residual, std::fabs(next.p1 - old.p1));
            residual = std::max(residual, std::fabs(next.p0 - old.p0));
            old = next;
        };
        for (size_t fi = 0; fi < factors.size(); ++fi) {
            const Factor& f = factors[fi];
            const auto& belief = pi[fi];
            if (f.m == 2) {
                DuplexMoments dm = duplex_moments(f, belief);
                double p1 = clamp01(f.all_layers ? dm.c12 : dm.s1 + dm.s2 - dm.c12);
                blend(to_child[fi], 1.0 - p1, p1);
                for (size_t p = 0; p < f.parents.size(); ++p) {
                    double cross_p = dm.cross - belief[p] * (1.0 - belief[p]) * f.w1[p] * f.w2[p];
                    double a[2];
                    for (int b = 0; b <= 1; ++b) {
                        double s1 = dm.s1 + (b - belief[p]) * f.w1[p];
                        double s2 = dm.s2 + (b - belief[p]) * f.w2[p];
                        double c12 = s1 * s2 + cross_p;
                        double pb = clamp01(f.all_layers ? c12 : s1 + s2 - c12);
                        a[b] = from_child[fi].p1 * pb + from_child[fi].p0 * (1.0 - pb);
                    }
                    blend(to_parent[fi][p], a[0], a[1]);
                }
            } else {
                double p1 = prob_active_moment(f, belief, -1, 0.0);
                blend(to_child[fi], 1.0 - p1, p1);
                for (size_t p = 0; p < f.parents.size(); ++p) {
                    double a[2];
                    for (int b = 0; b <= 1; ++b) {
                        double pb = prob_active_moment(f, belief, static_cast<int>(p),
                                                       static_cast<double>(b));
                        a[b] = from_child[fi].p1 * pb + from_child[fi].p0 * (1.0 - pb);
                    }
                    blend(to_parent[fi][p], a[0], a[1]);
                }
            }
        }

        res.residual = residual;
        if (residual < opts.tol) {
            res.converged = true;
            break;
        }
    }
    res.iterations = std::min(iter, opts.max_iters);

    if (!res.converged && opts.damping == 0.0 && opts.retry_undamped_failure) {
        LbpOptions retry = opts;
        retry.damping = 0.5;
        retry.retry_undamped_failure = false;
        return loopy_bp(bn, evidence, retry);
    }

    // Beliefs.
    res.marginal.assign(bn.n, 0.0);
    for (int v = 0; v < bn.n; ++v) {
        if (evidence[v] != -1) {
            res.marginal[v] = static_cast<double>(evidence[v]);
            continue;
        }
        double p0 = 1.0, p1 = 1.0;
        for (auto [fi, slot] : incident[v]) {
            const Message& msg = slot < 0 ? to_child[fi] : to_parent[fi][slot];
            p0 *= msg.p0;
            p1 *= msg.p1;
        }
        Message belief = normalized(p0, p1);
        res.marginal[v] = belief.p1;
    }
    res.spread = std::accumulate(res.marginal.begin(), res.marginal.end(), 0.0);
    return res;
}

MarginalResult influence_spread_bn(const MultiplexNetwork& net, const ProtocolSequence& protocols,
                                   const std::vector<int>& seeds, BnMethod method,
                                   const LbpOptions& lbp, int unobserved_cap) {
    BayesNet bn = build_bayes_net(net, protocols);
    Evidence ev = influence_evidence(bn, seeds);
    if (method == BnMethod::Auto) {
        int cap = unobserved_cap > 0 ? unobserved_cap
                                     : static_cast<int>(env_u64("MLTM_BN_ENUM_CAP", 25));
        int u = 0;
        for (int8_t e : ev) u += (e == -1);
        method = (u <= cap) ? BnMethod::Exact : BnMethod::Lbp;
    }
    return method == BnMethod::Exact ? exact_marginals(bn, ev, unobserved_cap)
                                     : loopy_bp(bn, ev, lbp);
}

}  // namespace mltm
