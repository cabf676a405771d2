#include <cmath>
#include <map>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "mltm/analytic.hpp"
#include "mltm/errors.hpp"
#include "mltm/lem.hpp"
#include "mltm/ltm.hpp"
#include "mltm/network.hpp"
#include "mltm/protocol.hpp"

using nlohmann::json;

namespace {

mltm::MultiplexNetwork fixture() {
    return mltm::load_network_file(std::string(MLTM_DATA_DIR) + "/worked_example.json");
}

mltm::ProtocolSequence protocols_from(std::initializer_list<const char*> names, int n) {
    json doc;
    doc["protocols"] = json::array();
    for (const char* s : names) doc["protocols"].push_back(s);
    return mltm::ProtocolSequence::from_json(doc, n);
}

}  // namespace

TEST_CASE("selection enumeration covers the product space in rank order") {
    auto net = mltm::random_duplex_dag(6, 0.7, 20240317);
    std::vector<int> seeds = {0};
    mltm::SelectionEnumerator en(net, seeds);

    // The seeded agent contributes no slots.
    for (int s = 0; s < en.slot_count(); ++s) {
        mltm::Selection first;
        en.decode(0, first);
        for (int k = 0; k < net.m; ++k) CHECK(first.target[0 * net.m + k] == -1);
    }

    // advance() must agree with decode() at every rank, and q must be the
    // product of kept weights (total mass 1 overall).
    mltm::Selection walk, fresh;
    en.decode(0, walk);
    double mass = walk.q;
    uint64_t rank = 1;
    while (en.advance(walk)) {
        en.decode(rank, fresh);
        REQUIRE(walk.target == fresh.target);
        REQUIRE(walk.q == doctest::Approx(fresh.q).epsilon(1e-15));
        mass += walk.q;
        ++rank;
    }
    CHECK(rank == en.total());
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("exact probabilities are deterministic across thread counts and match spread") {
    auto net = mltm::random_duplex_dag(7, 0.5, 77);
    auto protocols = protocols_from({"OR", "AND", "OR", "AND", "OR", "AND", "OR"}, 7);
    mltm::LemOptions one, four;
    one.threads = 1;
    four.threads = 4;
    auto a = mltm::exact_probabilities(net, protocols, {0}, one);
    auto b = mltm::exact_probabilities(net, protocols, {0}, four);
    REQUIRE(a.activation.size() == b.activation.size());
    for (size_t i = 0; i < a.activation.size(); ++i) CHECK(a.activation[i] == b.activation[i]);
    CHECK(a.spread == b.spread);
    double total = 0.0;
    for (double v : a.activation) total += v;
    CHECK(a.spread == doctest::Approx(total).epsilon(1e-15));
    CHECK(a.activation[0] == 1.0);  // the seed counts fully
}

TEST_CASE("exact probabilities agree with long Monte Carlo runs") {
    auto net = mltm::random_duplex_dag(5, 0.6, 3);
    auto protocols = protocols_from({"OR", "AND", "OR", "OR", "AND"}, 5);
    auto exact = mltm::exact_probabilities(net, protocols, {0});
    auto mc = mltm::estimate_spread(net, protocols, {0}, 40000, 8);
    for (int i = 0; i < 5; ++i) {
        double p = exact.activation[i];
        double se = std::sqrt(std::max(p * (1.0 - p), 1e-12) / 40000.0);
        CHECK(std::abs(mc.activation[i] - p) <= 4.0 * se + 1e-9);
    }
}

TEST_CASE("enumeration cap raises a capacity error") {
    auto net = mltm::random_duplex_dag(8, 0.8, 5);
    auto protocols = mltm::ProtocolSequence::uniform(8, mltm::ProtocolKind::Or);
    mltm::LemOptions opts;
    opts.selection_cap = 2;
    CHECK_THROWS_AS(mltm::exact_probabilities(net, protocols, {0}, opts), mltm::CapacityError);
}

TEST_CASE("intermediate layer quotas are rejected, quota-equivalent fractions pass") {
    // On a 3-layer network a 0.5 threshold needs 2 of 3 layers: neither OR
    // nor AND, so the live-edge backend refuses it.
    auto net = fixture();
    json doc = {{"protocols", {"OR", 0.5, "OR", "OR", "OR"}}};
    auto protocols = mltm::ProtocolSequence::from_json(doc, 5);
    CHECK_THROWS_AS(mltm::exact_probabilities(net, protocols, {0}), mltm::ValidationError);

    // On a 2-layer network the same fraction rounds to quota 1, which is
    // exactly the any-layer protocol, so it is accepted.
    auto duo = mltm::random_duplex_dag(4, 0.5, 6);
    json doc2 = {{"protocols", {"OR", 0.5, "OR", "OR"}}};
    auto equivalent = mltm::ProtocolSequence::from_json(doc2, 4);
    auto via_fraction = mltm::exact_probabilities(duo, equivalent, {0});
    auto via_or = mltm::exact_probabilities(
        duo, mltm::ProtocolSequence::uniform(4, mltm::ProtocolKind::Or), {0});
    CHECK(via_fraction.activation[1] == doctest::Approx(via_or.activation[1]).epsilon(1e-15));
}

TEST_CASE("worked multiplex fixture: unique selection, tree shape, and protocol outcomes") {
    auto net = fixture();
    REQUIRE(net.n == 5);
    REQUIRE(net.m == 3);
    std::vector<int> seeds = {0};

    mltm::SelectionEnumerator en(net, seeds);
    CHECK(en.total() == 1);
    mltm::Selection sel;
    en.decode(0, sel);
    CHECK(sel.q == doctest::Approx(1.0));
    // Agent 2 (index 1) keeps 1 in layer 1, 3 in layer 2, 5 in layer 3.
    CHECK(sel.target[1 * 3 + 0] == 0);
    CHECK(sel.target[1 * 3 + 1] == 2);
    CHECK(sel.target[1 * 3 + 2] == 4);
    // Agent 5 (index 4) keeps 3, 1, 2.
    CHECK(sel.target[4 * 3 + 0] == 2);
    CHECK(sel.target[4 * 3 + 1] == 0);
    CHECK(sel.target[4 * 3 + 2] == 1);

    auto tree = mltm::build_live_edge_tree(net, sel, /*root=*/4, seeds);
    REQUIRE(tree.branches.size() == 12);

    // Branches grouped by the layer of the root's first kept edge.
    std::map<int, int> by_first_layer;
    for (const auto& b : tree.branches) {
        REQUIRE_FALSE(b.edges.empty());
        CHECK(b.edges.front().first == 4);
        by_first_layer[b.edges.front().second]++;
        CHECK(b.agents.front() == 4);
        CHECK(b.agents.back() == 0);  // every branch ends at the seed
    }
    CHECK(by_first_layer[0] == 7);
    CHECK(by_first_layer[1] == 1);
    CHECK(by_first_layer[2] == 4);

    // The lone layer-2 branch is the root's direct edge to the seed.
    for (const auto& b : tree.branches)
        if (b.edges.front().second == 1) {
            CHECK(b.agents.size() == 2);
            CHECK(b.agents[1] == 0);
        }

    auto u1 = protocols_from({"OR", "AND", "AND", "AND", "OR"}, 5);
    auto u2 = protocols_from({"OR", "OR", "AND", "AND", "AND"}, 5);
    auto u3 = protocols_from({"OR", "AND", "AND", "AND", "AND"}, 5);
    CHECK(mltm::reachable_in_tree(net, tree, u1, seeds));
    CHECK(mltm::reachable_in_tree(net, tree, u2, seeds));
    CHECK_FALSE(mltm::reachable_in_tree(net, tree, u3, seeds));

    // The fixed point must agree on the same three protocol assignments.
    CHECK(mltm::reachable_fixed_point(net, sel, u1.quotas(3), seeds)[4] == 1);
    CHECK(mltm::reachable_fixed_point(net, sel, u2.quotas(3), seeds)[4] == 1);
    CHECK(mltm::reachable_fixed_point(net, sel, u3.quotas(3), seeds)[4] == 0);
}

TEST_CASE("tree reachability equals the fixed point on random networks") {
    // Exhaustive cross-check on every selection x every OR/AND assignment.
    for (uint64_t netseed : {11ull, 12ull, 13ull}) {
        auto net = mltm::random_duplex_dag(5, 0.55, netseed);
        std::vector<int> seeds = {0};
        mltm::SelectionEnumerator en(net, seeds);
        REQUIRE(en.total() <= 4096);
        for (uint64_t mask = 0; mask < (1ull << 5); ++mask) {
            auto protocols = mltm::ProtocolSequence::from_mask(5, mask);
            auto quotas = protocols.quotas(2);
            mltm::Selection sel;
            en.decode(0, sel);
            uint64_t rank = 0;
            do {
                auto fp = mltm::reachable_fixed_point(net, sel, quotas, seeds);
                for (int root = 0; root < 5; ++root) {
                    auto tree = mltm::build_live_edge_tree(net, sel, root, seeds);
                    bool via_tree = mltm::reachable_in_tree(net, tree, protocols, seeds);
                    REQUIRE(via_tree == (fp[root] == 1));
                }
                ++rank;
            } while (en.advance(sel) && rank < 64);  // bounded spot check per mask
        }
    }
}

TEST_CASE("tree caps") {
    auto net = fixture();
    std::vector<int> seeds = {0};
    mltm::SelectionEnumerator en(net, seeds);
    mltm::Selection sel;
    en.decode(0, sel);
    CHECK_THROWS_AS(mltm::build_live_edge_tree(net, sel, 4, seeds, /*node_cap=*/3),
                    mltm::CapacityError);
    auto tree = mltm::build_live_edge_tree(net, sel, 4, seeds);
    auto u1 = protocols_from({"OR", "AND", "AND", "AND", "OR"}, 5);
    CHECK_THROWS_AS(mltm::reachable_in_tree(net, tree, u1, seeds, /*branch_cap=*/3),
                    mltm::CapacityError);
}

TEST_CASE("cascade centrality counts the seed and matches per-agent sums") {
    auto net = mltm::random_duplex_dag(6, 0.5, 9);
    auto protocols = mltm::ProtocolSequence::uniform(6, mltm::ProtocolKind::Or);
    double sigma = mltm::cascade_centrality(net, protocols, 2);
    auto exact = mltm::exact_probabilities(net, protocols, {2});
    CHECK(sigma == doctest::Approx(exact.spread).epsilon(1e-15));
    CHECK(sigma >= 1.0);
}
