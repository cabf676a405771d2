#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "mltm/analytic.hpp"
#include "mltm/errors.hpp"
#include "mltm/experiments.hpp"
#include "mltm/network.hpp"
#include "mltm/protocol.hpp"

using nlohmann::json;

namespace {

mltm::MultiplexNetwork school() {
    return mltm::load_network_file(std::string(MLTM_DATA_DIR) + "/school.json");
}

}  // namespace

TEST_CASE("signal networks graft one source agent onto the observer's layers") {
    auto base = school();
    REQUIRE(base.n == 6);
    REQUIRE(base.m == 2);

    SUBCASE("a real event reaches both layers; replacement hands it the whole layer") {
        auto net = mltm::build_signal_network(base, 0, mltm::SignalMode::Real,
                                              mltm::SignalEdgePolicy::Replace);
        CHECK(net.n == 7);
        CHECK(net.m == 2);
        CHECK_FALSE(net.has_out_edges(6));
        for (int k = 0; k < 2; ++k) {
            REQUIRE(net.out_degree(k, 0) == 1);
            CHECK(net.edges(k, 0)[0].to == 6);
            CHECK(net.edges(k, 0)[0].weight == doctest::Approx(1.0));
        }
        // Other agents keep their attention untouched.
        for (int k = 0; k < 2; ++k)
            for (int i = 1; i < 6; ++i) CHECK(net.out_degree(k, i) == base.out_degree(k, i));
    }

    SUBCASE("a one-layer event only alters that layer") {
        auto net = mltm::build_signal_network(base, 2, mltm::SignalMode::SpuriousLayer2,
                                              mltm::SignalEdgePolicy::Replace);
        CHECK(net.out_degree(0, 2) == base.out_degree(0, 2));
        REQUIRE(net.out_degree(1, 2) == 1);
        CHECK(net.edges(1, 2)[0].to == 6);
    }

    SUBCASE("renormalization keeps old attention at reduced scale") {
        auto net = mltm::build_signal_network(base, 0, mltm::SignalMode::SpuriousLayer1,
                                              mltm::SignalEdgePolicy::Renormalize);
        // Agent 1 had one vision edge (weight 1); the signal enters at raw
        // weight 1, so both end up at 1/2.
        REQUIRE(net.out_degree(0, 0) == 2);
        double total = 0.0;
        bool saw_signal = false;
        for (const auto& e : net.edges(0, 0)) {
            total += e.weight;
            if (e.to == 6) {
                saw_signal = true;
                CHECK(e.weight == doctest::Approx(0.5));
            }
        }
        CHECK(saw_signal);
        CHECK(total == doctest::Approx(1.0));
    }

    SUBCASE("a one-layer mode needs that layer to exist") {
        auto mono = mltm::path_network(4);
        CHECK_THROWS_AS(mltm::build_signal_network(mono, 0, mltm::SignalMode::SpuriousLayer2),
                        mltm::ValidationError);
    }
}

TEST_CASE("group utility on the two-layer school network") {
    auto base = school();
    auto all_or = mltm::ProtocolSequence::uniform(6, mltm::ProtocolKind::Or);
    auto all_and = mltm::ProtocolSequence::uniform(6, mltm::ProtocolKind::And);

    // Frozen reference values for this fixture.
    double q_or_0 = mltm::utility_q(base, all_or, 0.0);
    CHECK(q_or_0 == doctest::Approx(5.592592592592592).epsilon(1e-12));
    double q_and_0 = mltm::utility_q(base, all_and, 0.0);
    CHECK(q_and_0 == doctest::Approx(2.638888888888889).epsilon(1e-12));

    // All-layers agents never react to a one-layer event, so each spurious
    // source scores exactly 1 (itself) and utility falls with slope 1 in c.
    double q_and_1 = mltm::utility_q(base, all_and, 1.0);
    CHECK(q_and_1 == doctest::Approx(q_and_0 - 1.0).epsilon(1e-12));

    // Any-layer agents react to spurious events exactly as to real ones, so
    // utility scales by (1 - c).
    double q_or_half = mltm::utility_q(base, all_or, 0.5);
    CHECK(q_or_half == doctest::Approx(q_or_0 * 0.5).epsilon(1e-12));
    double q_or_1 = mltm::utility_q(base, all_or, 1.0);
    CHECK(q_or_1 == doctest::Approx(0.0).epsilon(1e-12));

    // Utility is linear in c for any fixed assignment.
    json doc = {{"protocols", {"OR", "AND", "OR", "AND", "OR", "AND"}}};
    auto mixed = mltm::ProtocolSequence::from_json(doc, 6);
    double q0 = mltm::utility_q(base, mixed, 0.0);
    double q1 = mltm::utility_q(base, mixed, 1.0);
    double q2 = mltm::utility_q(base, mixed, 2.0);
    CHECK(q2 - q1 == doctest::Approx(q1 - q0).epsilon(1e-9));
}

TEST_CASE("optimal assignment sweep walks from all-any to all-every as cost rises") {
    auto base = school();
    std::vector<double> grid = {0.0, 0.75, 1.5, 2.25, 3.0};
    auto rows = mltm::optimal_protocol_sweep(base, grid);
    REQUIRE(rows.size() == 5);

    CHECK(rows.front().fraction_all_layers == doctest::Approx(0.0));
    REQUIRE(rows.front().optimal_masks.size() == 1);
    CHECK(rows.front().optimal_masks[0] == 0);
    CHECK(rows.front().q_opt == doctest::Approx(5.592592592592592).epsilon(1e-12));

    CHECK(rows.back().fraction_all_layers == doctest::Approx(1.0));
    REQUIRE(rows.back().optimal_masks.size() == 1);
    CHECK(rows.back().optimal_masks[0] == (1u << 6) - 1);

    for (size_t r = 1; r < rows.size(); ++r)
        CHECK(rows[r].fraction_all_layers >= rows[r - 1].fraction_all_layers);
}

TEST_CASE("density sweep endpoints are deterministic") {
    std::vector<double> grid = {0.0, 0.4, 1.0};
    auto rows = mltm::pe_sweep(5, grid, 6, /*master_seed=*/12345, mltm::SweepBackend::Auto);
    REQUIRE(rows.size() == 9);  // three modes per density

    for (const auto& row : rows) {
        CHECK((row.mode == "or" || row.mode == "and" || row.mode == "mixed"));
        if (row.p_e == 0.0) {
            // No edges anywhere: the root influences only itself.
            CHECK(row.mean_centrality == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(row.std_error == doctest::Approx(0.0));
        }
        if (row.p_e == 1.0) {
            // Complete DAG with weight-1 certainty chains in both layers.
            CHECK(row.mean_centrality == doctest::Approx(5.0).epsilon(1e-12));
        }
        CHECK(row.mean_centrality >= 1.0 - 1e-12);
        CHECK(row.mean_centrality <= 5.0 + 1e-12);
        CHECK(row.non_converged == 0);
    }

    // Redundancy dominates at every density: or >= mixed >= and.
    for (size_t base = 0; base < rows.size(); base += 3) {
        double v_or = 0.0, v_and = 0.0, v_mixed = 0.0;
        for (size_t t = base; t < base + 3; ++t) {
            if (rows[t].mode == "or") v_or = rows[t].mean_centrality;
            if (rows[t].mode == "and") v_and = rows[t].mean_centrality;
            if (rows[t].mode == "mixed") v_mixed = rows[t].mean_centrality;
        }
        CHECK(v_or >= v_mixed - 1e-9);
        CHECK(v_mixed >= v_and - 1e-9);
    }

    // Same seed reproduces the table; the belief-propagation backend stays
    // within Monte Carlo-free agreement of exact enumeration on small n.
    auto again = mltm::pe_sweep(5, grid, 6, 12345, mltm::SweepBackend::Auto);
    for (size_t r = 0; r < rows.size(); ++r)
        CHECK(rows[r].mean_centrality == again[r].mean_centrality);

    auto lbp = mltm::pe_sweep(5, grid, 6, 12345, mltm::SweepBackend::Lbp);
    for (size_t r = 0; r < rows.size(); ++r)
        CHECK(lbp[r].mean_centrality ==
              doctest::Approx(rows[r].mean_centrality).epsilon(0.1));
}

TEST_CASE("assignment sweep is gated on the exhaustive mask count") {
    auto big = mltm::random_duplex_dag(21, 0.1, 3);
    CHECK_THROWS_AS(mltm::optimal_protocol_sweep(big, {0.0}), mltm::CapacityError);
}
