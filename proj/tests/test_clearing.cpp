#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <vector>

#include "intralayer/clearing.hpp"
#include "intralayer/rng.hpp"

using namespace intralayer;
using namespace intralayer::clearing;

namespace {

TransactionCluster cluster_of(size_t n, double c_dc = 1.0, double c_vc = 2.0,
                              double c_p = 0.5, double hub_c_p = 1.0) {
    TransactionCluster tc;
    tc.id = "tc";
    for (size_t i = 0; i < n; ++i) tc.members.push_back(AgentId("m" + std::to_string(i)));
    tc.c_dc = c_dc;
    tc.c_vc = c_vc;
    tc.c_p = c_p;
    tc.hub_c_p = hub_c_p;
    return tc;
}

// Brute-force oracle: simulate every member messaging every other member
// once and count the messages.
long enumerate_bilateral_interactions(size_t n) {
    long count = 0;
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j)
            if (i != j) ++count;
    return count;
}

// Hub oracle: one inbound and one outbound message per member.
long enumerate_hub_interactions(size_t n) {
    long count = 0;
    for (size_t i = 0; i < n; ++i) count += 2;
    return count;
}

} // namespace

TEST_CASE("bilateral cost formula") {
    CHECK(bilateral_cost(cluster_of(2)) == 7.0);    // 2*3 + 2*0.5
    CHECK(bilateral_cost(cluster_of(1)) == 0.5);    // no pairs, one processing
    CHECK(bilateral_cost(cluster_of(10)) == 275.0); // 90*3 + 5
}

TEST_CASE("interaction counts match brute-force enumeration") {
    for (size_t n = 1; n <= 6; ++n) {
        CHECK(bilateral_interactions(n) == enumerate_bilateral_interactions(n));
        CHECK(hub_interactions(n) == enumerate_hub_interactions(n));
        CHECK(hub_interactions(n, InteractionModel::TwoNMinusOne) ==
              enumerate_hub_interactions(n) - 1);
    }
}

TEST_CASE("hub cost formula") {
    CHECK(hub_cost(cluster_of(10)) == 61.0); // 60 + 1
    CHECK(hub_cost(cluster_of(0)) == 1.0);   // just the hub processing cost
    CHECK(hub_cost(cluster_of(2)) == 13.0);  // hub not always cheaper
    CHECK(hub_cost(cluster_of(10), InteractionModel::TwoNMinusOne) == 58.0); // 19*3+1
}

TEST_CASE("cost savings") {
    CHECK(cost_savings(cluster_of(10)) == 214.0);
    CHECK(cost_savings(cluster_of(2)) == -6.0);
    auto degenerate = cluster_of(4, 0.0, 0.0, 0.5, 1.0);
    CHECK(cost_savings(degenerate) == 4 * 0.5 - 1.0);
}

TEST_CASE("savings are non-negative for n >= 3 when hub processing is amortised") {
    for (size_t n = 3; n <= 100; ++n) {
        auto tc = cluster_of(n);
        REQUIRE(tc.hub_c_p <= static_cast<double>(n) * tc.c_p);
        CHECK(cost_savings(tc) >= 0.0);
    }
}

TEST_CASE("netting pairwise example") {
    ObligationMap ob;
    ob[{AgentId("A"), AgentId("B")}] = Fixed(10);
    ob[{AgentId("B"), AgentId("A")}] = Fixed(4);
    auto plan = net_obligations(ob);
    REQUIRE(plan.pays.size() == 1);
    REQUIRE(plan.receives.size() == 1);
    CHECK(plan.pays[0].agent == AgentId("A"));
    CHECK(plan.pays[0].amount == Fixed(6));
    CHECK(plan.receives[0].agent == AgentId("B"));
    CHECK(plan.receives[0].amount == Fixed(6));
}

TEST_CASE("symmetric ring nets to nothing") {
    ObligationMap ob;
    ob[{AgentId("A"), AgentId("B")}] = Fixed(5);
    ob[{AgentId("B"), AgentId("C")}] = Fixed(5);
    ob[{AgentId("C"), AgentId("A")}] = Fixed(5);
    auto plan = net_obligations(ob);
    CHECK(plan.empty());
    for (const auto& [agent, net] : plan.net) CHECK(net.is_zero());
}

TEST_CASE("three-member netting against brute-force sums") {
    ObligationMap ob;
    ob[{AgentId("A"), AgentId("B")}] = Fixed(10);
    ob[{AgentId("A"), AgentId("C")}] = Fixed(5);
    ob[{AgentId("C"), AgentId("B")}] = Fixed(5);
    auto plan = net_obligations(ob);
    CHECK(plan.net[AgentId("A")] == Fixed(-15));
    CHECK(plan.net[AgentId("B")] == Fixed(15));
    CHECK(plan.net[AgentId("C")] == Fixed(0));
    CHECK(plan.pays.size() + plan.receives.size() <= 3);
}

TEST_CASE("property: netting conserves value and caps transfer count") {
    Rng rng(2024);
    std::vector<AgentId> agents;
    for (int i = 0; i < 6; ++i) agents.push_back(AgentId("g" + std::to_string(i)));
    for (int round = 0; round < 300; ++round) {
        ObligationMap ob;
        int m = 1 + static_cast<int>(rng.uniform_below(12));
        for (int k = 0; k < m; ++k) {
            size_t i = rng.uniform_below(agents.size());
            size_t j = rng.uniform_below(agents.size());
            if (i == j) continue;
            ob[{agents[i], agents[j]}] += Fixed(static_cast<long>(rng.uniform_below(100)));
        }
        auto plan = net_obligations(ob);
        Fixed sum;
        for (const auto& [agent, net] : plan.net) sum += net;
        REQUIRE(sum.is_zero());
        // One transfer per member with a nonzero net, at most n of them.
        REQUIRE(plan.pays.size() + plan.receives.size() <= agents.size());
        // Settled value: what the payers pay equals what the receivers get.
        Fixed paid, received;
        for (const auto& leg : plan.pays) paid += leg.amount;
        for (const auto& leg : plan.receives) received += leg.amount;
        REQUIRE(paid == received);
    }
}

TEST_CASE("UFC state machine stages and ingests obligations") {
    auto tc = cluster_of(3);
    UFCInstance ufc("u1", tc, 2);
    CHECK_FALSE(ufc.due(1));
    CHECK(ufc.due(2));

    ufc.add_obligation(AgentId("m0"), AgentId("m1"), Fixed(10));
    ufc.add_obligation(AgentId("m0"), AgentId("m1"), Fixed(5));
    CHECK(ufc.pending().empty());
    ufc.ingest();
    CHECK(ufc.staged().empty());
    CHECK(ufc.pending().at({AgentId("m0"), AgentId("m1")}) == Fixed(15));

    ufc.mark_round(2);
    CHECK_FALSE(ufc.due(3));
    CHECK(ufc.due(4));
}

TEST_CASE("UFC rejects malformed obligations") {
    auto tc = cluster_of(2);
    UFCInstance ufc("u1", tc, 1);
    CHECK_THROWS_AS(ufc.add_obligation(AgentId("m0"), AgentId("zz"), Fixed(1)), SimError);
    CHECK_THROWS_AS(ufc.add_obligation(AgentId("m0"), AgentId("m0"), Fixed(1)), SimError);
    CHECK_THROWS_AS(ufc.add_obligation(AgentId("m0"), AgentId("m1"), Fixed(-1)), SimError);
    CHECK_THROWS_AS(UFCInstance("u2", tc, 0), SimError);
    CHECK_THROWS_AS(UFCInstance("u3", TransactionCluster{}, 1), SimError);
}
