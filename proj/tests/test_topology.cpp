#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <queue>
#include <set>

#include "intralayer/topology.hpp"

using namespace intralayer;
using namespace intralayer::topology;

namespace {

EcosystemGraph graph_of(int n) {
    EcosystemGraph g;
    for (int i = 0; i < n; ++i) g.add_agent(AgentId("a" + std::to_string(i)));
    return g;
}

// Independent reachability oracle: BFS over an explicit star graph where
// every agent links to a hub vertex and back.
int star_bfs_hops(int n, int src, int dst) {
    const int hub = n; // vertex n is the hub
    std::map<int, std::set<int>> adj;
    for (int i = 0; i < n; ++i) {
        adj[i].insert(hub);
        adj[hub].insert(i);
    }
    std::queue<std::pair<int, int>> q;
    std::set<int> seen{src};
    q.push({src, 0});
    while (!q.empty()) {
        auto [v, d] = q.front();
        q.pop();
        if (v == dst) return d;
        for (int w : adj[v])
            if (seen.insert(w).second) q.push({w, d + 1});
    }
    return -1;
}

} // namespace

TEST_CASE("path_total_cost sums the five components") {
    TransactionalPath p{AgentId("a"), AgentId("b")};
    double v = 1.0;
    for (CostComponent c : kAllComponents) p.set_cost(c, v++);
    CHECK(path_total_cost(p) == 15.0);
}

TEST_CASE("path_total_cost of all-zero components is zero") {
    TransactionalPath p{AgentId("a"), AgentId("b")};
    for (CostComponent c : kAllComponents) p.set_cost(c, 0.0);
    CHECK(path_total_cost(p) == 0.0);
}

TEST_CASE("path_total_cost with a missing component fails") {
    TransactionalPath p{AgentId("a"), AgentId("b")};
    for (CostComponent c : kAllComponents)
        if (c != CostComponent::VT) p.set_cost(c, 1.0);
    CHECK_THROWS_AS(path_total_cost(p), SimError);
}

TEST_CASE("bilateral setup cost") {
    auto g = graph_of(5);
    SECTION("uniform cost per pair") {
        CHECK(setup_cost_bilateral(AgentId("a0"), g, 1.0) == 4.0);
        double total = 0.0;
        for (const auto& a : g.agents()) total += setup_cost_bilateral(a, g, 1.0);
        CHECK(total == 20.0); // all ordered pairs
    }
    SECTION("single agent has nothing to set up") {
        auto g1 = graph_of(1);
        CHECK(setup_cost_bilateral(AgentId("a0"), g1, 1.0) == 0.0);
    }
    SECTION("per-counterparty map") {
        std::map<AgentId, double> costs{{AgentId("b"), 2.0}, {AgentId("c"), 3.0}};
        CHECK(setup_cost_bilateral(AgentId("a"), costs) == 5.0);
    }
    SECTION("unknown agent") {
        CHECK_THROWS_AS(setup_cost_bilateral(AgentId("zz"), g, 1.0), SimError);
    }
}

TEST_CASE("gateway setup cost and reachability") {
    auto g = graph_of(5);
    CHECK(setup_cost_gateway(g, 1.0) == 5.0);
    CHECK(setup_cost_gateway(graph_of(0), 1.0) == 0.0);

    // Every ordered pair reachable through the hub in at most two hops.
    int reachable = 0;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            if (i == j) continue;
            int hops = star_bfs_hops(5, i, j);
            REQUIRE(hops >= 0);
            CHECK(hops <= 2);
            ++reachable;
        }
    CHECK(reachable == 20);
}

TEST_CASE("gateway beats bilateral for three or more agents") {
    for (int n = 3; n <= 50; ++n) {
        auto g = graph_of(n);
        double bilateral_total = 0.0;
        for (const auto& a : g.agents()) bilateral_total += setup_cost_bilateral(a, g, 1.0);
        CHECK(setup_cost_gateway(g, 1.0) < bilateral_total);
    }
}

TEST_CASE("network value models") {
    NetworkValueModel metcalfe{NetworkValueModel::Kind::Metcalfe, 1.0};
    NetworkValueModel zipf{NetworkValueModel::Kind::Zipf, 1.0};

    CHECK(network_value(metcalfe, 4) == 16.0);
    CHECK(network_value_delta(metcalfe, 4) == 7.0);
    CHECK(network_value(metcalfe, 0) == 0.0);
    CHECK(network_value(zipf, 0) == 0.0);
    CHECK(network_value(zipf, 1) == 0.0);
    CHECK(network_value(zipf, 3) == Catch::Approx(3.0 * std::log(3.0)));
}

TEST_CASE("network value is non-decreasing in agents") {
    for (auto kind : {NetworkValueModel::Kind::Metcalfe, NetworkValueModel::Kind::Zipf}) {
        NetworkValueModel m{kind, 2.5};
        double prev = network_value(m, 0);
        for (long n = 1; n <= 100; ++n) {
            double v = network_value(m, n);
            CHECK(v >= prev);
            prev = v;
        }
    }
}

TEST_CASE("telescoping identity") {
    // Each delta is the exact difference of two model values, so the exact
    // (rational) sum of deltas telescopes to V(N) - V(0) regardless of how
    // the individual doubles were rounded. Metcalfe with unit scale stays
    // within exact integer doubles, so even the double sum is exact.
    NetworkValueModel metcalfe{NetworkValueModel::Kind::Metcalfe, 1.0};
    double sum = 0.0;
    for (long k = 1; k <= 50; ++k) sum += network_value_delta(metcalfe, k);
    CHECK(sum == network_value(metcalfe, 50) - network_value(metcalfe, 0));

    NetworkValueModel zipf{NetworkValueModel::Kind::Zipf, 1.0};
    long double exact = 0.0L;
    for (long k = 1; k <= 50; ++k) {
        long double vk = network_value(zipf, k);
        long double vk1 = network_value(zipf, k - 1);
        exact += vk - vk1;
    }
    CHECK(static_cast<double>(exact) ==
          network_value(zipf, 50) - network_value(zipf, 0));
}

TEST_CASE("path count power law") {
    CHECK(path_count(1.0, 2.0, 3) == 9.0);
    CHECK(path_count(1.0, 2.0, 0) == 0.0);
    CHECK(path_count(2.5, 1.5, 1) == 2.5);
    CHECK_THROWS_AS(path_count(0.0, 2.0, 3), SimError);
    CHECK_THROWS_AS(path_count(1.0, 1.0, 3), SimError);
}

TEST_CASE("ecosystem graph validates edges") {
    auto g = graph_of(2);
    CHECK_THROWS_AS(g.add_edge(AgentId("a0"), AgentId("a0"), 1.0), SimError);
    CHECK_THROWS_AS(g.add_edge(AgentId("a0"), AgentId("zz"), 1.0), SimError);
    CHECK_THROWS_AS(g.add_edge(AgentId("a0"), AgentId("a1"), -1.0), SimError);
    g.add_edge(AgentId("a0"), AgentId("a1"), 5.0);
    CHECK(g.edges().size() == 1);
}
