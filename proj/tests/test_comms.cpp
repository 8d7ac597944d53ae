#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "intralayer/comms.hpp"

using namespace intralayer;
using namespace intralayer::comms;

namespace {

MessageEvent mk_event(double needed, double delivered) {
    MessageEvent e;
    e.needed_at = needed;
    e.delivered_at = delivered;
    e.required_keys = {"k"};
    e.delivered_keys = {"k"};
    return e;
}

ChannelParams noiseless_channel() {
    ChannelParams ch;
    ch.chain = ChainId("c1");
    ch.base_lag = 2.0;
    ch.lag_jitter = 0.0;
    ch.miss_rate = 0.0;
    ch.spur_rate = 0.0;
    ch.stake_scale_s0 = Fixed(100);
    return ch;
}

} // namespace

TEST_CASE("epoch lag is the mean delay") {
    std::vector<MessageEvent> events{mk_event(0, 1), mk_event(0, 2), mk_event(0, 4)};
    CHECK(epoch_lag(events) == Catch::Approx(7.0 / 3.0));
}

TEST_CASE("on-time and early deliveries contribute zero lag") {
    std::vector<MessageEvent> events{mk_event(5, 5), mk_event(5, 3)};
    CHECK(epoch_lag(events) == 0.0);
}

TEST_CASE("single event lag") {
    std::vector<MessageEvent> events{mk_event(0, 5)};
    CHECK(epoch_lag(events) == 5.0);
}

TEST_CASE("empty event set is an error") {
    std::vector<MessageEvent> events;
    CHECK_THROWS_AS(epoch_lag(events), SimError);
}

TEST_CASE("event discrepancy counts missing and spurious keys") {
    MessageEvent e;
    e.required_keys = {"a", "b", "c"};

    SECTION("one missing, one spurious") {
        e.delivered_keys = {"a", "b", "d"};
        CHECK(event_discrepancy(e) == Catch::Approx(2.0 / 3.0));
    }
    SECTION("exact delivery has zero discrepancy") {
        e.delivered_keys = e.required_keys;
        CHECK(event_discrepancy(e) == 0.0);
    }
    SECTION("nothing delivered") {
        e.delivered_keys = {};
        CHECK(event_discrepancy(e) == 1.0);
    }
    SECTION("empty requirement set is an error") {
        e.required_keys = {};
        CHECK_THROWS_AS(event_discrepancy(e), SimError);
    }
}

TEST_CASE("epoch discrepancy sums per-event values") {
    MessageEvent a;
    a.required_keys = {"a", "b", "c"};
    a.delivered_keys = {"a", "b", "d"};
    MessageEvent b;
    b.required_keys = {"x"};
    b.delivered_keys = {"x"};
    std::vector<MessageEvent> events{a, b};
    CHECK(epoch_discrepancy(events) == Catch::Approx(2.0 / 3.0));
}

TEST_CASE("data connectivity cost") {
    CHECK(data_connectivity_cost(2.0 / 3.0, 7.0 / 3.0, 1.0, 3.0, 3.0) ==
          Catch::Approx(10.0));
    CHECK(data_connectivity_cost(0, 0, 0, 3, 3) == 0.0);
    CHECK(data_connectivity_cost(5, 9, 2.5, 0, 0) == 2.5);
    CHECK_THROWS_AS(data_connectivity_cost(-1, 0, 0, 1, 1), SimError);
}

TEST_CASE("data connectivity cost is monotone in each input") {
    double base = data_connectivity_cost(1, 1, 1, 2, 3);
    CHECK(data_connectivity_cost(2, 1, 1, 2, 3) >= base);
    CHECK(data_connectivity_cost(1, 2, 1, 2, 3) >= base);
    CHECK(data_connectivity_cost(1, 1, 2, 2, 3) >= base);
}

TEST_CASE("stake quality factor") {
    Fixed s0 = Fixed(100);
    CHECK(stake_quality_factor(Fixed(0), s0) == 1.0);
    CHECK(stake_quality_factor(s0, s0) == 0.5);

    double prev = 1.0;
    for (int mult = 1; mult <= 64; mult *= 2) {
        double f = stake_quality_factor(Fixed(100 * mult), s0);
        CHECK(f < prev);
        CHECK(f > 0.0);
        prev = f;
    }
    CHECK(stake_quality_factor(Fixed(100000000), s0) < 1e-5);
}

TEST_CASE("noiseless channel delivers exactly") {
    auto ch = noiseless_channel();
    Rng rng(1);
    auto e = deliver(ch, AgentId("a"), AgentId("b"), 10.0, {"k1", "k2"}, Fixed(0), 1, rng);
    CHECK(e.delivered_at == 12.0);
    CHECK(e.delivered_keys == e.required_keys);
}

TEST_CASE("delivery is deterministic under a fixed seed") {
    auto ch = noiseless_channel();
    ch.miss_rate = 0.5;
    ch.spur_rate = 0.5;
    ch.lag_jitter = 3.0;
    auto run = [&] {
        Rng rng(99);
        return deliver(ch, AgentId("a"), AgentId("b"), 0.0, {"k1", "k2", "k3"},
                       Fixed(0), 2, rng);
    };
    auto e1 = run();
    auto e2 = run();
    CHECK(e1.delivered_at == e2.delivered_at);
    CHECK(e1.delivered_keys == e2.delivered_keys);
}

TEST_CASE("outage epochs raise ChannelDown") {
    auto ch = noiseless_channel();
    ch.outage_epochs = {3};
    Rng rng(1);
    CHECK_THROWS_AS(deliver(ch, AgentId("a"), AgentId("b"), 0.0, {"k"}, Fixed(0), 3, rng),
                    SimError);
    CHECK_NOTHROW(deliver(ch, AgentId("a"), AgentId("b"), 0.0, {"k"}, Fixed(0), 4, rng));
}

TEST_CASE("property: discrepancy and lag are non-increasing in stake") {
    ChannelParams ch = noiseless_channel();
    ch.miss_rate = 0.3;
    ch.spur_rate = 0.2;
    ch.lag_jitter = 4.0;
    Fixed s0 = ch.stake_scale_s0;

    auto run_grid = [&](const Fixed& stake) {
        Rng rng(4242); // identical stream per grid point
        std::vector<MessageEvent> events;
        for (int i = 0; i < 400; ++i) {
            events.push_back(deliver(ch, AgentId("a"), AgentId("b"), 0.0,
                                     {"k1", "k2", "k3"}, stake, 1, rng));
        }
        return std::pair{epoch_discrepancy(events), epoch_lag(events)};
    };

    auto [psi0, lag0] = run_grid(Fixed(0));
    auto [psi1, lag1] = run_grid(s0);
    auto [psi2, lag2] = run_grid(Fixed(10) * s0);
    CHECK(psi1 <= psi0);
    CHECK(psi2 <= psi1);
    CHECK(lag1 <= lag0);
    CHECK(lag2 <= lag1);
    CHECK(psi2 < psi0); // the sweep has to actually bite
}

TEST_CASE("guarantor stake bookkeeping") {
    GuarantorStake stakes;
    PriceBook prices;
    prices.set(AssetId("X"), Fixed(2));
    prices.set(AssetId("Y"), Fixed(1));

    stakes.add(Service::DC, AgentId("g1"), AssetId("X"), Fixed(10));
    stakes.add(Service::DC, AgentId("g2"), AssetId("Y"), Fixed(5));
    stakes.add(Service::VT, AgentId("g1"), AssetId("Y"), Fixed(7));

    CHECK(stakes.total_value(Service::DC, prices) == Fixed(25));
    CHECK(stakes.total_value(Service::VT, prices) == Fixed(7));
    CHECK(stakes.total_value(Service::PL, prices).is_zero());

    auto by_asset = stakes.value_by_asset(Service::DC, prices);
    CHECK(by_asset[AssetId("X")] == Fixed(20));
    CHECK(by_asset[AssetId("Y")] == Fixed(5));

    auto stakers = stakes.stakers_of(Service::DC, AssetId("X"), prices);
    CHECK(stakers.size() == 1);
    CHECK(stakers[AgentId("g1")] == Fixed(20));
}
