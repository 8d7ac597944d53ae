#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "intralayer/liquidity.hpp"
#include "intralayer/rng.hpp"

using namespace intralayer;
using namespace intralayer::liquidity;

namespace {

const AssetId HUB("USD"), ETH("ETH"), BTC("BTC");
const ChainId HC("hub"), C1("c1");

PriceBook unit_prices() {
    PriceBook p;
    p.set(HUB, Fixed(1));
    p.set(ETH, Fixed(2));
    p.set(BTC, Fixed(4));
    return p;
}

ConversionGraph star() {
    ConversionGraph g(HUB);
    g.add_edge({ETH, Fixed(1000), Fixed::from_string("0.003")});
    g.add_edge({BTC, Fixed(1000), Fixed::from_string("0.003")});
    return g;
}

} // namespace

TEST_CASE("conversion cost is fee plus quadratic slippage") {
    CHECK(conversion_cost(Fixed(1000), Fixed::from_string("0.003"), Fixed(100)) ==
          Fixed::from_string("5.3"));
    CHECK(conversion_cost(Fixed(1000), Fixed::from_string("0.003"), Fixed(0)).is_zero());
    CHECK(conversion_cost(Fixed(2000), Fixed::from_string("0.003"), Fixed(100)) ==
          Fixed::from_string("2.8"));
    CHECK_THROWS_AS(conversion_cost(Fixed(0), Fixed::from_string("0.003"), Fixed(1)),
                    SimError);
}

TEST_CASE("marginal conversion cost is non-decreasing in volume") {
    Fixed depth(500), rate = Fixed::from_string("0.01");
    Fixed prev_marginal(-1);
    for (int v = 0; v <= 400; v += 20) {
        Fixed c0 = conversion_cost(depth, rate, Fixed(v));
        Fixed c1 = conversion_cost(depth, rate, Fixed(v + 1));
        Fixed marginal = c1 - c0;
        CHECK(marginal >= prev_marginal);
        prev_marginal = marginal;
    }
}

TEST_CASE("identity conversion is free") {
    auto g = star();
    auto prices = unit_prices();
    auto plan = plan_conversion(g, ETH, ETH, Fixed(100), prices);
    CHECK(plan.received == Fixed(100));
    CHECK(plan.total_cost.is_zero());
    CHECK(plan.hops.empty());
}

TEST_CASE("hub to spoke conversion uses one hop") {
    auto g = star();
    auto prices = unit_prices();
    auto plan = plan_conversion(g, HUB, ETH, Fixed(100), prices);
    REQUIRE(plan.hops.size() == 1);
    CHECK(plan.total_cost == Fixed::from_string("5.3"));
    // 94.7 hub value re-priced into ETH at 2.
    CHECK(plan.received == Fixed::from_string("47.35"));
}

TEST_CASE("spoke to spoke conversion adds hop costs") {
    auto g = star();
    auto prices = unit_prices();
    Fixed v(50); // 100 hub value
    auto plan = plan_conversion(g, ETH, BTC, v, prices);
    REQUIRE(plan.hops.size() == 2);

    Fixed hub_value = v * prices.get(ETH);
    Fixed c1 = conversion_cost(Fixed(1000), Fixed::from_string("0.003"), hub_value);
    Fixed c2 = conversion_cost(Fixed(1000), Fixed::from_string("0.003"), hub_value - c1);
    CHECK(plan.total_cost == c1 + c2);
    CHECK(plan.received == (hub_value - c1 - c2) / prices.get(BTC));
}

TEST_CASE("conversion rejects volume whose cost reaches its value") {
    auto g = star();
    auto prices = unit_prices();
    CHECK_THROWS_AS(plan_conversion(g, HUB, ETH, Fixed(3000), prices), SimError);
}

TEST_CASE("star graph refuses malformed edges") {
    ConversionGraph g(HUB);
    CHECK_THROWS_AS(g.add_edge({HUB, Fixed(10), Fixed(0)}), SimError);
    CHECK_THROWS_AS(g.add_edge({ETH, Fixed(0), Fixed(0)}), SimError);
    CHECK_THROWS_AS(g.add_edge({ETH, Fixed(10), Fixed(1)}), SimError);
    CHECK_THROWS_AS(g.edge(BTC), SimError);
}

TEST_CASE("conversion CE edge weights accumulate volume over cost") {
    auto g = star();
    g.record_conversion(ETH, BTC, 100.0, 4.0);
    g.record_conversion(ETH, BTC, 100.0, 6.0);
    auto ce = g.edge_ce();
    CHECK(ce[{ETH, BTC}] == Catch::Approx(20.0));
}

TEST_CASE("transfer cost combines fee and expected security cost") {
    auto tc = transfer_value_cost(Fixed(1), 0.01, Fixed(0), Fixed(100), Fixed(1000));
    CHECK(tc.total == Catch::Approx(11.0));
    CHECK(tc.cost_efficiency == Catch::Approx(1000.0 / 11.0));
}

TEST_CASE("transfer cost tends to the flat fee as stake grows") {
    double prev = 1e300;
    for (long stake : {0L, 100L, 1000L, 100000L, 100000000L}) {
        auto tc = transfer_value_cost(Fixed(1), 0.01, Fixed(stake), Fixed(100), Fixed(1000));
        CHECK(tc.total <= prev);
        prev = tc.total;
    }
    CHECK(prev == Catch::Approx(1.0).margin(1e-3));
}

TEST_CASE("zero-value and zero-cost transfers are rejected") {
    CHECK_THROWS_AS(transfer_value_cost(Fixed(1), 0.01, Fixed(0), Fixed(100), Fixed(0)),
                    SimError);
    CHECK_THROWS_AS(transfer_value_cost(Fixed(0), 0.0, Fixed(0), Fixed(100), Fixed(10)),
                    SimError);
}

TEST_CASE("value-weighted CE aggregate") {
    std::vector<CeRecord> records{{100.0, 4.0}, {300.0, 60.0}}; // CEs 25 and 5
    CHECK(aggregate_ce_vt(records) == Catch::Approx(10.0));

    std::vector<CeRecord> single{{42.0, 6.0}};
    CHECK(aggregate_ce_vt(single) == Catch::Approx(7.0));

    std::vector<CeRecord> none;
    CHECK_THROWS_AS(aggregate_ce_vt(none), SimError);
}

TEST_CASE("conversion CE aggregate with equal volumes is the mean") {
    std::vector<CeRecord> records{{50.0, 5.0}, {50.0, 2.5}}; // CEs 10 and 20
    std::vector<double> weights;
    CHECK(aggregate_ce_vc(records, &weights) == Catch::Approx(15.0));
    CHECK(weights.size() == 2);
    CHECK(weights[0] + weights[1] == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("property: CE aggregates stay within constituent bounds") {
    Rng rng(777);
    for (int round = 0; round < 1000; ++round) {
        std::vector<CeRecord> records;
        size_t n = 1 + rng.uniform_below(8);
        double lo = 1e300, hi = -1e300;
        for (size_t i = 0; i < n; ++i) {
            double value = 1.0 + rng.uniform01() * 1000.0;
            double cost = 0.01 + rng.uniform01() * 50.0;
            records.push_back({value, cost});
            lo = std::min(lo, records.back().ce());
            hi = std::max(hi, records.back().ce());
        }
        std::vector<double> weights;
        double agg = aggregate_ce_vc(records, &weights);
        REQUIRE(agg >= lo - 1e-9);
        REQUIRE(agg <= hi + 1e-9);
        double wsum = 0.0;
        for (double w : weights) wsum += w;
        REQUIRE(std::abs(wsum - 1.0) <= 1e-12);
        REQUIRE(aggregate_ce_vt(records) >= lo - 1e-9);
        REQUIRE(aggregate_ce_vt(records) <= hi + 1e-9);
    }
}

TEST_CASE("ceil_units covers the requested value") {
    Fixed value(10);
    Price p(3);
    Quantity q = ceil_units(value, p);
    CHECK(q * p >= value);
    CHECK((q - Fixed::from_raw(1)) * p < value);

    Price tiny = Fixed::from_string("0.000000000000000007");
    Quantity q2 = ceil_units(Fixed(1), tiny);
    CHECK(q2 * tiny >= Fixed(1));
}

namespace {

struct NolFixture {
    Ledger ledger;
    PriceBook prices = unit_prices();

    NolFixture() {
        for (const auto& chain : {HC, C1}) {
            ledger.register_account({accounts::kNolVc, chain});
            ledger.register_account({accounts::kExternal, chain});
            ledger.register_account({accounts::kTreasury, chain});
        }
        // External market holds deep inventory of everything.
        for (const auto& asset : {HUB, ETH, BTC}) {
            ledger.mint({accounts::kExternal, HC}, asset, Fixed(1000000), SupplyTag::Genesis);
            ledger.mint({accounts::kExternal, C1}, asset, Fixed(1000000), SupplyTag::Genesis);
        }
        ledger.mint({accounts::kTreasury, HC}, HUB, Fixed(10000), SupplyTag::Genesis);
        // Portfolio: 25 ETH on c1 (50) + 50 USD on hub = 100 total.
        ledger.mint({accounts::kNolVc, C1}, ETH, Fixed(25), SupplyTag::Genesis);
        ledger.mint({accounts::kNolVc, HC}, HUB, Fixed(50), SupplyTag::Genesis);
    }

    Fixed total() const { return portfolio_value(ledger, accounts::kNolVc, prices); }

    void apply(const Fixed& budget, const std::map<AssetId, Fixed>& demand) {
        nol_apply_budget(ledger, accounts::kNolVc, accounts::kExternal,
                         accounts::kTreasury, HC, HUB, budget, demand, prices);
    }
};

} // namespace

TEST_CASE("nol budget changes total by exactly the budget") {
    NolFixture f;
    REQUIRE(f.total() == Fixed(100));
    f.apply(Fixed(5), {{ETH, Fixed(30)}, {BTC, Fixed(70)}});
    CHECK(f.total() == Fixed(105));
}

TEST_CASE("zero budget rebalances composition but keeps total invariant") {
    NolFixture f;
    f.apply(Fixed(0), {{BTC, Fixed(1)}});
    CHECK(f.total() == Fixed(100));
    // Composition now tilted into BTC.
    Fixed btc_value;
    for (const auto& chain : {HC, C1})
        btc_value += f.ledger.balance({accounts::kNolVc, chain}, BTC) * f.prices.get(BTC);
    CHECK(btc_value > Fixed(90));
}

TEST_CASE("negative budget draws the portfolio down exactly") {
    NolFixture f;
    Fixed treasury_before = f.ledger.balance({accounts::kTreasury, HC}, HUB);
    f.apply(Fixed(-60), {});
    CHECK(f.total() == Fixed(40));
    CHECK(f.ledger.balance({accounts::kTreasury, HC}, HUB) == treasury_before + Fixed(60));
}

TEST_CASE("overdrawing the portfolio is rejected") {
    NolFixture f;
    CHECK_THROWS_AS(f.apply(Fixed(-200), {}), SimError);
}

TEST_CASE("property: repeated budgets keep the recurrence exact") {
    NolFixture f;
    Rng rng(555);
    Fixed expected = f.total();
    for (int i = 0; i < 25; ++i) {
        long mag = static_cast<long>(rng.uniform_below(40));
        Fixed budget = Fixed(mag) - Fixed(10); // mix of signs
        if ((expected + budget).is_negative()) budget = Fixed(1);
        std::map<AssetId, Fixed> demand;
        if (rng.uniform01() < 0.7) {
            demand[ETH] = Fixed(static_cast<long>(rng.uniform_below(100)));
            demand[BTC] = Fixed(static_cast<long>(rng.uniform_below(100)));
        }
        f.apply(budget, demand);
        expected += budget;
        REQUIRE(f.total() == expected);
    }
}

TEST_CASE("vault gas reserve depletes") {
    VaultState v;
    v.chain = C1;
    v.gas_reserve = Fixed(1);
    v.gas_cost_per_op = Fixed::from_string("0.4");
    CHECK(v.consume_gas());
    CHECK(v.consume_gas());
    CHECK_FALSE(v.consume_gas()); // 0.2 left, cost 0.4
    v.register_conductor("dex", {"contract-1", C1});
    CHECK(v.conductors.count("dex") == 1);
}
