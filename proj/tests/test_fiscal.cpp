#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "intralayer/fiscal.hpp"
#include "intralayer/rng.hpp"

using namespace intralayer;
using namespace intralayer::fiscal;

TEST_CASE("budget vector sums its eleven components") {
    BudgetVector b;
    Fixed expected;
    for (size_t i = 0; i < kBudgetComponents; ++i) {
        b.set(static_cast<BudgetComponent>(i), Fixed(static_cast<int>(i + 1)));
        expected += Fixed(static_cast<int>(i + 1));
    }
    CHECK(b.total() == expected);
    CHECK(b.total() == Fixed(66));
    CHECK_THROWS_AS(b.set(BudgetComponent::OmegaDC, Fixed(-1)), SimError);
}

TEST_CASE("revenue vector sums its five streams") {
    RevenueVector r;
    r.add(RevenueStream::DC, Fixed(1));
    r.add(RevenueStream::VT, Fixed(2));
    r.add(RevenueStream::VC, Fixed(3));
    r.add(RevenueStream::PL, Fixed(4));
    r.add(RevenueStream::KE, Fixed(5));
    CHECK(r.total() == Fixed(15));
    CHECK_THROWS_AS(r.add(RevenueStream::DC, Fixed(-1)), SimError);
}

TEST_CASE("proportional incentive allocation") {
    std::map<AssetId, Fixed> demand{{AssetId("X"), Fixed(30)}, {AssetId("Y"), Fixed(70)}};
    auto alloc = allocate_incentives(Fixed(100), demand, true);
    CHECK(alloc[AssetId("X")] == Fixed(30));
    CHECK(alloc[AssetId("Y")] == Fixed(70));
}

TEST_CASE("zero demand allocates nothing") {
    std::map<AssetId, Fixed> demand{{AssetId("X"), Fixed(0)}};
    CHECK(allocate_incentives(Fixed(100), demand, true).empty());
    CHECK(allocate_incentives(Fixed(100), {}, true).empty());
}

TEST_CASE("single asset takes the whole budget") {
    std::map<AssetId, Fixed> demand{{AssetId("X"), Fixed(7)}};
    auto alloc = allocate_incentives(Fixed(100), demand, true);
    CHECK(alloc[AssetId("X")] == Fixed(100));
}

TEST_CASE("equality allocation sums exactly to the budget") {
    Rng rng(11);
    for (int round = 0; round < 200; ++round) {
        std::map<AssetId, Fixed> demand;
        size_t n = 1 + rng.uniform_below(7);
        for (size_t i = 0; i < n; ++i)
            demand[AssetId("a" + std::to_string(i))] =
                Fixed::from_raw(Fixed::Raw(rng.uniform_below(1000000)) * 977);
        Fixed budget = Fixed(static_cast<long>(rng.uniform_below(1000)));

        Fixed demand_total;
        for (const auto& [a, d] : demand) demand_total += d;

        auto eq = allocate_incentives(budget, demand, true);
        auto le = allocate_incentives(budget, demand, false);
        Fixed eq_sum, le_sum;
        for (const auto& [a, x] : eq) eq_sum += x;
        for (const auto& [a, x] : le) le_sum += x;
        if (demand_total.is_zero()) {
            REQUIRE(eq_sum.is_zero());
        } else {
            REQUIRE(eq_sum == budget);   // equality constraint, exact
            REQUIRE(le_sum <= budget);   // inequality constraint
        }
    }
}

TEST_CASE("fee credits consume before cash") {
    CreditBook book;
    AgentId a("alice");
    book.issue(a, Fixed(10), 1, 5);
    auto p = book.consume(a, Fixed(7));
    CHECK(p.credit_used == Fixed(7));
    CHECK(p.cash_due.is_zero());
    CHECK(book.total(a) == Fixed(3));
}

TEST_CASE("no credits means full cash fee") {
    CreditBook book;
    auto p = book.consume(AgentId("bob"), Fixed(5));
    CHECK(p.credit_used.is_zero());
    CHECK(p.cash_due == Fixed(5));
}

TEST_CASE("issuance is refused after the phase boundary") {
    CreditBook book;
    CHECK_THROWS_AS(book.issue(AgentId("a"), Fixed(1), 6, 5), SimError);
    CHECK_NOTHROW(book.issue(AgentId("a"), Fixed(1), 5, 5));
}

TEST_CASE("credits expire after their ttl") {
    CreditBook book;
    AgentId a("alice");
    book.issue(a, Fixed(10), 1, 10);
    book.issue(a, Fixed(4), 3, 10);
    auto expired = book.expire(4, 3); // lot from epoch 1 is 3 epochs old
    CHECK(expired[a] == Fixed(10));
    CHECK(book.total(a) == Fixed(4));
}

TEST_CASE("credits consume oldest lots first") {
    CreditBook book;
    AgentId a("alice");
    book.issue(a, Fixed(5), 1, 10);
    book.issue(a, Fixed(5), 2, 10);
    book.consume(a, Fixed(6));
    auto expired = book.expire(4, 3); // epoch-1 lot fully consumed already
    CHECK(expired.count(a) == 0);
    CHECK(book.total(a) == Fixed(4));
}

TEST_CASE("resource recurrence") {
    CHECK(next_resources(Fixed(100), Fixed(10), Fixed(7), Fixed(0)) == Fixed(103));
    CHECK(next_resources(Fixed(100), Fixed(7), Fixed(7), Fixed(0)) == Fixed(100));
    CHECK(next_resources(Fixed(100), Fixed(0), Fixed(3), Fixed(-2)) == Fixed(95));
}

TEST_CASE("fiscal objective") {
    FiscalReport rep;
    rep.revenue.add(RevenueStream::VT, Fixed(10));
    rep.budget.set(BudgetComponent::OmegaVT, Fixed(7)); // SR = 3
    rep.resources_r = Fixed(105);
    rep.requirement_gamma = Fixed(100); // Gamma - R = -5
    std::vector<FiscalReport> traj{rep};

    CHECK(fiscal_objective(traj, 0.5) == Catch::Approx(5.5));
    CHECK(fiscal_objective(traj, 0.0) == Catch::Approx(3.0));

    rep.resources_r = rep.requirement_gamma;
    std::vector<FiscalReport> flat{rep, rep};
    CHECK(fiscal_objective(flat, 1.0) == Catch::Approx(6.0));
    CHECK_THROWS_AS(fiscal_objective(traj, 1.5), SimError);
}

TEST_CASE("greedy agent acquisition") {
    std::vector<AcquisitionCandidate> candidates{
        {"c1", Fixed(4), 8.0},
        {"c2", Fixed(7), 7.0},
    };
    auto got = acquire_agents(Fixed(10), candidates);
    REQUIRE(got.size() == 1);
    CHECK(got[0].id == "c1"); // second would break the budget

    CHECK(acquire_agents(Fixed(10), {}).empty());

    // A candidate worth less than it costs is never acquired alone.
    std::vector<AcquisitionCandidate> bad{{"c3", Fixed(5), 3.0}};
    CHECK(acquire_agents(Fixed(10), bad).empty());

    CHECK_THROWS_AS(acquire_agents(Fixed(10), {{"z", Fixed(0), 1.0}}), SimError);
}

TEST_CASE("acquisition output honours both constraints") {
    Rng rng(5);
    for (int round = 0; round < 200; ++round) {
        std::vector<AcquisitionCandidate> candidates;
        size_t n = rng.uniform_below(8);
        for (size_t i = 0; i < n; ++i)
            candidates.push_back({"c" + std::to_string(i),
                                  Fixed(static_cast<long>(1 + rng.uniform_below(20))),
                                  static_cast<double>(rng.uniform_below(30))});
        Fixed budget = Fixed(static_cast<long>(rng.uniform_below(50)));
        auto got = acquire_agents(budget, candidates);
        Fixed spent;
        double value = 0.0;
        for (const auto& c : got) {
            spent += c.cost;
            value += c.value_estimate;
        }
        REQUIRE(spent <= budget);
        REQUIRE(value >= spent.to_double());
    }
}
