#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "intralayer/metrics.hpp"
#include "intralayer/rng.hpp"

using namespace intralayer;
using namespace intralayer::metrics;

TEST_CASE("agent capital efficiency") {
    std::vector<double> outputs{2.0, 3.0};
    CHECK(agent_capital_efficiency(outputs, 10.0) == 0.5);

    std::vector<double> none;
    CHECK(agent_capital_efficiency(none, 10.0) == 0.0);

    CHECK_THROWS_AS(agent_capital_efficiency(outputs, 0.0), SimError);
}

TEST_CASE("aggregate KE is the ratio of global sums") {
    std::vector<CapitalRecord> records{{5.0, 10.0}, {5.0, 10.0}};
    CHECK(aggregate_ke(records) == 0.5);

    std::vector<CapitalRecord> zeros{{0.0, 10.0}, {0.0, 5.0}};
    CHECK(aggregate_ke(zeros) == 0.0);

    std::vector<CapitalRecord> empty;
    CHECK_THROWS_AS(aggregate_ke(empty), SimError);
}

TEST_CASE("a dominant agent pulls the aggregate toward its own ratio") {
    // Agent A has ratio 0.9, agent B ratio 0.1; grow A's capital share.
    double prev_distance = 1e9;
    for (double scale : {1.0, 10.0, 100.0, 1000.0, 10000.0}) {
        std::vector<CapitalRecord> records{{0.9 * scale, scale}, {0.1, 1.0}};
        double agg = aggregate_ke(records);
        double distance = std::abs(agg - 0.9);
        CHECK(distance < prev_distance);
        prev_distance = distance;
    }
    CHECK(prev_distance < 1e-4);
}

TEST_CASE("aggregate KE differs from the mean of ratios") {
    std::vector<CapitalRecord> records{{8.0, 2.0}, {1.0, 10.0}};
    // ratio of sums: 9/12; mean of ratios would be (4 + 0.1)/2.
    CHECK(aggregate_ke(records) == Catch::Approx(0.75));
}

TEST_CASE("master objective") {
    SECTION("single path, no resource weight") {
        EpochObjectiveInputs in{10.0 - 4.0, 100.0, 90.0, 0.0};
        std::vector<EpochObjectiveInputs> traj{in};
        CHECK(master_objective(traj) == 6.0);
    }
    SECTION("balanced network scores zero") {
        EpochObjectiveInputs in{0.0, 100.0, 100.0, 1.0};
        std::vector<EpochObjectiveInputs> traj{in, in, in};
        CHECK(master_objective(traj) == 0.0);
    }
    SECTION("beta weights the resource surplus") {
        EpochObjectiveInputs in{0.0, 102.0, 100.0, 1.0};
        std::vector<EpochObjectiveInputs> traj{in, in};
        CHECK(master_objective(traj) == -4.0); // subtracts 2 per epoch
    }
}

TEST_CASE("property: aggregate KE lies within constituent ratio bounds") {
    Rng rng(99);
    for (int round = 0; round < 500; ++round) {
        std::vector<CapitalRecord> records;
        size_t n = 1 + rng.uniform_below(6);
        double lo = 1e300, hi = -1e300;
        for (size_t i = 0; i < n; ++i) {
            CapitalRecord r{rng.uniform01() * 10.0, 0.1 + rng.uniform01() * 10.0};
            records.push_back(r);
            lo = std::min(lo, r.output / r.capital);
            hi = std::max(hi, r.output / r.capital);
        }
        double agg = aggregate_ke(records);
        REQUIRE(agg >= lo - 1e-12);
        REQUIRE(agg <= hi + 1e-12);
    }
}
