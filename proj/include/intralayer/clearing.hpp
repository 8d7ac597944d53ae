#pragma once

#include <map>
#include <string>
#include <vector>

#include "intralayer/errors.hpp"
#include "intralayer/fixed.hpp"
#include "intralayer/ids.hpp"

namespace intralayer::clearing {

// The prose and the savings formula disagree on the hub interaction count
// (2n-1 vs 2n); both are supported, the formula's 2n is the default.
enum class InteractionModel { TwoN, TwoNMinusOne };

inline InteractionModel interaction_model_from_string(const std::string& s) {
    if (s == "two_n") return InteractionModel::TwoN;
    if (s == "two_n_minus_one") return InteractionModel::TwoNMinusOne;
    raise(ErrorCode::ValidationError, "unknown interaction model '" + s + "'");
}

// A set of agents sharing execution logic, plus the cluster's cost profile.
struct TransactionCluster {
    std::string id;
    std::vector<AgentId> members;
    std::string execution_logic = "net_positions";
    double c_dc = 0.0;
    double c_vc = 0.0;
    double c_p = 0.0;     // per-agent processing cost
    double hub_c_p = 0.0; // hub processing cost C*

    size_t n() const { return members.size(); }
};

inline long bilateral_interactions(size_t n) {
    return static_cast<long>(n) * (static_cast<long>(n) - 1);
}

inline long hub_interactions(size_t n, InteractionModel model = InteractionModel::TwoN) {
    long two_n = 2 * static_cast<long>(n);
    return model == InteractionModel::TwoN ? two_n : two_n - 1;
}

// n(n-1)(c_DC + c_VC) + n*c_P: every member talks to every other member.
inline double bilateral_cost(const TransactionCluster& tc) {
    return static_cast<double>(bilateral_interactions(tc.n())) * (tc.c_dc + tc.c_vc) +
           static_cast<double>(tc.n()) * tc.c_p;
}

// Hub interactions (2n by default) plus the hub's own processing cost.
inline double hub_cost(const TransactionCluster& tc,
                       InteractionModel model = InteractionModel::TwoN) {
    return static_cast<double>(hub_interactions(tc.n(), model)) * (tc.c_dc + tc.c_vc) +
           tc.hub_c_p;
}

// May be negative for small clusters: the hub only wins once n is large
// enough to amortise its processing cost.
inline double cost_savings(const TransactionCluster& tc,
                           InteractionModel model = InteractionModel::TwoN) {
    return bilateral_cost(tc) - hub_cost(tc, model);
}

struct SettlementLeg {
    AgentId agent;
    Fixed amount; // hub units
};

// Multilateral net positions routed through the hub: one leg per member with
// a nonzero net, payers first.
struct SettlementPlan {
    std::map<AgentId, Fixed> net; // positive receives, negative pays
    std::vector<SettlementLeg> pays;
    std::vector<SettlementLeg> receives;

    bool empty() const { return pays.empty() && receives.empty(); }
};

using ObligationMap = std::map<std::pair<AgentId, AgentId>, Fixed>;

inline SettlementPlan net_obligations(const ObligationMap& obligations) {
    SettlementPlan plan;
    for (const auto& [pair, amount] : obligations) {
        require_non_negative(amount, "obligation");
        plan.net[pair.first] -= amount;
        plan.net[pair.second] += amount;
    }
    for (const auto& [agent, net] : plan.net) {
        if (net.is_negative()) plan.pays.push_back({agent, -net});
        else if (!net.is_zero()) plan.receives.push_back({agent, net});
    }
    return plan;
}

// UFC: compiles obligations between cluster members and settles the nets at
// fixed step intervals.
class UFCInstance {
public:
    UFCInstance() = default;
    UFCInstance(std::string id, TransactionCluster cluster, int aggregation_interval)
        : id_(std::move(id)), cluster_(std::move(cluster)),
          interval_(aggregation_interval) {
        if (interval_ < 1)
            raise(ErrorCode::ValidationError, "aggregation interval must be >= 1");
        if (cluster_.members.empty())
            raise(ErrorCode::ValidationError, "cluster needs at least one member");
        for (const auto& m : cluster_.members) member_set_.insert(m);
    }

    const std::string& id() const { return id_; }
    const TransactionCluster& cluster() const { return cluster_; }
    int aggregation_interval() const { return interval_; }

    bool is_member(const AgentId& agent) const { return member_set_.count(agent) > 0; }

    // Obligations arrive between rounds and are ingested at round start.
    void add_obligation(const AgentId& from, const AgentId& to, const Fixed& amount) {
        if (!is_member(from) || !is_member(to))
            raise(ErrorCode::UnknownAgent, "obligation outside cluster " + id_);
        if (from == to) raise(ErrorCode::ValidationError, "self-obligation");
        require_non_negative(amount, "obligation");
        staged_[{from, to}] += amount;
    }

    bool due(long global_step) const { return global_step - last_round_step_ >= interval_; }

    void mark_round(long global_step) { last_round_step_ = global_step; }
    long last_round_step() const { return last_round_step_; }
    void restore_last_round_step(long s) { last_round_step_ = s; }

    // Step 1 of a round: fold staged obligations into the pending book.
    void ingest() {
        for (const auto& [pair, amount] : staged_) pending_[pair] += amount;
        staged_.clear();
    }

    const ObligationMap& pending() const { return pending_; }
    const ObligationMap& staged() const { return staged_; }

    void clear_pending() { pending_.clear(); }

    void restore_books(ObligationMap staged, ObligationMap pending) {
        staged_ = std::move(staged);
        pending_ = std::move(pending);
    }

private:
    std::string id_;
    TransactionCluster cluster_;
    int interval_ = 1;
    std::set<AgentId> member_set_;
    ObligationMap staged_;
    ObligationMap pending_;
    long last_round_step_ = 0;
};

} // namespace intralayer::clearing
