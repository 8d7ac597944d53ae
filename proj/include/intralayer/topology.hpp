#pragma once

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>

#include "intralayer/errors.hpp"
#include "intralayer/ids.hpp"

namespace intralayer::topology {

// The five per-path cost factors of a transactional path.
enum class CostComponent { DC, VT, VC, Clearing, SC };

inline constexpr std::array<CostComponent, 5> kAllComponents = {
    CostComponent::DC, CostComponent::VT, CostComponent::VC,
    CostComponent::Clearing, CostComponent::SC};

inline const char* component_name(CostComponent c) {
    switch (c) {
        case CostComponent::DC: return "DC";
        case CostComponent::VT: return "VT";
        case CostComponent::VC: return "VC";
        case CostComponent::Clearing: return "Clearing";
        case CostComponent::SC: return "SC";
    }
    return "?";
}

// A priced connection between two agents over one epoch.
struct TransactionalPath {
    AgentId from;
    AgentId to;
    double output = 0.0;
    std::map<CostComponent, double> costs;

    void set_cost(CostComponent c, double v) { costs[c] = v; }
};

// Aggregates the five components into the path cost; the aggregator is an
// unweighted sum, which keeps savings comparisons linear.
inline double path_total_cost(const TransactionalPath& path) {
    double total = 0.0;
    for (CostComponent c : kAllComponents) {
        auto it = path.costs.find(c);
        if (it == path.costs.end())
            raise(ErrorCode::MissingComponent, component_name(c));
        total += it->second;
    }
    return total;
}

// Directed agent graph with per-edge transacted value.
class EcosystemGraph {
public:
    void add_agent(const AgentId& a) { vertices_.insert(a); }

    bool has_agent(const AgentId& a) const { return vertices_.count(a) > 0; }

    void add_edge(const AgentId& from, const AgentId& to, double weight) {
        if (from == to) raise(ErrorCode::ValidationError, "self-loop " + from.str());
        if (!has_agent(from)) raise(ErrorCode::UnknownAgent, from.str());
        if (!has_agent(to)) raise(ErrorCode::UnknownAgent, to.str());
        if (weight < 0.0) raise(ErrorCode::ValidationError, "negative edge weight");
        weights_[{from, to}] += weight;
    }

    size_t agent_count() const { return vertices_.size(); }
    const std::set<AgentId>& agents() const { return vertices_; }
    const std::map<std::pair<AgentId, AgentId>, double>& edges() const { return weights_; }

private:
    std::set<AgentId> vertices_;
    std::map<std::pair<AgentId, AgentId>, double> weights_;
};

// Cost for one agent to set up bilateral paths with every other agent at a
// uniform per-pair cost.
inline double setup_cost_bilateral(const AgentId& agent, const EcosystemGraph& graph,
                                   double per_pair_cost) {
    if (!graph.has_agent(agent)) raise(ErrorCode::UnknownAgent, agent.str());
    return static_cast<double>(graph.agent_count() - 1) * per_pair_cost;
}

// General form: per-counterparty setup costs.
inline double setup_cost_bilateral(const AgentId& agent,
                                   const std::map<AgentId, double>& per_counterparty) {
    double total = 0.0;
    for (const auto& [other, cost] : per_counterparty) {
        if (other == agent) continue;
        total += cost;
    }
    return total;
}

// One hub link per agent connects everyone within two hops.
inline double setup_cost_gateway(const EcosystemGraph& graph, double per_link_cost) {
    return static_cast<double>(graph.agent_count()) * per_link_cost;
}

struct NetworkValueModel {
    enum class Kind { Metcalfe, Zipf };
    Kind kind = Kind::Metcalfe;
    double scale = 1.0;
};

inline NetworkValueModel::Kind network_value_kind_from_string(const std::string& s) {
    if (s == "metcalfe") return NetworkValueModel::Kind::Metcalfe;
    if (s == "zipf") return NetworkValueModel::Kind::Zipf;
    raise(ErrorCode::ValidationError, "unknown network value model '" + s + "'");
}

// Metcalfe: c*N^2. Zipf: c*N*ln(N) with V(0) = V(1) = 0.
inline double network_value(const NetworkValueModel& model, long agents) {
    if (agents < 0) raise(ErrorCode::ValidationError, "negative agent count");
    double n = static_cast<double>(agents);
    switch (model.kind) {
        case NetworkValueModel::Kind::Metcalfe:
            return model.scale * n * n;
        case NetworkValueModel::Kind::Zipf:
            return agents <= 1 ? 0.0 : model.scale * n * std::log(n);
    }
    return 0.0;
}

// Marginal value of adding the k-th agent.
inline double network_value_delta(const NetworkValueModel& model, long k) {
    return network_value(model, k) - network_value(model, k - 1);
}

// Power-law path count N_p = kappa * N_a^x.
inline double path_count(double kappa, double exponent, long agents) {
    if (kappa <= 0.0) raise(ErrorCode::ValidationError, "kappa must be positive");
    if (exponent <= 1.0) raise(ErrorCode::ValidationError, "exponent must exceed 1");
    if (agents < 0) raise(ErrorCode::ValidationError, "negative agent count");
    if (agents == 0) return 0.0;
    return kappa * std::pow(static_cast<double>(agents), exponent);
}

} // namespace intralayer::topology
