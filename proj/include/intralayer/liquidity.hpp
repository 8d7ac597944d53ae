#pragma once

#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "intralayer/comms.hpp"
#include "intralayer/core.hpp"
#include "intralayer/errors.hpp"
#include "intralayer/fixed.hpp"
#include "intralayer/ids.hpp"

namespace intralayer::liquidity {

struct ConductorBinding {
    std::string contract_id;
    ChainId chain;
};

struct DirectoryParams {
    std::set<std::string> required_message_keys;
};

// Per-chain vault: proxy entry point semantics are implicit (every operation
// lands here), the directory holds validation parameters, conductors bind to
// connected contracts on the same chain.
struct VaultState {
    ChainId chain;
    Quantity gas_reserve;
    Fixed gas_cost_per_op;
    std::map<std::string, ConductorBinding> conductors;
    DirectoryParams directory;

    void register_conductor(const std::string& name, ConductorBinding binding) {
        conductors[name] = std::move(binding);
    }

    // Burns gas for one routed operation; false once the reserve is dry.
    bool consume_gas() {
        if (gas_reserve < gas_cost_per_op) return false;
        gas_reserve -= gas_cost_per_op;
        return true;
    }
};

// One spoke edge of the star-shaped conversion network. Depth is quoted in
// hub units; the fee rate applies to converted hub value.
struct ConversionEdge {
    AssetId spoke;
    Quantity depth;
    Fixed fee_rate;
};

// Fee plus quadratic slippage: fee_rate*v + v^2/(2*depth), in hub units.
// Marginal cost fee_rate + v/depth is non-decreasing in v.
inline Fixed conversion_cost(const Quantity& depth, const Fixed& fee_rate,
                             const Quantity& volume_hub) {
    require_non_negative(volume_hub, "conversion volume");
    if (depth.is_zero() || depth.is_negative())
        raise(ErrorCode::ZeroDepth, "conversion edge has no depth");
    Fixed fee = fee_rate * volume_hub;
    Fixed slip = Fixed::mul_div(volume_hub, volume_hub, Fixed(2) * depth);
    return fee + slip;
}

inline Fixed conversion_fee_part(const Fixed& fee_rate, const Quantity& volume_hub) {
    return fee_rate * volume_hub;
}

// Star conversion network: hub accounting asset in the centre, one edge per
// spoke asset, cumulative volume/cost per ordered pair as CE edge weights.
class ConversionGraph {
public:
    explicit ConversionGraph(AssetId hub) : hub_(std::move(hub)) {}
    ConversionGraph() : hub_(AssetId("hub")) {}

    const AssetId& hub() const { return hub_; }

    void add_edge(ConversionEdge edge) {
        if (edge.spoke == hub_)
            raise(ErrorCode::ValidationError, "hub asset cannot be its own spoke");
        if (edge.depth.is_zero() || edge.depth.is_negative())
            raise(ErrorCode::ValidationError, "edge depth must be positive");
        if (edge.fee_rate.is_negative() || edge.fee_rate >= Fixed(1))
            raise(ErrorCode::ValidationError, "edge fee rate outside [0,1)");
        edges_[edge.spoke] = std::move(edge);
    }

    bool has_edge(const AssetId& spoke) const { return edges_.count(spoke) > 0; }

    const ConversionEdge& edge(const AssetId& spoke) const {
        auto it = edges_.find(spoke);
        if (it == edges_.end())
            raise(ErrorCode::ZeroDepth, "no conversion edge for " + spoke.str());
        return it->second;
    }

    const std::map<AssetId, ConversionEdge>& edges() const { return edges_; }

    void record_conversion(const AssetId& src, const AssetId& dst, double volume,
                           double cost) {
        auto& acc = ce_accum_[{src, dst}];
        acc.first += volume;
        acc.second += cost;
    }

    // CE = V/C for C != 0; pairs with zero cumulative cost have no weight yet.
    std::map<std::pair<AssetId, AssetId>, double> edge_ce() const {
        std::map<std::pair<AssetId, AssetId>, double> out;
        for (const auto& [pair, acc] : ce_accum_)
            if (acc.second != 0.0) out[pair] = acc.first / acc.second;
        return out;
    }

private:
    AssetId hub_;
    std::map<AssetId, ConversionEdge> edges_;
    std::map<std::pair<AssetId, AssetId>, std::pair<double, double>> ce_accum_;
};

struct ConversionHop {
    AssetId spoke;
    Fixed volume_hub;
    Fixed cost;
    Fixed fee;
};

// Routed conversion: src -> hub -> dst through the star, at most two hops.
struct ConversionPlan {
    std::vector<ConversionHop> hops;
    Fixed src_value_hub;
    Fixed total_cost;
    Fixed total_fee;
    Quantity received;

    Fixed slippage() const { return total_cost - total_fee; }
};

// Prices the route without touching any inventory. depth_of lets the caller
// add system-owned liquidity on top of configured edge depth.
inline ConversionPlan plan_conversion(
    const ConversionGraph& graph, const AssetId& src, const AssetId& dst,
    const Quantity& src_units, const PriceBook& prices,
    const std::function<Fixed(const ConversionEdge&)>& depth_of =
        [](const ConversionEdge& e) { return e.depth; }) {
    require_non_negative(src_units, "conversion volume");
    ConversionPlan plan;
    plan.src_value_hub = src_units * prices.get(src);

    if (src == dst) {
        plan.received = src_units;
        return plan;
    }

    Fixed flowing = plan.src_value_hub;
    auto apply_hop = [&](const AssetId& spoke) {
        const ConversionEdge& e = graph.edge(spoke);
        Fixed depth = depth_of(e);
        Fixed cost = conversion_cost(depth, e.fee_rate, flowing);
        if (cost >= flowing && !flowing.is_zero())
            raise(ErrorCode::CostExceedsValue,
                  "conversion cost " + cost.to_string() + " on edge " + spoke.str() +
                  " exceeds value " + flowing.to_string());
        plan.hops.push_back({spoke, flowing, cost, conversion_fee_part(e.fee_rate, flowing)});
        plan.total_cost += cost;
        plan.total_fee += plan.hops.back().fee;
        flowing -= cost;
    };

    if (src != graph.hub()) apply_hop(src);
    if (dst != graph.hub()) apply_hop(dst);

    plan.received = flowing / prices.get(dst);
    return plan;
}

// Nominal transfer cost: flat fee plus expected security cost, where the
// failure probability decays with guarantor stake.
struct TransferCost {
    Fixed fee;
    double expected_security = 0.0;
    double total = 0.0;
    double cost_efficiency = 0.0;
};

inline TransferCost transfer_value_cost(const Fixed& fee, double pi0,
                                        const Fixed& stake_value, const Fixed& s0,
                                        const Fixed& value_hub) {
    if (value_hub.is_zero() || value_hub.is_negative())
        raise(ErrorCode::NoVolume, "zero-value transfer rejected");
    if (pi0 < 0.0) raise(ErrorCode::ValidationError, "pi0 must be >= 0");
    TransferCost out;
    out.fee = fee;
    double factor = comms::stake_quality_factor(stake_value, s0);
    out.expected_security = pi0 * factor * value_hub.to_double();
    out.total = fee.to_double() + out.expected_security;
    if (out.total == 0.0)
        raise(ErrorCode::NoVolume, "zero-cost transfer rejected (CE undefined)");
    out.cost_efficiency = value_hub.to_double() / out.total;
    return out;
}

struct CeRecord {
    double value = 0.0;
    double cost = 0.0;

    double ce() const { return value / cost; }
};

// Value-weighted mean of per-record cost efficiencies.
inline double aggregate_ce(std::span<const CeRecord> records) {
    double total_value = 0.0;
    double weighted = 0.0;
    for (const auto& r : records) {
        if (r.cost == 0.0) raise(ErrorCode::NoVolume, "record with zero cost");
        total_value += r.value;
        weighted += r.value * r.ce();
    }
    if (total_value <= 0.0) raise(ErrorCode::NoVolume, "no transferred value");
    return weighted / total_value;
}

inline double aggregate_ce_vt(std::span<const CeRecord> records) {
    return aggregate_ce(records);
}

// Conversion-efficiency aggregate; also exposes the volume weights so their
// normalisation can be checked.
inline double aggregate_ce_vc(std::span<const CeRecord> records,
                              std::vector<double>* weights_out = nullptr) {
    double total_volume = 0.0;
    for (const auto& r : records) {
        if (r.cost == 0.0) raise(ErrorCode::NoVolume, "record with zero cost");
        total_volume += r.value;
    }
    if (total_volume <= 0.0) raise(ErrorCode::NoVolume, "no converted volume");
    double agg = 0.0;
    for (const auto& r : records) {
        double w = r.value / total_volume;
        if (weights_out) weights_out->push_back(w);
        agg += w * r.ce();
    }
    return agg;
}

// Smallest unit count whose exact value covers `value` at `price`.
inline Quantity ceil_units(const Fixed& value, const Price& price) {
    require_positive(price, "price");
    Fixed::Raw num = value.raw() * Fixed::scale() + price.raw() - 1;
    return Fixed::from_raw(num / price.raw());
}

// Network-owned liquidity helpers. The portfolio is a set of ledger accounts
// (one per chain) under a single owner bucket; all trades settle against the
// external market account at current prices.
inline Fixed portfolio_value(const Ledger& ledger, const std::string& owner,
                             const PriceBook& prices) {
    Fixed total;
    for (const auto& [key, assets] : ledger.holdings()) {
        if (key.owner != owner) continue;
        for (const auto& [asset, qty] : assets) total += qty * prices.get(asset);
    }
    return total;
}

// Chain where the owner holds the most of an asset; falls back to fallback.
inline ChainId preferred_chain(const Ledger& ledger, const std::string& owner,
                               const AssetId& asset, const ChainId& fallback) {
    ChainId best = fallback;
    Quantity best_qty;
    for (const auto& [key, assets] : ledger.holdings()) {
        if (key.owner != owner) continue;
        auto it = assets.find(asset);
        if (it != assets.end() && it->second > best_qty) {
            best_qty = it->second;
            best = key.chain;
        }
    }
    return best;
}

// Applies an adjustment budget to the portfolio and rebalances composition
// toward the demand profile. The portfolio's hub value changes by exactly
// budget: every trade with the external account is value-neutral (units move
// against their exact hub value) and rounding residue parks in the hub asset,
// whose price is pinned at 1.
inline void nol_apply_budget(Ledger& ledger, const std::string& owner,
                             const std::string& counterparty,
                             const std::string& treasury_owner,
                             const ChainId& hub_chain, const AssetId& hub_asset,
                             const Fixed& budget,
                             const std::map<AssetId, Fixed>& demand,
                             const PriceBook& prices) {
    Fixed total = portfolio_value(ledger, owner, prices);
    Fixed new_total = total + budget;
    if (new_total.is_negative())
        raise(ErrorCode::NegativePortfolio,
              "budget " + budget.to_string() + " against total " + total.to_string());

    AccountKey nol_hub{owner, hub_chain};
    AccountKey treasury{treasury_owner, hub_chain};

    auto consolidate_hub_cash = [&] {
        std::vector<std::pair<AccountKey, Quantity>> moves;
        for (const auto& [key, assets] : ledger.holdings()) {
            if (key.owner != owner || key.chain == hub_chain) continue;
            auto it = assets.find(hub_asset);
            if (it != assets.end() && !it->second.is_zero())
                moves.emplace_back(key, it->second);
        }
        for (const auto& [key, qty] : moves) ledger.post(key, nol_hub, hub_asset, qty);
    };

    auto position_value = [&](const AssetId& asset) {
        Fixed v;
        for (const auto& [key, assets] : ledger.holdings()) {
            if (key.owner != owner) continue;
            auto it = assets.find(asset);
            if (it != assets.end()) v += it->second * prices.get(asset);
        }
        return v;
    };

    // Budget inflow first so it participates in the rebalance.
    if (!budget.is_negative() && !budget.is_zero())
        ledger.post(treasury, nol_hub, hub_asset, budget);

    Fixed demand_total;
    for (const auto& [asset, d] : demand) {
        require_non_negative(d, "demand");
        if (asset != hub_asset) demand_total += d;
    }

    if (!demand_total.is_zero()) {
        // Sell overweight spokes, then buy underweight ones. All trades move
        // units against their exact hub value, so the portfolio total is
        // untouched by the rebalance; rounding residue stays in hub cash.
        std::map<AssetId, Fixed> target;
        for (const auto& [asset, d] : demand) {
            if (asset == hub_asset) continue;
            target[asset] = Fixed::mul_div(new_total, d, demand_total);
        }

        std::set<AssetId> touched;
        for (const auto& [asset, t] : target) touched.insert(asset);
        for (const auto& [key, assets] : ledger.holdings()) {
            if (key.owner != owner) continue;
            for (const auto& [asset, qty] : assets)
                if (!qty.is_zero() && asset != hub_asset) touched.insert(asset);
        }

        for (const AssetId& asset : touched) {
            Fixed want = target.count(asset) ? target[asset] : Fixed();
            Fixed have = position_value(asset);
            if (have <= want) continue;
            const Price& p = prices.get(asset);
            Quantity units = (have - want) / p;
            while (!units.is_zero()) {
                ChainId chain = preferred_chain(ledger, owner, asset, hub_chain);
                AccountKey from{owner, chain};
                Quantity avail = ledger.balance(from, asset);
                Quantity sell = units < avail ? units : avail;
                if (sell.is_zero()) break;
                ledger.post(from, {counterparty, chain}, asset, sell);
                ledger.post({counterparty, chain}, {owner, chain}, hub_asset, sell * p);
                units -= sell;
            }
        }

        consolidate_hub_cash();

        for (const AssetId& asset : touched) {
            Fixed want = target.count(asset) ? target[asset] : Fixed();
            Fixed have = position_value(asset);
            if (have >= want) continue;
            const Price& p = prices.get(asset);
            Quantity units = (want - have) / p;
            Quantity cash = ledger.balance(nol_hub, hub_asset);
            Quantity affordable = cash / p;
            if (affordable < units) units = affordable;
            if (units.is_zero()) continue;
            ChainId chain = preferred_chain(ledger, owner, asset, hub_chain);
            Fixed pay = units * p;
            if (chain != hub_chain)
                ledger.post(nol_hub, {owner, chain}, hub_asset, pay);
            ledger.post({owner, chain}, {counterparty, chain}, hub_asset, pay);
            ledger.post({counterparty, chain}, {owner, chain}, asset, units);
        }
    }

    if (budget.is_negative()) {
        Fixed need = -budget;
        consolidate_hub_cash();
        Quantity have = ledger.balance(nol_hub, hub_asset);
        if (have < need) {
            // Raise the remainder by selling spokes in deterministic order.
            Fixed missing = need - have;
            std::vector<std::pair<AccountKey, AssetId>> positions;
            for (const auto& [key, assets] : ledger.holdings()) {
                if (key.owner != owner) continue;
                for (const auto& [asset, qty] : assets)
                    if (asset != hub_asset && !qty.is_zero())
                        positions.emplace_back(key, asset);
            }
            for (const auto& [key, asset] : positions) {
                if (missing.is_zero()) break;
                const Price& p = prices.get(asset);
                Quantity qty = ledger.balance(key, asset);
                Quantity sell = ceil_units(missing, p);
                if (sell > qty) sell = qty;
                if (sell.is_zero()) continue;
                ledger.post(key, {counterparty, key.chain}, asset, sell);
                ledger.post({counterparty, key.chain}, {owner, key.chain}, hub_asset,
                            sell * p);
                Fixed raised = sell * p;
                missing = raised >= missing ? Fixed() : missing - raised;
            }
            consolidate_hub_cash();
        }
        ledger.post(nol_hub, treasury, hub_asset, need);
    }
}

} // namespace intralayer::liquidity
