#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "intralayer/core.hpp"
#include "intralayer/errors.hpp"
#include "intralayer/fixed.hpp"
#include "intralayer/ids.hpp"
#include "intralayer/liquidity.hpp"

namespace intralayer::brokerage {

struct LeaseTerms {
    Fixed rho_min = Fixed(1);
    Fixed rho_maint = Fixed(1);
    Fixed fee_rate; // per epoch, fraction of leased value

    void validate() const {
        if (rho_min.is_zero() || rho_min.is_negative())
            raise(ErrorCode::ValidationError, "rho_min must be positive");
        if (rho_maint > rho_min)
            raise(ErrorCode::ValidationError, "rho_maint must not exceed rho_min");
        if (fee_rate.is_negative())
            raise(ErrorCode::ValidationError, "lease fee rate must be >= 0");
    }
};

// One collateralised inventory lease. Collateral sits in app a1k, the leased
// inventory is deployed at target app a3k; both apps are tracked explicitly
// because their superscripts travel separately through the rate and PnL.
struct CollateralPosition {
    std::string id;
    AgentId owner;

    AssetId collateral_asset;
    Quantity collateral_qty; // H
    ChainId collateral_chain;
    std::string collateral_app; // a1k

    AssetId leased_asset;
    Quantity leased_units;
    Fixed leased_value; // L, hub units at inception
    ChainId lease_chain;

    std::string target_app; // a3k
    AssetId deployed_asset;
    Quantity deployed_units;

    bool open = true;

    Fixed deployed_value(const PriceBook& prices) const {
        return deployed_units * prices.get(deployed_asset);
    }
};

// rho = (H*p + L_a3k) / L.
inline Fixed collateralization_rate(const Quantity& collateral_qty,
                                    const Price& collateral_price,
                                    const Fixed& deployed_value, const Fixed& leased_value) {
    if (leased_value.is_zero() || leased_value.is_negative())
        raise(ErrorCode::ZeroLease, "collateralization rate with no lease");
    return (collateral_qty * collateral_price + deployed_value) / leased_value;
}

inline Fixed collateralization_rate(const CollateralPosition& pos, const PriceBook& prices) {
    return collateralization_rate(pos.collateral_qty, prices.get(pos.collateral_asset),
                                  pos.deployed_value(prices), pos.leased_value);
}

enum class MarkAction { None, MarginCall, Liquidate };

inline const char* mark_action_name(MarkAction a) {
    switch (a) {
        case MarkAction::None: return "none";
        case MarkAction::MarginCall: return "margin_call";
        case MarkAction::Liquidate: return "liquidate";
    }
    return "?";
}

// Liquidation triggers strictly below maintenance; sitting exactly on the
// maintenance rate is still fine.
inline MarkAction mark_action(const Fixed& rho, const LeaseTerms& terms) {
    if (rho < terms.rho_maint) return MarkAction::Liquidate;
    if (rho > terms.rho_maint && rho < terms.rho_min) return MarkAction::MarginCall;
    return MarkAction::None;
}

// Largest lease the collateral supports at inception (where L = L_a3k):
// rho_min above 1 caps L at H*p/(rho_min - 1); below 1 the cap is the
// drawdown the collateral can absorb, H*p/(1 - rho_min); exactly 1 is
// uncapped by the rate alone.
inline std::optional<Fixed> max_leaseable(const Fixed& collateral_value,
                                          const Fixed& rho_min) {
    require_non_negative(collateral_value, "collateral value");
    if (rho_min == Fixed(1)) return std::nullopt;
    Fixed gap = rho_min > Fixed(1) ? rho_min - Fixed(1) : Fixed(1) - rho_min;
    return collateral_value / gap;
}

// PnL of leveraged exposure: ((C*p_dc + L_t1)/rho) * (p_vn_t1/p_vn_t - 1).
inline double leveraged_pnl(double collateral_qty, double p_dc, double leased_value_t1,
                            double rho, double p_vn_t, double p_vn_t1) {
    if (rho <= 0.0) raise(ErrorCode::ZeroRate, "leveraged_pnl needs rho > 0");
    if (p_vn_t <= 0.0) raise(ErrorCode::ZeroPrice, "leveraged_pnl needs p_vn_t > 0");
    double notional = (collateral_qty * p_dc + leased_value_t1) / rho;
    return notional * (p_vn_t1 / p_vn_t - 1.0);
}

inline double leveraged_pnl(const CollateralPosition& pos, const PriceBook& prices,
                            double p_vn_t, double p_vn_t1) {
    Fixed rho = collateralization_rate(pos, prices);
    return leveraged_pnl(pos.collateral_qty.to_double(),
                         prices.get(pos.collateral_asset).to_double(),
                         pos.deployed_value(prices).to_double(), rho.to_double(),
                         p_vn_t, p_vn_t1);
}

// What a liquidation recovers and what it fails to recover.
struct LiquidationOutcome {
    Fixed reclaimed_value;   // deployed inventory pulled back
    Quantity seized_units;   // collateral taken, capped at H
    Fixed seized_value;
    Fixed shortfall_residual; // booked as system loss
};

inline LiquidationOutcome compute_liquidation(const CollateralPosition& pos,
                                              const PriceBook& prices) {
    LiquidationOutcome out;
    out.reclaimed_value = pos.deployed_value(prices);
    Fixed shortfall = pos.leased_value - out.reclaimed_value;
    if (shortfall.is_negative() || shortfall.is_zero()) return out;
    const Price& pc = prices.get(pos.collateral_asset);
    Quantity needed = liquidity::ceil_units(shortfall, pc);
    out.seized_units = needed < pos.collateral_qty ? needed : pos.collateral_qty;
    out.seized_value = out.seized_units * pc;
    if (out.seized_value < shortfall)
        out.shortfall_residual = shortfall - out.seized_value;
    return out;
}

// Open positions plus per-account locks: pledged collateral and deployed
// leased inventory are not free balance.
class PositionBook {
public:
    CollateralPosition& add(CollateralPosition pos) {
        auto [it, fresh] = positions_.emplace(pos.id, std::move(pos));
        if (!fresh) raise(ErrorCode::ValidationError, "duplicate position id");
        return it->second;
    }

    bool has(const std::string& id) const { return positions_.count(id) > 0; }

    CollateralPosition& get(const std::string& id) {
        auto it = positions_.find(id);
        if (it == positions_.end()) raise(ErrorCode::ValidationError, "unknown position " + id);
        return it->second;
    }

    std::map<std::string, CollateralPosition>& all() { return positions_; }
    const std::map<std::string, CollateralPosition>& all() const { return positions_; }

    // Units of an asset an agent cannot freely spend.
    Quantity locked(const AgentId& agent, const ChainId& chain, const AssetId& asset) const {
        Quantity sum;
        for (const auto& [id, pos] : positions_) {
            if (!pos.open || pos.owner != agent) continue;
            if (pos.collateral_asset == asset && pos.collateral_chain == chain)
                sum += pos.collateral_qty;
            if (pos.deployed_asset == asset && pos.lease_chain == chain)
                sum += pos.deployed_units;
        }
        return sum;
    }

    Fixed outstanding_lease_value() const {
        Fixed sum;
        for (const auto& [id, pos] : positions_)
            if (pos.open) sum += pos.leased_value;
        return sum;
    }

    // Trailing demand proxy for the inventory-side portfolio.
    std::map<AssetId, Fixed> lease_demand() const {
        std::map<AssetId, Fixed> out;
        for (const auto& [id, pos] : positions_)
            if (pos.open) out[pos.leased_asset] += pos.leased_value;
        return out;
    }

private:
    std::map<std::string, CollateralPosition> positions_;
};

} // namespace intralayer::brokerage
