#pragma once

#include <map>
#include <string>

#include "intralayer/core.hpp"
#include "intralayer/errors.hpp"
#include "intralayer/fixed.hpp"
#include "intralayer/ids.hpp"

namespace intralayer::iassets {

struct UnderlyingKey {
    ChainId chain;
    AssetId asset;

    auto operator<=>(const UnderlyingKey&) const = default;
};

// Claim shares on one (chain, asset) vault pool. The share price is the
// exact ratio pool/total_shares rather than a stored decimal: scaling the
// pool (slashing, accrued slippage) then rebases every claim with no
// per-holder rewrite and no rounding drift, and total_shares * share_price
// equals the pool identically.
class ShareClass {
public:
    const Fixed& total_shares() const { return total_shares_; }

    Fixed holder_shares(const AgentId& holder) const {
        auto it = holders_.find(holder);
        return it == holders_.end() ? Fixed() : it->second;
    }

    const std::map<AgentId, Fixed>& holders() const { return holders_; }

    // Shares for a deposit of qty into a pool currently holding pool_before.
    // Genesis (no shares outstanding) mints at parity.
    Fixed mint(const AgentId& holder, const Quantity& qty, const Quantity& pool_before) {
        require_non_negative(qty, "mint quantity");
        Fixed shares;
        if (total_shares_.is_zero()) {
            shares = qty;
        } else {
            if (pool_before.is_zero())
                raise(ErrorCode::InsufficientVaultLiquidity,
                      "mint into a fully slashed pool");
            shares = Fixed::mul_div(qty, total_shares_, pool_before);
        }
        if (!shares.is_zero()) {
            holders_[holder] += shares;
            total_shares_ += shares;
        }
        return shares;
    }

    // Quantity released for burning shares against the current pool.
    Fixed burn(const AgentId& holder, const Fixed& shares, const Quantity& pool) {
        require_non_negative(shares, "burn shares");
        auto it = holders_.find(holder);
        Fixed held = it == holders_.end() ? Fixed() : it->second;
        if (held < shares)
            raise(ErrorCode::InsufficientShares,
                  holder.str() + " holds " + held.to_string() + " shares");
        if (shares.is_zero()) return Fixed();
        Fixed qty = Fixed::mul_div(shares, pool, total_shares_);
        it->second -= shares;
        if (it->second.is_zero()) holders_.erase(it);
        total_shares_ -= shares;
        return qty;
    }

    // Future reward accrual follows the shares; past accruals stay put.
    void transfer(const AgentId& from, const AgentId& to, const Fixed& shares) {
        require_non_negative(shares, "transfer shares");
        if (from == to || shares.is_zero()) {
            if (holder_shares(from) < shares)
                raise(ErrorCode::InsufficientShares, from.str());
            return;
        }
        auto it = holders_.find(from);
        Fixed held = it == holders_.end() ? Fixed() : it->second;
        if (held < shares) raise(ErrorCode::InsufficientShares, from.str());
        it->second -= shares;
        if (it->second.is_zero()) holders_.erase(it);
        holders_[to] += shares;
    }

    Fixed redeemable(const AgentId& holder, const Quantity& pool) const {
        if (total_shares_.is_zero()) return Fixed();
        return Fixed::mul_div(holder_shares(holder), pool, total_shares_);
    }

    // Display-only decimal price; the exact price is the pool/shares ratio.
    Fixed share_price(const Quantity& pool) const {
        if (total_shares_.is_zero()) return Fixed(1);
        return pool / total_shares_;
    }

private:
    Fixed total_shares_;
    std::map<AgentId, Fixed> holders_;
};

// Pool reduction for a slash of the given fraction; the caller burns this
// from the attributable pool so every claim scales by (1 - fraction).
inline Quantity slash_amount(const Quantity& pool, const Fixed& fraction) {
    if (fraction.is_negative() || fraction > Fixed(1))
        raise(ErrorCode::ValidationError, "slash fraction outside [0,1]");
    return pool * fraction;
}

// Accumulated rewards per (underlying, holder), in native staking asset
// units; non-decreasing while rates stay non-negative.
class RewardBook {
public:
    // Epoch-close accrual on holder of record: each holder earns V*r where V
    // is the nominal (hub) value of their redeemable quantity.
    std::map<AgentId, Fixed> accrue(const UnderlyingKey& key, const ShareClass& shares,
                                    const Quantity& pool, const Price& price,
                                    const Fixed& rate) {
        require_non_negative(rate, "reward rate");
        std::map<AgentId, Fixed> out;
        if (rate.is_zero()) return out;
        for (const auto& [holder, held] : shares.holders()) {
            Fixed nominal = shares.redeemable(holder, pool) * price;
            Fixed reward = nominal * rate;
            if (reward.is_zero()) continue;
            accrued_[{key, holder}] += reward;
            out[holder] = reward;
        }
        return out;
    }

    Fixed accrued(const UnderlyingKey& key, const AgentId& holder) const {
        auto it = accrued_.find({key, holder});
        return it == accrued_.end() ? Fixed() : it->second;
    }

    void restore(const UnderlyingKey& key, const AgentId& holder, const Fixed& amount) {
        accrued_[{key, holder}] = amount;
    }

    const std::map<std::pair<UnderlyingKey, AgentId>, Fixed>& all() const {
        return accrued_;
    }

private:
    std::map<std::pair<UnderlyingKey, AgentId>, Fixed> accrued_;
};

} // namespace intralayer::iassets
