#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "intralayer/errors.hpp"
#include "intralayer/fixed.hpp"
#include "intralayer/ids.hpp"
#include "intralayer/rng.hpp"

namespace intralayer {

// System-side account owners. Agent accounts use the agent id; internal
// buckets use reserved '$'-prefixed names so they can never collide with a
// scenario agent.
namespace accounts {
inline const std::string kTreasury = "$treasury";
inline const std::string kNolVc = "$nol_vc";
inline const std::string kNolKe = "$nol_ke";
inline const std::string kExternal = "$external";
inline const std::string kClearing = "$clearing";
inline const std::string kDepositors = "$depositors";
inline std::string stake(const std::string& service) { return "$stake_" + service; }
} // namespace accounts

struct AccountKey {
    std::string owner;
    ChainId chain;

    auto operator<=>(const AccountKey&) const = default;
};

enum class SupplyTag { Genesis, Mint, Burn, Slash };

// Double-entry holdings ledger. Transfers conserve per-asset totals exactly;
// the only supply changes go through the tagged mint/burn entry points.
class Ledger {
public:
    void register_account(const AccountKey& key) { known_.insert(key); }

    bool is_registered(const AccountKey& key) const { return known_.count(key) > 0; }

    Quantity balance(const AccountKey& key, const AssetId& asset) const {
        auto it = holdings_.find(key);
        if (it == holdings_.end()) return Quantity();
        auto jt = it->second.find(asset);
        return jt == it->second.end() ? Quantity() : jt->second;
    }

    // Moves qty of asset from debit to credit. Zero qty is a no-op.
    void post(const AccountKey& debit, const AccountKey& credit,
              const AssetId& asset, const Quantity& qty) {
        require_non_negative(qty, "post quantity");
        check_known(debit);
        check_known(credit);
        if (qty.is_zero()) return;
        Quantity& from = holdings_[debit][asset];
        if (from < qty)
            raise(ErrorCode::InsufficientBalance,
                  debit.owner + "/" + debit.chain.str() + " holds " + from.to_string() +
                  " " + asset.str() + ", needs " + qty.to_string());
        from -= qty;
        holdings_[credit][asset] += qty;
    }

    // Tagged supply creation (genesis allocations, scripted emissions).
    void mint(const AccountKey& key, const AssetId& asset, const Quantity& qty, SupplyTag) {
        require_non_negative(qty, "mint quantity");
        check_known(key);
        holdings_[key][asset] += qty;
        totals_[asset] += qty;
    }

    // Tagged supply destruction (slashing, scripted losses).
    void burn(const AccountKey& key, const AssetId& asset, const Quantity& qty, SupplyTag) {
        require_non_negative(qty, "burn quantity");
        check_known(key);
        Quantity& bal = holdings_[key][asset];
        if (bal < qty)
            raise(ErrorCode::InsufficientBalance, "burn exceeds balance of " + key.owner);
        bal -= qty;
        totals_[asset] -= qty;
    }

    // Incrementally maintained global supply of one asset.
    Quantity total_supply(const AssetId& asset) const {
        auto it = totals_.find(asset);
        return it == totals_.end() ? Quantity() : it->second;
    }

    // Brute-force recomputation over every account; conservation oracle.
    Quantity recompute_supply(const AssetId& asset) const {
        Quantity sum;
        for (const auto& [key, assets] : holdings_) {
            auto it = assets.find(asset);
            if (it != assets.end()) sum += it->second;
        }
        return sum;
    }

    const std::map<AccountKey, std::map<AssetId, Quantity>>& holdings() const {
        return holdings_;
    }

    // Snapshot support: bulk-load balances without touching supply counters.
    void restore_holding(const AccountKey& key, const AssetId& asset, const Quantity& qty) {
        check_known(key);
        require_non_negative(qty, "restored holding");
        if (!qty.is_zero()) holdings_[key][asset] = qty;
    }

    void restore_total(const AssetId& asset, const Quantity& qty) { totals_[asset] = qty; }

    const std::map<AssetId, Quantity>& totals() const { return totals_; }

private:
    void check_known(const AccountKey& key) const {
        if (!known_.count(key))
            raise(ErrorCode::UnknownAccount, key.owner + "/" + key.chain.str());
    }

    std::set<AccountKey> known_;
    std::map<AccountKey, std::map<AssetId, Quantity>> holdings_;
    std::map<AssetId, Quantity> totals_;
};

// Prices are quoted in the hub accounting asset; the hub asset itself is
// pinned at exactly 1.
class PriceBook {
public:
    void set(const AssetId& asset, const Price& p) {
        require_positive(p, "price");
        prices_[asset] = p;
    }

    const Price& get(const AssetId& asset) const {
        auto it = prices_.find(asset);
        if (it == prices_.end()) raise(ErrorCode::MissingPrice, asset.str());
        return it->second;
    }

    bool has(const AssetId& asset) const { return prices_.count(asset) > 0; }

    const std::map<AssetId, Price>& all() const { return prices_; }

private:
    std::map<AssetId, Price> prices_;
};

// Snapshot of holdings and liabilities used for equity computations.
struct BalanceSheet {
    std::map<std::pair<AccountKey, AssetId>, Quantity> holdings;
    std::map<std::pair<AccountKey, AssetId>, Quantity> liabilities;
    Fixed equity_r;
    Fixed requirement_gamma;
};

// Sum of asset values minus sum of liability values, exact.
inline Fixed mark_to_market(const BalanceSheet& sheet, const PriceBook& prices) {
    Fixed value;
    for (const auto& [key, qty] : sheet.holdings) value += qty * prices.get(key.second);
    for (const auto& [key, qty] : sheet.liabilities) value -= qty * prices.get(key.second);
    return value;
}

// Per-asset price path: either a fixed per-epoch table or a seeded geometric
// multiplicative walk. advance() is driven once per epoch by the engine.
class PriceProcess {
public:
    enum class Kind { Table, Walk };

    static PriceProcess table(AssetId asset, std::vector<Price> values) {
        PriceProcess p;
        p.kind_ = Kind::Table;
        p.asset_ = std::move(asset);
        p.values_ = std::move(values);
        if (!p.values_.empty()) p.current_ = p.values_.front();
        return p;
    }

    static PriceProcess walk(AssetId asset, Price initial, double drift, double volatility) {
        PriceProcess p;
        p.kind_ = Kind::Walk;
        p.asset_ = std::move(asset);
        require_positive(initial, "walk initial price");
        p.current_ = initial;
        p.initial_ = initial;
        p.drift_ = drift;
        p.volatility_ = volatility;
        return p;
    }

    Kind kind() const { return kind_; }
    const AssetId& asset() const { return asset_; }
    const Price& current() const { return current_; }

    // Price in effect for epoch u (1-based). Identical seed, identical path.
    const Price& advance(EpochIndex u, uint64_t master_seed) {
        if (kind_ == Kind::Table) {
            size_t idx = static_cast<size_t>(u) - 1;
            if (idx >= values_.size()) idx = values_.size() - 1;
            current_ = values_[idx];
            return current_;
        }
        if (u <= 1) {
            current_ = initial_;
            return current_;
        }
        Rng rng(derive_seed(master_seed, "price/" + asset_.str(), static_cast<uint64_t>(u)));
        double factor = std::exp(drift_ + volatility_ * rng.normal());
        Price next = current_ * Fixed::from_double(factor);
        if (next.is_zero() || next.is_negative())
            next = Fixed::from_string("0.000000000000000001");
        current_ = next;
        return current_;
    }

    // Snapshot support: the walk is memoryless given (current, epoch).
    void restore_current(const Price& p) { current_ = p; }

private:
    Kind kind_ = Kind::Table;
    AssetId asset_;
    std::vector<Price> values_;
    Price current_ = Fixed(1);
    Price initial_ = Fixed(1);
    double drift_ = 0.0;
    double volatility_ = 0.0;
};

} // namespace intralayer
