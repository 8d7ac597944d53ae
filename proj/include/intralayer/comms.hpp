#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "intralayer/core.hpp"
#include "intralayer/errors.hpp"
#include "intralayer/fixed.hpp"
#include "intralayer/ids.hpp"
#include "intralayer/rng.hpp"

namespace intralayer::comms {

enum class Service { DC, VT, PL };

inline const char* service_name(Service s) {
    switch (s) {
        case Service::DC: return "DC";
        case Service::VT: return "VT";
        case Service::PL: return "PL";
    }
    return "?";
}

inline Service service_from_string(const std::string& s) {
    if (s == "DC") return Service::DC;
    if (s == "VT") return Service::VT;
    if (s == "PL") return Service::PL;
    raise(ErrorCode::ValidationError, "unknown security service '" + s + "'");
}

// One cross-chain message: when the data was needed, when it arrived, which
// keys were required and which were actually delivered.
struct MessageEvent {
    AgentId src;
    AgentId dst;
    double needed_at = 0.0;
    double delivered_at = 0.0;
    std::set<std::string> required_keys;
    std::set<std::string> delivered_keys;
};

// Per-chain channel to the hub.
struct ChannelParams {
    ChainId chain;
    double base_lag = 0.0;
    double lag_jitter = 0.0;
    double miss_rate = 0.0;
    double spur_rate = 0.0;
    Fixed stake_scale_s0 = Fixed(1);
    Fixed fee_dc;
    std::set<EpochIndex> outage_epochs;

    bool down_in(EpochIndex u) const { return outage_epochs.count(u) > 0; }
};

// Capital staked by guarantors to back a security service.
class GuarantorStake {
public:
    void add(Service service, const AgentId& guarantor, const AssetId& asset,
             const Quantity& qty) {
        require_non_negative(qty, "stake quantity");
        stakes_[service][guarantor][asset] += qty;
    }

    Fixed total_value(Service service, const PriceBook& prices) const {
        Fixed total;
        auto it = stakes_.find(service);
        if (it == stakes_.end()) return total;
        for (const auto& [agent, assets] : it->second)
            for (const auto& [asset, qty] : assets) total += qty * prices.get(asset);
        return total;
    }

    // Per-asset staked value for one service; the incentive allocator uses
    // this as its demand signal.
    std::map<AssetId, Fixed> value_by_asset(Service service, const PriceBook& prices) const {
        std::map<AssetId, Fixed> out;
        auto it = stakes_.find(service);
        if (it == stakes_.end()) return out;
        for (const auto& [agent, assets] : it->second)
            for (const auto& [asset, qty] : assets) out[asset] += qty * prices.get(asset);
        return out;
    }

    // Stake value per guarantor for one asset/service, for payout pro-rating.
    std::map<AgentId, Fixed> stakers_of(Service service, const AssetId& asset,
                                        const PriceBook& prices) const {
        std::map<AgentId, Fixed> out;
        auto it = stakes_.find(service);
        if (it == stakes_.end()) return out;
        for (const auto& [agent, assets] : it->second) {
            auto jt = assets.find(asset);
            if (jt != assets.end() && !jt->second.is_zero())
                out[agent] += jt->second * prices.get(asset);
        }
        return out;
    }

    const std::map<Service, std::map<AgentId, std::map<AssetId, Quantity>>>& all() const {
        return stakes_;
    }

private:
    std::map<Service, std::map<AgentId, std::map<AssetId, Quantity>>> stakes_;
};

// Average delay between need and delivery; early deliveries count as on time.
inline double epoch_lag(std::span<const MessageEvent> events) {
    if (events.empty()) raise(ErrorCode::EmptyEventSet, "epoch_lag");
    double sum = 0.0;
    for (const auto& e : events)
        sum += std::max(0.0, e.delivered_at - e.needed_at);
    return sum / static_cast<double>(events.size());
}

// Per-event discrepancy: missing plus spurious keys, normalised by |D*|.
inline double event_discrepancy(const MessageEvent& e) {
    if (e.required_keys.empty()) raise(ErrorCode::EmptyRequiredSet, "event_discrepancy");
    size_t missing = 0;
    for (const auto& k : e.required_keys)
        if (!e.delivered_keys.count(k)) ++missing;
    size_t spurious = 0;
    for (const auto& k : e.delivered_keys)
        if (!e.required_keys.count(k)) ++spurious;
    return static_cast<double>(missing + spurious) /
           static_cast<double>(e.required_keys.size());
}

// Total discrepancy observed in an epoch (sum over communicating pairs).
inline double epoch_discrepancy(std::span<const MessageEvent> events) {
    double sum = 0.0;
    for (const auto& e : events) sum += event_discrepancy(e);
    return sum;
}

// Linear data-connectivity cost: weighted discrepancy and lag plus the fee.
inline double data_connectivity_cost(double psi, double lag, double fee_dc,
                                     double alpha_psi, double alpha_lag) {
    if (psi < 0 || lag < 0 || fee_dc < 0 || alpha_psi < 0 || alpha_lag < 0)
        raise(ErrorCode::ValidationError, "data_connectivity_cost inputs must be >= 0");
    return alpha_psi * psi + alpha_lag * lag + fee_dc;
}

// 1/(1 + stake/s0): no stake leaves base rates untouched, stake s0 halves
// them, and the factor decays toward zero as stake grows.
inline double stake_quality_factor(const Fixed& stake_value, const Fixed& s0) {
    require_non_negative(stake_value, "stake value");
    require_positive(s0, "stake scale s0");
    double ratio = (stake_value / s0).to_double();
    return 1.0 / (1.0 + ratio);
}

// Samples one delivery. The draw order is fixed (jitter, one per required
// key, spur) so that runs differing only in stake consume identical
// randomness; lower effective rates can then only shrink the corruption.
inline MessageEvent deliver(const ChannelParams& channel, const AgentId& src,
                            const AgentId& dst, double needed_at,
                            const std::set<std::string>& required_keys,
                            const Fixed& stake_value, EpochIndex epoch, Rng& rng) {
    if (channel.down_in(epoch))
        raise(ErrorCode::ChannelDown,
              "channel " + channel.chain.str() + " epoch " + std::to_string(epoch));

    double factor = stake_quality_factor(stake_value, channel.stake_scale_s0);

    MessageEvent e;
    e.src = src;
    e.dst = dst;
    e.needed_at = needed_at;
    e.required_keys = required_keys;

    double jitter_u = rng.uniform01();
    e.delivered_at = needed_at + channel.base_lag +
                     channel.lag_jitter * factor * jitter_u;

    double eff_miss = channel.miss_rate * factor;
    for (const auto& key : required_keys) {
        double u = rng.uniform01();
        if (u >= eff_miss) e.delivered_keys.insert(key);
    }
    double spur_u = rng.uniform01();
    if (spur_u < channel.spur_rate * factor)
        e.delivered_keys.insert("spur#" + std::to_string(epoch));
    return e;
}

} // namespace intralayer::comms
