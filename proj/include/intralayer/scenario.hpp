#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "intralayer/brokerage.hpp"
#include "intralayer/clearing.hpp"
#include "intralayer/comms.hpp"
#include "intralayer/core.hpp"
#include "intralayer/errors.hpp"
#include "intralayer/events.hpp"
#include "intralayer/fiscal.hpp"
#include "intralayer/topology.hpp"

namespace intralayer::scenario {

using events::Json;

inline constexpr int kSchemaVersion = 1;

struct ChainConfig {
    ChainId id;
    Quantity gas_reserve = Fixed(1000000);
    Fixed gas_cost;
};

struct HoldingConfig {
    ChainId chain;
    AssetId asset;
    Quantity qty;
};

struct AgentConfig {
    AgentId id;
    ChainId home_chain;
    std::vector<HoldingConfig> holdings;
};

struct PriceConfig {
    AssetId asset;
    PriceProcess::Kind kind = PriceProcess::Kind::Table;
    std::vector<Price> values; // table
    Price initial = Fixed(1);  // walk
    double drift = 0.0;
    double volatility = 0.0;
};

struct ChannelConfig {
    ChainId chain;
    double base_lag = 0.0;
    double lag_jitter = 0.0;
    double miss_rate = 0.0;
    double spur_rate = 0.0;
    Fixed stake_scale_s0 = Fixed(1);
    std::set<EpochIndex> outages;
    int messages_per_step = 0;
    int required_keys = 1;
};

struct GuarantorConfig {
    AgentId agent;
    comms::Service service = comms::Service::DC;
    AssetId asset;
    Quantity qty;
};

struct ClusterConfig {
    std::string id;
    std::vector<AgentId> members;
    int interval = 1;
    double c_dc = 0.0;
    double c_vc = 0.0;
    double c_p = 0.0;
    double hub_c_p = 0.0;
    int obligations_per_epoch = 0;
    Fixed obligation_mean = Fixed(1);
};

struct BudgetSchedule {
    Fixed omega_dc, omega_vt, omega_pl;
    Fixed s_dc, s_vt, s_pl;
    Fixed liquidity, liquidity_prime;
    Fixed acquisition;
};

struct NolConfig {
    double revenue_share = 0.0; // share of NF routed into network-owned liquidity
    double vc_fraction = 0.5;   // split between the VC and KE portfolios
    std::vector<HoldingConfig> vc_holdings;
    std::vector<HoldingConfig> ke_holdings;
};

struct PoelConfig {
    EpochIndex phase_boundary = 0; // last bootstrapping epoch e'
    Fixed credit_total;            // fee credits issued per bootstrap epoch
    EpochIndex credit_ttl = 1;
};

struct ActivityConfig {
    int transfers_per_epoch = 0;
    Fixed transfer_value_mean = Fixed(1);
    int conversions_per_epoch = 0;
    Fixed conversion_value_mean = Fixed(1);
    int deposits_per_epoch = 0;
    Fixed deposit_mean = Fixed(1);
    int leases_per_epoch = 0;
    Fixed lease_value_mean = Fixed(1);
};

struct AcquisitionConfig {
    int candidates_per_epoch = 0;
    Fixed cost_mean = Fixed(1);
};

struct RewardRateConfig {
    AssetId asset;
    Fixed rate;
};

struct SetupConfig {
    double per_link_cost = 0.0; // hub link per agent
    double per_pair_cost = 0.0; // bilateral comparison figure
};

struct ScriptedAction {
    EpochIndex epoch = 1;
    StepIndex step = 1;
    Json data;
};

struct ScenarioConfig {
    int schema_version = kSchemaVersion;
    EpochIndex horizon = 1;
    StepIndex steps_per_epoch = 1;
    uint64_t seed = 0;

    ChainId hub_chain;
    AssetId hub_asset;
    std::vector<ChainConfig> chains;
    std::vector<AssetId> assets;
    std::vector<AgentConfig> agents;
    std::vector<PriceConfig> prices;
    std::vector<ChannelConfig> channels;
    std::vector<liquidity::ConversionEdge> conversion_edges;

    double alpha_psi = 1.0;
    double alpha_lag = 1.0;
    double transfer_pi0 = 0.0;
    Fixed transfer_s0 = Fixed(1);

    std::vector<GuarantorConfig> guarantors;
    std::vector<ClusterConfig> clusters;
    clearing::InteractionModel interaction_model = clearing::InteractionModel::TwoN;

    fiscal::FeeSchedule fees;
    BudgetSchedule budgets;
    NolConfig nol;
    PoelConfig poel;
    Quantity treasury;
    Quantity external_liquidity = Fixed(1000000000);

    std::vector<Fixed> gamma{Fixed(0)};
    double alpha = 0.0;
    std::vector<double> beta; // defaults to alpha when empty

    topology::NetworkValueModel network_value;
    double path_kappa = 1.0;
    double path_exponent = 1.5;
    double output_coefficient = 0.0;

    brokerage::LeaseTerms lease_terms;
    std::vector<RewardRateConfig> reward_rates;

    ActivityConfig activity;
    AcquisitionConfig acquisition;
    SetupConfig setup;

    std::vector<ScriptedAction> scripted;

    Fixed gamma_at(EpochIndex u) const {
        if (gamma.empty()) return Fixed(0);
        size_t idx = std::min(static_cast<size_t>(u) - 1, gamma.size() - 1);
        return gamma[idx];
    }

    double beta_at(EpochIndex u) const {
        if (beta.empty()) return alpha;
        size_t idx = std::min(static_cast<size_t>(u) - 1, beta.size() - 1);
        return beta[idx];
    }
};

// Collects every problem instead of stopping at the first.
class Validator {
public:
    void fail(const std::string& path, const std::string& what) {
        errors_.push_back(path + ": " + what);
    }

    bool ok() const { return errors_.empty(); }
    const std::vector<std::string>& errors() const { return errors_; }

    void raise_if_failed() const {
        if (errors_.empty()) return;
        std::string all;
        for (const auto& e : errors_) {
            all += e;
            all += '\n';
        }
        raise(ErrorCode::ValidationError, "\n" + all);
    }

private:
    std::vector<std::string> errors_;
};

namespace detail {

inline std::optional<Fixed> parse_fixed(const Json& v) {
    try {
        if (v.is_string()) return Fixed::from_string(v.get<std::string>());
        if (v.is_number_integer()) return Fixed(v.get<long long>());
        if (v.is_number_float()) return Fixed::from_double(v.get<double>());
    } catch (const SimError&) {
    }
    return std::nullopt;
}

inline Fixed get_fixed(const Json& obj, const std::string& key, const Fixed& fallback,
                       Validator& val, const std::string& path) {
    if (!obj.contains(key)) return fallback;
    auto f = parse_fixed(obj.at(key));
    if (!f) {
        val.fail(path + "." + key, "not a decimal");
        return fallback;
    }
    return *f;
}

inline double get_double(const Json& obj, const std::string& key, double fallback,
                         Validator& val, const std::string& path) {
    if (!obj.contains(key)) return fallback;
    const Json& v = obj.at(key);
    if (!v.is_number()) {
        val.fail(path + "." + key, "not a number");
        return fallback;
    }
    return v.get<double>();
}

inline long get_int(const Json& obj, const std::string& key, long fallback,
                    Validator& val, const std::string& path) {
    if (!obj.contains(key)) return fallback;
    const Json& v = obj.at(key);
    if (!v.is_number_integer()) {
        val.fail(path + "." + key, "not an integer");
        return fallback;
    }
    return v.get<long>();
}

inline std::string get_string(const Json& obj, const std::string& key,
                              const std::string& fallback, Validator& val,
                              const std::string& path) {
    if (!obj.contains(key)) return fallback;
    const Json& v = obj.at(key);
    if (!v.is_string()) {
        val.fail(path + "." + key, "not a string");
        return fallback;
    }
    return v.get<std::string>();
}

inline std::vector<HoldingConfig> get_holdings(const Json& arr, Validator& val,
                                               const std::string& path) {
    std::vector<HoldingConfig> out;
    if (!arr.is_array()) {
        val.fail(path, "not an array");
        return out;
    }
    size_t i = 0;
    for (const auto& h : arr) {
        std::string p = path + "[" + std::to_string(i++) + "]";
        HoldingConfig hc;
        hc.chain = ChainId(get_string(h, "chain", "", val, p));
        hc.asset = AssetId(get_string(h, "asset", "", val, p));
        hc.qty = get_fixed(h, "qty", Fixed(0), val, p);
        out.push_back(std::move(hc));
    }
    return out;
}

} // namespace detail

inline ScenarioConfig parse_scenario(const Json& j) {
    using namespace detail;
    Validator val;
    ScenarioConfig cfg;
    const std::string R = "$";

    if (!j.is_object()) {
        val.fail(R, "scenario must be a JSON object");
        val.raise_if_failed();
    }

    cfg.schema_version = static_cast<int>(get_int(j, "schema_version", kSchemaVersion, val, R));
    if (cfg.schema_version != kSchemaVersion)
        val.fail(R + ".schema_version", "unsupported version " + std::to_string(cfg.schema_version));

    cfg.horizon = static_cast<EpochIndex>(get_int(j, "horizon", 0, val, R));
    if (cfg.horizon < 1) val.fail(R + ".horizon", "must be >= 1");
    cfg.steps_per_epoch = static_cast<StepIndex>(get_int(j, "steps_per_epoch", 1, val, R));
    if (cfg.steps_per_epoch < 1) val.fail(R + ".steps_per_epoch", "must be >= 1");
    cfg.seed = static_cast<uint64_t>(get_int(j, "seed", 0, val, R));

    // Chains and assets.
    std::set<std::string> chain_ids, asset_ids, agent_ids;
    if (j.contains("chains") && j.at("chains").is_array()) {
        size_t i = 0;
        for (const auto& c : j.at("chains")) {
            std::string p = "chains[" + std::to_string(i++) + "]";
            ChainConfig cc;
            cc.id = ChainId(get_string(c, "id", "", val, p));
            if (cc.id.empty()) val.fail(p + ".id", "empty chain id");
            if (!chain_ids.insert(cc.id.str()).second)
                val.fail(p + ".id", "duplicate chain '" + cc.id.str() + "'");
            cc.gas_reserve = get_fixed(c, "gas_reserve", Fixed(1000000), val, p);
            cc.gas_cost = get_fixed(c, "gas_cost", Fixed(0), val, p);
            if (cc.gas_reserve.is_negative()) val.fail(p + ".gas_reserve", "negative");
            if (cc.gas_cost.is_negative()) val.fail(p + ".gas_cost", "negative");
            cfg.chains.push_back(std::move(cc));
        }
    } else {
        val.fail("chains", "at least one chain is required");
    }

    if (j.contains("assets") && j.at("assets").is_array()) {
        size_t i = 0;
        for (const auto& a : j.at("assets")) {
            std::string p = "assets[" + std::to_string(i++) + "]";
            if (!a.is_string()) {
                val.fail(p, "asset id must be a string");
                continue;
            }
            std::string id = a.get<std::string>();
            if (id.empty()) val.fail(p, "empty asset id");
            if (!asset_ids.insert(id).second) val.fail(p, "duplicate asset '" + id + "'");
            cfg.assets.push_back(AssetId(id));
        }
    } else {
        val.fail("assets", "at least one asset is required");
    }

    auto known_chain = [&](const std::string& id) { return chain_ids.count(id) > 0; };
    auto known_asset = [&](const std::string& id) { return asset_ids.count(id) > 0; };

    auto hub = j.contains("hub") && j.at("hub").is_object() ? j.at("hub") : Json::object();
    cfg.hub_chain = ChainId(detail::get_string(hub, "chain",
                                               cfg.chains.empty() ? "" : cfg.chains[0].id.str(),
                                               val, "hub"));
    cfg.hub_asset = AssetId(detail::get_string(hub, "asset",
                                               cfg.assets.empty() ? "" : cfg.assets[0].str(),
                                               val, "hub"));
    if (!known_chain(cfg.hub_chain.str())) val.fail("hub.chain", "unknown chain");
    if (!known_asset(cfg.hub_asset.str())) val.fail("hub.asset", "unknown asset");

    // Agents.
    if (j.contains("agents") && j.at("agents").is_array()) {
        size_t i = 0;
        for (const auto& a : j.at("agents")) {
            std::string p = "agents[" + std::to_string(i++) + "]";
            AgentConfig ac;
            ac.id = AgentId(get_string(a, "id", "", val, p));
            if (ac.id.empty()) val.fail(p + ".id", "empty agent id");
            if (!ac.id.str().empty() && ac.id.str()[0] == '$')
                val.fail(p + ".id", "agent ids must not start with '$'");
            if (!agent_ids.insert(ac.id.str()).second)
                val.fail(p + ".id", "duplicate agent '" + ac.id.str() + "'");
            ac.home_chain = ChainId(get_string(a, "home_chain", cfg.hub_chain.str(), val, p));
            if (!known_chain(ac.home_chain.str()))
                val.fail(p + ".home_chain", "unknown chain '" + ac.home_chain.str() + "'");
            if (a.contains("holdings")) {
                ac.holdings = get_holdings(a.at("holdings"), val, p + ".holdings");
                size_t h = 0;
                for (const auto& hc : ac.holdings) {
                    std::string hp = p + ".holdings[" + std::to_string(h++) + "]";
                    if (!known_chain(hc.chain.str())) val.fail(hp + ".chain", "unknown chain");
                    if (!known_asset(hc.asset.str())) val.fail(hp + ".asset", "unknown asset");
                    if (hc.qty.is_negative()) val.fail(hp + ".qty", "negative");
                }
            }
            cfg.agents.push_back(std::move(ac));
        }
    }

    // Prices.
    if (j.contains("prices") && j.at("prices").is_array()) {
        size_t i = 0;
        for (const auto& pc : j.at("prices")) {
            std::string p = "prices[" + std::to_string(i++) + "]";
            PriceConfig out;
            out.asset = AssetId(get_string(pc, "asset", "", val, p));
            if (!known_asset(out.asset.str()))
                val.fail(p + ".asset", "unknown asset '" + out.asset.str() + "'");
            if (out.asset == cfg.hub_asset)
                val.fail(p + ".asset", "hub asset price is pinned at 1");
            std::string kind = get_string(pc, "kind", "table", val, p);
            if (kind == "table") {
                out.kind = PriceProcess::Kind::Table;
                if (pc.contains("values") && pc.at("values").is_array()) {
                    for (const auto& v : pc.at("values")) {
                        auto f = parse_fixed(v);
                        if (!f || f->is_zero() || f->is_negative()) {
                            val.fail(p + ".values", "prices must be positive decimals");
                            break;
                        }
                        out.values.push_back(*f);
                    }
                }
                if (out.values.empty()) val.fail(p + ".values", "table needs at least one price");
            } else if (kind == "walk") {
                out.kind = PriceProcess::Kind::Walk;
                out.initial = get_fixed(pc, "initial", Fixed(1), val, p);
                if (out.initial.is_zero() || out.initial.is_negative())
                    val.fail(p + ".initial", "must be positive");
                out.drift = get_double(pc, "drift", 0.0, val, p);
                out.volatility = get_double(pc, "volatility", 0.0, val, p);
                if (out.volatility < 0.0) val.fail(p + ".volatility", "negative");
            } else {
                val.fail(p + ".kind", "unknown price process '" + kind + "'");
            }
            cfg.prices.push_back(std::move(out));
        }
    }

    // Channels.
    if (j.contains("channels") && j.at("channels").is_array()) {
        size_t i = 0;
        for (const auto& ch : j.at("channels")) {
            std::string p = "channels[" + std::to_string(i++) + "]";
            ChannelConfig cc;
            cc.chain = ChainId(get_string(ch, "chain", "", val, p));
            if (!known_chain(cc.chain.str()))
                val.fail(p + ".chain", "unknown chain '" + cc.chain.str() + "'");
            cc.base_lag = get_double(ch, "base_lag", 0.0, val, p);
            cc.lag_jitter = get_double(ch, "lag_jitter", 0.0, val, p);
            cc.miss_rate = get_double(ch, "miss_rate", 0.0, val, p);
            cc.spur_rate = get_double(ch, "spur_rate", 0.0, val, p);
            for (double rate : {cc.miss_rate, cc.spur_rate})
                if (rate < 0.0 || rate > 1.0) val.fail(p, "rates must lie in [0,1]");
            if (cc.base_lag < 0.0 || cc.lag_jitter < 0.0)
                val.fail(p, "lag parameters must be >= 0");
            cc.stake_scale_s0 = get_fixed(ch, "s0", Fixed(1), val, p);
            if (cc.stake_scale_s0.is_zero() || cc.stake_scale_s0.is_negative())
                val.fail(p + ".s0", "must be positive");
            if (ch.contains("outages") && ch.at("outages").is_array())
                for (const auto& o : ch.at("outages"))
                    if (o.is_number_integer()) cc.outages.insert(o.get<int>());
            cc.messages_per_step = static_cast<int>(get_int(ch, "messages_per_step", 0, val, p));
            cc.required_keys = static_cast<int>(get_int(ch, "required_keys", 1, val, p));
            if (cc.messages_per_step < 0) val.fail(p + ".messages_per_step", "negative");
            if (cc.required_keys < 1) val.fail(p + ".required_keys", "must be >= 1");
            cfg.channels.push_back(std::move(cc));
        }
    }

    // Conversion edges.
    if (j.contains("conversion_edges") && j.at("conversion_edges").is_array()) {
        size_t i = 0;
        for (const auto& e : j.at("conversion_edges")) {
            std::string p = "conversion_edges[" + std::to_string(i++) + "]";
            liquidity::ConversionEdge edge;
            edge.spoke = AssetId(get_string(e, "asset", "", val, p));
            if (!known_asset(edge.spoke.str()))
                val.fail(p + ".asset", "unknown asset '" + edge.spoke.str() + "'");
            if (edge.spoke == cfg.hub_asset)
                val.fail(p + ".asset", "hub asset is the centre of the star, not a spoke");
            edge.depth = get_fixed(e, "depth", Fixed(0), val, p);
            if (edge.depth.is_zero() || edge.depth.is_negative())
                val.fail(p + ".depth", "must be positive");
            edge.fee_rate = get_fixed(e, "fee_rate", Fixed(0), val, p);
            if (edge.fee_rate.is_negative() || edge.fee_rate >= Fixed(1))
                val.fail(p + ".fee_rate", "must lie in [0,1)");
            cfg.conversion_edges.push_back(std::move(edge));
        }
    }

    if (j.contains("comms_cost")) {
        const auto& cc = j.at("comms_cost");
        cfg.alpha_psi = get_double(cc, "alpha_psi", 1.0, val, "comms_cost");
        cfg.alpha_lag = get_double(cc, "alpha_lag", 1.0, val, "comms_cost");
        if (cfg.alpha_psi < 0 || cfg.alpha_lag < 0)
            val.fail("comms_cost", "weights must be >= 0");
    }

    if (j.contains("transfer_security")) {
        const auto& ts = j.at("transfer_security");
        cfg.transfer_pi0 = get_double(ts, "pi0", 0.0, val, "transfer_security");
        if (cfg.transfer_pi0 < 0 || cfg.transfer_pi0 > 1)
            val.fail("transfer_security.pi0", "must lie in [0,1]");
        cfg.transfer_s0 = get_fixed(ts, "s0", Fixed(1), val, "transfer_security");
        if (cfg.transfer_s0.is_zero() || cfg.transfer_s0.is_negative())
            val.fail("transfer_security.s0", "must be positive");
    }

    // Guarantors.
    if (j.contains("guarantors") && j.at("guarantors").is_array()) {
        size_t i = 0;
        for (const auto& g : j.at("guarantors")) {
            std::string p = "guarantors[" + std::to_string(i++) + "]";
            GuarantorConfig gc;
            gc.agent = AgentId(get_string(g, "agent", "", val, p));
            if (!agent_ids.count(gc.agent.str()))
                val.fail(p + ".agent", "unknown agent '" + gc.agent.str() + "'");
            std::string svc = get_string(g, "service", "DC", val, p);
            try {
                gc.service = comms::service_from_string(svc);
            } catch (const SimError&) {
                val.fail(p + ".service", "unknown service '" + svc + "'");
            }
            gc.asset = AssetId(get_string(g, "asset", "", val, p));
            if (!known_asset(gc.asset.str()))
                val.fail(p + ".asset", "unknown asset '" + gc.asset.str() + "'");
            gc.qty = get_fixed(g, "qty", Fixed(0), val, p);
            if (gc.qty.is_negative()) val.fail(p + ".qty", "negative");
            cfg.guarantors.push_back(std::move(gc));
        }
    }

    // Clusters.
    std::set<std::string> cluster_ids;
    if (j.contains("clusters") && j.at("clusters").is_array()) {
        size_t i = 0;
        for (const auto& c : j.at("clusters")) {
            std::string p = "clusters[" + std::to_string(i++) + "]";
            ClusterConfig cc;
            cc.id = get_string(c, "id", "", val, p);
            if (cc.id.empty()) val.fail(p + ".id", "empty cluster id");
            if (!cluster_ids.insert(cc.id).second)
                val.fail(p + ".id", "duplicate cluster '" + cc.id + "'");
            if (c.contains("members") && c.at("members").is_array()) {
                std::set<std::string> seen;
                for (const auto& m : c.at("members")) {
                    std::string id = m.is_string() ? m.get<std::string>() : "";
                    if (!agent_ids.count(id))
                        val.fail(p + ".members", "unknown agent '" + id + "'");
                    if (!seen.insert(id).second)
                        val.fail(p + ".members", "duplicate member '" + id + "'");
                    cc.members.push_back(AgentId(id));
                }
            }
            if (cc.members.empty()) val.fail(p + ".members", "cluster needs members");
            cc.interval = static_cast<int>(get_int(c, "interval", 1, val, p));
            if (cc.interval < 1) val.fail(p + ".interval", "must be >= 1");
            cc.c_dc = get_double(c, "c_dc", 0.0, val, p);
            cc.c_vc = get_double(c, "c_vc", 0.0, val, p);
            cc.c_p = get_double(c, "c_p", 0.0, val, p);
            cc.hub_c_p = get_double(c, "hub_c_p", 0.0, val, p);
            for (double x : {cc.c_dc, cc.c_vc, cc.c_p, cc.hub_c_p})
                if (x < 0.0) val.fail(p, "cluster costs must be >= 0");
            cc.obligations_per_epoch =
                static_cast<int>(get_int(c, "obligations_per_epoch", 0, val, p));
            if (cc.obligations_per_epoch < 0) val.fail(p + ".obligations_per_epoch", "negative");
            cc.obligation_mean = get_fixed(c, "obligation_mean", Fixed(1), val, p);
            cfg.clusters.push_back(std::move(cc));
        }
    }

    if (j.contains("interaction_model")) {
        std::string m = get_string(j, "interaction_model", "two_n", val, R);
        try {
            cfg.interaction_model = clearing::interaction_model_from_string(m);
        } catch (const SimError&) {
            val.fail("interaction_model", "unknown model '" + m + "'");
        }
    }

    // Fees and budgets.
    if (j.contains("fees")) {
        const auto& f = j.at("fees");
        cfg.fees.dc = get_fixed(f, "dc", Fixed(0), val, "fees");
        cfg.fees.vt = get_fixed(f, "vt", Fixed(0), val, "fees");
        cfg.fees.vc_rate = get_fixed(f, "vc_rate", Fixed(0), val, "fees");
        cfg.fees.pl = get_fixed(f, "pl", Fixed(0), val, "fees");
        cfg.fees.ke_rate = get_fixed(f, "ke_rate", Fixed(0), val, "fees");
        try {
            cfg.fees.validate();
        } catch (const SimError& e) {
            val.fail("fees", e.what());
        }
    }
    if (j.contains("budgets")) {
        const auto& b = j.at("budgets");
        auto read = [&](const char* key) {
            Fixed v = get_fixed(b, key, Fixed(0), val, "budgets");
            if (v.is_negative()) val.fail(std::string("budgets.") + key, "negative");
            return v;
        };
        cfg.budgets.omega_dc = read("omega_dc");
        cfg.budgets.omega_vt = read("omega_vt");
        cfg.budgets.omega_pl = read("omega_pl");
        cfg.budgets.s_dc = read("s_dc");
        cfg.budgets.s_vt = read("s_vt");
        cfg.budgets.s_pl = read("s_pl");
        cfg.budgets.liquidity = read("liquidity");
        cfg.budgets.liquidity_prime = read("liquidity_prime");
        cfg.budgets.acquisition = read("acquisition");
    }

    if (j.contains("nol")) {
        const auto& n = j.at("nol");
        cfg.nol.revenue_share = get_double(n, "revenue_share", 0.0, val, "nol");
        if (cfg.nol.revenue_share < 0.0 || cfg.nol.revenue_share > 1.0)
            val.fail("nol.revenue_share", "must lie in [0,1]");
        cfg.nol.vc_fraction = get_double(n, "vc_fraction", 0.5, val, "nol");
        if (cfg.nol.vc_fraction < 0.0 || cfg.nol.vc_fraction > 1.0)
            val.fail("nol.vc_fraction", "must lie in [0,1]");
        if (n.contains("vc_holdings"))
            cfg.nol.vc_holdings = get_holdings(n.at("vc_holdings"), val, "nol.vc_holdings");
        if (n.contains("ke_holdings"))
            cfg.nol.ke_holdings = get_holdings(n.at("ke_holdings"), val, "nol.ke_holdings");
        for (const auto* hs : {&cfg.nol.vc_holdings, &cfg.nol.ke_holdings})
            for (const auto& h : *hs) {
                if (!known_chain(h.chain.str())) val.fail("nol", "unknown chain in holdings");
                if (!known_asset(h.asset.str())) val.fail("nol", "unknown asset in holdings");
                if (h.qty.is_negative()) val.fail("nol", "negative holding");
            }
    }

    if (j.contains("poel")) {
        const auto& p = j.at("poel");
        cfg.poel.phase_boundary =
            static_cast<EpochIndex>(get_int(p, "phase_boundary", 0, val, "poel"));
        if (cfg.poel.phase_boundary < 0) val.fail("poel.phase_boundary", "negative");
        cfg.poel.credit_total = get_fixed(p, "credit_total", Fixed(0), val, "poel");
        if (cfg.poel.credit_total.is_negative()) val.fail("poel.credit_total", "negative");
        cfg.poel.credit_ttl = static_cast<EpochIndex>(get_int(p, "credit_ttl", 1, val, "poel"));
        if (cfg.poel.credit_ttl < 1) val.fail("poel.credit_ttl", "must be >= 1");
    }

    cfg.treasury = get_fixed(j, "treasury", Fixed(0), val, R);
    if (cfg.treasury.is_negative()) val.fail("treasury", "negative");
    cfg.external_liquidity = get_fixed(j, "external_liquidity", Fixed(1000000000), val, R);
    if (cfg.external_liquidity.is_negative()) val.fail("external_liquidity", "negative");

    if (j.contains("requirement_gamma")) {
        cfg.gamma.clear();
        const auto& g = j.at("requirement_gamma");
        if (g.is_array()) {
            for (const auto& v : g) {
                auto f = parse_fixed(v);
                if (!f || f->is_negative()) {
                    val.fail("requirement_gamma", "entries must be non-negative decimals");
                    break;
                }
                cfg.gamma.push_back(*f);
            }
            if (static_cast<EpochIndex>(cfg.gamma.size()) != cfg.horizon)
                val.fail("requirement_gamma", "array length must equal the horizon");
        } else {
            auto f = parse_fixed(g);
            if (!f || f->is_negative()) val.fail("requirement_gamma", "must be >= 0");
            else cfg.gamma.push_back(*f);
        }
    }

    cfg.alpha = get_double(j, "alpha", 0.0, val, R);
    if (cfg.alpha < 0.0 || cfg.alpha > 1.0) val.fail("alpha", "must lie in [0,1]");
    if (j.contains("beta")) {
        const auto& b = j.at("beta");
        if (b.is_array()) {
            for (const auto& v : b) {
                if (!v.is_number() || v.get<double>() < 0.0) {
                    val.fail("beta", "entries must be >= 0");
                    break;
                }
                cfg.beta.push_back(v.get<double>());
            }
        } else if (b.is_number()) {
            if (b.get<double>() < 0.0) val.fail("beta", "must be >= 0");
            cfg.beta.push_back(b.get<double>());
        } else {
            val.fail("beta", "must be a number or array");
        }
    }

    if (j.contains("network_value")) {
        const auto& nv = j.at("network_value");
        std::string kind = get_string(nv, "kind", "metcalfe", val, "network_value");
        try {
            cfg.network_value.kind = topology::network_value_kind_from_string(kind);
        } catch (const SimError&) {
            val.fail("network_value.kind", "unknown model '" + kind + "'");
        }
        cfg.network_value.scale = get_double(nv, "scale", 1.0, val, "network_value");
        if (cfg.network_value.scale <= 0.0) val.fail("network_value.scale", "must be positive");
    }

    if (j.contains("path_count")) {
        const auto& pc = j.at("path_count");
        cfg.path_kappa = get_double(pc, "kappa", 1.0, val, "path_count");
        cfg.path_exponent = get_double(pc, "exponent", 1.5, val, "path_count");
        if (cfg.path_kappa <= 0.0) val.fail("path_count.kappa", "must be positive");
        if (cfg.path_exponent <= 1.0) val.fail("path_count.exponent", "must exceed 1");
    }

    cfg.output_coefficient = get_double(j, "output_coefficient", 0.0, val, R);
    if (cfg.output_coefficient < 0.0) val.fail("output_coefficient", "negative");

    if (j.contains("lease_terms")) {
        const auto& lt = j.at("lease_terms");
        cfg.lease_terms.rho_min = get_fixed(lt, "rho_min", Fixed(1), val, "lease_terms");
        cfg.lease_terms.rho_maint = get_fixed(lt, "rho_maint", Fixed(1), val, "lease_terms");
        // The per-epoch lease fee defaults to the KE service rate.
        cfg.lease_terms.fee_rate = get_fixed(lt, "fee_rate", cfg.fees.ke_rate, val, "lease_terms");
        try {
            cfg.lease_terms.validate();
        } catch (const SimError& e) {
            val.fail("lease_terms", e.what());
        }
    } else {
        cfg.lease_terms.fee_rate = cfg.fees.ke_rate;
    }

    if (j.contains("reward_rates") && j.at("reward_rates").is_array()) {
        size_t i = 0;
        for (const auto& rr : j.at("reward_rates")) {
            std::string p = "reward_rates[" + std::to_string(i++) + "]";
            RewardRateConfig rc;
            rc.asset = AssetId(get_string(rr, "asset", "", val, p));
            if (!known_asset(rc.asset.str())) val.fail(p + ".asset", "unknown asset");
            rc.rate = get_fixed(rr, "rate", Fixed(0), val, p);
            if (rc.rate.is_negative()) val.fail(p + ".rate", "negative");
            cfg.reward_rates.push_back(std::move(rc));
        }
    }

    if (j.contains("activity")) {
        const auto& a = j.at("activity");
        auto count = [&](const char* key) {
            long v = get_int(a, key, 0, val, "activity");
            if (v < 0) val.fail(std::string("activity.") + key, "negative");
            return static_cast<int>(v);
        };
        cfg.activity.transfers_per_epoch = count("transfers_per_epoch");
        cfg.activity.transfer_value_mean = get_fixed(a, "transfer_value_mean", Fixed(1), val, "activity");
        cfg.activity.conversions_per_epoch = count("conversions_per_epoch");
        cfg.activity.conversion_value_mean =
            get_fixed(a, "conversion_value_mean", Fixed(1), val, "activity");
        cfg.activity.deposits_per_epoch = count("deposits_per_epoch");
        cfg.activity.deposit_mean = get_fixed(a, "deposit_mean", Fixed(1), val, "activity");
        cfg.activity.leases_per_epoch = count("leases_per_epoch");
        cfg.activity.lease_value_mean = get_fixed(a, "lease_value_mean", Fixed(1), val, "activity");
        for (const Fixed* f : {&cfg.activity.transfer_value_mean, &cfg.activity.conversion_value_mean,
                               &cfg.activity.deposit_mean, &cfg.activity.lease_value_mean})
            if (f->is_negative() || f->is_zero()) val.fail("activity", "value means must be positive");
    }

    if (j.contains("acquisition")) {
        const auto& a = j.at("acquisition");
        cfg.acquisition.candidates_per_epoch =
            static_cast<int>(get_int(a, "candidates_per_epoch", 0, val, "acquisition"));
        if (cfg.acquisition.candidates_per_epoch < 0)
            val.fail("acquisition.candidates_per_epoch", "negative");
        cfg.acquisition.cost_mean = get_fixed(a, "cost_mean", Fixed(1), val, "acquisition");
        if (cfg.acquisition.cost_mean.is_zero() || cfg.acquisition.cost_mean.is_negative())
            val.fail("acquisition.cost_mean", "must be positive");
    }

    if (j.contains("setup")) {
        const auto& s = j.at("setup");
        cfg.setup.per_link_cost = get_double(s, "per_link_cost", 0.0, val, "setup");
        cfg.setup.per_pair_cost = get_double(s, "per_pair_cost", 0.0, val, "setup");
        if (cfg.setup.per_link_cost < 0 || cfg.setup.per_pair_cost < 0)
            val.fail("setup", "setup costs must be >= 0");
    }

    if (j.contains("scripted") && j.at("scripted").is_array()) {
        size_t i = 0;
        for (const auto& s : j.at("scripted")) {
            std::string p = "scripted[" + std::to_string(i++) + "]";
            ScriptedAction act;
            act.epoch = static_cast<EpochIndex>(get_int(s, "epoch", 1, val, p));
            act.step = static_cast<StepIndex>(get_int(s, "step", 1, val, p));
            if (act.epoch < 1 || act.epoch > cfg.horizon)
                val.fail(p + ".epoch", "outside horizon");
            if (act.step < 1 || act.step > cfg.steps_per_epoch)
                val.fail(p + ".step", "outside the epoch's steps");
            if (!s.contains("action") || !s.at("action").is_string())
                val.fail(p + ".action", "missing action");
            act.data = s;
            cfg.scripted.push_back(std::move(act));
        }
    }

    val.raise_if_failed();
    return cfg;
}

inline ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorCode::ParseError, "no such file: " + path);
    Json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        raise(ErrorCode::ParseError, std::string("invalid JSON: ") + e.what());
    }
    return parse_scenario(j);
}

} // namespace intralayer::scenario
