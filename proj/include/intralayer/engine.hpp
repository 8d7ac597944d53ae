#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "intralayer/brokerage.hpp"
#include "intralayer/clearing.hpp"
#include "intralayer/comms.hpp"
#include "intralayer/core.hpp"
#include "intralayer/errors.hpp"
#include "intralayer/events.hpp"
#include "intralayer/fiscal.hpp"
#include "intralayer/iassets.hpp"
#include "intralayer/liquidity.hpp"
#include "intralayer/log.hpp"
#include "intralayer/metrics.hpp"
#include "intralayer/report.hpp"
#include "intralayer/rng.hpp"
#include "intralayer/scenario.hpp"
#include "intralayer/topology.hpp"

namespace intralayer::engine {

using events::Json;
using scenario::ScenarioConfig;

inline constexpr int kSnapshotVersion = 1;

// Deterministic multi-epoch event loop. One instance owns all mutable state;
// epoch-close hooks run in a fixed order (prices, comms, clearing, brokerage
// marks, iasset accrual, fiscal close, metrics).
class Engine {
public:
    explicit Engine(ScenarioConfig cfg) : cfg_(std::move(cfg)) {}

    // --- lifecycle ---------------------------------------------------------

    void init() {
        if (initialized_) return;
        initialized_ = true;
        register_world();
        genesis();
        advance_prices_to(1);
        emit_price_events();
    }

    bool finished() const { return epoch_next_ > cfg_.horizon; }

    void run_epochs(EpochIndex count) {
        init();
        for (EpochIndex i = 0; i < count && !finished(); ++i) run_one_epoch();
    }

    void run_to_end() {
        init();
        while (!finished()) run_one_epoch();
    }

    // --- results ------------------------------------------------------------

    const events::EventLog& log() const { return log_; }
    const std::vector<metrics::EpochMetrics>& metric_rows() const { return metric_rows_; }
    const std::vector<fiscal::FiscalReport>& fiscal_reports() const { return fiscal_reports_; }
    const ScenarioConfig& config() const { return cfg_; }
    const Ledger& ledger() const { return ledger_; }
    const PriceBook& prices() const { return prices_; }
    const brokerage::PositionBook& positions() const { return positions_; }
    const fiscal::CreditBook& credits() const { return credits_; }
    const topology::EcosystemGraph& graph() const { return graph_; }
    Fixed resources_r() const { return resources_r_; }

    double master_objective_total() const {
        double total = 0.0;
        for (const auto& row : metric_rows_) total += row.objective_term;
        return total;
    }

    // Equity of the system book: treasury plus both network-owned portfolios
    // plus outstanding lease receivables, all marked at current prices.
    Fixed system_equity() const {
        Fixed total;
        for (const auto& [key, assets] : ledger_.holdings()) {
            if (key.owner != accounts::kTreasury && key.owner != accounts::kNolVc &&
                key.owner != accounts::kNolKe)
                continue;
            for (const auto& [asset, qty] : assets) total += qty * prices_.get(asset);
        }
        total += positions_.outstanding_lease_value();
        return total;
    }

    // --- snapshot / restore --------------------------------------------------

    Json snapshot() const {
        Json s;
        s["snapshot_version"] = kSnapshotVersion;
        s["epoch_next"] = epoch_next_;
        s["global_step"] = global_step_;
        s["next_seq"] = log_.next_seq();
        s["resources_r"] = resources_r_.to_string();
        s["acquired_count"] = acquired_count_;

        Json prices = Json::object();
        for (const auto& [asset, p] : prices_.all()) prices[asset.str()] = p.to_string();
        s["prices"] = prices;

        Json holdings = Json::array();
        for (const auto& [key, assets] : ledger_.holdings())
            for (const auto& [asset, qty] : assets) {
                if (qty.is_zero()) continue;
                holdings.push_back({{"owner", key.owner},
                                    {"chain", key.chain.str()},
                                    {"asset", asset.str()},
                                    {"qty", qty.to_string()}});
            }
        s["holdings"] = holdings;

        Json totals = Json::object();
        for (const auto& [asset, qty] : ledger_.totals()) totals[asset.str()] = qty.to_string();
        s["supply"] = totals;

        Json classes = Json::array();
        for (const auto& [key, sc] : share_classes_) {
            Json holders = Json::array();
            for (const auto& [agent, shares] : sc.holders())
                holders.push_back({{"agent", agent.str()}, {"shares", shares.to_string()}});
            classes.push_back({{"chain", key.chain.str()},
                               {"asset", key.asset.str()},
                               {"total_shares", sc.total_shares().to_string()},
                               {"holders", holders}});
        }
        s["share_classes"] = classes;

        Json rewards = Json::array();
        for (const auto& [key, amount] : rewards_.all())
            rewards.push_back({{"chain", key.first.chain.str()},
                               {"asset", key.first.asset.str()},
                               {"agent", key.second.str()},
                               {"accrued", amount.to_string()}});
        s["rewards"] = rewards;

        Json stakes = Json::array();
        for (const auto& [service, agents] : stakes_.all())
            for (const auto& [agent, assets] : agents)
                for (const auto& [asset, qty] : assets)
                    stakes.push_back({{"service", comms::service_name(service)},
                                      {"agent", agent.str()},
                                      {"asset", asset.str()},
                                      {"qty", qty.to_string()}});
        s["stakes"] = stakes;

        Json positions = Json::array();
        for (const auto& [id, pos] : positions_.all()) {
            positions.push_back({{"id", pos.id},
                                 {"owner", pos.owner.str()},
                                 {"collateral_asset", pos.collateral_asset.str()},
                                 {"collateral_qty", pos.collateral_qty.to_string()},
                                 {"collateral_chain", pos.collateral_chain.str()},
                                 {"collateral_app", pos.collateral_app},
                                 {"leased_asset", pos.leased_asset.str()},
                                 {"leased_units", pos.leased_units.to_string()},
                                 {"leased_value", pos.leased_value.to_string()},
                                 {"lease_chain", pos.lease_chain.str()},
                                 {"target_app", pos.target_app},
                                 {"deployed_asset", pos.deployed_asset.str()},
                                 {"deployed_units", pos.deployed_units.to_string()},
                                 {"open", pos.open}});
        }
        s["positions"] = positions;

        Json credits = Json::array();
        for (const auto& [agent, lots] : credits_.lots()) {
            Json jlots = Json::array();
            for (const auto& lot : lots)
                jlots.push_back({{"issued", lot.issued}, {"remaining", lot.remaining.to_string()}});
            credits.push_back({{"agent", agent.str()}, {"lots", jlots}});
        }
        s["credits"] = credits;

        Json ufcs = Json::array();
        for (const auto& [id, ufc] : ufcs_) {
            auto dump_book = [](const clearing::ObligationMap& m) {
                Json out = Json::array();
                for (const auto& [pair, amount] : m)
                    out.push_back({{"from", pair.first.str()},
                                   {"to", pair.second.str()},
                                   {"amount", amount.to_string()}});
                return out;
            };
            ufcs.push_back({{"id", id},
                            {"last_round_step", ufc.last_round_step()},
                            {"staged", dump_book(ufc.staged())},
                            {"pending", dump_book(ufc.pending())}});
        }
        s["ufcs"] = ufcs;

        Json acquired = Json::array();
        for (const auto& a : agents_)
            if (a.acquired)
                acquired.push_back({{"id", a.id.str()}, {"home_chain", a.home_chain.str()}});
        s["acquired_agents"] = acquired;

        Json weights = Json::array();
        for (const auto& [pair, w] : graph_.edges())
            weights.push_back(
                {{"from", pair.first.str()}, {"to", pair.second.str()}, {"weight", w}});
        s["graph_weights"] = weights;

        Json first_activity = Json::array();
        for (const auto& pair : first_activity_)
            first_activity.push_back({{"from", pair.first.str()}, {"to", pair.second.str()}});
        s["first_activity"] = first_activity;

        Json gas = Json::object();
        for (const auto& [chain, vault] : vaults_) gas[chain.str()] = vault.gas_reserve.to_string();
        s["gas"] = gas;

        return s;
    }

    static Engine restore(ScenarioConfig cfg, const Json& snap) {
        if (!snap.is_object() || !snap.contains("snapshot_version") ||
            snap.at("snapshot_version").get<int>() != kSnapshotVersion)
            raise(ErrorCode::SchemaMismatch, "unsupported snapshot version");

        Engine e(std::move(cfg));
        e.initialized_ = true;
        e.register_world();

        e.epoch_next_ = snap.at("epoch_next").get<EpochIndex>();
        e.global_step_ = snap.at("global_step").get<long>();
        e.log_.restore_next_seq(snap.at("next_seq").get<uint64_t>());
        e.resources_r_ = Fixed::from_string(snap.at("resources_r").get<std::string>());
        e.acquired_count_ = snap.at("acquired_count").get<long>();

        for (const auto& a : snap.at("acquired_agents")) {
            AgentRuntime rt;
            rt.id = AgentId(a.at("id").get<std::string>());
            rt.home_chain = ChainId(a.at("home_chain").get<std::string>());
            rt.acquired = true;
            e.add_agent_runtime(rt);
        }

        for (const auto& [asset, p] : snap.at("prices").items()) {
            Price price = Fixed::from_string(p.get<std::string>());
            e.prices_.set(AssetId(asset), price);
            auto it = e.processes_.find(AssetId(asset));
            if (it != e.processes_.end()) it->second.restore_current(price);
        }

        for (const auto& h : snap.at("holdings"))
            e.ledger_.restore_holding(
                {h.at("owner").get<std::string>(), ChainId(h.at("chain").get<std::string>())},
                AssetId(h.at("asset").get<std::string>()),
                Fixed::from_string(h.at("qty").get<std::string>()));
        for (const auto& [asset, qty] : snap.at("supply").items())
            e.ledger_.restore_total(AssetId(asset), Fixed::from_string(qty.get<std::string>()));

        for (const auto& c : snap.at("share_classes")) {
            iassets::UnderlyingKey key{ChainId(c.at("chain").get<std::string>()),
                                       AssetId(c.at("asset").get<std::string>())};
            iassets::ShareClass sc;
            // Rebuild holder shares via parity mints against a unit pool.
            for (const auto& h : c.at("holders")) {
                Fixed shares = Fixed::from_string(h.at("shares").get<std::string>());
                sc.mint(AgentId(h.at("agent").get<std::string>()), shares, sc.total_shares());
            }
            e.share_classes_[key] = std::move(sc);
        }

        for (const auto& r : snap.at("rewards"))
            e.rewards_.restore(
                {ChainId(r.at("chain").get<std::string>()), AssetId(r.at("asset").get<std::string>())},
                AgentId(r.at("agent").get<std::string>()),
                Fixed::from_string(r.at("accrued").get<std::string>()));

        for (const auto& st : snap.at("stakes"))
            e.stakes_.add(comms::service_from_string(st.at("service").get<std::string>()),
                          AgentId(st.at("agent").get<std::string>()),
                          AssetId(st.at("asset").get<std::string>()),
                          Fixed::from_string(st.at("qty").get<std::string>()));

        for (const auto& p : snap.at("positions")) {
            brokerage::CollateralPosition pos;
            pos.id = p.at("id").get<std::string>();
            pos.owner = AgentId(p.at("owner").get<std::string>());
            pos.collateral_asset = AssetId(p.at("collateral_asset").get<std::string>());
            pos.collateral_qty = Fixed::from_string(p.at("collateral_qty").get<std::string>());
            pos.collateral_chain = ChainId(p.at("collateral_chain").get<std::string>());
            pos.collateral_app = p.at("collateral_app").get<std::string>();
            pos.leased_asset = AssetId(p.at("leased_asset").get<std::string>());
            pos.leased_units = Fixed::from_string(p.at("leased_units").get<std::string>());
            pos.leased_value = Fixed::from_string(p.at("leased_value").get<std::string>());
            pos.lease_chain = ChainId(p.at("lease_chain").get<std::string>());
            pos.target_app = p.at("target_app").get<std::string>();
            pos.deployed_asset = AssetId(p.at("deployed_asset").get<std::string>());
            pos.deployed_units = Fixed::from_string(p.at("deployed_units").get<std::string>());
            pos.open = p.at("open").get<bool>();
            e.positions_.add(std::move(pos));
        }

        for (const auto& c : snap.at("credits")) {
            AgentId agent(c.at("agent").get<std::string>());
            for (const auto& lot : c.at("lots"))
                e.credits_.lots()[agent].push_back(
                    {lot.at("issued").get<EpochIndex>(),
                     Fixed::from_string(lot.at("remaining").get<std::string>())});
        }

        for (const auto& u : snap.at("ufcs")) {
            auto it = e.ufcs_.find(u.at("id").get<std::string>());
            if (it == e.ufcs_.end()) raise(ErrorCode::SchemaMismatch, "unknown ufc in snapshot");
            auto load_book = [](const Json& arr) {
                clearing::ObligationMap m;
                for (const auto& o : arr)
                    m[{AgentId(o.at("from").get<std::string>()),
                       AgentId(o.at("to").get<std::string>())}] =
                        Fixed::from_string(o.at("amount").get<std::string>());
                return m;
            };
            it->second.restore_books(load_book(u.at("staged")), load_book(u.at("pending")));
            it->second.restore_last_round_step(u.at("last_round_step").get<long>());
        }

        for (const auto& w : snap.at("graph_weights"))
            e.graph_.add_edge(AgentId(w.at("from").get<std::string>()),
                              AgentId(w.at("to").get<std::string>()),
                              w.at("weight").get<double>());

        for (const auto& f : snap.at("first_activity"))
            e.first_activity_.insert({AgentId(f.at("from").get<std::string>()),
                                      AgentId(f.at("to").get<std::string>())});

        for (const auto& [chain, reserve] : snap.at("gas").items()) {
            auto it = e.vaults_.find(ChainId(chain));
            if (it != e.vaults_.end())
                it->second.gas_reserve = Fixed::from_string(reserve.get<std::string>());
        }

        return e;
    }

private:
    // --- static world -------------------------------------------------------

    struct AgentRuntime {
        AgentId id;
        ChainId home_chain;
        bool acquired = false;
    };

    void add_agent_runtime(const AgentRuntime& rt) {
        agents_.push_back(rt);
        graph_.add_agent(rt.id);
        for (const auto& chain : cfg_.chains) ledger_.register_account({rt.id.str(), chain.id});
    }

    void register_world() {
        for (const auto& chain : cfg_.chains) {
            for (const auto& owner :
                 {accounts::kTreasury, accounts::kNolVc, accounts::kNolKe, accounts::kExternal,
                  accounts::kClearing, accounts::kDepositors, accounts::stake("DC"),
                  accounts::stake("VT"), accounts::stake("PL")})
                ledger_.register_account({owner, chain.id});

            liquidity::VaultState vault;
            vault.chain = chain.id;
            vault.gas_reserve = chain.gas_reserve;
            vault.gas_cost_per_op = chain.gas_cost;
            vault.directory.required_message_keys = {"seq", "payload"};
            vault.register_conductor("hub", {"hub-controller", cfg_.hub_chain});
            vaults_[chain.id] = std::move(vault);
        }

        for (const auto& a : cfg_.agents)
            add_agent_runtime({a.id, a.home_chain, false});

        prices_.set(cfg_.hub_asset, Fixed(1));
        for (const auto& pc : cfg_.prices) {
            if (pc.kind == PriceProcess::Kind::Table)
                processes_.emplace(pc.asset, PriceProcess::table(pc.asset, pc.values));
            else
                processes_.emplace(pc.asset,
                                   PriceProcess::walk(pc.asset, pc.initial, pc.drift,
                                                      pc.volatility));
        }
        for (const auto& asset : cfg_.assets) {
            if (asset == cfg_.hub_asset) continue;
            if (!processes_.count(asset))
                processes_.emplace(asset, PriceProcess::table(asset, {Fixed(1)}));
        }

        conv_graph_ = liquidity::ConversionGraph(cfg_.hub_asset);
        for (const auto& edge : cfg_.conversion_edges) conv_graph_.add_edge(edge);

        for (const auto& ch : cfg_.channels) {
            comms::ChannelParams params;
            params.chain = ch.chain;
            params.base_lag = ch.base_lag;
            params.lag_jitter = ch.lag_jitter;
            params.miss_rate = ch.miss_rate;
            params.spur_rate = ch.spur_rate;
            params.stake_scale_s0 = ch.stake_scale_s0;
            params.fee_dc = cfg_.fees.dc;
            params.outage_epochs = ch.outages;
            channels_[ch.chain] = params;
            channel_cfg_[ch.chain] = ch;
        }

        for (const auto& cc : cfg_.clusters) {
            clearing::TransactionCluster tc;
            tc.id = cc.id;
            tc.members = cc.members;
            tc.c_dc = cc.c_dc;
            tc.c_vc = cc.c_vc;
            tc.c_p = cc.c_p;
            tc.hub_c_p = cc.hub_c_p;
            ufcs_.emplace(cc.id, clearing::UFCInstance(cc.id, tc, cc.interval));
        }
    }

    void genesis() {
        auto mint = [&](const std::string& owner, const ChainId& chain, const AssetId& asset,
                        const Quantity& qty) {
            if (qty.is_zero()) return;
            ledger_.mint({owner, chain}, asset, qty, SupplyTag::Genesis);
            emit(0, 0, "genesis",
                 {{"owner", owner},
                  {"chain", chain.str()},
                  {"asset", asset.str()},
                  {"qty", qty.to_string()}});
        };

        // Deep external market inventory: system purchases and sales settle
        // against it without changing any asset's mid-run supply.
        for (const auto& chain : cfg_.chains)
            for (const auto& asset : cfg_.assets)
                mint(accounts::kExternal, chain.id, asset, cfg_.external_liquidity);

        mint(accounts::kTreasury, cfg_.hub_chain, cfg_.hub_asset, cfg_.treasury);

        for (const auto& h : cfg_.nol.vc_holdings)
            mint(accounts::kNolVc, h.chain, h.asset, h.qty);
        for (const auto& h : cfg_.nol.ke_holdings)
            mint(accounts::kNolKe, h.chain, h.asset, h.qty);

        for (const auto& a : cfg_.agents)
            for (const auto& h : a.holdings) mint(a.id.str(), h.chain, h.asset, h.qty);

        for (const auto& g : cfg_.guarantors) {
            mint(accounts::stake(comms::service_name(g.service)), cfg_.hub_chain, g.asset,
                 g.qty);
            stakes_.add(g.service, g.agent, g.asset, g.qty);
        }

        resources_r_ = system_equity();
        emit(0, 0, "run_start",
             {{"seed", cfg_.seed},
              {"horizon", cfg_.horizon},
              {"initial_resources", resources_r_.to_string()}});
    }

    // --- epoch loop -----------------------------------------------------------

    struct PathAccum {
        double volume = 0.0;
        double psi = 0.0;
        double lag_sum = 0.0;
        long lag_n = 0;
        double fee_dc = 0.0;
        double vt_cost = 0.0;
        double clearing_cost = 0.0;
    };

    struct EpochAccum {
        std::vector<double> msg_psi;
        std::vector<double> msg_lag;
        std::vector<liquidity::CeRecord> vt;
        std::vector<liquidity::CeRecord> vc;
        double savings = 0.0;
        fiscal::RevenueVector revenue;
        Fixed mtm;
        std::map<AssetId, Fixed> conv_demand;
        std::map<AgentId, double> output; // economic output per src agent
        std::map<AgentId, Fixed> fee_usage;
        std::map<std::pair<AgentId, AgentId>, PathAccum> paths;
        long agents_at_begin = 0;
        double security_cost = 0.0;
    };

    void run_one_epoch() {
        EpochIndex u = epoch_next_;
        epoch_ = u;
        accum_ = EpochAccum{};
        accum_.agents_at_begin = static_cast<long>(agents_.size());
        step_ = 0;
        emit_epoch_params(u);
        plan_generated_activity(u);

        for (StepIndex s = 1; s <= cfg_.steps_per_epoch; ++s) {
            step_ = s;
            ++global_step_;
            run_scripted(u, s);
            run_generated(u, s);
            run_due_rounds();
        }

        step_ = cfg_.steps_per_epoch;
        close_epoch(u);
        ++epoch_next_;
        log(LogLevel::Info, "epoch " + std::to_string(u) + " closed");
    }

    void emit_epoch_params(EpochIndex u) {
        Json p;
        p["agents"] = static_cast<long>(agents_.size());
        p["beta"] = cfg_.beta_at(u);
        p["path_kappa"] = cfg_.path_kappa;
        p["path_exponent"] = cfg_.path_exponent;
        p["nv_kind"] = cfg_.network_value.kind == topology::NetworkValueModel::Kind::Metcalfe
                           ? "metcalfe"
                           : "zipf";
        p["nv_scale"] = cfg_.network_value.scale;
        emit(u, 0, "epoch_params", std::move(p));
    }

    // --- generated activity ---------------------------------------------------

    struct PlannedTransfer {
        StepIndex step;
        size_t src_idx, dst_idx, asset_idx;
        Fixed value;
    };
    struct PlannedConversion {
        StepIndex step;
        size_t agent_idx, src_idx, dst_idx;
        Fixed value;
    };
    struct PlannedDeposit {
        StepIndex step;
        size_t agent_idx, asset_idx;
        Fixed value;
    };
    struct PlannedObligation {
        StepIndex step;
        std::string ufc;
        size_t from_idx, to_idx;
        Fixed amount;
    };

    Fixed scaled_amount(const Fixed& mean, double u01) {
        return mean * Fixed::from_double(0.5 + u01);
    }

    void plan_generated_activity(EpochIndex u) {
        planned_transfers_.clear();
        planned_conversions_.clear();
        planned_deposits_.clear();
        planned_obligations_.clear();

        size_t n_agents = agents_.size();
        size_t n_assets = cfg_.assets.size();
        StepIndex steps = cfg_.steps_per_epoch;

        if (n_agents >= 2 && cfg_.activity.transfers_per_epoch > 0) {
            Rng rng(derive_seed(cfg_.seed, "activity/transfer", u));
            for (int i = 0; i < cfg_.activity.transfers_per_epoch; ++i) {
                PlannedTransfer t;
                t.step = static_cast<StepIndex>(i % steps) + 1;
                t.src_idx = rng.uniform_below(n_agents);
                t.dst_idx = rng.uniform_below(n_agents - 1);
                if (t.dst_idx >= t.src_idx) ++t.dst_idx;
                t.asset_idx = rng.uniform_below(n_assets);
                t.value = scaled_amount(cfg_.activity.transfer_value_mean, rng.uniform01());
                planned_transfers_.push_back(t);
            }
        }
        if (n_agents >= 1 && cfg_.activity.conversions_per_epoch > 0 && n_assets >= 2) {
            Rng rng(derive_seed(cfg_.seed, "activity/convert", u));
            for (int i = 0; i < cfg_.activity.conversions_per_epoch; ++i) {
                PlannedConversion c;
                c.step = static_cast<StepIndex>(i % steps) + 1;
                c.agent_idx = rng.uniform_below(n_agents);
                c.src_idx = rng.uniform_below(n_assets);
                c.dst_idx = rng.uniform_below(n_assets - 1);
                if (c.dst_idx >= c.src_idx) ++c.dst_idx;
                c.value = scaled_amount(cfg_.activity.conversion_value_mean, rng.uniform01());
                planned_conversions_.push_back(c);
            }
        }
        if (n_agents >= 1 && cfg_.activity.deposits_per_epoch > 0) {
            Rng rng(derive_seed(cfg_.seed, "activity/deposit", u));
            for (int i = 0; i < cfg_.activity.deposits_per_epoch; ++i) {
                PlannedDeposit d;
                d.step = static_cast<StepIndex>(i % steps) + 1;
                d.agent_idx = rng.uniform_below(n_agents);
                d.asset_idx = rng.uniform_below(n_assets);
                d.value = scaled_amount(cfg_.activity.deposit_mean, rng.uniform01());
                planned_deposits_.push_back(d);
            }
        }
        for (const auto& cc : cfg_.clusters) {
            if (cc.obligations_per_epoch <= 0 || cc.members.size() < 2) continue;
            Rng rng(derive_seed(cfg_.seed, "activity/obligation/" + cc.id, u));
            for (int i = 0; i < cc.obligations_per_epoch; ++i) {
                PlannedObligation o;
                o.step = static_cast<StepIndex>(i % steps) + 1;
                o.ufc = cc.id;
                o.from_idx = rng.uniform_below(cc.members.size());
                o.to_idx = rng.uniform_below(cc.members.size() - 1);
                if (o.to_idx >= o.from_idx) ++o.to_idx;
                o.amount = scaled_amount(cc.obligation_mean, rng.uniform01());
                planned_obligations_.push_back(o);
            }
        }
    }

    void run_generated(EpochIndex u, StepIndex s) {
        auto guarded = [&](auto&& fn) {
            try {
                fn();
            } catch (const SimError& e) {
                emit_error(e.code(), e.what());
            }
        };

        // Channel traffic first, in chain order.
        for (const auto& [chain, ch_cfg] : channel_cfg_) {
            if (ch_cfg.messages_per_step <= 0 || agents_.empty()) continue;
            Rng rng(derive_seed(cfg_.seed, "comms/" + chain.str(), u));
            // Burn draws for earlier steps so each step's slice is stable.
            for (StepIndex prior = 1; prior < s; ++prior)
                for (int i = 0; i < ch_cfg.messages_per_step; ++i)
                    skip_message_draws(ch_cfg, rng);
            for (int i = 0; i < ch_cfg.messages_per_step; ++i) {
                size_t src = rng.uniform_below(agents_.size());
                size_t dst = rng.uniform_below(agents_.size());
                guarded([&] {
                    do_message(chain, agents_[src].id, agents_[dst].id, u, s, rng, 0);
                });
            }
        }
        for (const auto& t : planned_transfers_)
            if (t.step == s)
                guarded([&] {
                    do_transfer(agents_[t.src_idx].id, agents_[t.dst_idx].id,
                                cfg_.assets[t.asset_idx], t.value, Fixed(0));
                });
        for (const auto& c : planned_conversions_)
            if (c.step == s)
                guarded([&] {
                    do_convert(agents_[c.agent_idx].id, cfg_.assets[c.src_idx],
                               cfg_.assets[c.dst_idx], c.value);
                });
        for (const auto& d : planned_deposits_)
            if (d.step == s) guarded([&] { do_generated_deposit(d); });
        for (const auto& o : planned_obligations_)
            if (o.step == s) guarded([&] { do_obligation(o.ufc, o.from_idx, o.to_idx, o.amount); });
    }

    void skip_message_draws(const scenario::ChannelConfig& ch, Rng& rng) {
        rng.uniform_below(agents_.size());
        rng.uniform_below(agents_.size());
        rng.uniform01(); // jitter
        for (int k = 0; k < ch.required_keys; ++k) rng.uniform01();
        rng.uniform01(); // spur
    }

    void do_generated_deposit(const PlannedDeposit& d) {
        const AgentId& agent = agents_[d.agent_idx].id;
        const AssetId& asset = cfg_.assets[d.asset_idx];
        auto chain = largest_holding_chain(agent.str(), asset, true);
        if (!chain) {
            emit_error(ErrorCode::InsufficientBalance, "generated deposit by " + agent.str());
            return;
        }
        Quantity qty = d.value / prices_.get(asset);
        Quantity free = free_balance(agent, *chain, asset);
        if (qty > free) qty = free;
        if (qty.is_zero()) {
            emit_error(ErrorCode::InsufficientBalance, "generated deposit by " + agent.str());
            return;
        }
        do_deposit(agent, *chain, asset, qty);
    }

    // --- scripted actions -------------------------------------------------------

    void run_scripted(EpochIndex u, StepIndex s) {
        for (const auto& act : cfg_.scripted) {
            if (act.epoch != u || act.step != s) continue;
            try {
                dispatch_scripted(act.data, u, s);
            } catch (const SimError& e) {
                emit_error(e.code(), e.what());
            }
        }
    }

    void dispatch_scripted(const Json& a, EpochIndex u, StepIndex s) {
        const std::string action = a.at("action").get<std::string>();
        auto fx = [&](const char* key) {
            return Fixed::from_string(a.at(key).is_string()
                                          ? a.at(key).get<std::string>()
                                          : a.at(key).dump());
        };
        if (action == "deposit") {
            do_deposit(AgentId(a.at("agent").get<std::string>()),
                       ChainId(a.at("chain").get<std::string>()),
                       AssetId(a.at("asset").get<std::string>()), fx("qty"));
        } else if (action == "withdraw") {
            do_withdraw(AgentId(a.at("agent").get<std::string>()),
                        ChainId(a.at("chain").get<std::string>()),
                        AssetId(a.at("asset").get<std::string>()), fx("shares"));
        } else if (action == "iasset_transfer") {
            do_iasset_transfer(AgentId(a.at("from").get<std::string>()),
                               AgentId(a.at("to").get<std::string>()),
                               ChainId(a.at("chain").get<std::string>()),
                               AssetId(a.at("asset").get<std::string>()), fx("shares"));
        } else if (action == "slash") {
            do_slash(ChainId(a.at("chain").get<std::string>()),
                     AssetId(a.at("asset").get<std::string>()), fx("fraction"));
        } else if (action == "transfer") {
            Fixed loss = a.contains("loss_fraction") ? fx("loss_fraction") : Fixed(0);
            do_transfer(AgentId(a.at("src").get<std::string>()),
                        AgentId(a.at("dst").get<std::string>()),
                        AssetId(a.at("asset").get<std::string>()), fx("value"), loss);
        } else if (action == "convert") {
            do_convert(AgentId(a.at("agent").get<std::string>()),
                       AssetId(a.at("src_asset").get<std::string>()),
                       AssetId(a.at("dst_asset").get<std::string>()), fx("value"), nullptr);
        } else if (action == "message") {
            ChainId chain(a.at("chain").get<std::string>());
            Rng rng(derive_seed(cfg_.seed, "scripted_msg/" + std::to_string(u) + "/" +
                                               std::to_string(s), u));
            do_message(chain, AgentId(a.at("src").get<std::string>()),
                       AgentId(a.at("dst").get<std::string>()), u, s, rng, 0);
        } else if (action == "obligation") {
            auto it = ufcs_.find(a.at("cluster").get<std::string>());
            if (it == ufcs_.end()) raise(ErrorCode::ValidationError, "unknown cluster");
            AgentId from(a.at("from").get<std::string>());
            AgentId to(a.at("to").get<std::string>());
            it->second.add_obligation(from, to, fx("amount"));
            emit(epoch_, step_, "obligation",
                 {{"ufc", it->second.id()},
                  {"from", from.str()},
                  {"to", to.str()},
                  {"amount", fx("amount").to_string()}});
        } else if (action == "open_lease") {
            do_open_lease(a);
        } else if (action == "deploy_lease") {
            do_deploy_lease(a.at("id").get<std::string>(),
                            AssetId(a.at("dst_asset").get<std::string>()));
        } else if (action == "close_lease") {
            do_close_lease(a.at("id").get<std::string>());
        } else {
            raise(ErrorCode::ValidationError, "unknown scripted action '" + action + "'");
        }
    }

    // --- primitive operations ----------------------------------------------------

    void do_deposit(const AgentId& agent, const ChainId& chain, const AssetId& asset,
                    const Quantity& qty) {
        require_known_chain(chain);
        if (qty.is_zero()) {
            emit(epoch_, step_, "deposit",
                 {{"agent", agent.str()},
                  {"chain", chain.str()},
                  {"asset", asset.str()},
                  {"qty", "0"},
                  {"shares", "0"}});
            return;
        }
        Quantity free = free_balance(agent, chain, asset);
        if (free < qty)
            raise(ErrorCode::InsufficientBalance, agent.str() + " deposit of " + qty.to_string());
        iassets::UnderlyingKey key{chain, asset};
        Quantity pool_before = ledger_.balance({accounts::kDepositors, chain}, asset);
        Fixed shares = share_classes_[key].mint(agent, qty, pool_before);
        ledger_.post({agent.str(), chain}, {accounts::kDepositors, chain}, asset, qty);
        emit(epoch_, step_, "deposit",
             {{"agent", agent.str()},
              {"chain", chain.str()},
              {"asset", asset.str()},
              {"qty", qty.to_string()},
              {"shares", shares.to_string()}});
    }

    void do_withdraw(const AgentId& agent, const ChainId& chain, const AssetId& asset,
                     const Fixed& shares) {
        iassets::UnderlyingKey key{chain, asset};
        auto it = share_classes_.find(key);
        if (it == share_classes_.end())
            raise(ErrorCode::NoMatchingDeposit, "no share class for " + asset.str());
        Quantity pool = ledger_.balance({accounts::kDepositors, chain}, asset);
        Fixed qty = it->second.burn(agent, shares, pool);
        ledger_.post({accounts::kDepositors, chain}, {agent.str(), chain}, asset, qty);
        emit(epoch_, step_, "withdraw",
             {{"agent", agent.str()},
              {"chain", chain.str()},
              {"asset", asset.str()},
              {"qty", qty.to_string()},
              {"shares", shares.to_string()}});
    }

    void do_iasset_transfer(const AgentId& from, const AgentId& to, const ChainId& chain,
                            const AssetId& asset, const Fixed& shares) {
        iassets::UnderlyingKey key{chain, asset};
        auto it = share_classes_.find(key);
        if (it == share_classes_.end())
            raise(ErrorCode::NoMatchingDeposit, "no share class for " + asset.str());
        it->second.transfer(from, to, shares);
        emit(epoch_, step_, "iasset_transfer",
             {{"from", from.str()},
              {"to", to.str()},
              {"chain", chain.str()},
              {"asset", asset.str()},
              {"shares", shares.to_string()}});
    }

    void do_slash(const ChainId& chain, const AssetId& asset, const Fixed& fraction) {
        Quantity pool = ledger_.balance({accounts::kDepositors, chain}, asset);
        Quantity burned = iassets::slash_amount(pool, fraction);
        if (!burned.is_zero())
            ledger_.burn({accounts::kDepositors, chain}, asset, burned, SupplyTag::Slash);
        emit(epoch_, step_, "slash",
             {{"chain", chain.str()},
              {"asset", asset.str()},
              {"fraction", fraction.to_string()},
              {"burned", burned.to_string()}});
    }

    // Message over a chain's channel; flow_step tags UFC round phases.
    std::optional<comms::MessageEvent> do_message(const ChainId& chain, const AgentId& src,
                                                  const AgentId& dst, EpochIndex u,
                                                  StepIndex s, Rng& rng, int flow_step) {
        comms::ChannelParams params = channel_params(chain);
        int required = 1;
        auto cit = channel_cfg_.find(chain);
        if (cit != channel_cfg_.end()) required = cit->second.required_keys;

        std::set<std::string> keys;
        for (int k = 1; k <= required; ++k) keys.insert("k" + std::to_string(k));

        double needed_at = logical_time(u, s);
        comms::MessageEvent ev;
        try {
            ev = comms::deliver(params, src, dst, needed_at, keys,
                                stakes_.total_value(comms::Service::DC, prices_), u, rng);
        } catch (const SimError& e) {
            emit(u, s, "channel_down", {{"chain", chain.str()}, {"context", e.what()}});
            throw;
        }

        double psi = comms::event_discrepancy(ev);
        double lag = std::max(0.0, ev.delivered_at - ev.needed_at);
        accum_.msg_psi.push_back(psi);
        accum_.msg_lag.push_back(lag);

        // DC fee charged to the sender; system-internal hub messages are free
        // and do not form agent paths.
        bool src_is_agent = src.str().empty() || src.str()[0] != '$';
        bool dst_is_agent = dst.str().empty() || dst.str()[0] != '$';
        FeePayment payment;
        if (src_is_agent) payment = pay_fee(src, fiscal::RevenueStream::DC, cfg_.fees.dc);

        if (src_is_agent && dst_is_agent && src != dst) {
            auto& path = accum_.paths[{src, dst}];
            path.psi += psi;
            path.lag_sum += lag;
            path.lag_n += 1;
            path.fee_dc += cfg_.fees.dc.to_double();
        }

        Json delivered = Json::array();
        for (const auto& k : ev.delivered_keys) delivered.push_back(k);
        Json requested = Json::array();
        for (const auto& k : ev.required_keys) requested.push_back(k);
        emit(u, s, "message",
             {{"chain", chain.str()},
              {"src", src.str()},
              {"dst", dst.str()},
              {"needed_at", ev.needed_at},
              {"delivered_at", ev.delivered_at},
              {"required", requested},
              {"delivered", delivered},
              {"psi", psi},
              {"lag", lag},
              {"flow_step", flow_step},
              {"fee_cash", payment.cash.to_string()}});
        touch_path(src, dst);
        return ev;
    }

    void do_transfer(const AgentId& src, const AgentId& dst, const AssetId& asset,
                     const Fixed& value_hint, const Fixed& loss_fraction) {
        const Price& p = prices_.get(asset);
        Quantity qty = value_hint / p;
        if (qty.is_zero()) raise(ErrorCode::NoVolume, "transfer of zero quantity");

        auto src_chain = largest_holding_chain(src.str(), asset, true);
        if (!src_chain || free_balance(src, *src_chain, asset) < qty)
            raise(ErrorCode::InsufficientBalance,
                  src.str() + " cannot fund transfer of " + qty.to_string() + " " + asset.str());
        ChainId dst_chain = home_chain(dst);

        if (!channel_up(*src_chain) || !channel_up(dst_chain))
            raise(ErrorCode::PathUnavailable, "channel outage on transfer route");

        Fixed value = qty * p;
        auto cost = liquidity::transfer_value_cost(
            cfg_.fees.vt, cfg_.transfer_pi0,
            stakes_.total_value(comms::Service::VT, prices_), cfg_.transfer_s0, value);

        Quantity delivered = qty;
        Quantity lost;
        if (!loss_fraction.is_zero()) {
            lost = qty * loss_fraction;
            delivered = qty - lost;
        }

        if (*src_chain == dst_chain) {
            if (!lost.is_zero())
                ledger_.burn({src.str(), *src_chain}, asset, lost, SupplyTag::Burn);
            ledger_.post({src.str(), *src_chain}, {dst.str(), dst_chain}, asset, delivered);
        } else {
            // Cross-chain delivery rides the network-owned inventory: units
            // enter on the source chain and leave on the destination chain.
            if (ledger_.balance({accounts::kNolVc, dst_chain}, asset) < delivered)
                raise(ErrorCode::InsufficientInventory,
                      "no destination inventory for " + asset.str() + " on " + dst_chain.str());
            if (!lost.is_zero())
                ledger_.burn({src.str(), *src_chain}, asset, lost, SupplyTag::Burn);
            ledger_.post({src.str(), *src_chain}, {accounts::kNolVc, *src_chain}, asset,
                         delivered);
            ledger_.post({accounts::kNolVc, dst_chain}, {dst.str(), dst_chain}, asset,
                         delivered);
            consume_gas(*src_chain);
            consume_gas(dst_chain);
        }

        auto payment = pay_fee(src, fiscal::RevenueStream::VT, cfg_.fees.vt);

        accum_.vt.push_back({value.to_double(), cost.total});
        accum_.security_cost += cost.expected_security;
        accum_.output[src] += cfg_.output_coefficient * value.to_double();
        auto& path = accum_.paths[{src, dst}];
        path.volume += value.to_double();
        path.vt_cost += cost.total;
        graph_.add_edge(src, dst, value.to_double());
        touch_path(src, dst);

        if (!lost.is_zero())
            emit(epoch_, step_, "transfer_loss",
                 {{"src", src.str()}, {"asset", asset.str()}, {"burned", lost.to_string()}});

        emit(epoch_, step_, "transfer",
             {{"src", src.str()},
              {"dst", dst.str()},
              {"asset", asset.str()},
              {"qty", qty.to_string()},
              {"delivered", delivered.to_string()},
              {"src_chain", src_chain->str()},
              {"dst_chain", dst_chain.str()},
              {"value_hub", value.to_double()},
              {"fee", cost.fee.to_string()},
              {"fee_cash", payment.cash.to_string()},
              {"security_cost", cost.expected_security},
              {"total_cost", cost.total},
              {"ce", cost.cost_efficiency}});
    }

    struct ConversionOutcome {
        Quantity received;
        ChainId out_chain;
        Fixed volume_hub;
        Fixed cost;
        Fixed fee_value;
    };

    // Prices, settles and books one conversion against the VC portfolio.
    std::optional<ConversionOutcome> settle_conversion(const AgentId& agent,
                                                       const AssetId& src,
                                                       const AssetId& dst,
                                                       const Quantity& src_units,
                                                       const ChainId& in_chain) {
        auto depth_of = [&](const liquidity::ConversionEdge& e) {
            Fixed nol;
            for (const auto& chain : cfg_.chains)
                nol += ledger_.balance({accounts::kNolVc, chain.id}, e.spoke) *
                       prices_.get(e.spoke);
            return e.depth + nol;
        };
        auto plan = liquidity::plan_conversion(conv_graph_, src, dst, src_units, prices_,
                                               depth_of);

        if (src == dst) {
            emit(epoch_, step_, "conversion",
                 {{"agent", agent.str()},
                  {"src_asset", src.str()},
                  {"dst_asset", dst.str()},
                  {"src_units", src_units.to_string()},
                  {"received", src_units.to_string()},
                  {"volume_hub", plan.src_value_hub.to_double()},
                  {"cost_metric", 0.0},
                  {"fee_value", "0"},
                  {"retained", "0"},
                  {"in_chain", in_chain.str()},
                  {"out_chain", in_chain.str()},
                  {"ce", 0.0}});
            return ConversionOutcome{src_units, in_chain, plan.src_value_hub, Fixed(0),
                                     Fixed(0)};
        }

        ChainId out_chain =
            liquidity::preferred_chain(ledger_, accounts::kNolVc, dst, cfg_.hub_chain);
        if (ledger_.balance({accounts::kNolVc, out_chain}, dst) < plan.received)
            raise(ErrorCode::InsufficientInventory,
                  "conversion inventory short of " + dst.str());
        if (ledger_.balance({agent.str(), in_chain}, src) < src_units)
            raise(ErrorCode::InsufficientBalance, "conversion input missing");

        ledger_.post({agent.str(), in_chain}, {accounts::kNolVc, in_chain}, src, src_units);
        ledger_.post({accounts::kNolVc, out_chain}, {agent.str(), out_chain}, dst,
                     plan.received);

        // Fee leaves the pool for the treasury in destination units; the
        // itemized revenue is the exact value collected.
        const Price& p_dst = prices_.get(dst);
        Quantity fee_units = plan.total_fee / p_dst;
        Quantity pool_left = ledger_.balance({accounts::kNolVc, out_chain}, dst);
        if (fee_units > pool_left) fee_units = pool_left;
        Fixed fee_value = fee_units * p_dst;
        if (!fee_units.is_zero())
            ledger_.post({accounts::kNolVc, out_chain}, {accounts::kTreasury, out_chain}, dst,
                         fee_units);
        accum_.revenue.add(fiscal::RevenueStream::VC, fee_value);

        // Slippage and rounding residue accrete to the VC portfolio.
        Fixed value_out = plan.received * p_dst;
        Fixed retained = plan.src_value_hub - value_out - fee_value;
        accum_.mtm += retained;
        emit(epoch_, step_, "mtm",
             {{"kind", "conversion_retained"}, {"amount", retained.to_string()}});

        double cost_metric = plan.total_cost.to_double();
        accum_.vc.push_back({plan.src_value_hub.to_double(), cost_metric});
        accum_.conv_demand[dst] += plan.src_value_hub;
        conv_graph_.record_conversion(src, dst, plan.src_value_hub.to_double(), cost_metric);
        consume_gas(in_chain);
        consume_gas(out_chain);

        emit(epoch_, step_, "conversion",
             {{"agent", agent.str()},
              {"src_asset", src.str()},
              {"dst_asset", dst.str()},
              {"src_units", src_units.to_string()},
              {"received", plan.received.to_string()},
              {"volume_hub", plan.src_value_hub.to_double()},
              {"cost_metric", cost_metric},
              {"fee_value", fee_value.to_string()},
              {"retained", retained.to_string()},
              {"in_chain", in_chain.str()},
              {"out_chain", out_chain.str()},
              {"ce", cost_metric == 0.0 ? 0.0
                                        : plan.src_value_hub.to_double() / cost_metric}});

        ConversionOutcome out;
        out.received = plan.received;
        out.out_chain = out_chain;
        out.volume_hub = plan.src_value_hub;
        out.cost = plan.total_cost;
        out.fee_value = fee_value;
        return out;
    }

    void do_convert(const AgentId& agent, const AssetId& src, const AssetId& dst,
                    const Fixed& value_hint, const ConversionOutcome** out) {
        const Price& p_src = prices_.get(src);
        Quantity units = value_hint / p_src;
        if (units.is_zero()) raise(ErrorCode::NoVolume, "conversion of zero volume");
        auto chain = largest_holding_chain(agent.str(), src, true);
        if (!chain || free_balance(agent, *chain, src) < units)
            raise(ErrorCode::InsufficientBalance,
                  agent.str() + " cannot fund conversion of " + units.to_string());
        settle_conversion(agent, src, dst, units, *chain);
        (void)out;
    }

    // --- leases ---------------------------------------------------------------

    void do_open_lease(const Json& a) {
        std::string id = a.at("id").get<std::string>();
        AgentId agent(a.at("agent").get<std::string>());
        AssetId col_asset(a.at("collateral_asset").get<std::string>());
        ChainId col_chain(a.at("collateral_chain").get<std::string>());
        Fixed col_qty = Fixed::from_string(a.at("collateral_qty").get<std::string>());
        AssetId leased(a.at("leased_asset").get<std::string>());
        Fixed want_value = Fixed::from_string(a.at("value").get<std::string>());

        if (free_balance(agent, col_chain, col_asset) < col_qty)
            raise(ErrorCode::InsufficientBalance, "collateral not available");

        Fixed col_value = col_qty * prices_.get(col_asset);
        auto cap = brokerage::max_leaseable(col_value, cfg_.lease_terms.rho_min);
        if (cap && want_value > *cap)
            raise(ErrorCode::BelowMinimumRate,
                  "requested " + want_value.to_string() + " exceeds cap " + cap->to_string());

        const Price& p_leased = prices_.get(leased);
        ChainId lease_chain =
            liquidity::preferred_chain(ledger_, accounts::kNolKe, leased, cfg_.hub_chain);
        Quantity units = want_value / p_leased;
        if (ledger_.balance({accounts::kNolKe, lease_chain}, leased) < units)
            raise(ErrorCode::InsufficientInventory, "inventory cannot cover lease " + id);
        Fixed value = units * p_leased; // grant whole units; L is their exact value

        brokerage::CollateralPosition pos;
        pos.id = id;
        pos.owner = agent;
        pos.collateral_asset = col_asset;
        pos.collateral_qty = col_qty;
        pos.collateral_chain = col_chain;
        pos.collateral_app = a.contains("collateral_app")
                                 ? a.at("collateral_app").get<std::string>()
                                 : "vault";
        pos.leased_asset = leased;
        pos.leased_units = units;
        pos.leased_value = value;
        pos.lease_chain = lease_chain;
        pos.target_app = a.contains("target_app") ? a.at("target_app").get<std::string>()
                                                  : "vault";
        pos.deployed_asset = leased;
        pos.deployed_units = units;

        ledger_.post({accounts::kNolKe, lease_chain}, {agent.str(), lease_chain}, leased,
                     units);
        Fixed rho = brokerage::collateralization_rate(pos, prices_);
        positions_.add(pos);

        emit(epoch_, step_, "lease_open",
             {{"position", id},
              {"agent", agent.str()},
              {"collateral_asset", col_asset.str()},
              {"collateral_qty", col_qty.to_string()},
              {"leased_asset", leased.str()},
              {"leased_units", units.to_string()},
              {"leased_value", value.to_string()},
              {"lease_chain", lease_chain.str()},
              {"rho", rho.to_string()}});
    }

    void do_deploy_lease(const std::string& id, const AssetId& dst) {
        auto& pos = positions_.get(id);
        if (!pos.open) raise(ErrorCode::ValidationError, "position " + id + " is closed");
        auto out = settle_conversion(pos.owner, pos.deployed_asset, dst, pos.deployed_units,
                                     pos.lease_chain);
        if (!out) return;
        pos.deployed_asset = dst;
        pos.deployed_units = out->received;
        pos.lease_chain = out->out_chain;
        emit(epoch_, step_, "lease_deploy",
             {{"position", id},
              {"asset", dst.str()},
              {"units", out->received.to_string()},
              {"chain", out->out_chain.str()}});
    }

    void do_close_lease(const std::string& id) {
        auto& pos = positions_.get(id);
        if (!pos.open) raise(ErrorCode::ValidationError, "position " + id + " already closed");
        const Price& p = prices_.get(pos.deployed_asset);
        Quantity held = ledger_.balance({pos.owner.str(), pos.lease_chain}, pos.deployed_asset);
        Quantity to_return = liquidity::ceil_units(pos.leased_value, p);
        if (to_return > pos.deployed_units) to_return = pos.deployed_units;
        if (to_return > held) to_return = held;
        Fixed returned_value = to_return * p;
        ledger_.post({pos.owner.str(), pos.lease_chain}, {accounts::kNolKe, pos.lease_chain},
                     pos.deployed_asset, to_return);

        Fixed residual; // receivable not covered by the returned inventory
        if (returned_value < pos.leased_value) {
            Fixed shortfall = pos.leased_value - returned_value;
            const Price& pc = prices_.get(pos.collateral_asset);
            Quantity seize = liquidity::ceil_units(shortfall, pc);
            if (seize > pos.collateral_qty) seize = pos.collateral_qty;
            if (!seize.is_zero())
                ledger_.post({pos.owner.str(), pos.collateral_chain},
                             {accounts::kNolKe, pos.collateral_chain}, pos.collateral_asset,
                             seize);
            Fixed seized_value = seize * pc;
            returned_value += seized_value;
            if (returned_value < pos.leased_value)
                residual = pos.leased_value - returned_value;
        }

        Fixed mtm_delta = returned_value - pos.leased_value;
        accum_.mtm += mtm_delta;
        emit(epoch_, step_, "mtm",
             {{"kind", "lease_close"}, {"amount", mtm_delta.to_string()}});

        pos.open = false;
        emit(epoch_, step_, "lease_close",
             {{"position", id},
              {"returned_value", returned_value.to_string()},
              {"residual_loss", residual.to_string()}});
    }

    // --- obligations / rounds ----------------------------------------------------

    void do_obligation(const std::string& ufc_id, size_t from_idx, size_t to_idx,
                       const Fixed& amount) {
        auto it = ufcs_.find(ufc_id);
        if (it == ufcs_.end()) return;
        const auto& members = it->second.cluster().members;
        const AgentId& from = members[from_idx];
        const AgentId& to = members[to_idx];
        it->second.add_obligation(from, to, amount);
        emit(epoch_, step_, "obligation",
             {{"ufc", ufc_id},
              {"from", from.str()},
              {"to", to.str()},
              {"amount", amount.to_string()}});
    }

    void run_due_rounds() {
        for (auto& [id, ufc] : ufcs_) {
            if (!ufc.due(global_step_)) continue;
            try {
                run_ufc_round(ufc);
            } catch (const SimError& e) {
                emit_error(e.code(), "ufc round " + id + ": " + e.what());
            }
        }
    }

    void run_ufc_round(clearing::UFCInstance& ufc) {
        const auto& members = ufc.cluster().members;
        size_t n = members.size();

        // Empty book: quiet round, just the periodic state fetch.
        if (ufc.staged().empty() && ufc.pending().empty()) {
            Rng rng(derive_seed(cfg_.seed, "ufc/" + ufc.id(), epoch_));
            for (const auto& m : members) {
                if (!channel_up(home_chain(m))) {
                    emit(epoch_, step_, "ufc_deferred",
                         {{"ufc", ufc.id()}, {"reason", "channel outage"}, {"failing_step", 3}});
                    return;
                }
            }
            for (const auto& m : members)
                do_message(home_chain(m), m, AgentId("$hub"), epoch_, step_, rng, 3);
            ufc.mark_round(global_step_);
            emit(epoch_, step_, "ufc_round",
                 {{"ufc", ufc.id()},
                  {"n", n},
                  {"settled_value", "0"},
                  {"transfers", 0},
                  {"savings", 0.0},
                  {"steps", Json::array({3})},
                  {"noop", true}});
            return;
        }

        // Validate everything before committing anything: outages or missing
        // funds defer the whole round.
        for (const auto& m : members) {
            if (!channel_up(home_chain(m))) {
                emit(epoch_, step_, "ufc_deferred",
                     {{"ufc", ufc.id()}, {"reason", "channel outage"}, {"failing_step", 3}});
                return;
            }
        }

        clearing::ObligationMap merged = ufc.pending();
        for (const auto& [pair, amount] : ufc.staged()) merged[pair] += amount;
        auto plan = clearing::net_obligations(merged);

        std::map<AgentId, Fixed> relocation; // hub cash to pull to the hub chain
        Fixed nol_hub_pool =
            ledger_.balance({accounts::kNolVc, cfg_.hub_chain}, cfg_.hub_asset);
        for (const auto& leg : plan.pays) {
            Fixed at_hub = free_balance(leg.agent, cfg_.hub_chain, cfg_.hub_asset);
            if (at_hub >= leg.amount) continue;
            Fixed missing = leg.amount - at_hub;
            for (const auto& chain : cfg_.chains) {
                if (chain.id == cfg_.hub_chain || missing.is_zero()) continue;
                Fixed avail = free_balance(leg.agent, chain.id, cfg_.hub_asset);
                if (avail.is_zero()) continue;
                Fixed take = avail < missing ? avail : missing;
                if (nol_hub_pool < take) take = nol_hub_pool;
                if (take.is_zero()) continue;
                relocation[leg.agent] += take;
                nol_hub_pool -= take;
                missing -= take;
            }
            if (!missing.is_zero()) {
                emit(epoch_, step_, "ufc_deferred",
                     {{"ufc", ufc.id()},
                      {"reason", "payer " + leg.agent.str() + " lacks settlement funds"},
                      {"failing_step", 2}});
                return;
            }
        }

        // Step 1: ingest staged obligations.
        ufc.ingest();
        emit(epoch_, step_, "ufc_step",
             {{"ufc", ufc.id()}, {"flow_step", 1}, {"obligations", ufc.pending().size()}});

        // Step 2: relocate settlement cash through the inventory network.
        for (const auto& [agent, total] : relocation) {
            Fixed remaining = total;
            for (const auto& chain : cfg_.chains) {
                if (chain.id == cfg_.hub_chain || remaining.is_zero()) continue;
                Fixed avail = free_balance(agent, chain.id, cfg_.hub_asset);
                Fixed take = avail < remaining ? avail : remaining;
                if (take.is_zero()) continue;
                ledger_.post({agent.str(), chain.id}, {accounts::kNolVc, chain.id},
                             cfg_.hub_asset, take);
                ledger_.post({accounts::kNolVc, cfg_.hub_chain}, {agent.str(), cfg_.hub_chain},
                             cfg_.hub_asset, take);
                remaining -= take;
            }
        }
        emit(epoch_, step_, "ufc_step",
             {{"ufc", ufc.id()}, {"flow_step", 2}, {"relocations", relocation.size()}});

        // Step 3: state fetch from every member.
        Rng rng(derive_seed(cfg_.seed, "ufc/" + ufc.id(), epoch_));
        for (const auto& m : members)
            do_message(home_chain(m), m, AgentId("$hub"), epoch_, step_, rng, 3);

        // Step 4: netting.
        Fixed settled;
        for (const auto& leg : plan.pays) settled += leg.amount;
        emit(epoch_, step_, "ufc_step",
             {{"ufc", ufc.id()},
              {"flow_step", 4},
              {"netted_value", settled.to_string()},
              {"legs", plan.pays.size() + plan.receives.size()}});

        // Step 5: routing messages out, then the settlement transfers.
        for (const auto& m : members)
            do_message(home_chain(m), AgentId("$hub"), m, epoch_, step_, rng, 5);
        for (const auto& leg : plan.pays)
            ledger_.post({leg.agent.str(), cfg_.hub_chain}, {accounts::kClearing, cfg_.hub_chain},
                         cfg_.hub_asset, leg.amount);
        for (const auto& leg : plan.receives)
            ledger_.post({accounts::kClearing, cfg_.hub_chain}, {leg.agent.str(), cfg_.hub_chain},
                         cfg_.hub_asset, leg.amount);
        for (const auto& leg : plan.pays)
            emit(epoch_, step_, "settlement",
                 {{"ufc", ufc.id()},
                  {"agent", leg.agent.str()},
                  {"direction", "pay"},
                  {"amount", leg.amount.to_string()}});
        for (const auto& leg : plan.receives)
            emit(epoch_, step_, "settlement",
                 {{"ufc", ufc.id()},
                  {"agent", leg.agent.str()},
                  {"direction", "receive"},
                  {"amount", leg.amount.to_string()}});

        for (const auto& m : members) pay_fee(m, fiscal::RevenueStream::PL, cfg_.fees.pl);

        double savings = clearing::cost_savings(ufc.cluster(), cfg_.interaction_model);
        accum_.savings += savings;

        // Attribute the hub round's cost evenly across ordered member pairs.
        if (n >= 2) {
            double per_pair = clearing::hub_cost(ufc.cluster(), cfg_.interaction_model) /
                              static_cast<double>(clearing::bilateral_interactions(n));
            for (const auto& a : members)
                for (const auto& b : members) {
                    if (a == b) continue;
                    accum_.paths[{a, b}].clearing_cost += per_pair;
                    touch_path(a, b);
                }
        }

        ufc.clear_pending();
        ufc.mark_round(global_step_);

        emit(epoch_, step_, "ufc_round",
             {{"ufc", ufc.id()},
              {"n", n},
              {"settled_value", settled.to_string()},
              {"transfers", plan.pays.size() + plan.receives.size()},
              {"savings", savings},
              {"steps", Json::array({1, 2, 3, 4, 5})},
              {"noop", false}});
    }

    // --- epoch close -------------------------------------------------------------

    void close_epoch(EpochIndex u) {
        hook_prices(u);
        // comms and clearing hooks: their per-epoch aggregates are already
        // accumulated; nothing to mutate at the boundary.
        hook_brokerage(u);
        hook_iassets(u);
        hook_fiscal(u);
        hook_metrics(u);
    }

    void hook_prices(EpochIndex u) {
        if (u >= cfg_.horizon) return;
        std::map<AssetId, Price> old_prices = prices_.all();
        advance_prices_to(u + 1);
        // Revalue the system book from the old epoch's prices to the new.
        Fixed delta;
        for (const auto& [key, assets] : ledger_.holdings()) {
            if (key.owner != accounts::kTreasury && key.owner != accounts::kNolVc &&
                key.owner != accounts::kNolKe)
                continue;
            for (const auto& [asset, qty] : assets) {
                if (qty.is_zero()) continue;
                const Price& now = prices_.get(asset);
                auto it = old_prices.find(asset);
                Price before = it == old_prices.end() ? now : it->second;
                delta += qty * now - qty * before;
            }
        }
        if (!delta.is_zero()) {
            accum_.mtm += delta;
            emit(u, step_, "mtm", {{"kind", "revaluation"}, {"amount", delta.to_string()}});
        }
        emit_price_events();
    }

    void hook_brokerage(EpochIndex u) {
        std::vector<std::string> ids;
        for (const auto& [id, pos] : positions_.all())
            if (pos.open) ids.push_back(id);

        for (const auto& id : ids) {
            auto& pos = positions_.get(id);
            // Lease fee on the outstanding value.
            Fixed fee = pos.leased_value * cfg_.lease_terms.ke_fee();
            if (!fee.is_zero()) pay_fee(pos.owner, fiscal::RevenueStream::KE, fee);

            Fixed rho = brokerage::collateralization_rate(pos, prices_);
            auto action = brokerage::mark_action(rho, cfg_.lease_terms);
            if (action == brokerage::MarkAction::MarginCall) {
                emit(u, step_, "margin_call", {{"position", id}, {"rho", rho.to_string()}});
            } else if (action == brokerage::MarkAction::Liquidate) {
                liquidate(pos, rho);
            }
        }
    }

    void liquidate(brokerage::CollateralPosition& pos, const Fixed& rho) {
        auto outcome = brokerage::compute_liquidation(pos, prices_);

        Quantity held =
            ledger_.balance({pos.owner.str(), pos.lease_chain}, pos.deployed_asset);
        Quantity reclaim = pos.deployed_units < held ? pos.deployed_units : held;
        if (!reclaim.is_zero())
            ledger_.post({pos.owner.str(), pos.lease_chain},
                         {accounts::kNolKe, pos.lease_chain}, pos.deployed_asset, reclaim);
        if (!outcome.seized_units.is_zero())
            ledger_.post({pos.owner.str(), pos.collateral_chain},
                         {accounts::kNolKe, pos.collateral_chain}, pos.collateral_asset,
                         outcome.seized_units);

        Fixed recovered = reclaim * prices_.get(pos.deployed_asset) + outcome.seized_value;
        Fixed mtm_delta = recovered - pos.leased_value;
        accum_.mtm += mtm_delta;
        emit(epoch_, step_, "mtm",
             {{"kind", "liquidation"}, {"amount", mtm_delta.to_string()}});

        pos.open = false;
        emit(epoch_, step_, "liquidation",
             {{"position", pos.id},
              {"rho", rho.to_string()},
              {"reclaimed", reclaim.to_string()},
              {"seized_units", outcome.seized_units.to_string()},
              {"seized_value", outcome.seized_value.to_string()},
              {"residual_loss", outcome.shortfall_residual.to_string()}});
    }

    void hook_iassets(EpochIndex u) {
        for (const auto& rr : cfg_.reward_rates) {
            for (auto& [key, sc] : share_classes_) {
                if (key.asset != rr.asset) continue;
                Quantity pool = ledger_.balance({accounts::kDepositors, key.chain}, key.asset);
                auto paid = rewards_.accrue(key, sc, pool, prices_.get(key.asset), rr.rate);
                for (const auto& [holder, amount] : paid)
                    emit(u, step_, "reward_accrual",
                         {{"chain", key.chain.str()},
                          {"asset", key.asset.str()},
                          {"holder", holder.str()},
                          {"amount", amount.to_string()}});
            }
        }
    }

    // Spend helper: pays from the treasury, returns what was actually paid.
    Fixed treasury_spend(const AccountKey& to, const AssetId& asset, const Fixed& amount,
                         const char* context) {
        if (amount.is_zero()) return Fixed();
        AccountKey treasury{accounts::kTreasury, cfg_.hub_chain};
        Quantity have = ledger_.balance(treasury, asset);
        Fixed pay = amount < have ? amount : have;
        if (pay < amount)
            emit_error(ErrorCode::InsufficientBalance,
                       std::string(context) + ": treasury short by " +
                           (amount - pay).to_string());
        if (!pay.is_zero()) ledger_.post(treasury, to, asset, pay);
        return pay;
    }

    // Distributes per-asset allocations to recipients pro rata, with the last
    // recipient absorbing the rounding remainder so the sums stay exact.
    Fixed distribute_exact(const std::map<AgentId, Fixed>& weights, const Fixed& total,
                           const char* service, const AssetId& asset, EpochIndex u) {
        Fixed weight_sum;
        for (const auto& [agent, w] : weights) weight_sum += w;
        if (weight_sum.is_zero() || total.is_zero()) return Fixed();
        Fixed paid_total;
        size_t i = 0;
        for (const auto& [agent, w] : weights) {
            ++i;
            Fixed share = i == weights.size() ? total - paid_total
                                              : Fixed::mul_div(total, w, weight_sum);
            Fixed paid = treasury_spend({agent.str(), cfg_.hub_chain}, cfg_.hub_asset, share,
                                        "incentive");
            paid_total += paid;
            if (!paid.is_zero())
                emit(u, step_, "incentive",
                     {{"service", service},
                      {"asset", asset.str()},
                      {"agent", agent.str()},
                      {"amount", paid.to_string()}});
        }
        return paid_total;
    }

    void hook_fiscal(EpochIndex u) {
        fiscal::BudgetVector budget;

        // Service-provider compensation leaves the system.
        struct OmegaSpend {
            fiscal::BudgetComponent component;
            Fixed amount;
        };
        for (const auto& [component, amount] :
             {std::pair{fiscal::BudgetComponent::OmegaDC, cfg_.budgets.omega_dc},
              std::pair{fiscal::BudgetComponent::OmegaVT, cfg_.budgets.omega_vt},
              std::pair{fiscal::BudgetComponent::OmegaPL, cfg_.budgets.omega_pl}}) {
            Fixed paid = treasury_spend({accounts::kExternal, cfg_.hub_chain}, cfg_.hub_asset,
                                        amount, "omega");
            budget.set(component, paid);
            if (!paid.is_zero())
                emit(u, step_, "budget_spend",
                     {{"component", fiscal::budget_component_name(component)},
                      {"amount", paid.to_string()}});
        }

        // Security incentives: DC binds with equality, VT and PL stay within
        // their budgets.
        struct SecuritySpend {
            comms::Service service;
            Fixed configured;
            bool equality;
            fiscal::BudgetComponent component;
        };
        for (const auto& spend :
             {SecuritySpend{comms::Service::DC, cfg_.budgets.s_dc, true,
                            fiscal::BudgetComponent::SecurityDC},
              SecuritySpend{comms::Service::VT, cfg_.budgets.s_vt, false,
                            fiscal::BudgetComponent::SecurityVT},
              SecuritySpend{comms::Service::PL, cfg_.budgets.s_pl, false,
                            fiscal::BudgetComponent::SecurityPL}}) {
            auto demand = stakes_.value_by_asset(spend.service, prices_);
            auto alloc = fiscal::allocate_incentives(spend.configured, demand, spend.equality);
            Fixed component_total;
            for (const auto& [asset, amount] : alloc) {
                auto recipients = stakes_.stakers_of(spend.service, asset, prices_);
                component_total += distribute_exact(recipients, amount,
                                                    comms::service_name(spend.service), asset,
                                                    u);
            }
            budget.set(spend.component, component_total);
        }

        // PoEL liquidity incentives: conversion demand steers B_L, lease
        // demand steers B_L'.
        Json poel_weights = Json::object();
        Fixed staking_total;
        {
            std::map<AssetId, Fixed> demand = accum_.conv_demand;
            auto alloc = fiscal::allocate_incentives(cfg_.budgets.liquidity, demand, false);
            Fixed alloc_total;
            for (const auto& [asset, amount] : alloc) alloc_total += amount;
            Fixed paid_l;
            for (const auto& [asset, amount] : alloc) {
                auto holders = pool_holders_value(asset);
                paid_l += distribute_exact(holders, amount, "L", asset, u);
                if (!alloc_total.is_zero())
                    poel_weights[asset.str()] =
                        Fixed::mul_div(amount, Fixed(1), alloc_total).to_double();
            }
            budget.set(fiscal::BudgetComponent::LiquidityIncentives, paid_l);
            staking_total += paid_l;

            auto lease_demand = positions_.lease_demand();
            auto alloc2 =
                fiscal::allocate_incentives(cfg_.budgets.liquidity_prime, lease_demand, false);
            Fixed paid_lp;
            for (const auto& [asset, amount] : alloc2) {
                auto holders = pool_holders_value(asset);
                paid_lp += distribute_exact(holders, amount, "L_prime", asset, u);
            }
            budget.set(fiscal::BudgetComponent::LiquidityIncentivesPrime, paid_lp);
            staking_total += paid_lp;
        }

        // Fee credits: bootstrapping phase only, allocated by fee usage.
        Fixed credits_issued;
        if (u <= cfg_.poel.phase_boundary && !cfg_.poel.credit_total.is_zero()) {
            std::map<AgentId, Fixed> usage = accum_.fee_usage;
            Fixed usage_total;
            for (const auto& [agent, used] : usage) usage_total += used;
            if (usage_total.is_zero())
                for (const auto& a : agents_) usage[a.id] = Fixed(1);
            Fixed weight_sum;
            for (const auto& [agent, w] : usage) weight_sum += w;
            size_t i = 0;
            Fixed given;
            for (const auto& [agent, w] : usage) {
                ++i;
                Fixed share = i == usage.size()
                                  ? cfg_.poel.credit_total - given
                                  : Fixed::mul_div(cfg_.poel.credit_total, w, weight_sum);
                given += share;
                if (share.is_zero()) continue;
                credits_.issue(agent, share, u, cfg_.poel.phase_boundary);
                credits_issued += share;
                emit(u, step_, "credit_issued",
                     {{"agent", agent.str()}, {"amount", share.to_string()}});
            }
        }
        for (const auto& [agent, amount] : credits_.expire(u, cfg_.poel.credit_ttl))
            emit(u, step_, "credit_expired",
                 {{"agent", agent.str()}, {"amount", amount.to_string()}});

        // Agent acquisition: greedy under the budget and value constraints.
        {
            std::vector<fiscal::AcquisitionCandidate> candidates;
            if (cfg_.acquisition.candidates_per_epoch > 0) {
                Rng rng(derive_seed(cfg_.seed, "fiscal/acquire", u));
                long base = static_cast<long>(agents_.size());
                for (int i = 0; i < cfg_.acquisition.candidates_per_epoch; ++i) {
                    fiscal::AcquisitionCandidate c;
                    c.id = "joined-" + std::to_string(u) + "-" + std::to_string(i);
                    c.cost = scaled_amount(cfg_.acquisition.cost_mean, rng.uniform01());
                    c.value_estimate =
                        topology::network_value_delta(cfg_.network_value, base + i + 1);
                    candidates.push_back(std::move(c));
                }
            }
            Fixed spent;
            for (const auto& c : fiscal::acquire_agents(cfg_.budgets.acquisition, candidates)) {
                if (std::any_of(agents_.begin(), agents_.end(),
                                [&](const AgentRuntime& a) { return a.id.str() == c.id; })) {
                    emit_error(ErrorCode::ValidationError, "acquired agent id collision " + c.id);
                    continue;
                }
                AgentRuntime rt{AgentId(c.id), cfg_.hub_chain, true};
                add_agent_runtime(rt);
                ++acquired_count_;
                Fixed paid = treasury_spend({c.id, cfg_.hub_chain}, cfg_.hub_asset, c.cost,
                                            "acquisition");
                spent += paid;
                emit(u, step_, "acquisition",
                     {{"agent", c.id},
                      {"cost", paid.to_string()},
                      {"value_estimate", c.value_estimate}});
            }
            budget.set(fiscal::BudgetComponent::AgentAcquisition, spent);
        }

        // Revenue share into network-owned liquidity.
        Fixed nf_total = accum_.revenue.total();
        Fixed nol_total = nf_total * Fixed::from_double(cfg_.nol.revenue_share);
        Fixed nol_vc = nol_total * Fixed::from_double(cfg_.nol.vc_fraction);
        Fixed nol_ke = nol_total - nol_vc;
        apply_nol_budget(accounts::kNolVc, nol_vc, accum_.conv_demand, "vc", u);
        apply_nol_budget(accounts::kNolKe, nol_ke, positions_.lease_demand(), "ke", u);
        budget.set(fiscal::BudgetComponent::NolVc, nol_vc);
        budget.set(fiscal::BudgetComponent::NolKe, nol_ke);

        // Close the books.
        Fixed b_total = budget.total();
        Fixed delta_mtm = accum_.mtm;
        Fixed r_before = resources_r_;
        resources_r_ = fiscal::next_resources(r_before, nf_total, b_total, delta_mtm);

        Fixed recomputed = system_equity();
        if (recomputed != resources_r_)
            raise(ErrorCode::InternalError,
                  "system equity drifted from the fiscal recurrence: " +
                      recomputed.to_string() + " vs " + resources_r_.to_string());

        Fixed gamma = cfg_.gamma_at(u);
        bool breach = resources_r_ < gamma;
        if (breach)
            emit_error(ErrorCode::ResourceFloorBreached,
                       "R " + resources_r_.to_string() + " below Gamma " + gamma.to_string());

        fiscal::FiscalReport report;
        report.epoch = u;
        report.budget = budget;
        report.revenue = accum_.revenue;
        report.resources_r = resources_r_;
        report.requirement_gamma = gamma;
        report.delta_mtm = delta_mtm;
        report.floor_breached = breach;
        fiscal_reports_.push_back(report);

        Json components = Json::object();
        for (size_t i = 0; i < fiscal::kBudgetComponents; ++i) {
            auto c = static_cast<fiscal::BudgetComponent>(i);
            components[fiscal::budget_component_name(c)] = budget.get(c).to_string();
        }
        Json streams = Json::object();
        for (size_t i = 0; i < fiscal::kRevenueStreams; ++i) {
            auto s = static_cast<fiscal::RevenueStream>(i);
            streams[fiscal::revenue_stream_name(s)] = accum_.revenue.get(s).to_string();
        }
        emit(u, step_, "fiscal_close",
             {{"budget", components},
              {"revenue", streams},
              {"b_total", b_total.to_string()},
              {"nf_total", nf_total.to_string()},
              {"r_before", r_before.to_string()},
              {"r_after", resources_r_.to_string()},
              {"gamma", gamma.to_string()},
              {"delta_mtm", delta_mtm.to_string()},
              {"breach", breach},
              {"poel_staking", staking_total.to_string()},
              {"poel_credits", credits_issued.to_string()},
              {"poel_weights", poel_weights},
              {"security_cost", accum_.security_cost}});
    }

    void apply_nol_budget(const std::string& owner, const Fixed& amount,
                          const std::map<AssetId, Fixed>& demand, const char* tag,
                          EpochIndex u) {
        Fixed before = liquidity::portfolio_value(ledger_, owner, prices_);
        liquidity::nol_apply_budget(ledger_, owner, accounts::kExternal, accounts::kTreasury,
                                    cfg_.hub_chain, cfg_.hub_asset, amount, demand, prices_);
        Fixed after = liquidity::portfolio_value(ledger_, owner, prices_);
        accum_.mtm += amount;
        emit(u, step_, "nol_budget",
             {{"portfolio", tag},
              {"budget", amount.to_string()},
              {"total_before", before.to_string()},
              {"total_after", after.to_string()}});
        emit(u, step_, "mtm",
             {{"kind", std::string("nol_budget_") + tag}, {"amount", amount.to_string()}});
    }

    // Holder weights (redeemable value) across all chains' pools of an asset.
    std::map<AgentId, Fixed> pool_holders_value(const AssetId& asset) {
        std::map<AgentId, Fixed> out;
        for (const auto& [key, sc] : share_classes_) {
            if (key.asset != asset) continue;
            Quantity pool = ledger_.balance({accounts::kDepositors, key.chain}, key.asset);
            for (const auto& [holder, shares] : sc.holders()) {
                Fixed value = sc.redeemable(holder, pool) * prices_.get(key.asset);
                if (!value.is_zero()) out[holder] += value;
            }
        }
        return out;
    }

    void hook_metrics(EpochIndex u) {
        report::EpochBundle bundle;
        bundle.epoch = u;
        bundle.agent_count = accum_.agents_at_begin;
        bundle.beta = cfg_.beta_at(u);
        bundle.kappa = cfg_.path_kappa;
        bundle.exponent = cfg_.path_exponent;
        bundle.nv_model = cfg_.network_value;
        bundle.msg_psi = accum_.msg_psi;
        bundle.msg_lag_delta = accum_.msg_lag;
        bundle.vt = accum_.vt;
        bundle.vc = accum_.vc;
        bundle.savings = accum_.savings;

        // Per-agent capital: deposits, pledged collateral and stakes.
        for (const auto& a : agents_) {
            Fixed capital;
            for (const auto& [key, sc] : share_classes_) {
                Quantity pool = ledger_.balance({accounts::kDepositors, key.chain}, key.asset);
                Fixed red = sc.redeemable(a.id, pool);
                if (!red.is_zero()) capital += red * prices_.get(key.asset);
            }
            for (const auto& [id, pos] : positions_.all())
                if (pos.open && pos.owner == a.id)
                    capital += pos.collateral_qty * prices_.get(pos.collateral_asset);
            for (const auto& [service, agents] : stakes_.all()) {
                auto it = agents.find(a.id);
                if (it == agents.end()) continue;
                for (const auto& [asset, qty] : it->second)
                    capital += qty * prices_.get(asset);
            }
            double output = 0.0;
            auto oit = accum_.output.find(a.id);
            if (oit != accum_.output.end()) output = oit->second;
            if (capital.is_zero() && output == 0.0) continue;
            metrics::CapitalRecord rec{output, capital.to_double()};
            bundle.capital.push_back(rec);
            emit(u, step_, "agent_capital",
                 {{"agent", a.id.str()}, {"capital", rec.capital}, {"output", rec.output}});
        }

        // Path records: the five cost factors per active ordered pair.
        for (const auto& [pair, acc] : accum_.paths) {
            topology::TransactionalPath path{pair.first, pair.second};
            double lag_mean = acc.lag_n > 0 ? acc.lag_sum / static_cast<double>(acc.lag_n) : 0.0;
            path.output = cfg_.output_coefficient * acc.volume;
            path.set_cost(topology::CostComponent::DC,
                          comms::data_connectivity_cost(acc.psi, lag_mean, acc.fee_dc,
                                                        cfg_.alpha_psi, cfg_.alpha_lag));
            path.set_cost(topology::CostComponent::VT, acc.vt_cost);
            path.set_cost(topology::CostComponent::VC, 0.0);
            path.set_cost(topology::CostComponent::Clearing, acc.clearing_cost);
            bool fresh = first_activity_.insert(pair).second;
            path.set_cost(topology::CostComponent::SC,
                          fresh ? 2.0 * cfg_.setup.per_link_cost : 0.0);
            double total = topology::path_total_cost(path);
            bundle.net_path_output += path.output - total;
            emit(u, step_, "path_metrics",
                 {{"from", pair.first.str()},
                  {"to", pair.second.str()},
                  {"volume", acc.volume},
                  {"output", path.output},
                  {"c_dc", path.costs.at(topology::CostComponent::DC)},
                  {"c_vt", acc.vt_cost},
                  {"c_vc", 0.0},
                  {"c_clearing", acc.clearing_cost},
                  {"c_sc", path.costs.at(topology::CostComponent::SC)},
                  {"total_cost", total}});
        }

        const auto& rep = fiscal_reports_.back();
        bundle.revenue_nf = rep.revenue.total();
        bundle.budget_b = rep.budget.total();
        bundle.resources_r = rep.resources_r;
        bundle.requirement_gamma = rep.requirement_gamma;

        auto row = report::assemble_row(bundle);
        metric_rows_.push_back(row);
        emit(u, step_, "epoch_metrics",
             {{"row", report::csv_row(row)}, {"objective_term", row.objective_term}});
    }

    // --- helpers -------------------------------------------------------------

    struct FeePayment {
        Fixed credit_used;
        Fixed cash;
    };

    // Credits first, then hub cash at the hub chain. A cash shortfall is
    // recorded and the uncollected remainder forgiven; revenue only ever
    // reconciles against what actually arrived.
    FeePayment pay_fee(const AgentId& payer, fiscal::RevenueStream stream, const Fixed& fee) {
        FeePayment out;
        if (fee.is_zero()) return out;
        auto payment = credits_.consume(payer, fee);
        out.credit_used = payment.credit_used;
        if (!payment.cash_due.is_zero()) {
            AccountKey from{payer.str(), cfg_.hub_chain};
            Quantity have = ledger_.balance(from, cfg_.hub_asset);
            Quantity locked = positions_.locked(payer, cfg_.hub_chain, cfg_.hub_asset);
            Quantity free = have > locked ? have - locked : Quantity();
            if (free < payment.cash_due) {
                emit_error(ErrorCode::InsufficientBalance,
                           payer.str() + " cannot pay " +
                               std::string(fiscal::revenue_stream_name(stream)) + " fee");
            } else {
                ledger_.post(from, {accounts::kTreasury, cfg_.hub_chain}, cfg_.hub_asset,
                             payment.cash_due);
                out.cash = payment.cash_due;
            }
        }
        accum_.revenue.add(stream, out.cash);
        accum_.fee_usage[payer] += out.credit_used + out.cash;
        emit(epoch_, step_, "fee",
             {{"service", fiscal::revenue_stream_name(stream)},
              {"payer", payer.str()},
              {"fee", fee.to_string()},
              {"credit_used", out.credit_used.to_string()},
              {"cash", out.cash.to_string()}});
        return out;
    }

    void advance_prices_to(EpochIndex u) {
        for (auto& [asset, proc] : processes_) prices_.set(asset, proc.advance(u, cfg_.seed));
        prices_.set(cfg_.hub_asset, Fixed(1));
        price_epoch_ = u;
    }

    void emit_price_events() {
        for (const auto& [asset, p] : prices_.all())
            emit(epoch_, step_, "price",
                 {{"asset", asset.str()}, {"price", p.to_string()}, {"for_epoch", price_epoch_}});
    }

    double logical_time(EpochIndex u, StepIndex s) const {
        return static_cast<double>((u - 1) * cfg_.steps_per_epoch + s);
    }

    ChainId home_chain(const AgentId& agent) const {
        for (const auto& a : agents_)
            if (a.id == agent) return a.home_chain;
        return cfg_.hub_chain;
    }

    void require_known_chain(const ChainId& chain) const {
        if (!vaults_.count(chain)) raise(ErrorCode::UnknownChain, chain.str());
    }

    // The hub chain needs no channel; spokes without one get a perfect local
    // link so clearing and transfers stay well defined.
    comms::ChannelParams channel_params(const ChainId& chain) const {
        auto it = channels_.find(chain);
        if (it != channels_.end()) return it->second;
        comms::ChannelParams perfect;
        perfect.chain = chain;
        perfect.stake_scale_s0 = Fixed(1);
        return perfect;
    }

    bool channel_up(const ChainId& chain) const {
        auto it = channels_.find(chain);
        if (it == channels_.end()) return true;
        return !it->second.down_in(epoch_);
    }

    Quantity free_balance(const AgentId& agent, const ChainId& chain,
                          const AssetId& asset) const {
        Quantity have = ledger_.balance({agent.str(), chain}, asset);
        Quantity locked = positions_.locked(agent, chain, asset);
        return have > locked ? have - locked : Quantity();
    }

    std::optional<ChainId> largest_holding_chain(const std::string& owner, const AssetId& asset,
                                                 bool use_free) const {
        std::optional<ChainId> best;
        Quantity best_qty;
        for (const auto& chain : cfg_.chains) {
            Quantity qty = use_free && owner.find('$') == std::string::npos
                               ? free_balance(AgentId(owner), chain.id, asset)
                               : ledger_.balance({owner, chain.id}, asset);
            if (qty > best_qty) {
                best_qty = qty;
                best = chain.id;
            }
        }
        return best;
    }

    void consume_gas(const ChainId& chain) {
        auto it = vaults_.find(chain);
        if (it == vaults_.end()) return;
        if (!it->second.consume_gas() && !gas_warned_.count(chain)) {
            gas_warned_.insert(chain);
            emit_error(ErrorCode::InsufficientBalance,
                       "gas reserve exhausted on " + chain.str());
        }
    }

    void touch_path(const AgentId& a, const AgentId& b) {
        if (a == b) return;
        (void)accum_.paths[{a, b}];
    }

    void emit(EpochIndex u, StepIndex s, const std::string& type, Json fields) {
        log_.append(u, s, type, std::move(fields));
    }

    void emit_error(ErrorCode code, const std::string& context) {
        log(LogLevel::Warn, std::string(error_code_name(code)) + ": " + context);
        emit(epoch_, step_, "error",
             {{"code", error_code_name(code)}, {"context", context}});
    }

    // --- state -----------------------------------------------------------------

    ScenarioConfig cfg_;
    bool initialized_ = false;

    Ledger ledger_;
    PriceBook prices_;
    std::map<AssetId, PriceProcess> processes_;
    EpochIndex price_epoch_ = 1;
    std::map<ChainId, liquidity::VaultState> vaults_;
    std::map<ChainId, comms::ChannelParams> channels_;
    std::map<ChainId, scenario::ChannelConfig> channel_cfg_;
    liquidity::ConversionGraph conv_graph_;
    comms::GuarantorStake stakes_;
    std::map<iassets::UnderlyingKey, iassets::ShareClass> share_classes_;
    iassets::RewardBook rewards_;
    std::map<std::string, clearing::UFCInstance> ufcs_;
    brokerage::PositionBook positions_;
    fiscal::CreditBook credits_;
    topology::EcosystemGraph graph_;
    std::vector<AgentRuntime> agents_;
    std::set<std::pair<AgentId, AgentId>> first_activity_;
    std::set<ChainId> gas_warned_;

    Fixed resources_r_;
    long acquired_count_ = 0;

    EpochIndex epoch_next_ = 1;
    EpochIndex epoch_ = 0;
    StepIndex step_ = 0;
    long global_step_ = 0;

    EpochAccum accum_;
    std::vector<PlannedTransfer> planned_transfers_;
    std::vector<PlannedConversion> planned_conversions_;
    std::vector<PlannedDeposit> planned_deposits_;
    std::vector<PlannedObligation> planned_obligations_;

    events::EventLog log_;
    std::vector<metrics::EpochMetrics> metric_rows_;
    std::vector<fiscal::FiscalReport> fiscal_reports_;
};

} // namespace intralayer::engine
