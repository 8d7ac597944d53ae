#pragma once

#include <charconv>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "intralayer/events.hpp"
#include "intralayer/liquidity.hpp"
#include "intralayer/metrics.hpp"
#include "intralayer/topology.hpp"

namespace intralayer::report {

using events::Json;

// Shortest round-trip representation; identical across the run and replay
// paths because both go through to_chars.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// Everything needed to assemble one metrics row. The engine fills it from
// its live accumulators; the replay path fills it from parsed log records.
// Both feed the same arithmetic in the same order.
struct EpochBundle {
    EpochIndex epoch = 0;
    long agent_count = 0;
    double beta = 0.0;
    double kappa = 1.0;
    double exponent = 1.5;
    topology::NetworkValueModel nv_model;

    std::vector<double> msg_psi;
    std::vector<double> msg_lag_delta; // already clamped at zero
    std::vector<liquidity::CeRecord> vt;
    std::vector<liquidity::CeRecord> vc;
    std::vector<metrics::CapitalRecord> capital;
    double savings = 0.0;
    double net_path_output = 0.0;

    Fixed revenue_nf;
    Fixed budget_b;
    Fixed resources_r;
    Fixed requirement_gamma;
};

inline metrics::EpochMetrics assemble_row(const EpochBundle& b) {
    metrics::EpochMetrics row;
    row.epoch = b.epoch;
    row.agent_count = b.agent_count;
    row.path_count = b.agent_count > 0
                         ? topology::path_count(b.kappa, b.exponent, b.agent_count)
                         : 0.0;

    double psi = 0.0;
    for (double p : b.msg_psi) psi += p;
    row.psi_total = psi;
    if (!b.msg_lag_delta.empty()) {
        double lag = 0.0;
        for (double d : b.msg_lag_delta) lag += d;
        row.lag_mean = lag / static_cast<double>(b.msg_lag_delta.size());
    }

    row.ce_vt = b.vt.empty() ? 0.0 : liquidity::aggregate_ce_vt(b.vt);
    row.ce_vc = b.vc.empty() ? 0.0 : liquidity::aggregate_ce_vc(b.vc);

    double total_capital = 0.0;
    for (const auto& c : b.capital) total_capital += c.capital;
    row.ke = total_capital > 0.0 ? metrics::aggregate_ke(b.capital) : 0.0;

    row.savings = b.savings;
    row.revenue_nf = b.revenue_nf;
    row.budget_b = b.budget_b;
    row.resources_r = b.resources_r;
    row.requirement_gamma = b.requirement_gamma;
    row.network_value = topology::network_value(b.nv_model, b.agent_count);

    metrics::EpochObjectiveInputs obj{b.net_path_output, b.resources_r.to_double(),
                                      b.requirement_gamma.to_double(), b.beta};
    row.objective_term = metrics::epoch_objective_term(obj);
    return row;
}

inline std::string csv_header() {
    return "epoch,N_a,N_p,psi,d,CE_VT,CE_VC,KE,savings,NF,B,R,Gamma,objective";
}

inline std::string csv_row(const metrics::EpochMetrics& m) {
    std::string out;
    out += std::to_string(m.epoch);
    out += ',';
    out += std::to_string(m.agent_count);
    out += ',';
    out += format_double(m.path_count);
    out += ',';
    out += format_double(m.psi_total);
    out += ',';
    out += format_double(m.lag_mean);
    out += ',';
    out += format_double(m.ce_vt);
    out += ',';
    out += format_double(m.ce_vc);
    out += ',';
    out += format_double(m.ke);
    out += ',';
    out += format_double(m.savings);
    out += ',';
    out += m.revenue_nf.to_string();
    out += ',';
    out += m.budget_b.to_string();
    out += ',';
    out += m.resources_r.to_string();
    out += ',';
    out += m.requirement_gamma.to_string();
    out += ',';
    out += format_double(m.objective_term);
    return out;
}

inline std::string metrics_csv(std::span<const metrics::EpochMetrics> rows) {
    std::string out = csv_header();
    out += '\n';
    for (const auto& row : rows) {
        out += csv_row(row);
        out += '\n';
    }
    return out;
}

// Rebuilds the per-epoch bundles from raw log records. Used by the replay
// command; the result must match the run's own rows bit for bit.
inline std::vector<metrics::EpochMetrics> metrics_from_log(std::span<const Json> records) {
    std::map<EpochIndex, EpochBundle> bundles;

    auto bundle_of = [&](const Json& rec) -> EpochBundle& {
        EpochIndex u = rec.at("epoch").get<EpochIndex>();
        auto& b = bundles[u];
        b.epoch = u;
        return b;
    };

    for (const auto& rec : records) {
        const std::string type = rec.at("type").get<std::string>();
        if (type == "epoch_params") {
            auto& b = bundle_of(rec);
            b.agent_count = rec.at("agents").get<long>();
            b.beta = rec.at("beta").get<double>();
            b.kappa = rec.at("path_kappa").get<double>();
            b.exponent = rec.at("path_exponent").get<double>();
            b.nv_model.kind =
                topology::network_value_kind_from_string(rec.at("nv_kind").get<std::string>());
            b.nv_model.scale = rec.at("nv_scale").get<double>();
        } else if (type == "message") {
            auto& b = bundle_of(rec);
            b.msg_psi.push_back(rec.at("psi").get<double>());
            b.msg_lag_delta.push_back(rec.at("lag").get<double>());
        } else if (type == "transfer") {
            auto& b = bundle_of(rec);
            b.vt.push_back({rec.at("value_hub").get<double>(),
                            rec.at("total_cost").get<double>()});
        } else if (type == "conversion") {
            double cost = rec.at("cost_metric").get<double>();
            if (cost != 0.0) {
                auto& b = bundle_of(rec);
                b.vc.push_back({rec.at("volume_hub").get<double>(), cost});
            }
        } else if (type == "agent_capital") {
            auto& b = bundle_of(rec);
            b.capital.push_back({rec.at("output").get<double>(),
                                 rec.at("capital").get<double>()});
        } else if (type == "ufc_round") {
            bundle_of(rec).savings += rec.at("savings").get<double>();
        } else if (type == "path_metrics") {
            auto& b = bundle_of(rec);
            b.net_path_output +=
                rec.at("output").get<double>() - rec.at("total_cost").get<double>();
        } else if (type == "fiscal_close") {
            auto& b = bundle_of(rec);
            b.revenue_nf = Fixed::from_string(rec.at("nf_total").get<std::string>());
            b.budget_b = Fixed::from_string(rec.at("b_total").get<std::string>());
            b.resources_r = Fixed::from_string(rec.at("r_after").get<std::string>());
            b.requirement_gamma = Fixed::from_string(rec.at("gamma").get<std::string>());
        }
    }

    std::vector<metrics::EpochMetrics> rows;
    for (const auto& [u, b] : bundles) rows.push_back(assemble_row(b));
    return rows;
}

} // namespace intralayer::report
