#pragma once

#include <span>
#include <vector>

#include "intralayer/errors.hpp"
#include "intralayer/fixed.hpp"
#include "intralayer/ids.hpp"

namespace intralayer::metrics {

// One CSV row: efficiency aggregates, comms quality, fiscal state and the
// network size/value figures for an epoch.
struct EpochMetrics {
    EpochIndex epoch = 0;
    long agent_count = 0;      // N_a
    double path_count = 0.0;   // N_p
    double psi_total = 0.0;    // total data discrepancy
    double lag_mean = 0.0;     // mean communication lag
    double ce_vt = 0.0;        // value-transfer cost efficiency aggregate
    double ce_vc = 0.0;        // conversion cost efficiency aggregate
    double ke = 0.0;           // capital efficiency aggregate
    double savings = 0.0;      // clearing cost savings
    Fixed revenue_nf;          // NF_u
    Fixed budget_b;            // B_u
    Fixed resources_r;         // R_u
    Fixed requirement_gamma;   // Gamma_u
    double network_value = 0.0;
    double objective_term = 0.0; // per-epoch master objective contribution
};

// KE for one agent: economic output across its paths per unit of deployed
// capital.
inline double agent_capital_efficiency(std::span<const double> path_outputs,
                                       double capital) {
    if (capital <= 0.0) raise(ErrorCode::ZeroCapital, "agent_capital_efficiency");
    double output = 0.0;
    for (double e : path_outputs) output += e;
    return output / capital;
}

struct CapitalRecord {
    double output = 0.0;  // summed economic output of the agent's paths
    double capital = 0.0; // capital the agent has deployed
};

// Network KE: ratio of global sums, not the mean of per-agent ratios.
inline double aggregate_ke(std::span<const CapitalRecord> records) {
    double output = 0.0, capital = 0.0;
    for (const auto& r : records) {
        output += r.output;
        capital += r.capital;
    }
    if (capital <= 0.0) raise(ErrorCode::ZeroCapital, "aggregate_ke");
    return output / capital;
}

struct EpochObjectiveInputs {
    double net_path_output = 0.0; // sum over paths of (O - C)
    double resources_r = 0.0;
    double requirement_gamma = 0.0;
    double beta = 0.0;
};

inline double epoch_objective_term(const EpochObjectiveInputs& in) {
    return in.net_path_output - in.beta * (in.resources_r - in.requirement_gamma);
}

// Realized master objective over a recorded trajectory; evaluation only, no
// optimisation.
inline double master_objective(std::span<const EpochObjectiveInputs> trajectory) {
    double total = 0.0;
    for (const auto& in : trajectory) total += epoch_objective_term(in);
    return total;
}

} // namespace intralayer::metrics
