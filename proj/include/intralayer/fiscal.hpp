#pragma once

#include <array>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "intralayer/errors.hpp"
#include "intralayer/fixed.hpp"
#include "intralayer/ids.hpp"

namespace intralayer::fiscal {

// The eleven per-epoch budget components of the operating cost identity.
enum class BudgetComponent {
    SecurityDC,
    SecurityVT,
    SecurityPL,
    OmegaDC,
    OmegaVT,
    OmegaPL,
    LiquidityIncentives,      // B_L
    LiquidityIncentivesPrime, // B_L'
    AgentAcquisition,
    NolVc,
    NolKe,
};

inline constexpr size_t kBudgetComponents = 11;

inline const char* budget_component_name(BudgetComponent c) {
    switch (c) {
        case BudgetComponent::SecurityDC: return "B_S_DC";
        case BudgetComponent::SecurityVT: return "B_S_VT";
        case BudgetComponent::SecurityPL: return "B_S_PL";
        case BudgetComponent::OmegaDC: return "B_Omega_DC";
        case BudgetComponent::OmegaVT: return "B_Omega_VT";
        case BudgetComponent::OmegaPL: return "B_Omega_PL";
        case BudgetComponent::LiquidityIncentives: return "B_L";
        case BudgetComponent::LiquidityIncentivesPrime: return "B_L_prime";
        case BudgetComponent::AgentAcquisition: return "B_AA";
        case BudgetComponent::NolVc: return "B_VC_K";
        case BudgetComponent::NolKe: return "B_KE_K";
    }
    return "?";
}

class BudgetVector {
public:
    const Fixed& get(BudgetComponent c) const { return v_[static_cast<size_t>(c)]; }

    void set(BudgetComponent c, const Fixed& amount) {
        require_non_negative(amount, budget_component_name(c));
        v_[static_cast<size_t>(c)] = amount;
    }

    void add(BudgetComponent c, const Fixed& amount) {
        set(c, get(c) + amount);
    }

    // B_u: sum of exactly the eleven components.
    Fixed total() const {
        Fixed sum;
        for (const auto& x : v_) sum += x;
        return sum;
    }

private:
    std::array<Fixed, kBudgetComponents> v_{};
};

enum class RevenueStream { DC, VT, VC, PL, KE };

inline constexpr size_t kRevenueStreams = 5;

inline const char* revenue_stream_name(RevenueStream s) {
    switch (s) {
        case RevenueStream::DC: return "NF_DC";
        case RevenueStream::VT: return "NF_VT";
        case RevenueStream::VC: return "NF_VC";
        case RevenueStream::PL: return "NF_PL";
        case RevenueStream::KE: return "NF_KE";
    }
    return "?";
}

class RevenueVector {
public:
    const Fixed& get(RevenueStream s) const { return v_[static_cast<size_t>(s)]; }

    void add(RevenueStream s, const Fixed& amount) {
        require_non_negative(amount, revenue_stream_name(s));
        v_[static_cast<size_t>(s)] += amount;
    }

    Fixed total() const {
        Fixed sum;
        for (const auto& x : v_) sum += x;
        return sum;
    }

private:
    std::array<Fixed, kRevenueStreams> v_{};
};

// Per-service fee rates: flat fees for DC/VT/PL events, rates for VC
// conversion volume and KE leased value.
struct FeeSchedule {
    Fixed dc;
    Fixed vt;
    Fixed vc_rate;
    Fixed pl;
    Fixed ke_rate;

    void validate() const {
        for (const Fixed* f : {&dc, &vt, &vc_rate, &pl, &ke_rate})
            require_non_negative(*f, "fee rate");
    }
};

// Proportional-to-demand incentive allocation. When the service constraint
// is an equality the rounding dust tops up the largest-demand asset so the
// allocations sum to the budget exactly; otherwise truncation keeps the sum
// at or below it.
inline std::map<AssetId, Fixed> allocate_incentives(const Fixed& budget,
                                                    const std::map<AssetId, Fixed>& demand,
                                                    bool equality) {
    require_non_negative(budget, "incentive budget");
    std::map<AssetId, Fixed> out;
    Fixed demand_total;
    for (const auto& [asset, d] : demand) {
        require_non_negative(d, "demand");
        demand_total += d;
    }
    if (demand_total.is_zero() || budget.is_zero()) return out;

    Fixed allocated;
    AssetId largest;
    Fixed largest_demand = Fixed(-1);
    for (const auto& [asset, d] : demand) {
        Fixed share = Fixed::mul_div(budget, d, demand_total);
        if (!share.is_zero()) out[asset] = share;
        allocated += share;
        if (d > largest_demand) {
            largest_demand = d;
            largest = asset;
        }
    }
    if (equality && allocated < budget) out[largest] += budget - allocated;
    return out;
}

// Non-transferable, time-bound service-fee credits. Issued only during the
// bootstrapping phase, consumed before cash, expire after a TTL.
class CreditBook {
public:
    struct Lot {
        EpochIndex issued = 0;
        Fixed remaining;
    };

    void issue(const AgentId& agent, const Fixed& amount, EpochIndex epoch,
               EpochIndex phase_boundary) {
        require_non_negative(amount, "credit amount");
        if (epoch > phase_boundary)
            raise(ErrorCode::Expired,
                  "fee credits are only issued during the bootstrapping phase");
        if (amount.is_zero()) return;
        lots_[agent].push_back({epoch, amount});
    }

    // Removes lots older than ttl epochs; returns expired value per agent.
    std::map<AgentId, Fixed> expire(EpochIndex now, EpochIndex ttl) {
        std::map<AgentId, Fixed> expired;
        for (auto& [agent, lots] : lots_) {
            std::vector<Lot> keep;
            for (auto& lot : lots) {
                if (now - lot.issued >= ttl) {
                    if (!lot.remaining.is_zero()) expired[agent] += lot.remaining;
                } else {
                    keep.push_back(lot);
                }
            }
            lots = std::move(keep);
        }
        return expired;
    }

    struct Payment {
        Fixed credit_used;
        Fixed cash_due;
    };

    // Oldest credits first, remainder due in cash.
    Payment consume(const AgentId& agent, const Fixed& fee) {
        require_non_negative(fee, "fee");
        Payment p;
        p.cash_due = fee;
        auto it = lots_.find(agent);
        if (it == lots_.end()) return p;
        for (auto& lot : it->second) {
            if (p.cash_due.is_zero()) break;
            Fixed use = lot.remaining < p.cash_due ? lot.remaining : p.cash_due;
            lot.remaining -= use;
            p.credit_used += use;
            p.cash_due -= use;
        }
        std::erase_if(it->second, [](const Lot& l) { return l.remaining.is_zero(); });
        return p;
    }

    Fixed total(const AgentId& agent) const {
        Fixed sum;
        auto it = lots_.find(agent);
        if (it == lots_.end()) return sum;
        for (const auto& lot : it->second) sum += lot.remaining;
        return sum;
    }

    const std::map<AgentId, std::vector<Lot>>& lots() const { return lots_; }
    std::map<AgentId, std::vector<Lot>>& lots() { return lots_; }

private:
    std::map<AgentId, std::vector<Lot>> lots_;
};

// R recurrence: next resources from revenues, budget outflows and the
// mark-to-market change of the system book.
inline Fixed next_resources(const Fixed& r, const Fixed& nf, const Fixed& b,
                            const Fixed& delta_mtm) {
    return r + nf - b + delta_mtm;
}

struct FiscalReport {
    EpochIndex epoch = 0;
    BudgetVector budget;
    RevenueVector revenue;
    Fixed resources_r;       // R after this close
    Fixed requirement_gamma; // Gamma_u
    Fixed delta_mtm;
    bool floor_breached = false;

    Fixed surplus() const { return revenue.total() - budget.total(); }
};

// Sum of per-epoch surpluses with the alpha-weighted resource penalty.
inline double fiscal_objective(std::span<const FiscalReport> trajectory, double alpha) {
    if (alpha < 0.0 || alpha > 1.0)
        raise(ErrorCode::ValidationError, "alpha outside [0,1]");
    double total = 0.0;
    for (const auto& rep : trajectory) {
        double sr = rep.surplus().to_double();
        double gap = (rep.requirement_gamma - rep.resources_r).to_double();
        total += sr - alpha * gap;
    }
    return total;
}

struct AcquisitionCandidate {
    std::string id;
    Fixed cost;            // Delta I_AA
    double value_estimate; // Delta V
};

// Greedy by estimated value per unit cost, subject to the acquisition budget
// and to cumulative value staying at or above cumulative cost.
inline std::vector<AcquisitionCandidate> acquire_agents(
    const Fixed& budget, std::vector<AcquisitionCandidate> candidates) {
    require_non_negative(budget, "acquisition budget");
    for (const auto& c : candidates)
        if (c.cost.is_zero() || c.cost.is_negative())
            raise(ErrorCode::ValidationError, "candidate cost must be positive");

    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const AcquisitionCandidate& a, const AcquisitionCandidate& b) {
                         return a.value_estimate * b.cost.to_double() >
                                b.value_estimate * a.cost.to_double();
                     });

    std::vector<AcquisitionCandidate> acquired;
    Fixed spent;
    double cum_value = 0.0;
    for (auto& c : candidates) {
        Fixed next_spent = spent + c.cost;
        if (next_spent > budget) continue;
        double next_value = cum_value + c.value_estimate;
        if (next_value < next_spent.to_double()) continue;
        spent = next_spent;
        cum_value = next_value;
        acquired.push_back(std::move(c));
    }
    return acquired;
}

} // namespace intralayer::fiscal
