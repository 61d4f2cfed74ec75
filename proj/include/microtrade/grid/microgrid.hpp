#pragma once

#include <optional>
#include <string>
#include <variant>

#include "microtrade/market/auction.hpp"
#include "microtrade/units.hpp"

namespace microtrade::grid {

struct MicrogridParams {
    double panel_area = 1000.0;           // m^2
    double conversion_efficiency = 0.2;   // (0, 1]
    Energy battery_capacity = kwh(100.0);
    double charge_efficiency = 0.9;       // (0, 1)
    double discharge_efficiency = 0.9;    // (0, 1)
    Energy max_charge_rate = kwh(100.0);  // per slot, both directions
    Energy max_bid_quantity = kwh(7.5);

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;

    friend bool operator==(const MicrogridParams&, const MicrogridParams&) = default;
};

struct MicrogridState {
    Energy battery_level;
    Energy last_generation;
    Energy last_load;
};

struct SellerRole {
    double price;
    Energy quantity;
};
struct BuyerRole {
    double price;
    Energy quantity;
};
struct IdleRole {};
using MarketRole = std::variant<IdleRole, SellerRole, BuyerRole>;

/// Battery request (positive charges, negative discharges) plus at most one
/// market order.
struct ScheduleAction {
    Energy battery_delta;
    MarketRole role = IdleRole{};

    bool is_idle() const { return std::holds_alternative<IdleRole>(role); }
    std::optional<market::MarketOrder> order(int participant) const;
};

struct BatteryOutcome {
    Energy new_level;
    Energy charged;     // energy drawn into the battery (before losses)
    Energy discharged;  // energy delivered by the battery (after losses)
};

/// Per-microgrid quantities realized in one slot, before money is settled.
struct PhysicalFlows {
    Energy generation;
    Energy load;
    Energy charged;
    Energy discharged;
    Energy committed_sale;  // u: cleared seller allocation
    Energy delivered;       // v
    Energy cleared_buy;     // chi
};

struct SettlementRecord {
    int slot = 0;
    int microgrid = 0;
    Money buy_cost;         // rho
    Money sell_revenue;     // sigma
    Money penalty;          // q
    Money wholesale_cost;   // xi
    Energy wholesale_energy;  // varpi (clamped at zero)
    Energy committed_sale;    // u
    Energy delivered;         // v
    Energy cleared_buy;       // chi
    Energy wasted_energy;
    Energy generation;
    Energy load;
    Energy charged;
    Energy discharged;
    Energy battery_level;     // level at the end of the slot
    Money reward;
};

/// PV output over one slot: area * efficiency * radiation * hours.
Energy pv_generation(const MicrogridParams& params, double radiation_kw_m2, double slot_hours = 1.0);

/// Applies a signed battery request, clipping to capacity, to the empty
/// level and to the rate limit.
BatteryOutcome apply_battery(const MicrogridState& state, const MicrogridParams& params, Energy battery_delta);

/// Local surplus after self-consumption, clamped to [0, committed].
Energy delivered_energy(Energy committed, Energy generation, Energy discharged, Energy load, Energy charged);

struct SettlementPrices {
    std::optional<double> clearing_price;
    double wholesale_price = 22.79;
};

/// Money flows for one microgrid. Throws std::invalid_argument when the
/// flows are inconsistent (delivered > committed, trading without a price,
/// simultaneous buy and sell, simultaneous charge and discharge).
SettlementRecord settle(const PhysicalFlows& flows, const SettlementPrices& prices);

}  // namespace microtrade::grid
