#include "microtrade/grid/microgrid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace microtrade::grid {

void MicrogridParams::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw std::invalid_argument(std::string("microgrid parameter ") + what);
    };
    require(panel_area > 0.0, "panel_area must be > 0");
    require(conversion_efficiency > 0.0 && conversion_efficiency <= 1.0, "conversion_efficiency must be in (0, 1]");
    require(battery_capacity.is_positive(), "battery_capacity must be > 0");
    require(charge_efficiency > 0.0 && charge_efficiency < 1.0, "charge_efficiency must be in (0, 1)");
    require(discharge_efficiency > 0.0 && discharge_efficiency < 1.0, "discharge_efficiency must be in (0, 1)");
    require(max_charge_rate.is_positive(), "max_charge_rate must be > 0");
    require(max_bid_quantity.is_positive(), "max_bid_quantity must be > 0");
}

std::optional<market::MarketOrder> ScheduleAction::order(int participant) const {
    if (const auto* s = std::get_if<SellerRole>(&role)) {
        return market::MarketOrder{participant, market::Side::Sell, s->price, s->quantity};
    }
    if (const auto* b = std::get_if<BuyerRole>(&role)) {
        return market::MarketOrder{participant, market::Side::Buy, b->price, b->quantity};
    }
    return std::nullopt;
}

Energy pv_generation(const MicrogridParams& params, double radiation_kw_m2, double slot_hours) {
    if (!(radiation_kw_m2 >= 0.0)) throw std::invalid_argument("radiation must be non-negative");
    return kwh(params.panel_area * params.conversion_efficiency * radiation_kw_m2 * slot_hours);
}

BatteryOutcome apply_battery(const MicrogridState& state, const MicrogridParams& params, Energy battery_delta) {
    const std::int64_t level = state.battery_level.units();
    const std::int64_t capacity = params.battery_capacity.units();
    BatteryOutcome out{state.battery_level, {}, {}};
    if (battery_delta.is_positive()) {
        Energy request = min(battery_delta, params.max_charge_rate);
        auto headroom = static_cast<std::int64_t>(std::floor(static_cast<double>(capacity - level) /
                                                             params.charge_efficiency));
        std::int64_t charged = std::clamp<std::int64_t>(request.units(), 0, std::max<std::int64_t>(headroom, 0));
        auto stored = std::llround(static_cast<double>(charged) * params.charge_efficiency);
        out.charged = Energy::from_units(charged);
        out.new_level = Energy::from_units(std::clamp<std::int64_t>(level + stored, 0, capacity));
    } else if (battery_delta < Energy{}) {
        Energy request = min(-battery_delta, params.max_charge_rate);
        auto deliverable = static_cast<std::int64_t>(std::floor(static_cast<double>(level) *
                                                                params.discharge_efficiency));
        std::int64_t discharged = std::clamp<std::int64_t>(request.units(), 0, std::max<std::int64_t>(deliverable, 0));
        auto drained = std::llround(static_cast<double>(discharged) / params.discharge_efficiency);
        out.discharged = Energy::from_units(discharged);
        out.new_level = Energy::from_units(std::clamp<std::int64_t>(level - drained, 0, capacity));
    }
    return out;
}

Energy delivered_energy(Energy committed, Energy generation, Energy discharged, Energy load, Energy charged) {
    if (committed < Energy{}) throw std::invalid_argument("committed sale must be non-negative");
    return clamp(generation + discharged - load - charged, Energy{}, committed);
}

SettlementRecord settle(const PhysicalFlows& f, const SettlementPrices& prices) {
    if (f.delivered > f.committed_sale) throw std::invalid_argument("delivered energy exceeds committed sale");
    if (f.delivered < Energy{} || f.cleared_buy < Energy{} || f.committed_sale < Energy{}) {
        throw std::invalid_argument("negative market quantity");
    }
    if (f.committed_sale.is_positive() && f.cleared_buy.is_positive()) {
        throw std::invalid_argument("a microgrid cannot both buy and sell in one slot");
    }
    if (f.charged.is_positive() && f.discharged.is_positive()) {
        throw std::invalid_argument("a battery cannot charge and discharge in one slot");
    }
    if ((f.committed_sale.is_positive() || f.cleared_buy.is_positive()) && !prices.clearing_price) {
        throw std::invalid_argument("market quantities without a clearing price");
    }

    SettlementRecord r;
    r.generation = f.generation;
    r.load = f.load;
    r.charged = f.charged;
    r.discharged = f.discharged;
    r.committed_sale = f.committed_sale;
    r.delivered = f.delivered;
    r.cleared_buy = f.cleared_buy;

    const double p_w = prices.wholesale_price;
    if (prices.clearing_price) {
        const double p = *prices.clearing_price;
        r.buy_cost = charge(p, f.cleared_buy);
        r.sell_revenue = charge(p, f.delivered);
        // Penalty weight is the wholesale/clearing price gap; it is never a
        // bonus even if a configuration lets the clearing price exceed p_w.
        r.penalty = charge(std::max(0.0, p_w - p), f.committed_sale - f.delivered);
    }

    Energy net = f.charged + f.delivered + f.load - f.generation - f.discharged - f.cleared_buy;
    r.wholesale_energy = max(net, Energy{});
    r.wasted_energy = max(-net, Energy{});
    r.wholesale_cost = charge(p_w, r.wholesale_energy);
    r.reward = r.sell_revenue - r.wholesale_cost - r.buy_cost - r.penalty;
    return r;
}

}  // namespace microtrade::grid
