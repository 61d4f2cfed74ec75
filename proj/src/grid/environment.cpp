#include "microtrade/grid/environment.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>
#include <string>

namespace microtrade::grid {

void ExogenousProfiles::validate() const {
    if (radiation.size() != load.size()) throw std::invalid_argument("radiation/load microgrid count mismatch");
    if (!(wholesale_price >= 0.0) || !std::isfinite(wholesale_price)) {
        throw std::invalid_argument("wholesale price must be finite and non-negative");
    }
    const std::size_t n = length();
    for (std::size_t i = 0; i < radiation.size(); ++i) {
        if (radiation[i].size() != n || load[i].size() != n) {
            throw std::invalid_argument("profile length mismatch for microgrid " + std::to_string(i));
        }
        for (std::size_t t = 0; t < n; ++t) {
            if (!(radiation[i][t] >= 0.0) || !std::isfinite(radiation[i][t]) || !(load[i][t] >= 0.0) ||
                !std::isfinite(load[i][t])) {
                throw std::invalid_argument("invalid profile value for microgrid " + std::to_string(i) + " at slot " +
                                            std::to_string(t));
            }
        }
    }
}

std::size_t episode_start(std::size_t episode, std::size_t horizon, std::size_t profile_length) {
    if (profile_length == 0) throw std::invalid_argument("empty profiles");
    return (episode % profile_length) * (horizon % profile_length) % profile_length;
}

Environment::Environment(EnvironmentConfig config, std::shared_ptr<const ExogenousProfiles> profiles)
    : config_(std::move(config)), profiles_(std::move(profiles)), rng_(config_.seed) {
    if (!profiles_) throw std::invalid_argument("profiles required");
    if (config_.microgrids.empty()) throw std::invalid_argument("at least one microgrid required");
    if (profiles_->microgrid_count() != config_.microgrids.size()) {
        throw std::invalid_argument("profiles cover " + std::to_string(profiles_->microgrid_count()) +
                                    " microgrids, config has " + std::to_string(config_.microgrids.size()));
    }
    if (profiles_->length() == 0) throw std::invalid_argument("empty profiles");
    if (!(config_.price_floor < config_.price_cap)) throw std::invalid_argument("price_floor must be < price_cap");
    if (!(config_.initial_battery_fraction >= 0.0 && config_.initial_battery_fraction <= 1.0)) {
        throw std::invalid_argument("initial_battery_fraction must be in [0, 1]");
    }
    if (!(config_.outage_probability >= 0.0 && config_.outage_probability <= 1.0)) {
        throw std::invalid_argument("outage_probability must be in [0, 1]");
    }
    for (const auto& p : config_.microgrids) p.validate();
    reset(0);
}

void Environment::reset(std::size_t start_slot) {
    start_slot_ = start_slot;
    slot_ = 0;
    last_clearing_price_ = profiles_->wholesale_price;
    states_.clear();
    for (const auto& p : config_.microgrids) {
        MicrogridState s;
        s.battery_level = Energy::from_units(
            std::llround(static_cast<double>(p.battery_capacity.units()) * config_.initial_battery_fraction));
        states_.push_back(s);
    }
}

Observation Environment::observe(std::size_t microgrid) const {
    const auto& s = states_.at(microgrid);
    return {s.battery_level, s.last_generation, s.last_load, profiles_->wholesale_price, last_clearing_price_};
}

std::vector<Observation> Environment::observe_all() const {
    std::vector<Observation> out;
    out.reserve(states_.size());
    for (std::size_t i = 0; i < states_.size(); ++i) out.push_back(observe(i));
    return out;
}

StepResult Environment::step(std::span<const ScheduleAction> actions) {
    const std::size_t n = microgrid_count();
    if (actions.size() != n) {
        throw std::invalid_argument("expected " + std::to_string(n) + " actions, got " +
                                    std::to_string(actions.size()));
    }
    StepResult result;

    // (1) collect orders and clear the hour-ahead market
    if (config_.market_enabled) {
        std::vector<market::MarketOrder> orders;
        for (std::size_t i = 0; i < n; ++i) {
            auto order = actions[i].order(static_cast<int>(i));
            if (!order) continue;
            market::MarketLimits limits{config_.price_floor, config_.price_cap,
                                        config_.microgrids[i].max_bid_quantity};
            try {
                market::validate_order(*order, limits);
                orders.push_back(*order);
            } catch (const market::OrderError& e) {
                std::clog << "slot " << slot_ << ": order dropped: " << e.what() << '\n';
                result.rejected_orders.push_back(static_cast<int>(i));
            }
        }
        market::MarketLimits open{config_.price_floor, config_.price_cap};
        result.clearing = market::run_auction(orders, open);
    }

    const std::size_t abs_slot = (start_slot_ + static_cast<std::size_t>(slot_)) % profiles_->length();
    SettlementPrices prices{result.clearing.clearing_price, profiles_->wholesale_price};
    if (!result.clearing.cleared_total.is_positive()) prices.clearing_price.reset();

    for (std::size_t i = 0; i < n; ++i) {
        const auto& params = config_.microgrids[i];
        auto& state = states_[i];

        // (2) realize generation and battery
        PhysicalFlows flows;
        flows.generation = pv_generation(params, profiles_->radiation[i][abs_slot]);
        if (config_.outage_probability > 0.0) {
            std::bernoulli_distribution outage(config_.outage_probability);
            if (outage(rng_)) flows.generation = Energy{};
        }
        flows.load = kwh(profiles_->load[i][abs_slot]);
        BatteryOutcome battery = apply_battery(state, params, actions[i].battery_delta);
        flows.charged = battery.charged;
        flows.discharged = battery.discharged;

        // (3) delivery against the cleared commitment
        Energy allocation = result.clearing.allocation(static_cast<int>(i));
        if (std::holds_alternative<SellerRole>(actions[i].role)) {
            flows.committed_sale = allocation;
            flows.delivered =
                delivered_energy(allocation, flows.generation, flows.discharged, flows.load, flows.charged);
        } else if (std::holds_alternative<BuyerRole>(actions[i].role)) {
            flows.cleared_buy = allocation;
        }

        // (4) settle
        SettlementRecord rec = settle(flows, prices);
        rec.slot = slot_;
        rec.microgrid = static_cast<int>(i);
        rec.battery_level = battery.new_level;
        result.records.push_back(rec);

        // (5) advance
        state.battery_level = battery.new_level;
        state.last_generation = flows.generation;
        state.last_load = flows.load;
    }
    if (prices.clearing_price) last_clearing_price_ = *prices.clearing_price;
    ++slot_;
    return result;
}

}  // namespace microtrade::grid
