#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "microtrade/grid/microgrid.hpp"
#include "microtrade/market/auction.hpp"

namespace microtrade::grid {

/// Hourly exogenous inputs for every microgrid. All series share one length.
struct ExogenousProfiles {
    std::vector<std::vector<double>> radiation;  // [microgrid][slot], kW/m^2
    std::vector<std::vector<double>> load;       // [microgrid][slot], kWh
    double wholesale_price = 22.79;               // cents/kWh

    std::size_t microgrid_count() const { return radiation.size(); }
    std::size_t length() const { return radiation.empty() ? 0 : radiation.front().size(); }

    /// Throws std::invalid_argument on ragged, negative or non-finite data.
    void validate() const;
};

/// Local state plus public prices, as seen by one agent at the start of a slot.
struct Observation {
    Energy battery_level;
    Energy last_generation;
    Energy last_load;
    double wholesale_price = 0.0;
    double last_clearing_price = 0.0;
};

struct EnvironmentConfig {
    std::vector<MicrogridParams> microgrids;
    double price_floor = 15.0;
    double price_cap = 22.79;
    bool market_enabled = true;
    double initial_battery_fraction = 0.5;
    /// Probability that a microgrid's PV output drops to zero for a slot.
    double outage_probability = 0.0;
    std::uint64_t seed = 0;
};

struct StepResult {
    std::vector<SettlementRecord> records;
    market::ClearingResult clearing;
    std::vector<int> rejected_orders;  // microgrids whose order was invalid
};

/// First absolute profile slot of an episode; episodes tile the series and
/// wrap around its end.
std::size_t episode_start(std::size_t episode, std::size_t horizon, std::size_t profile_length);

class Environment {
public:
    Environment(EnvironmentConfig config, std::shared_ptr<const ExogenousProfiles> profiles);

    /// Starts an episode at absolute profile slot `start_slot`.
    void reset(std::size_t start_slot);

    Observation observe(std::size_t microgrid) const;
    std::vector<Observation> observe_all() const;

    /// Runs one slot: auction, generation and battery, delivery, settlement,
    /// state advance. Invalid orders are dropped (the microgrid goes idle) and
    /// reported in `rejected_orders`.
    StepResult step(std::span<const ScheduleAction> actions);

    std::size_t microgrid_count() const { return config_.microgrids.size(); }
    int slot() const { return slot_; }
    const EnvironmentConfig& config() const { return config_; }
    const ExogenousProfiles& profiles() const { return *profiles_; }
    const MicrogridState& state(std::size_t microgrid) const { return states_.at(microgrid); }

private:
    EnvironmentConfig config_;
    std::shared_ptr<const ExogenousProfiles> profiles_;
    std::vector<MicrogridState> states_;
    std::size_t start_slot_ = 0;
    int slot_ = 0;
    double last_clearing_price_ = 0.0;
    std::mt19937_64 rng_;
};

}  // namespace microtrade::grid
