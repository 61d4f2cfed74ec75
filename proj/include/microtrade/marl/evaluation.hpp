#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "microtrade/grid/environment.hpp"
#include "microtrade/marl/action_codec.hpp"
#include "microtrade/nn/dense_network.hpp"

namespace microtrade::marl {

/// Decentralized decision rule: each call sees one agent's observation only.
class Policy {
public:
    virtual ~Policy() = default;
    virtual void begin_episode(std::size_t /*episode*/) {}
    virtual grid::ScheduleAction act(std::size_t agent, const grid::Observation& obs) = 0;
    /// Independent copy for a parallel evaluation worker.
    virtual std::unique_ptr<Policy> clone() const = 0;
};

/// Noise-free trained actors.
class ActorPolicy final : public Policy {
public:
    ActorPolicy(std::vector<nn::DenseNetwork> actors, ObservationScaler scaler,
                std::vector<grid::MicrogridParams> params, PriceBounds prices);

    grid::ScheduleAction act(std::size_t agent, const grid::Observation& obs) override;
    std::unique_ptr<Policy> clone() const override { return std::make_unique<ActorPolicy>(*this); }

    NormalizedAction raw_action(std::size_t agent, const grid::Observation& obs) const;

private:
    std::shared_ptr<const std::vector<nn::DenseNetwork>> actors_;
    ObservationScaler scaler_;
    std::vector<grid::MicrogridParams> params_;
    PriceBounds prices_;
};

/// Per-slot means in cents.
struct CostBreakdown {
    double wholesale = 0.0;
    double buying = 0.0;
    double selling = 0.0;
    double penalty = 0.0;
    double overall = 0.0;
};

/// Exact per-microgrid sums over every evaluated slot.
struct MoneyTotals {
    Money wholesale;
    Money buying;
    Money selling;
    Money penalty;
    Money overall;
};

struct LoggedRecord {
    std::size_t episode = 0;
    grid::SettlementRecord record;
    std::optional<double> clearing_price;
};

struct EvaluationReport {
    std::size_t episodes = 0;
    std::size_t slots = 0;  // episodes * horizon
    std::vector<CostBreakdown> breakdown;             // per microgrid, per-slot means
    std::vector<MoneyTotals> totals;                  // per microgrid
    std::vector<std::vector<double>> episode_reward;  // [agent][episode], per-slot mean
    std::size_t traded_slots = 0;
    double cleared_energy = 0.0;                       // kWh summed over traded slots
    std::vector<std::optional<double>> clearing_prices;  // one per slot
    std::vector<std::vector<double>> battery_levels;     // [agent] kWh, end of slot
    std::vector<std::vector<double>> bid_prices;         // [agent] submitted order prices
    std::vector<std::vector<double>> bid_quantities;     // [agent] +buy / -sell, kWh
    std::vector<std::size_t> orders_submitted;           // [agent]
    std::vector<LoggedRecord> log;                       // only when requested

    double successful_trading_ratio() const {
        return slots == 0 ? 0.0 : static_cast<double>(traded_slots) / static_cast<double>(slots);
    }
    double mean_trading_quantity() const {
        return traded_slots == 0 ? 0.0 : cleared_energy / static_cast<double>(traded_slots);
    }
};

struct EvaluationOptions {
    std::size_t episodes = 100;
    std::size_t horizon = 168;
    std::size_t first_episode = 0;
    std::size_t parallel = 1;
    bool keep_log = false;
};

/// Rolls out `policy` on fresh environments, one per episode. Episode e uses
/// the profile window of episode (first_episode + e) and an environment seed
/// derived from the config seed and e, so results do not depend on the
/// number of workers.
EvaluationReport evaluate(const grid::EnvironmentConfig& env_config,
                          std::shared_ptr<const grid::ExogenousProfiles> profiles, const Policy& policy,
                          const EvaluationOptions& options);

}  // namespace microtrade::marl
