#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "microtrade/grid/environment.hpp"
#include "microtrade/marl/evaluation.hpp"
#include "microtrade/marl/trainer.hpp"

namespace microtrade::baselines {

/// Battery-only schedule for a microgrid cut off from the market: stores the
/// previous slot's surplus or covers its deficit, within the rate limit.
grid::ScheduleAction isolated_policy(const grid::Observation& obs, const grid::MicrogridParams& params);

class IsolatedPolicy final : public marl::Policy {
public:
    explicit IsolatedPolicy(std::vector<grid::MicrogridParams> params) : params_(std::move(params)) {}

    grid::ScheduleAction act(std::size_t agent, const grid::Observation& obs) override;
    std::unique_ptr<marl::Policy> clone() const override { return std::make_unique<IsolatedPolicy>(*this); }

private:
    std::vector<grid::MicrogridParams> params_;
};

/// Uniform actions over [-1, 1]^3. The stream restarts from a seed derived
/// from (seed, episode) at every episode.
class RandomPolicy final : public marl::Policy {
public:
    RandomPolicy(std::vector<grid::MicrogridParams> params, marl::PriceBounds prices, std::uint64_t seed);

    void begin_episode(std::size_t episode) override;
    grid::ScheduleAction act(std::size_t agent, const grid::Observation& obs) override;
    std::unique_ptr<marl::Policy> clone() const override { return std::make_unique<RandomPolicy>(*this); }

private:
    std::vector<grid::MicrogridParams> params_;
    marl::PriceBounds prices_;
    std::uint64_t seed_;
    std::mt19937_64 rng_;
};

/// Same schedule as MADDPG, but every critic sees only its own agent's
/// state and action.
marl::Trainer make_independent_ddpg(marl::TrainerConfig config, grid::Environment env);

struct TrainedActors {
    std::vector<nn::DenseNetwork> actors;
    std::vector<marl::EpisodeMetrics> metrics;
};

TrainedActors independent_ddpg_train(marl::TrainerConfig config, grid::Environment env);

class CompareError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ComparisonRun {
    std::string name;
    grid::EnvironmentConfig environment;  // market_enabled may differ between runs
    marl::EvaluationReport report;
};

struct ComparisonRow {
    std::string method;
    std::size_t microgrid = 0;
    marl::CostBreakdown breakdown;
    marl::CostBreakdown delta;  // against the first run
};

struct MarketRow {
    std::string method;
    double trading_ratio = 0.0;
    double mean_quantity = 0.0;
};

struct ComparisonReport {
    std::vector<std::string> methods;
    std::vector<ComparisonRow> rows;  // method-major
    std::vector<MarketRow> market;

    const ComparisonRow& row(const std::string& method, std::size_t microgrid) const;
};

/// Requires at least two runs over the same microgrids, price bounds and
/// horizon. Only market_enabled and the seed may differ.
ComparisonReport compare(const std::vector<ComparisonRun>& runs);

}  // namespace microtrade::baselines
