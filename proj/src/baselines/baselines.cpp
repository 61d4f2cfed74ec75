#include "microtrade/baselines/baselines.hpp"

#include <algorithm>

#include "microtrade/marl/noise.hpp"

namespace microtrade::baselines {

grid::ScheduleAction isolated_policy(const grid::Observation& obs, const grid::MicrogridParams& params) {
    const Energy surplus = obs.last_generation - obs.last_load;
    return {clamp(surplus, -params.max_charge_rate, params.max_charge_rate), grid::IdleRole{}};
}

grid::ScheduleAction IsolatedPolicy::act(std::size_t agent, const grid::Observation& obs) {
    return isolated_policy(obs, params_.at(agent));
}

RandomPolicy::RandomPolicy(std::vector<grid::MicrogridParams> params, marl::PriceBounds prices, std::uint64_t seed)
    : params_(std::move(params)), prices_(prices), seed_(seed), rng_(seed) {}

void RandomPolicy::begin_episode(std::size_t episode) { rng_.seed(marl::derive_seed(seed_, episode)); }

grid::ScheduleAction RandomPolicy::act(std::size_t agent, const grid::Observation&) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    marl::NormalizedAction a;
    a.price = u(rng_);
    a.quantity = u(rng_);
    a.battery = u(rng_);
    return marl::decode_action(a, params_.at(agent), prices_);
}

marl::Trainer make_independent_ddpg(marl::TrainerConfig config, grid::Environment env) {
    config.mode = marl::CriticMode::Independent;
    return marl::Trainer(std::move(config), std::move(env));
}

TrainedActors independent_ddpg_train(marl::TrainerConfig config, grid::Environment env) {
    auto trainer = make_independent_ddpg(std::move(config), std::move(env));
    TrainedActors out;
    out.metrics = trainer.train();
    for (const auto& a : trainer.agents()) out.actors.push_back(a.actor);
    return out;
}

const ComparisonRow& ComparisonReport::row(const std::string& method, std::size_t microgrid) const {
    for (const auto& r : rows) {
        if (r.method == method && r.microgrid == microgrid) return r;
    }
    throw std::out_of_range("no comparison row for " + method + " microgrid " + std::to_string(microgrid));
}

namespace {

marl::CostBreakdown minus(const marl::CostBreakdown& a, const marl::CostBreakdown& b) {
    return {a.wholesale - b.wholesale, a.buying - b.buying, a.selling - b.selling, a.penalty - b.penalty,
            a.overall - b.overall};
}

void check_compatible(const ComparisonRun& ref, const ComparisonRun& other) {
    const auto& a = ref.environment;
    const auto& b = other.environment;
    auto fail = [&](const std::string& what) {
        throw CompareError("run '" + other.name + "' is incompatible with '" + ref.name + "': " + what);
    };
    if (a.microgrids != b.microgrids) fail("microgrid parameters differ");
    if (a.price_floor != b.price_floor || a.price_cap != b.price_cap) fail("price bounds differ");
    if (a.initial_battery_fraction != b.initial_battery_fraction) fail("initial battery fraction differs");
    if (a.outage_probability != b.outage_probability) fail("outage probability differs");
    if (ref.report.slots != other.report.slots || ref.report.episodes != other.report.episodes) {
        fail("evaluation lengths differ");
    }
}

}  // namespace

ComparisonReport compare(const std::vector<ComparisonRun>& runs) {
    if (runs.size() < 2) throw CompareError("at least two runs are required for a comparison");
    for (std::size_t r = 1; r < runs.size(); ++r) check_compatible(runs.front(), runs[r]);
    for (std::size_t r = 0; r < runs.size(); ++r) {
        for (std::size_t s = 0; s < r; ++s) {
            if (runs[r].name == runs[s].name) throw CompareError("duplicate run name '" + runs[r].name + "'");
        }
    }

    ComparisonReport out;
    const std::size_t n = runs.front().environment.microgrids.size();
    for (const auto& run : runs) {
        out.methods.push_back(run.name);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& b = run.report.breakdown.at(i);
            out.rows.push_back({run.name, i, b, minus(b, runs.front().report.breakdown.at(i))});
        }
        out.market.push_back({run.name, run.report.successful_trading_ratio(), run.report.mean_trading_quantity()});
    }
    return out;
}

}  // namespace microtrade::baselines
