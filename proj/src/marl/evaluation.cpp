#include "microtrade/marl/evaluation.hpp"

#include <algorithm>
#include <stdexcept>
#include <thread>

#include "microtrade/marl/noise.hpp"

namespace microtrade::marl {

ActorPolicy::ActorPolicy(std::vector<nn::DenseNetwork> actors, ObservationScaler scaler,
                         std::vector<grid::MicrogridParams> params, PriceBounds prices)
    : actors_(std::make_shared<const std::vector<nn::DenseNetwork>>(std::move(actors))),
      scaler_(std::move(scaler)),
      params_(std::move(params)),
      prices_(prices) {
    if (actors_->size() != params_.size()) throw std::invalid_argument("one actor per microgrid required");
}

NormalizedAction ActorPolicy::raw_action(std::size_t agent, const grid::Observation& obs) const {
    auto s = scaler_.normalize(agent, obs);
    nn::Vector out = actors_->at(agent).forward(nn::Vector(Eigen::Map<const nn::Vector>(s.data(), kStateSize)));
    for (int k = 0; k < kActionSize; ++k) out(k) = std::clamp(out(k), -1.0, 1.0);
    return NormalizedAction::from(out.data());
}

grid::ScheduleAction ActorPolicy::act(std::size_t agent, const grid::Observation& obs) {
    return decode_action(raw_action(agent, obs), params_.at(agent), prices_);
}

namespace {

EvaluationReport empty_report(std::size_t agents) {
    EvaluationReport r;
    r.breakdown.resize(agents);
    r.totals.resize(agents);
    r.episode_reward.resize(agents);
    r.battery_levels.resize(agents);
    r.bid_prices.resize(agents);
    r.bid_quantities.resize(agents);
    r.orders_submitted.assign(agents, 0);
    return r;
}

EvaluationReport run_one(const grid::EnvironmentConfig& base, const std::shared_ptr<const grid::ExogenousProfiles>& profiles,
                         Policy& policy, const EvaluationOptions& opt, std::size_t episode) {
    grid::EnvironmentConfig cfg = base;
    cfg.seed = derive_seed(base.seed, 0x5EED0000ull + episode);
    grid::Environment env(cfg, profiles);
    const std::size_t abs_episode = opt.first_episode + episode;
    env.reset(grid::episode_start(abs_episode, opt.horizon, profiles->length()));
    policy.begin_episode(abs_episode);

    const std::size_t n = env.microgrid_count();
    EvaluationReport r = empty_report(n);
    r.episodes = 1;
    std::vector<double> reward_sum(n, 0.0);
    std::vector<grid::ScheduleAction> actions(n);
    for (std::size_t t = 0; t < opt.horizon; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            actions[i] = policy.act(i, env.observe(i));
            if (auto order = actions[i].order(static_cast<int>(i))) {
                ++r.orders_submitted[i];
                r.bid_prices[i].push_back(order->price);
                const double q = order->quantity.value();
                r.bid_quantities[i].push_back(order->side == market::Side::Buy ? q : -q);
            }
        }
        grid::StepResult step = env.step(actions);
        ++r.slots;
        const bool traded = step.clearing.traded();
        r.clearing_prices.push_back(traded ? step.clearing.clearing_price : std::nullopt);
        if (traded) {
            ++r.traded_slots;
            r.cleared_energy += step.clearing.cleared_total.value();
        }
        for (std::size_t i = 0; i < n; ++i) {
            const auto& rec = step.records[i];
            auto& b = r.totals[i];
            b.wholesale += rec.wholesale_cost;
            b.buying += rec.buy_cost;
            b.selling += rec.sell_revenue;
            b.penalty += rec.penalty;
            b.overall += rec.reward;
            reward_sum[i] += rec.reward.value();
            r.battery_levels[i].push_back(rec.battery_level.value());
            if (opt.keep_log) r.log.push_back({abs_episode, rec, r.clearing_prices.back()});
        }
    }
    for (std::size_t i = 0; i < n; ++i) r.episode_reward[i].push_back(reward_sum[i] / static_cast<double>(opt.horizon));
    return r;
}

void merge_into(EvaluationReport& into, EvaluationReport&& part) {
    into.episodes += part.episodes;
    into.slots += part.slots;
    into.traded_slots += part.traded_slots;
    into.cleared_energy += part.cleared_energy;
    into.clearing_prices.insert(into.clearing_prices.end(), part.clearing_prices.begin(), part.clearing_prices.end());
    for (std::size_t i = 0; i < into.breakdown.size(); ++i) {
        auto& a = into.totals[i];
        const auto& b = part.totals[i];
        a.wholesale += b.wholesale;
        a.buying += b.buying;
        a.selling += b.selling;
        a.penalty += b.penalty;
        a.overall += b.overall;
        auto append = [](auto& dst, const auto& src) { dst.insert(dst.end(), src.begin(), src.end()); };
        append(into.episode_reward[i], part.episode_reward[i]);
        append(into.battery_levels[i], part.battery_levels[i]);
        append(into.bid_prices[i], part.bid_prices[i]);
        append(into.bid_quantities[i], part.bid_quantities[i]);
        into.orders_submitted[i] += part.orders_submitted[i];
    }
    into.log.insert(into.log.end(), std::make_move_iterator(part.log.begin()), std::make_move_iterator(part.log.end()));
}

}  // namespace

EvaluationReport evaluate(const grid::EnvironmentConfig& env_config,
                          std::shared_ptr<const grid::ExogenousProfiles> profiles, const Policy& policy,
                          const EvaluationOptions& options) {
    if (!profiles) throw std::invalid_argument("profiles required");
    if (options.horizon == 0) throw std::invalid_argument("horizon must be > 0");
    const std::size_t n = env_config.microgrids.size();
    const std::size_t workers = std::max<std::size_t>(1, std::min(options.parallel, options.episodes));

    std::vector<EvaluationReport> per_episode(options.episodes);
    auto run_range = [&](std::size_t begin, std::size_t end) {
        auto local = policy.clone();
        for (std::size_t e = begin; e < end; ++e) per_episode[e] = run_one(env_config, profiles, *local, options, e);
    };
    if (workers == 1) {
        run_range(0, options.episodes);
    } else {
        std::vector<std::thread> threads;
        std::vector<std::exception_ptr> errors(workers);
        const std::size_t chunk = (options.episodes + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = w * chunk, end = std::min(options.episodes, begin + chunk);
            threads.emplace_back([&, w, begin, end] {
                try {
                    run_range(begin, end);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : threads) t.join();
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    EvaluationReport report = empty_report(n);
    for (auto& part : per_episode) merge_into(report, std::move(part));
    if (report.slots > 0) {
        const double slots = static_cast<double>(report.slots);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& t = report.totals[i];
            report.breakdown[i] = {t.wholesale.value() / slots, t.buying.value() / slots, t.selling.value() / slots,
                                   t.penalty.value() / slots, t.overall.value() / slots};
        }
    }
    return report;
}

}  // namespace microtrade::marl
