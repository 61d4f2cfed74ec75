#include "microtrade/marl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace microtrade::marl {

namespace {

// Sub-seed streams derived from the master seed.
enum SeedStream : std::uint64_t { kActorSeed = 0, kCriticSeed = 1000, kNoiseSeed = 2000, kReplaySeed = 3000 };

std::vector<int> with_ends(int in, const std::vector<int>& hidden, int out) {
    std::vector<int> sizes{in};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(out);
    return sizes;
}

void check_finite(double value, const char* what, std::size_t agent) {
    if (!std::isfinite(value)) {
        throw std::domain_error(std::string("non-finite ") + what + " for agent " + std::to_string(agent));
    }
}

}  // namespace

Trainer::Trainer(TrainerConfig config, grid::Environment env)
    : config_(std::move(config)),
      env_(std::move(env)),
      scaler_(ObservationScaler::from_setup(env_.config().microgrids, env_.profiles(), config_.prices)),
      replay_(config_.replay_capacity, env_.microgrid_count(), derive_seed(config_.seed, kReplaySeed)) {
    const std::size_t n = env_.microgrid_count();
    if (config_.gamma.empty()) config_.gamma.assign(n, 0.8);
    if (config_.gamma.size() != n) throw std::invalid_argument("gamma must have one entry per agent");
    for (double g : config_.gamma) {
        if (!(g >= 0.0 && g < 1.0)) throw std::invalid_argument("gamma must be in [0, 1)");
    }
    if (!(config_.tau >= 0.0 && config_.tau <= 1.0)) throw std::invalid_argument("tau must be in [0, 1]");
    if (config_.batch_size == 0 || config_.horizon == 0) throw std::invalid_argument("batch size and horizon must be > 0");

    for (std::size_t i = 0; i < n; ++i) {
        CriticLayout layout(config_.mode, n, i);
        nn::DenseNetwork actor(with_ends(kStateSize, config_.actor_hidden, kActionSize), nn::Activation::Tanh,
                               derive_seed(config_.seed, kActorSeed + i));
        nn::DenseNetwork critic(with_ends(layout.input_size(), config_.critic_hidden, 1), nn::Activation::Linear,
                                derive_seed(config_.seed, kCriticSeed + i));
        nn::AdamOptimizer actor_opt(actor, {config_.actor_step});
        nn::AdamOptimizer critic_opt(critic, {config_.critic_step});
        agents_.push_back(AgentBundle{actor, critic, actor, critic, std::move(actor_opt), std::move(critic_opt),
                                      layout, config_.gamma[i]});
        noise_.emplace_back(kActionSize, config_.ou, derive_seed(config_.seed, kNoiseSeed + i));
    }
}

double Trainer::current_noise_scale() const {
    return noise_scale(episode_, config_.noise_initial_scale, config_.noise_decay_episodes);
}

NormalizedAction Trainer::act(std::size_t agent, const std::array<double, kStateSize>& state, double scale) {
    nn::Vector s = Eigen::Map<const nn::Vector>(state.data(), kStateSize);
    nn::Vector a = agents_.at(agent).actor.forward(s);
    if (scale != 0.0) {
        const auto& x = noise_.at(agent).sample();
        for (int k = 0; k < kActionSize; ++k) a(k) += scale * x[k];
    }
    for (int k = 0; k < kActionSize; ++k) a(k) = std::clamp(a(k), -1.0, 1.0);
    return NormalizedAction::from(a.data());
}

void Trainer::begin_episode() {
    env_.reset(grid::episode_start(episode_, config_.horizon, env_.profiles().length()));
    for (auto& n : noise_) n.reset();
    current_states_.clear();
    for (std::size_t i = 0; i < env_.microgrid_count(); ++i) current_states_.push_back(scaler_.normalize(i, env_.observe(i)));
    running_.assign(env_.microgrid_count(), {});
}

StepOutcome Trainer::step() {
    const std::size_t n = env_.microgrid_count();
    const double scale = current_noise_scale();
    StepOutcome out;
    std::vector<grid::ScheduleAction> schedule;
    for (std::size_t i = 0; i < n; ++i) {
        out.actions.push_back(act(i, current_states_[i], scale));
        schedule.push_back(decode_action(out.actions.back(), env_.config().microgrids[i], config_.prices));
    }
    out.result = env_.step(schedule);

    Transition t;
    for (std::size_t i = 0; i < n; ++i) {
        t.states.insert(t.states.end(), current_states_[i].begin(), current_states_[i].end());
        auto a = out.actions[i].as_array();
        t.actions.insert(t.actions.end(), a.begin(), a.end());
        const auto& rec = out.result.records[i];
        t.rewards.push_back(rec.reward.value() * config_.reward_scale);
        current_states_[i] = scaler_.normalize(i, env_.observe(i));
        t.next_states.insert(t.next_states.end(), current_states_[i].begin(), current_states_[i].end());

        auto& m = running_[i];
        m.mean_reward += rec.reward.value();
        m.selling += rec.sell_revenue.value();
        m.buying += rec.buy_cost.value();
        m.wholesale += rec.wholesale_cost.value();
        m.penalty += rec.penalty.value();
    }
    replay_.add(t);

    if (replay_.size() >= config_.batch_size) {
        for (std::size_t i = 0; i < n; ++i) {
            Batch batch = replay_.sample(config_.batch_size);
            update_critic(i, batch);
            update_actor(i, batch);
            update_targets(i);
        }
        out.learned = true;
    }
    return out;
}

EpisodeMetrics Trainer::run_episode() {
    begin_episode();
    for (std::size_t t = 0; t < config_.horizon; ++t) step();
    EpisodeMetrics metrics{episode_, running_};
    const auto steps = static_cast<double>(config_.horizon);
    for (auto& m : metrics.agents) {
        m.mean_reward /= steps;
        m.selling /= steps;
        m.buying /= steps;
        m.wholesale /= steps;
        m.penalty /= steps;
    }
    ++episode_;
    return metrics;
}

std::vector<EpisodeMetrics> Trainer::train(const std::function<void(const EpisodeMetrics&)>& on_episode,
                                           const std::optional<std::filesystem::path>& abort_checkpoint) {
    std::vector<EpisodeMetrics> all;
    try {
        while (episode_ < config_.episodes) {
            all.push_back(run_episode());
            if (on_episode) on_episode(all.back());
        }
    } catch (...) {
        if (abort_checkpoint) save_checkpoint(*abort_checkpoint, agents_);
        throw;
    }
    return all;
}

nn::Matrix Trainer::agent_states(const nn::Matrix& joint_states, std::size_t agent) const {
    return joint_states.middleRows(kStateSize * static_cast<Eigen::Index>(agent), kStateSize);
}

nn::Matrix Trainer::compute_target_q(std::size_t agent, const Batch& batch) const {
    const auto& bundle = agents_.at(agent);
    const std::size_t n = agents_.size();
    nn::Matrix next_actions = nn::Matrix::Zero(kActionSize * static_cast<Eigen::Index>(n), batch.next_states.cols());
    for (std::size_t k = 0; k < n; ++k) {
        if (config_.mode == CriticMode::Independent && k != agent) continue;
        next_actions.middleRows(kActionSize * static_cast<Eigen::Index>(k), kActionSize) =
            agents_[k].target_actor.forward(agent_states(batch.next_states, k));
    }
    nn::Matrix q_next = bundle.target_critic.forward(bundle.layout.build(batch.next_states, next_actions));
    return batch.rewards.row(static_cast<Eigen::Index>(agent)) + bundle.gamma * q_next;
}

double Trainer::update_critic(std::size_t agent, const Batch& batch) {
    nn::Matrix y = compute_target_q(agent, batch);
    auto& bundle = agents_.at(agent);
    nn::ForwardTape tape;
    nn::Matrix q = bundle.critic.forward(bundle.layout.build(batch.states, batch.actions), tape);
    nn::Matrix diff = q - y;
    const double s = static_cast<double>(batch.size());
    const double loss = diff.squaredNorm() / s;
    check_finite(loss, "critic loss", agent);
    nn::Gradient grad = bundle.critic.backward(tape, (2.0 / s) * diff);
    bundle.critic_optimizer.step(bundle.critic, grad);
    return loss;
}

double Trainer::update_actor(std::size_t agent, const Batch& batch) {
    auto& bundle = agents_.at(agent);
    nn::ForwardTape actor_tape;
    nn::Matrix own = bundle.actor.forward(agent_states(batch.states, agent), actor_tape);
    nn::Matrix actions = batch.actions;
    actions.middleRows(kActionSize * static_cast<Eigen::Index>(agent), kActionSize) = own;

    nn::ForwardTape critic_tape;
    nn::Matrix q = bundle.critic.forward(bundle.layout.build(batch.states, actions), critic_tape);
    const double s = static_cast<double>(batch.size());
    const double objective = q.sum() / s;
    check_finite(objective, "actor objective", agent);

    // Ascend mean Q: descend on -mean Q through the critic into the actor.
    nn::Matrix upstream = nn::Matrix::Constant(1, q.cols(), -1.0 / s);
    nn::Matrix d_input = bundle.critic.input_gradient(critic_tape, upstream);
    nn::Matrix d_action = d_input.middleRows(bundle.layout.action_row(agent), kActionSize);
    nn::Gradient grad = bundle.actor.backward(actor_tape, d_action);
    bundle.actor_optimizer.step(bundle.actor, grad);
    return objective;
}

void Trainer::update_targets(std::size_t agent) {
    auto& bundle = agents_.at(agent);
    nn::soft_blend(bundle.target_actor, bundle.actor, config_.tau);
    nn::soft_blend(bundle.target_critic, bundle.critic, config_.tau);
}

void save_checkpoint(const std::filesystem::path& dir, const std::vector<AgentBundle>& agents) {
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < agents.size(); ++i) {
        const std::string k = std::to_string(i);
        agents[i].actor.save(dir / ("actor_" + k + ".mtnn"));
        agents[i].critic.save(dir / ("critic_" + k + ".mtnn"));
        agents[i].target_actor.save(dir / ("target_actor_" + k + ".mtnn"));
        agents[i].target_critic.save(dir / ("target_critic_" + k + ".mtnn"));
    }
}

std::vector<nn::DenseNetwork> load_actors(const std::filesystem::path& dir, std::size_t agent_count) {
    std::vector<nn::DenseNetwork> actors;
    for (std::size_t i = 0; i < agent_count; ++i) {
        auto path = dir / ("actor_" + std::to_string(i) + ".mtnn");
        if (!std::filesystem::exists(path)) throw std::runtime_error("missing checkpoint " + path.string());
        actors.push_back(nn::DenseNetwork::load(path));
        if (actors.back().input_size() != kStateSize || actors.back().output_size() != kActionSize) {
            throw std::runtime_error("checkpoint " + path.string() + " is not an actor network");
        }
    }
    return actors;
}

}  // namespace microtrade::marl
