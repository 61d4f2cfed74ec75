#pragma once

// Multi-agent deep deterministic policy gradient with centralized critics and
// decentralized actors. The same trainer runs independent DDPG when the
// critics are built in CriticMode::Independent.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "microtrade/grid/environment.hpp"
#include "microtrade/marl/action_codec.hpp"
#include "microtrade/marl/critic_layout.hpp"
#include "microtrade/marl/noise.hpp"
#include "microtrade/marl/replay_buffer.hpp"
#include "microtrade/nn/adam.hpp"

namespace microtrade::marl {

struct TrainerConfig {
    CriticMode mode = CriticMode::Centralized;
    std::size_t episodes = 200;
    std::size_t horizon = 168;
    std::size_t batch_size = 256;
    std::size_t replay_capacity = 1'000'000;
    std::vector<double> gamma;  // one per agent
    double tau = 0.01;
    double actor_step = 1e-3;
    double critic_step = 1e-3;
    double noise_initial_scale = 1.0;
    std::size_t noise_decay_episodes = 1000;
    OuParams ou;
    /// Rewards are multiplied by this before entering the replay buffer.
    double reward_scale = 0.01;
    std::vector<int> actor_hidden{64, 64};
    std::vector<int> critic_hidden{128, 64};
    std::uint64_t seed = 1;
    PriceBounds prices;
};

struct AgentBundle {
    nn::DenseNetwork actor;
    nn::DenseNetwork critic;
    nn::DenseNetwork target_actor;
    nn::DenseNetwork target_critic;
    nn::AdamOptimizer actor_optimizer;
    nn::AdamOptimizer critic_optimizer;
    CriticLayout layout;
    double gamma = 0.8;
};

/// Per-slot means over one episode, in cents.
struct AgentEpisodeMetrics {
    double mean_reward = 0.0;
    double selling = 0.0;
    double buying = 0.0;
    double wholesale = 0.0;
    double penalty = 0.0;
};

struct EpisodeMetrics {
    std::size_t episode = 0;
    std::vector<AgentEpisodeMetrics> agents;
};

struct StepOutcome {
    grid::StepResult result;
    std::vector<NormalizedAction> actions;
    bool learned = false;
};

class Trainer {
public:
    Trainer(TrainerConfig config, grid::Environment env);

    /// Runs the configured number of episodes. `on_episode` sees every
    /// episode's metrics as soon as it finishes. If `abort_checkpoint` is set
    /// and a component throws, the current networks are written there before
    /// the exception propagates.
    std::vector<EpisodeMetrics> train(const std::function<void(const EpisodeMetrics&)>& on_episode = {},
                                      const std::optional<std::filesystem::path>& abort_checkpoint = {});

    EpisodeMetrics run_episode();

    void begin_episode();
    StepOutcome step();

    /// Noise-free when `noise_scale` is zero; otherwise adds scaled OU noise
    /// and clips to [-1, 1].
    NormalizedAction act(std::size_t agent, const std::array<double, kStateSize>& state, double noise_scale);

    nn::Matrix compute_target_q(std::size_t agent, const Batch& batch) const;
    double update_critic(std::size_t agent, const Batch& batch);
    double update_actor(std::size_t agent, const Batch& batch);
    void update_targets(std::size_t agent);

    const std::vector<AgentBundle>& agents() const { return agents_; }
    std::vector<AgentBundle>& agents() { return agents_; }
    const TrainerConfig& config() const { return config_; }
    const grid::Environment& environment() const { return env_; }
    const ObservationScaler& scaler() const { return scaler_; }
    const ReplayBuffer& replay() const { return replay_; }
    std::size_t episode() const { return episode_; }
    double current_noise_scale() const;

private:
    nn::Matrix agent_states(const nn::Matrix& joint_states, std::size_t agent) const;

    TrainerConfig config_;
    grid::Environment env_;
    ObservationScaler scaler_;
    std::vector<AgentBundle> agents_;
    std::vector<OrnsteinUhlenbeck> noise_;
    ReplayBuffer replay_;
    std::size_t episode_ = 0;
    std::vector<std::array<double, kStateSize>> current_states_;
    std::vector<AgentEpisodeMetrics> running_;
};

/// One file per network per agent: actor_<i>.mtnn, critic_<i>.mtnn,
/// target_actor_<i>.mtnn, target_critic_<i>.mtnn.
void save_checkpoint(const std::filesystem::path& dir, const std::vector<AgentBundle>& agents);

/// Loads only the actors; evaluation never needs the critics.
std::vector<nn::DenseNetwork> load_actors(const std::filesystem::path& dir, std::size_t agent_count);

}  // namespace microtrade::marl
