#pragma once

// Experiment configuration.
//
// Plain-text key = value file. Top-level keys configure the experiment;
// one [microgrid.<index>] section per microgrid overrides that microgrid's
// parameters. Every key is optional: an empty file yields the paper4
// preset. Unknown keys are rejected.
//
//   preset = desk4                 # paper4 | desk4, applied before other keys
//   policy = maddpg                # maddpg | iddpg | isolated | random
//   agent_count = 4
//   wholesale_price = 22.79        # cents/kWh
//   price_floor = 15.0
//   price_cap = 22.79
//   episodes = 200
//   horizon = 168
//   batch_size = 256
//   eval_episodes = 100
//   replay_capacity = 1000000
//   gamma = 0.8
//   tau = 0.01
//   actor_step = 0.001
//   critic_step = 0.001
//   noise_initial_scale = 1.0
//   noise_decay_episodes = 1000
//   ou_theta = 0.15
//   ou_mu = 0.0
//   ou_sigma = 0.2
//   reward_scale = 0.01
//   network_preset = desk          # paper | desk
//   actor_hidden = 64,64           # overrides network_preset
//   critic_hidden = 128,64
//   seed = 1
//   profile_source = synthetic     # synthetic | csv
//   profile_seed = 7
//   profile_length = 8760
//   initial_battery_fraction = 0.5
//   outage_probability = 0.0
//   market_enabled = true          # forced off for policy = isolated
//
//   [microgrid.0]
//   archetype = high_solar         # high_solar | low_solar
//   panel_area = 150
//   conversion_efficiency = 0.2
//   battery_capacity = 100
//   charge_efficiency = 0.95
//   discharge_efficiency = 0.95
//   max_charge_rate = 100
//   max_bid_quantity = 7.5
//   gamma = 0.8                    # per-agent override
//   profile = data/mg0.csv         # used when profile_source = csv
//   radiation_scale = 1.0
//   load_scale = 1.0

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "microtrade/grid/environment.hpp"
#include "microtrade/marl/noise.hpp"
#include "microtrade/marl/trainer.hpp"

namespace microtrade::io {

enum class PolicyKind { Maddpg, IndependentDdpg, Isolated, Random };
enum class Archetype { HighSolar, LowSolar };
enum class ProfileSource { Synthetic, Csv };

std::string to_string(PolicyKind kind);
PolicyKind parse_policy_kind(const std::string& text);
std::string to_string(Archetype a);
Archetype parse_archetype(const std::string& text);

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct MicrogridSetup {
    grid::MicrogridParams params;
    Archetype archetype = Archetype::HighSolar;
    std::optional<double> gamma;
    std::string profile_path;
    double radiation_scale = 1.0;
    double load_scale = 1.0;

    friend bool operator==(const MicrogridSetup&, const MicrogridSetup&) = default;
};

struct ExperimentConfig {
    std::string preset = "paper4";
    PolicyKind policy = PolicyKind::Maddpg;
    std::vector<MicrogridSetup> microgrids;

    double wholesale_price = 22.79;
    double price_floor = 15.0;
    double price_cap = 22.79;

    std::size_t episodes = 1500;
    std::size_t horizon = 168;
    std::size_t batch_size = 1024;
    std::size_t eval_episodes = 1000;
    std::size_t replay_capacity = 1'000'000;

    double gamma = 0.8;
    double tau = 0.01;
    double actor_step = 1e-3;
    double critic_step = 1e-3;
    double noise_initial_scale = 1.0;
    std::size_t noise_decay_episodes = 1000;
    marl::OuParams ou;
    double reward_scale = 0.01;

    std::string network_preset = "paper";
    std::vector<int> actor_hidden{512, 128};
    std::vector<int> critic_hidden{1024, 512, 256};

    std::uint64_t seed = 1;
    ProfileSource profile_source = ProfileSource::Synthetic;
    std::uint64_t profile_seed = 7;
    std::size_t profile_length = 8760;
    double initial_battery_fraction = 0.5;
    double outage_probability = 0.0;
    bool market_enabled = true;

    std::size_t agent_count() const { return microgrids.size(); }

    /// Throws ConfigError describing the first violated constraint.
    void validate() const;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Named presets: "paper4" (the full-size four-microgrid scenario) and
/// "desk4" (same scenario with smaller networks and a shorter run).
ExperimentConfig preset_config(const std::string& name);

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config(const std::filesystem::path& path);
std::string serialize_config(const ExperimentConfig& config);

/// Environment settings implied by the experiment (market disabled for the
/// isolated policy).
grid::EnvironmentConfig environment_config(const ExperimentConfig& config);

marl::TrainerConfig trainer_config(const ExperimentConfig& config);

}  // namespace microtrade::io
