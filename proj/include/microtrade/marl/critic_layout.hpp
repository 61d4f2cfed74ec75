#pragma once

#include <span>

#include "microtrade/marl/action_codec.hpp"
#include "microtrade/nn/dense_network.hpp"

namespace microtrade::marl {

enum class CriticMode {
    Centralized,  // sees every agent's state and action
    Independent,  // sees only its own agent's state and action
};

/// Row layout of a critic's input.
///
/// Centralized, N agents:
///   [b_1, g_1, l_1, ..., b_N, g_N, l_N, p_w, p*, a_1 (3), ..., a_N (3)]
/// so the shared prices appear once; length 3N + 2 + 3N.
///
/// Independent, agent i:
///   [b_i, g_i, l_i, p_w, p*, a_i (3)]; length 8.
class CriticLayout {
public:
    CriticLayout(CriticMode mode, std::size_t agent_count, std::size_t owner);

    int input_size() const;

    /// First row of `agent`'s action block inside the critic input.
    int action_row(std::size_t agent) const;

    /// Joint states (5N x S) and joint actions (3N x S) -> critic input.
    nn::Matrix build(const nn::Matrix& joint_states, const nn::Matrix& joint_actions) const;

    CriticMode mode() const { return mode_; }
    std::size_t agent_count() const { return agents_; }

private:
    CriticMode mode_;
    std::size_t agents_;
    std::size_t owner_;
};

/// Single-sample form: per-agent normalized states and actions.
nn::Vector critic_input(CriticMode mode, std::size_t owner, std::span<const std::array<double, kStateSize>> states,
                        std::span<const NormalizedAction> actions);

}  // namespace microtrade::marl
