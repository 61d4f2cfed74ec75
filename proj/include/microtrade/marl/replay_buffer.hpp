#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "microtrade/nn/dense_network.hpp"

namespace microtrade::marl {

/// Joint (s, a, r, s') for all agents. States are normalized, 5 per agent;
/// actions are the clipped normalized actions, 3 per agent. Episodes have a
/// fixed horizon, so there is no terminal flag.
struct Transition {
    std::vector<double> states;
    std::vector<double> actions;
    std::vector<double> rewards;
    std::vector<double> next_states;
};

/// Column-per-sample batch: states (5N x S), actions (3N x S),
/// rewards (N x S), next_states (5N x S).
struct Batch {
    nn::Matrix states;
    nn::Matrix actions;
    nn::Matrix rewards;
    nn::Matrix next_states;
    std::size_t size() const { return static_cast<std::size_t>(states.cols()); }
};

class ReplayBuffer {
public:
    ReplayBuffer(std::size_t capacity, std::size_t agent_count, std::uint64_t seed);

    /// Appends; once full, overwrites the oldest entry.
    void add(const Transition& t);

    /// `count` distinct indices drawn uniformly (Floyd's algorithm).
    std::vector<std::size_t> sample_indices(std::size_t count);
    Batch gather(std::span<const std::size_t> indices) const;
    Batch sample(std::size_t count) { auto idx = sample_indices(count); return gather(idx); }

    Transition at(std::size_t index) const;

    std::size_t size() const { return size_; }
    std::size_t capacity() const { return capacity_; }
    std::size_t agent_count() const { return agents_; }

private:
    std::size_t stride() const { return 14 * agents_; }  // s (5), a (3), r (1), s' (5) per agent

    std::size_t capacity_;
    std::size_t agents_;
    std::size_t size_ = 0;
    std::size_t next_ = 0;
    std::vector<double> data_;
    std::mt19937_64 rng_;
};

}  // namespace microtrade::marl
