#include "microtrade/marl/replay_buffer.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

#include "microtrade/marl/action_codec.hpp"

namespace microtrade::marl {

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t agent_count, std::uint64_t seed)
    : capacity_(capacity), agents_(agent_count), rng_(seed) {
    if (capacity_ == 0 || agents_ == 0) throw std::invalid_argument("replay buffer needs capacity and agents");
}

void ReplayBuffer::add(const Transition& t) {
    const std::size_t n = agents_;
    if (t.states.size() != kStateSize * n || t.next_states.size() != kStateSize * n ||
        t.actions.size() != kActionSize * n || t.rewards.size() != n) {
        throw std::invalid_argument("transition does not match agent count");
    }
    const std::size_t offset = next_ * stride();
    if (size_ < capacity_ && data_.size() < offset + stride()) data_.resize(offset + stride());
    double* p = data_.data() + offset;
    p = std::copy(t.states.begin(), t.states.end(), p);
    p = std::copy(t.actions.begin(), t.actions.end(), p);
    p = std::copy(t.rewards.begin(), t.rewards.end(), p);
    std::copy(t.next_states.begin(), t.next_states.end(), p);
    next_ = (next_ + 1) % capacity_;
    size_ = std::min(size_ + 1, capacity_);
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t count) {
    if (count > size_) throw std::invalid_argument("batch larger than buffer contents");
    std::unordered_set<std::size_t> chosen;
    chosen.reserve(count * 2);
    std::vector<std::size_t> out;
    out.reserve(count);
    for (std::size_t j = size_ - count; j < size_; ++j) {
        std::uniform_int_distribution<std::size_t> dist(0, j);
        std::size_t t = dist(rng_);
        std::size_t pick = chosen.insert(t).second ? t : j;
        if (pick == j) chosen.insert(j);
        out.push_back(pick);
    }
    return out;
}

Batch ReplayBuffer::gather(std::span<const std::size_t> indices) const {
    const auto n = static_cast<Eigen::Index>(agents_);
    const auto s = static_cast<Eigen::Index>(indices.size());
    Batch b{nn::Matrix(kStateSize * n, s), nn::Matrix(kActionSize * n, s), nn::Matrix(n, s),
            nn::Matrix(kStateSize * n, s)};
    for (Eigen::Index c = 0; c < s; ++c) {
        const std::size_t idx = indices[static_cast<std::size_t>(c)];
        if (idx >= size_) throw std::out_of_range("replay index out of range");
        const double* p = data_.data() + idx * stride();
        b.states.col(c) = Eigen::Map<const nn::Vector>(p, kStateSize * n);
        p += kStateSize * n;
        b.actions.col(c) = Eigen::Map<const nn::Vector>(p, kActionSize * n);
        p += kActionSize * n;
        b.rewards.col(c) = Eigen::Map<const nn::Vector>(p, n);
        p += n;
        b.next_states.col(c) = Eigen::Map<const nn::Vector>(p, kStateSize * n);
    }
    return b;
}

Transition ReplayBuffer::at(std::size_t index) const {
    Batch b = gather(std::span<const std::size_t>(&index, 1));
    auto to_vec = [](const nn::Matrix& m) { return std::vector<double>(m.data(), m.data() + m.size()); };
    return {to_vec(b.states), to_vec(b.actions), to_vec(b.rewards), to_vec(b.next_states)};
}

}  // namespace microtrade::marl
