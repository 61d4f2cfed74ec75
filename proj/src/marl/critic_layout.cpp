#include "microtrade/marl/critic_layout.hpp"

#include <stdexcept>
#include <string>

namespace microtrade::marl {

CriticLayout::CriticLayout(CriticMode mode, std::size_t agent_count, std::size_t owner)
    : mode_(mode), agents_(agent_count), owner_(owner) {
    if (agents_ == 0 || owner_ >= agents_) throw std::invalid_argument("critic layout: bad agent index");
}

int CriticLayout::input_size() const {
    const int n = static_cast<int>(agents_);
    return mode_ == CriticMode::Centralized ? kPrivateStateSize * n + 2 + kActionSize * n : kStateSize + kActionSize;
}

int CriticLayout::action_row(std::size_t agent) const {
    if (agent >= agents_) throw std::out_of_range("agent index");
    if (mode_ == CriticMode::Independent) {
        if (agent != owner_) throw std::invalid_argument("independent critic only sees its own action");
        return kStateSize;
    }
    return kPrivateStateSize * static_cast<int>(agents_) + 2 + kActionSize * static_cast<int>(agent);
}

nn::Matrix CriticLayout::build(const nn::Matrix& s, const nn::Matrix& a) const {
    const auto n = static_cast<Eigen::Index>(agents_);
    if (s.rows() != kStateSize * n || a.rows() != kActionSize * n || s.cols() != a.cols()) {
        throw std::invalid_argument("critic input: expected " + std::to_string(kStateSize * n) + "/" +
                                    std::to_string(kActionSize * n) + " rows, got " + std::to_string(s.rows()) +
                                    "/" + std::to_string(a.rows()));
    }
    nn::Matrix out(input_size(), s.cols());
    if (mode_ == CriticMode::Independent) {
        const auto i = static_cast<Eigen::Index>(owner_);
        out.topRows(kStateSize) = s.middleRows(kStateSize * i, kStateSize);
        out.bottomRows(kActionSize) = a.middleRows(kActionSize * i, kActionSize);
        return out;
    }
    for (Eigen::Index k = 0; k < n; ++k) {
        out.middleRows(kPrivateStateSize * k, kPrivateStateSize) = s.middleRows(kStateSize * k, kPrivateStateSize);
    }
    out.middleRows(kPrivateStateSize * n, 2) = s.middleRows(kPrivateStateSize, 2);
    out.bottomRows(kActionSize * n) = a;
    return out;
}

nn::Vector critic_input(CriticMode mode, std::size_t owner, std::span<const std::array<double, kStateSize>> states,
                        std::span<const NormalizedAction> actions) {
    if (states.size() != actions.size()) throw std::invalid_argument("critic input: state/action count mismatch");
    const auto n = static_cast<Eigen::Index>(states.size());
    nn::Matrix s(kStateSize * n, 1), a(kActionSize * n, 1);
    for (Eigen::Index k = 0; k < n; ++k) {
        for (int r = 0; r < kStateSize; ++r) s(kStateSize * k + r, 0) = states[k][r];
        auto av = actions[k].as_array();
        for (int r = 0; r < kActionSize; ++r) a(kActionSize * k + r, 0) = av[r];
    }
    return CriticLayout(mode, states.size(), owner).build(s, a).col(0);
}

}  // namespace microtrade::marl
