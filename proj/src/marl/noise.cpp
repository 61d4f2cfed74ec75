#include "microtrade/marl/noise.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace microtrade::marl {

void ou_noise_step(std::vector<double>& x, const OuParams& p, std::mt19937_64& rng) {
    if (!std::isfinite(p.theta) || !std::isfinite(p.mu) || !std::isfinite(p.sigma) || p.sigma < 0.0) {
        throw std::invalid_argument("OU parameters must be finite with sigma >= 0");
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : x) v += p.theta * (p.mu - v) + p.sigma * normal(rng);
}

OrnsteinUhlenbeck::OrnsteinUhlenbeck(std::size_t dims, OuParams params, std::uint64_t seed)
    : params_(params), x_(dims, params.mu), rng_(seed) {}

void OrnsteinUhlenbeck::reset() { std::fill(x_.begin(), x_.end(), params_.mu); }

const std::vector<double>& OrnsteinUhlenbeck::sample() {
    ou_noise_step(x_, params_, rng_);
    return x_;
}

double noise_scale(std::size_t episode, double initial, std::size_t decay_episodes) {
    if (decay_episodes == 0) return 0.0;
    double frac = 1.0 - static_cast<double>(episode) / static_cast<double>(decay_episodes);
    return std::max(0.0, frac) * initial;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t z = master + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace microtrade::marl
